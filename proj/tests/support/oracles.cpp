// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <png.h>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace splatview::oracle {

Vec2 homogeneous_project(const CameraModel &cam, const Vec3 &world) {
    Eigen::Matrix<double, 3, 4> k = Eigen::Matrix<double, 3, 4>::Zero();
    k(0, 0) = cam.fx;
    k(1, 1) = cam.fy;
    k(0, 2) = cam.cx;
    k(1, 2) = cam.cy;
    k(2, 2) = 1.0;
    Eigen::Matrix4d ext = Eigen::Matrix4d::Identity();
    ext.topLeftCorner<3, 3>() = cam.rotation;
    ext.topRightCorner<3, 1>() = cam.translation;
    const Eigen::Vector3d h = k * ext * world.homogeneous();
    return h.hnormalized();
}

BruteRaster brute_force_composite(const std::vector<Splat> &splats, int width, int height) {
    BruteRaster out;
    const std::size_t npix = static_cast<std::size_t>(width) * height;
    out.payload.assign(npix * kPayloadSize, 0.0);
    out.opacity.assign(npix, 0.0);
    std::vector<Eigen::Matrix2d> inv(splats.size());
    for (std::size_t i = 0; i < splats.size(); ++i) {
        inv[i] = splats[i].cov.inverse();
    }
    std::vector<std::size_t> order(splats.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto &sa = splats[a];
        const auto &sb = splats[b];
        return std::tie(sa.camDepth, sa.sourceView, sa.sourcePixel) <
               std::tie(sb.camDepth, sb.sourceView, sb.sourcePixel);
    });
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * width + x;
            double t = 1.0;
            for (const std::size_t i : order) {
                const Eigen::Vector2d d = Eigen::Vector2d(x, y) - splats[i].mean;
                const double a = kPeakAlpha * std::exp(-0.5 * d.dot(inv[i] * d));
                if (!(a > 0.0)) {
                    continue;
                }
                for (int k = 0; k < kPayloadSize; ++k) {
                    out.payload[p * kPayloadSize + k] += splats[i].payload[k] * a * t;
                }
                t *= 1.0 - a;
            }
            out.opacity[p] = 1.0 - t;
        }
    }
    return out;
}

double exhaustive_best_coverage(std::span<const ScoreMap> maps, int k) {
    const int m = static_cast<int>(maps.size());
    double best = 0.0;
    for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
        if (std::popcount(mask) > k) {
            continue;
        }
        const std::size_t cells = maps.front().scores.size();
        double total = 0.0;
        for (std::size_t c = 0; c < cells; ++c) {
            double mx = 0.0;
            for (int i = 0; i < m; ++i) {
                if (mask & (1u << i)) {
                    mx = std::max(mx, maps[static_cast<std::size_t>(i)].scores[c]);
                }
            }
            total += mx;
        }
        best = std::max(best, total);
    }
    return best;
}

double ScalarAdam::step(double param, double grad, double lr, double b1, double b2, double eps) {
    ++t;
    m = b1 * m + (1 - b1) * grad;
    v = b2 * v + (1 - b2) * grad * grad;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    return param - lr * mhat / (std::sqrt(vhat) + eps);
}

namespace {

/// Reads whitespace-separated header tokens, skipping '#' comments, and returns the offset of
/// the byte after the single separator that follows the last token.
std::vector<std::string> header_tokens(const std::vector<std::uint8_t> &bytes, int count, std::size_t &payload) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (static_cast<int>(tokens.size()) < count) {
        while (i < bytes.size() && (std::isspace(bytes[i]) || bytes[i] == '#')) {
            if (bytes[i] == '#') {
                while (i < bytes.size() && bytes[i] != '\n') {
                    ++i;
                }
            } else {
                ++i;
            }
        }
        std::string tok;
        while (i < bytes.size() && !std::isspace(bytes[i])) {
            tok.push_back(static_cast<char>(bytes[i++]));
        }
        if (tok.empty()) {
            throw std::runtime_error("reference decoder: short header");
        }
        tokens.push_back(tok);
    }
    payload = i + 1;
    return tokens;
}

} // namespace

DecodedImage reference_decode_pfm(const std::vector<std::uint8_t> &bytes) {
    std::size_t off = 0;
    const auto tok = header_tokens(bytes, 4, off);
    DecodedImage img;
    img.channels = tok[0] == "PF" ? 3 : 1;
    img.width = std::stoi(tok[1]);
    img.height = std::stoi(tok[2]);
    const bool little = std::stod(tok[3]) < 0;
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height * img.channels;
    if (bytes.size() < off + n * 4) {
        throw std::runtime_error("reference decoder: truncated");
    }
    img.data.resize(n);
    const std::size_t row = static_cast<std::size_t>(img.width) * img.channels;
    for (std::size_t k = 0; k < n; ++k) {
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b) {
            const std::uint32_t byte = bytes[off + k * 4 + static_cast<std::size_t>(b)];
            u |= little ? byte << (8 * b) : byte << (8 * (3 - b));
        }
        float f;
        std::memcpy(&f, &u, 4);
        const std::size_t fileRow = k / row;
        const std::size_t imageRow = static_cast<std::size_t>(img.height) - 1 - fileRow;
        img.data[imageRow * row + k % row] = f;
    }
    return img;
}

DecodedImage reference_decode_ppm(const std::vector<std::uint8_t> &bytes) {
    std::size_t off = 0;
    const auto tok = header_tokens(bytes, 4, off);
    if (tok[0] != "P6") {
        throw std::runtime_error("reference decoder: not P6");
    }
    DecodedImage img;
    img.channels = 3;
    img.width = std::stoi(tok[1]);
    img.height = std::stoi(tok[2]);
    const double maxval = std::stod(tok[3]);
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height * 3;
    img.data.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        img.data[k] = static_cast<float>(bytes.at(off + k) / maxval);
    }
    return img;
}

DecodedImage decode_png(const std::vector<std::uint8_t> &bytes) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
        throw std::runtime_error(std::string("png decode: ") + png.message);
    }
    png.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
        throw std::runtime_error(std::string("png decode: ") + png.message);
    }
    DecodedImage img;
    img.width = static_cast<int>(png.width);
    img.height = static_cast<int>(png.height);
    img.channels = 3;
    img.data.resize(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i) {
        img.data[i] = buf[i] / 255.0f;
    }
    return img;
}

double ray_z_plane(const Vec3 &origin, const Vec3 &dir, double z, double minX, double maxX) {
    if (std::abs(dir.z()) < 1e-15) {
        return std::numeric_limits<double>::infinity();
    }
    const double t = (z - origin.z()) / dir.z();
    if (t <= 0) {
        return std::numeric_limits<double>::infinity();
    }
    const double x = origin.x() + t * dir.x();
    return (x >= minX && x <= maxX) ? t : std::numeric_limits<double>::infinity();
}

double float_central_difference(float &slot, double h, const std::function<double()> &f) {
    const float orig = slot;
    slot = static_cast<float>(orig + h);
    const double hp = static_cast<double>(slot);
    const double fp = f();
    slot = static_cast<float>(orig - h);
    const double hm = static_cast<double>(slot);
    const double fm = f();
    slot = orig;
    return (fp - fm) / (hp - hm);
}

Stack random_stack(std::mt19937_64 &rng, int minSize, int maxSize) {
    std::uniform_int_distribution<int> size(minSize, maxSize);
    std::uniform_real_distribution<double> a(0.02, 0.95);
    std::uniform_real_distribution<double> c(0.0, 1.0);
    Stack s;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) {
        s.alphas.push_back(a(rng));
        Payload p;
        for (auto &v : p) {
            v = c(rng);
        }
        s.payloads.push_back(p);
    }
    return s;
}

long double stack_objective(const Stack &stack, const std::vector<double> &g, double gOpacity) {
    long double value = 0.0L;
    long double transmittance = 1.0L;
    for (std::size_t i = 0; i < stack.alphas.size(); ++i) {
        const long double w = static_cast<long double>(stack.alphas[i]) * transmittance;
        for (std::size_t c = 0; c < g.size(); ++c) {
            value += static_cast<long double>(g[c]) * stack.payloads[i][c] * w;
        }
        transmittance *= 1.0L - static_cast<long double>(stack.alphas[i]);
    }
    return value + static_cast<long double>(gOpacity) * (1.0L - transmittance);
}

void jitter_scene(Scene &scene, std::mt19937_64 &rng, double depthRel, double normalAngle, double logitSpread) {
    std::normal_distribution<double> n01(0.0, 1.0);
    for (auto &v : scene.views) {
        for (std::size_t p = 0; p < v.depth.pixelCount(); ++p) {
            if (v.validDepth(p)) {
                v.depth.data()[p] = static_cast<float>(v.depth.data()[p] * (1.0 + depthRel * n01(rng)));
            }
            Vec3 n(v.normal.data()[p * 3], v.normal.data()[p * 3 + 1], v.normal.data()[p * 3 + 2]);
            n += normalAngle * Vec3(n01(rng), n01(rng), n01(rng));
            n.normalize();
            for (int k = 0; k < 3; ++k) {
                v.normal.data()[p * 3 + k] = static_cast<float>(n[k]);
            }
            v.uncertaintyLogit.data()[p] = static_cast<float>(v.uncertaintyLogit.data()[p] + logitSpread * n01(rng));
            for (int k = 0; k < kFeatureChannels; ++k) {
                v.featureLogit.data()[p * kFeatureChannels + k] = static_cast<float>(logitSpread * n01(rng));
            }
        }
    }
}

CameraModel nearby_camera(const CameraModel &base, std::mt19937_64 &rng, double angleDeg, double lookDistance) {
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Vec3 axis = Vec3(n01(rng), n01(rng), n01(rng)).normalized();
    const double angle = u(rng) * angleDeg * M_PI / 180.0;
    const Mat3 rot = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    const Vec3 center = base.center();
    const Vec3 forward = base.rotation.row(2).transpose();
    const Vec3 target = center + lookDistance * forward;
    CameraModel cam = base;
    const Vec3 newCenter = target + rot * (center - target);
    cam.rotation = base.rotation * rot.transpose();
    cam.translation = -cam.rotation * newCenter;
    return cam;
}

double mse(const FloatImage &a, const FloatImage &b) {
    if (!a.sameShape(b)) {
        throw std::invalid_argument("mse: shape mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        const double d = static_cast<double>(a.data()[i]) - b.data()[i];
        s += d * d;
    }
    return s / static_cast<double>(a.data().size());
}

SyntheticSpec smooth_spec(GeometryPreset preset, int views, int resolution, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.preset = preset;
    spec.views = views;
    spec.resolution = resolution;
    spec.seed = seed;
    spec.texture = TextureKind::ValueNoise;
    spec.textureScale = 0.25;
    return spec;
}

double render_loss(const Scene &scene, const CameraModel &camera, const std::vector<int> &sources,
                   const FloatImage &target, const LinearHead &head, std::vector<double> *dRaw, RenderPass *pass) {
    const std::vector<double> weights(sources.size(), 1.0 / static_cast<double>(sources.size()));
    RenderPass p = forward_pass(scene, camera, sources, weights, head, RenderOptions{});
    double loss = 0.0;
    if (dRaw) {
        dRaw->assign(p.raw.size(), 0.0);
    }
    for (std::size_t i = 0; i < p.pixelCount(); ++i) {
        if (!p.valid[i]) {
            continue;
        }
        for (int c = 0; c < 3; ++c) {
            const double r = p.raw[i * 3 + c] - target.data()[i * 3 + c];
            loss += 0.5 * r * r;
            if (dRaw) {
                (*dRaw)[i * 3 + c] = r;
            }
        }
    }
    if (pass) {
        *pass = std::move(p);
    }
    return loss;
}

double relative_error(double a, double b, double floor) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

} // namespace splatview::oracle
