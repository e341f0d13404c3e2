// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "splatview/synthetic.hpp"

#include "splatview/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace splatview {

namespace {

constexpr double kFar = 50.0;

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Uniform [0, 1) lattice value.
double lattice(std::uint64_t seed, std::int64_t i, std::int64_t j, int channel) {
    std::uint64_t h = splitmix(seed ^ 0x51ed270b27a3c2d5ULL);
    h = splitmix(h ^ static_cast<std::uint64_t>(i));
    h = splitmix(h ^ static_cast<std::uint64_t>(j));
    h = splitmix(h ^ static_cast<std::uint64_t>(channel));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, double u, double v, int channel) {
    const double fu = std::floor(u);
    const double fv = std::floor(v);
    const auto i = static_cast<std::int64_t>(fu);
    const auto j = static_cast<std::int64_t>(fv);
    const double su = smoothstep(u - fu);
    const double sv = smoothstep(v - fv);
    const double a = lattice(seed, i, j, channel);
    const double b = lattice(seed, i + 1, j, channel);
    const double c = lattice(seed, i, j + 1, channel);
    const double d = lattice(seed, i + 1, j + 1, channel);
    return (a * (1 - su) + b * su) * (1 - sv) + (c * (1 - su) + d * su) * sv;
}

SyntheticPlane make_plane(const Vec3 &origin, const Vec3 &u, const Vec3 &v, double minU, double maxU, double minV,
                          double maxV, int textureId) {
    SyntheticPlane p;
    p.origin = origin;
    p.axisU = u.normalized();
    p.axisV = v.normalized();
    p.normal = p.axisU.cross(p.axisV).normalized();
    p.minU = minU;
    p.maxU = maxU;
    p.minV = minV;
    p.maxV = maxV;
    p.textureId = textureId;
    return p;
}

} // namespace

std::optional<GeometryPreset> parse_preset(const std::string &name) {
    if (name == "textured-plane") {
        return GeometryPreset::TexturedPlane;
    }
    if (name == "two-walls") {
        return GeometryPreset::TwoWalls;
    }
    if (name == "box-corner") {
        return GeometryPreset::BoxCorner;
    }
    return std::nullopt;
}

std::optional<TextureKind> parse_texture(const std::string &name) {
    if (name == "checker") {
        return TextureKind::Checker;
    }
    if (name == "value-noise") {
        return TextureKind::ValueNoise;
    }
    if (name == "flat") {
        return TextureKind::Flat;
    }
    return std::nullopt;
}

const char *preset_name(GeometryPreset preset) {
    switch (preset) {
    case GeometryPreset::TexturedPlane:
        return "textured-plane";
    case GeometryPreset::TwoWalls:
        return "two-walls";
    case GeometryPreset::BoxCorner:
        return "box-corner";
    }
    return "?";
}

void SyntheticSpec::validate() const {
    if (views < 1) {
        throw InvalidInput("synthetic: view count must be >= 1");
    }
    if (resolution < 16) {
        throw InvalidInput("synthetic: resolution must be >= 16");
    }
    if (!(distance > 0.0) || !(fovYDegrees > 0.0 && fovYDegrees < 180.0) || !(textureScale > 0.0)) {
        throw InvalidInput("synthetic: distance, fov and texture scale must be positive");
    }
    if (!(depthNoise >= 0.0 && depthNoise < 0.5) || !(depthNoiseCell >= 0.0)) {
        throw InvalidInput("synthetic: depth noise must be in [0, 0.5)");
    }
    if (!(exposureFactor > 0.0)) {
        throw InvalidInput("synthetic: exposure factor must be positive");
    }
}

SyntheticGeometry preset_geometry(GeometryPreset preset, double distance) {
    const double d = distance;
    const double big = 10.0 * d;
    SyntheticGeometry g;
    switch (preset) {
    case GeometryPreset::TexturedPlane: {
        // tilted about the x axis: z = d + tan(20 deg) * y
        const double a = std::tan(20.0 * std::numbers::pi / 180.0);
        g.planes.push_back(make_plane({0, 0, d}, {1, 0, 0}, {0, 1, a}, -big, big, -big, big, 0));
        break;
    }
    case GeometryPreset::TwoWalls:
        g.planes.push_back(make_plane({0, 0, 0.8 * d}, {1, 0, 0}, {0, 1, 0}, -big, 0.0, -big, big, 0));
        g.planes.push_back(make_plane({0, 0, 1.2 * d}, {1, 0, 0}, {0, 1, 0}, -big, big, -big, big, 1));
        break;
    case GeometryPreset::BoxCorner: {
        const double wallX = -0.35 * d;
        const double floorY = 0.3 * d;
        const double backZ = 1.3 * d;
        // back wall, left wall, floor
        g.planes.push_back(make_plane({0, 0, backZ}, {1, 0, 0}, {0, 1, 0}, wallX, big, -big, floorY, 0));
        g.planes.push_back(make_plane({wallX, 0, 0}, {0, 1, 0}, {0, 0, 1}, -big, floorY, -big, backZ, 1));
        g.planes.push_back(make_plane({0, floorY, 0}, {0, 0, 1}, {1, 0, 0}, -big, backZ, wallX, big, 2));
        break;
    }
    }
    return g;
}

RayHit cast_ray(const SyntheticGeometry &geometry, const Vec3 &origin, const Vec3 &direction) {
    RayHit best{std::numeric_limits<double>::infinity(), -1};
    for (std::size_t i = 0; i < geometry.planes.size(); ++i) {
        const auto &p = geometry.planes[i];
        const double denom = p.normal.dot(direction);
        if (std::abs(denom) < 1e-12) {
            continue;
        }
        const double t = p.normal.dot(p.origin - origin) / denom;
        if (!(t > 1e-9) || t >= best.t || t > kFar) {
            continue;
        }
        const Vec3 rel = origin + t * direction - p.origin;
        const double u = p.axisU.dot(rel);
        const double v = p.axisV.dot(rel);
        if (u < p.minU || u > p.maxU || v < p.minV || v > p.maxV) {
            continue;
        }
        best = {t, static_cast<int>(i)};
    }
    return best;
}

Vec3 texture_color(const SyntheticSpec &spec, const SyntheticPlane &plane, const Vec3 &world) {
    const Vec3 rel = world - plane.origin;
    const double u = plane.axisU.dot(rel) / spec.textureScale;
    const double v = plane.axisV.dot(rel) / spec.textureScale;
    const std::uint64_t seed = spec.seed * 1000003ULL + static_cast<std::uint64_t>(plane.textureId);
    Vec3 c;
    switch (spec.texture) {
    case TextureKind::Checker: {
        const bool odd = ((static_cast<std::int64_t>(std::floor(u)) + static_cast<std::int64_t>(std::floor(v))) & 1) != 0;
        const Vec3 base(lattice(seed, 0, 0, 0), lattice(seed, 0, 0, 1), lattice(seed, 0, 0, 2));
        c = odd ? Vec3(0.2, 0.2, 0.2) + 0.3 * base : Vec3(0.6, 0.6, 0.6) + 0.3 * base;
        break;
    }
    case TextureKind::ValueNoise:
        for (int k = 0; k < 3; ++k) {
            // two octaves, kept in [0.15, 0.85]
            const double n = 0.7 * value_noise(seed, u, v, k) + 0.3 * value_noise(seed + 7, 2.0 * u, 2.0 * v, k);
            c[k] = 0.15 + 0.7 * n;
        }
        break;
    case TextureKind::Flat:
        c = Vec3(0.3, 0.4, 0.5) + 0.3 * Vec3(lattice(seed, 0, 0, 0), lattice(seed, 0, 0, 1), lattice(seed, 0, 0, 2));
        break;
    }
    return c;
}

CameraModel synthetic_camera(const SyntheticSpec &spec, int index) {
    const double frac = spec.views == 1 ? 0.5 : static_cast<double>(index) / (spec.views - 1);
    const double phi = (frac - 0.5) * spec.arcDegrees * std::numbers::pi / 180.0;
    const Vec3 target(0, 0, spec.distance);
    const Vec3 eye = target + spec.distance * Vec3(std::sin(phi), 0.0, -std::cos(phi));
    return look_at(eye, target, spec.resolution, spec.resolution, spec.fovYDegrees);
}

InputView render_synthetic_view(const SyntheticSpec &spec, const SyntheticGeometry &geometry,
                                const CameraModel &camera, int id) {
    const int w = camera.width;
    const int h = camera.height;
    FloatImage color(w, h, 3);
    FloatImage depth(w, h, 1, 0.0f);
    FloatImage normal(w, h, 3);
    const Vec3 center = camera.center();
    const Mat3 rt = camera.rotation.transpose();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Vec3 dir = rt * camera.rayCamera(Vec2(x, y));
            const RayHit hit = cast_ray(geometry, center, dir);
            if (hit.plane < 0) {
                continue;
            }
            const auto &plane = geometry.planes[static_cast<std::size_t>(hit.plane)];
            const Vec3 p = center + hit.t * dir;
            const Vec3 c = texture_color(spec, plane, p);
            Vec3 n = plane.normal;
            if (n.dot(center - p) < 0.0) {
                n = -n;
            }
            depth.at(x, y) = static_cast<float>(hit.t);
            for (int k = 0; k < 3; ++k) {
                color.at(x, y, k) = static_cast<float>(c[k]);
                normal.at(x, y, k) = static_cast<float>(n[k]);
            }
        }
    }
    return make_input_view(id, camera, std::move(color), std::move(depth), std::move(normal));
}

SyntheticScene gen_synthetic(const SyntheticSpec &spec) {
    spec.validate();
    const SyntheticGeometry geometry = preset_geometry(spec.preset, spec.distance);
    SyntheticScene out;
    for (int i = 0; i < spec.views; ++i) {
        InputView view = render_synthetic_view(spec, geometry, synthetic_camera(spec, i), i);
        if (spec.depthNoise > 0.0 && i == spec.depthNoiseView) {
            const std::uint64_t seed = splitmix(spec.seed ^ 0xd1b54a32d192ed03ULL);
            const double cell = spec.depthNoiseCell;
            for (int y = 0; y < view.depth.height(); ++y) {
                for (int x = 0; x < view.depth.width(); ++x) {
                    const double n = cell > 0.0 ? 2.0 * value_noise(seed, x / cell, y / cell, 0) - 1.0
                                                : 2.0 * lattice(seed, x, y, 0) - 1.0;
                    view.depth.at(x, y) = static_cast<float>(view.depth.at(x, y) * (1.0 + spec.depthNoise * n));
                }
            }
        }
        if (i == spec.exposureView && spec.exposureFactor != 1.0) {
            for (float &c : view.color.data()) {
                c = static_cast<float>(c / spec.exposureFactor);
            }
        }
        out.scene.views.push_back(std::move(view));
    }
    if (spec.exposureView >= 0 && spec.exposureView < spec.views) {
        for (int i = 0; i < spec.views; ++i) {
            out.groundTruthMu[i] = i == spec.exposureView ? spec.exposureFactor : 1.0;
        }
    }
    out.scene.rngSeed = spec.seed;
    out.scene.depthSigma = 0.01 * median_valid_depth(out.scene);
    out.scene.validate();
    return out;
}

} // namespace splatview
