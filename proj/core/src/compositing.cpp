// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "splatview/compositing.hpp"

#include "splatview/errors.hpp"

#include <algorithm>

namespace splatview {

CompositeResult composite_front_to_back(std::span<const double> alphas, std::span<const Payload> payloads,
                                        bool earlyTermination) {
    CompositeResult r;
    double t = 1.0;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        const double w = alphas[i] * t;
        for (int k = 0; k < kPayloadSize; ++k) {
            r.payload[k] += payloads[i][k] * w;
        }
        t *= 1.0 - alphas[i];
        ++r.used;
        if (earlyTermination && t < kTerminationTransmittance) {
            break;
        }
    }
    r.opacity = 1.0 - t;
    return r;
}

namespace {

template <class PayloadAt>
void backward_stack(std::size_t n, const PayloadAt &payloadAt, std::span<const double> alphas,
                    std::span<const double> gC, double gA, FragmentGrad *out) {
    // front-to-back transmittance T_i
    thread_local std::vector<double> trans;
    trans.resize(n);
    double t = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        trans[i] = t;
        t *= 1.0 - alphas[i];
    }
    // back-to-front: behind = g . B_{i+1}, after = prod_{j>i}(1 - a_j)
    double behind = 0.0;
    double after = 1.0;
    for (std::size_t ii = n; ii-- > 0;) {
        const Payload &c = payloadAt(ii);
        double gc = 0.0;
        for (int k = 0; k < kPayloadSize; ++k) {
            gc += gC[k] * c[k];
        }
        const double a = alphas[ii];
        FragmentGrad &g = out[ii];
        const double w = a * trans[ii];
        for (int k = 0; k < kPayloadSize; ++k) {
            g.dPayload[k] = gC[k] * w;
        }
        g.dAlpha = trans[ii] * (gc - behind) + gA * trans[ii] * after;
        behind = a * gc + (1.0 - a) * behind;
        after *= 1.0 - a;
    }
}

} // namespace

std::vector<FragmentGrad> composite_backward(std::span<const double> alphas, std::span<const Payload> payloads,
                                             std::span<const double> upstreamPayload, double upstreamOpacity) {
    if (alphas.size() != payloads.size() || upstreamPayload.size() != kPayloadSize) {
        throw InvalidInput("composite_backward: size mismatch");
    }
    std::vector<FragmentGrad> out(alphas.size());
    backward_stack(
        alphas.size(), [&](std::size_t i) -> const Payload & { return payloads[i]; }, alphas, upstreamPayload,
        upstreamOpacity, out.data());
    return out;
}

std::vector<FragmentGrad> composite_backward(const ViewRaster &raster, std::span<const double> upstreamPayload,
                                             std::span<const double> upstreamOpacity) {
    if (raster.offsets.empty()) {
        throw InvalidInput("composite_backward: raster does not retain fragments");
    }
    const std::size_t npix = raster.pixelCount();
    std::vector<FragmentGrad> out(raster.fragments.size());
    std::vector<double> alphas;
    for (std::size_t p = 0; p < npix; ++p) {
        const auto frags = raster.pixelFragments(p);
        if (frags.empty()) {
            continue;
        }
        alphas.resize(frags.size());
        for (std::size_t i = 0; i < frags.size(); ++i) {
            if (frags[i].splat < 0) {
                throw InvalidInput("composite_backward: layered rasters are not differentiable");
            }
            alphas[i] = frags[i].alpha;
        }
        const double gA = upstreamOpacity.empty() ? 0.0 : upstreamOpacity[p];
        backward_stack(
            frags.size(), [&](std::size_t i) -> const Payload & { return raster.splats[frags[i].splat].payload; },
            alphas, upstreamPayload.subspan(p * kPayloadSize, kPayloadSize), gA, out.data() + raster.offsets[p]);
    }
    return out;
}

ViewGradients::ViewGradients(const InputView &view)
    : color(view.color.data().size(), 0.0), depth(view.depth.data().size(), 0.0),
      normal(view.normal.data().size(), 0.0), uncertaintyLogit(view.uncertaintyLogit.data().size(), 0.0),
      featureLogit(view.featureLogit.data().size(), 0.0) {}

bool ViewGradients::allZero() const {
    auto zero = [](const std::vector<double> &v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
    };
    return mu == 0.0 && zero(color) && zero(depth) && zero(normal) && zero(uncertaintyLogit) && zero(featureLogit);
}

namespace {

struct SplatAccum {
    double mean[2] = {0, 0};
    double cov[2][2] = {{0, 0}, {0, 0}};
    Payload payload{};
    bool any = false;
};

double frobenius(const double g[2][2], const Mat2 &m) {
    return g[0][0] * m(0, 0) + g[0][1] * m(0, 1) + g[1][0] * m(1, 0) + g[1][1] * m(1, 1);
}

} // namespace

void attribute_backward(const InputView &view, const CameraModel &novel, const ViewRaster &raster,
                        std::span<const FragmentGrad> fragmentGrads, ViewGradients &grads, bool geometry) {
    if (fragmentGrads.size() != raster.fragments.size()) {
        throw InvalidInput("attribute_backward: gradient count does not match fragments");
    }
    std::vector<SplatAccum> acc(raster.splats.size());
    const std::size_t npix = raster.pixelCount();
    for (std::size_t p = 0; p < npix; ++p) {
        const double px = static_cast<double>(p % raster.width);
        const double py = static_cast<double>(p / raster.width);
        for (std::uint32_t f = raster.offsets[p]; f < raster.offsets[p + 1]; ++f) {
            const Fragment &frag = raster.fragments[f];
            const FragmentGrad &g = fragmentGrads[f];
            const Splat &s = raster.splats[frag.splat];
            SplatAccum &a = acc[frag.splat];
            for (int k = 0; k < kPayloadSize; ++k) {
                a.payload[k] += g.dPayload[k];
            }
            if (geometry && g.dAlpha != 0.0) {
                // alpha = peak * exp(-0.5 d^T S^-1 d), d = pixel - mean
                const double dx = px - s.mean.x();
                const double dy = py - s.mean.y();
                const double ux = s.conicA * dx + s.conicB * dy;
                const double uy = s.conicB * dx + s.conicC * dy;
                const double ga = g.dAlpha * frag.alpha;
                a.mean[0] += ga * ux;
                a.mean[1] += ga * uy;
                a.cov[0][0] += 0.5 * ga * ux * ux;
                a.cov[0][1] += 0.5 * ga * ux * uy;
                a.cov[1][0] += 0.5 * ga * uy * ux;
                a.cov[1][1] += 0.5 * ga * uy * uy;
            }
            a.any = true;
        }
    }

    const int w = view.camera.width;
    const Mat3 rinT = view.camera.rotation.transpose();
    for (std::size_t i = 0; i < raster.splats.size(); ++i) {
        const SplatAccum &a = acc[i];
        if (!a.any) {
            continue;
        }
        grads.touched = true;
        const Splat &s = raster.splats[i];
        const std::size_t p = s.sourcePixel;
        const auto color = view.color.pixel(p);
        for (int k = 0; k < 3; ++k) {
            grads.color[p * 3 + k] += view.mu * a.payload[k];
            grads.mu += color[k] * a.payload[k];
        }
        for (int k = 0; k < kFeatureChannels; ++k) {
            const double sg = s.payload[3 + k];
            grads.featureLogit[p * kFeatureChannels + k] += a.payload[3 + k] * sg * (1.0 - sg);
        }

        const bool covGrad = a.cov[0][0] != 0.0 || a.cov[0][1] != 0.0 || a.cov[1][1] != 0.0;
        const bool meanGrad = a.mean[0] != 0.0 || a.mean[1] != 0.0;
        if (!covGrad && !meanGrad) {
            continue;
        }
        const double u = view.uncertainty(p);
        grads.uncertaintyLogit[p] += u * frobenius(a.cov, s.baseCov);

        const Vec2 pixel(static_cast<double>(p % w), static_cast<double>(p / w));
        const double depth = view.depth.data()[p];
        const auto nrm = view.normal.pixel(p);
        const Vec3 normal(nrm[0], nrm[1], nrm[2]);

        // screen mean through the lift/project chain
        const Vec3 world = view.camera.toWorld(depth * view.camera.rayCamera(pixel));
        const Vec2 dMeanDDepth = projection_jacobian(novel, world) * (rinT * view.camera.rayCamera(pixel));
        grads.depth[p] += a.mean[0] * dMeanDDepth.x() + a.mean[1] * dMeanDDepth.y();

        if (!covGrad) {
            continue;
        }
        auto covAt = [&](double d, const Vec3 &n) -> std::optional<Mat2> {
            const auto fp = splat_covariance(view.camera, pixel, d, n, u, novel);
            if (!fp) {
                return std::nullopt;
            }
            return fp->cov;
        };
        const double hd = 1e-5 * depth;
        const auto cdp = covAt(depth + hd, normal);
        const auto cdm = covAt(depth - hd, normal);
        if (cdp && cdm) {
            grads.depth[p] += frobenius(a.cov, (*cdp - *cdm) / (2.0 * hd));
        }
        constexpr double hn = 1e-4;
        for (int k = 0; k < 3; ++k) {
            Vec3 np = normal, nm = normal;
            np[k] += hn;
            nm[k] -= hn;
            const auto cp = covAt(depth, np.normalized());
            const auto cm = covAt(depth, nm.normalized());
            if (cp && cm) {
                grads.normal[p * 3 + k] += frobenius(a.cov, (*cp - *cm) / (2.0 * hn));
            }
        }
    }
}

} // namespace splatview
