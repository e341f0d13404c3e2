// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "splatview/layered.hpp"

#include "splatview/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace splatview {

DepthRange coarse_depth_range(std::span<const std::vector<Splat>> perViewSplats, int width, int height) {
    const int gw = (width + kDepthRangeDownscale - 1) / kDepthRangeDownscale;
    const int gh = (height + kDepthRangeDownscale - 1) / kDepthRangeDownscale;
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> lo(static_cast<std::size_t>(gw) * gh, inf);
    std::vector<double> hi(lo.size(), -inf);
    for (const auto &splats : perViewSplats) {
        for (const auto &s : splats) {
            const double x = std::round(s.mean.x());
            const double y = std::round(s.mean.y());
            if (!(x >= 0 && y >= 0 && x < width && y < height)) {
                continue;
            }
            const std::size_t cell = static_cast<std::size_t>(static_cast<int>(y) / kDepthRangeDownscale) * gw +
                                     static_cast<int>(x) / kDepthRangeDownscale;
            lo[cell] = std::min(lo[cell], s.camDepth);
            hi[cell] = std::max(hi[cell], s.camDepth);
        }
    }
    // top of the min/max pyramid
    DepthRange range;
    range.nearest = *std::min_element(lo.begin(), lo.end());
    range.farthest = *std::max_element(hi.begin(), hi.end());
    range.empty = !(range.nearest <= range.farthest);
    return range;
}

std::vector<ViewRaster> layered_composite_splats(std::vector<std::vector<Splat>> perViewSplats,
                                                 std::span<const int> viewIds, int width, int height, int layers) {
    if (layers < 1) {
        throw InvalidInput("layered_composite: layers must be >= 1");
    }
    if (viewIds.size() != perViewSplats.size()) {
        throw InvalidInput("layered_composite: view id count mismatch");
    }
    const std::size_t npix = static_cast<std::size_t>(width) * height;
    const DepthRange range = coarse_depth_range(perViewSplats, width, height);

    std::vector<Splat> all;
    for (const auto &v : perViewSplats) {
        all.insert(all.end(), v.begin(), v.end());
    }
    const int radius = all.empty() ? 0 : cutoff_radius(all);
    all.clear();
    all.shrink_to_fit();

    const double span = range.empty ? 0.0 : range.farthest - range.nearest;
    auto binOf = [&](double z) {
        if (!(span > 0.0)) {
            return 0;
        }
        const int b = static_cast<int>(std::floor((z - range.nearest) / span * layers));
        return std::clamp(b, 0, layers - 1);
    };

    // per pixel, per bin: log transmittance, sum alpha, sum alpha*depth, sum alpha*stretch, sum alpha*payload
    constexpr int kStride = 4 + kPayloadSize;
    std::vector<ViewRaster> out;
    out.reserve(perViewSplats.size());
    std::vector<double> bins;
    for (std::size_t v = 0; v < perViewSplats.size(); ++v) {
        ViewRaster r;
        r.width = width;
        r.height = height;
        r.viewId = viewIds[v];
        r.radius = radius;
        r.payload.assign(npix * kPayloadSize, 0.0);
        r.opacity.assign(npix, 0.0);
        r.stretch.assign(npix, 0.0);
        r.offsets.assign(npix + 1, 0);
        bins.assign(npix * layers * kStride, 0.0);

        for (const Splat &s : perViewSplats[v]) {
            const double mx = s.mean.x();
            const double my = s.mean.y();
            if (mx + radius < 0 || my + radius < 0 || mx - radius > width - 1 || my - radius > height - 1) {
                continue;
            }
            const int x0 = std::max(0, static_cast<int>(std::ceil(mx - radius)));
            const int x1 = std::min(width - 1, static_cast<int>(std::floor(mx + radius)));
            const int y0 = std::max(0, static_cast<int>(std::ceil(my - radius)));
            const int y1 = std::min(height - 1, static_cast<int>(std::floor(my + radius)));
            const int b = binOf(s.camDepth);
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    const double a = s.alphaAt(x, y);
                    if (!(a >= kNegligibleAlpha)) {
                        continue;
                    }
                    double *cell = bins.data() + ((static_cast<std::size_t>(y) * width + x) * layers + b) * kStride;
                    cell[0] += std::log1p(-a);
                    cell[1] += a;
                    cell[2] += a * s.camDepth;
                    cell[3] += a * s.stretch;
                    for (int k = 0; k < kPayloadSize; ++k) {
                        cell[4 + k] += a * s.payload[k];
                    }
                }
            }
        }

        for (std::size_t p = 0; p < npix; ++p) {
            double t = 1.0;
            double stretchSum = 0.0;
            double alphaSum = 0.0;
            double *outPayload = r.payload.data() + p * kPayloadSize;
            for (int b = 0; b < layers; ++b) {
                const double *cell = bins.data() + (p * layers + b) * kStride;
                if (!(cell[1] > 0.0)) {
                    continue;
                }
                const double binAlpha = -std::expm1(cell[0]);
                const double inv = 1.0 / cell[1];
                const double w = binAlpha * t;
                for (int k = 0; k < kPayloadSize; ++k) {
                    outPayload[k] += w * cell[4 + k] * inv;
                }
                stretchSum += binAlpha * cell[3] * inv;
                alphaSum += binAlpha;
                r.fragments.push_back({-1, binAlpha, cell[2] * inv});
                t *= 1.0 - binAlpha;
            }
            r.opacity[p] = 1.0 - t;
            r.stretch[p] = alphaSum > 0.0 ? stretchSum / alphaSum : 0.0;
            r.offsets[p + 1] = static_cast<std::uint32_t>(r.fragments.size());
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ViewRaster> layered_composite(std::span<const InputView *const> views, const CameraModel &novel,
                                          int layers) {
    std::vector<std::vector<Splat>> perView;
    std::vector<int> ids;
    std::vector<SplatStats> stats(views.size());
    for (std::size_t i = 0; i < views.size(); ++i) {
        perView.push_back(build_splats(*views[i], novel, &stats[i]));
        ids.push_back(views[i]->id);
    }
    auto rasters = layered_composite_splats(std::move(perView), ids, novel.width, novel.height, layers);
    for (std::size_t i = 0; i < rasters.size(); ++i) {
        rasters[i].stats = stats[i];
    }
    return rasters;
}

} // namespace splatview
