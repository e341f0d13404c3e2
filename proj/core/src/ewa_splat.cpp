// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "splatview/ewa_splat.hpp"

#include "splatview/errors.hpp"

#include <algorithm>
#include <cmath>

namespace splatview {

namespace {

// Any orthonormal tangent basis works: J_out * J_in^-1 does not depend on the choice.
Eigen::Matrix<double, 3, 2> tangent_basis(const Vec3 &n) {
    Vec3 axis = Vec3::UnitX();
    const Vec3 a = n.cwiseAbs();
    if (a.y() <= a.x() && a.y() <= a.z()) {
        axis = Vec3::UnitY();
    } else if (a.z() <= a.x() && a.z() <= a.y()) {
        axis = Vec3::UnitZ();
    }
    const Vec3 e1 = n.cross(axis).normalized();
    const Vec3 e2 = n.cross(e1);
    Eigen::Matrix<double, 3, 2> basis;
    basis.col(0) = e1;
    basis.col(1) = e2;
    return basis;
}

constexpr int kTileSize = 8;

struct FragmentOrder {
    const std::vector<Splat> *splats;
    bool operator()(const Fragment &a, const Fragment &b) const {
        if (a.depth != b.depth) {
            return a.depth < b.depth;
        }
        const Splat &sa = (*splats)[a.splat];
        const Splat &sb = (*splats)[b.splat];
        if (sa.sourceView != sb.sourceView) {
            return sa.sourceView < sb.sourceView;
        }
        return sa.sourcePixel < sb.sourcePixel;
    }
};

} // namespace

std::optional<SplatFootprint> splat_covariance(const CameraModel &input, const Vec2 &pixel, double depth,
                                               const Vec3 &normal, double uncertainty,
                                               const CameraModel &novel, SplatSkip *reason) {
    auto skip = [&](SplatSkip why) -> std::optional<SplatFootprint> {
        if (reason) {
            *reason = why;
        }
        return std::nullopt;
    };
    const Vec3 world = input.toWorld(depth * input.rayCamera(pixel));
    const double nlen = normal.norm();
    if (!(nlen > 0.0)) {
        return skip(SplatSkip::Grazing);
    }
    const auto basis = tangent_basis(normal / nlen);

    const Mat2 jin = projection_jacobian(input, world) * basis;
    if (std::abs(jin.determinant()) < kGrazingDeterminant) {
        return skip(SplatSkip::Grazing);
    }
    const Vec3 novelCam = novel.toCamera(world);
    if (!(novelCam.z() > 1e-9)) {
        return skip(SplatSkip::BehindNovel);
    }
    const Mat2 jout = projection_jacobian(novel, world) * basis;

    SplatFootprint fp;
    fp.jacobian = jout * jin.inverse();
    fp.cov = uncertainty * kBaseFootprintSigma * kBaseFootprintSigma * fp.jacobian * fp.jacobian.transpose() +
             kLowPassFloor * Mat2::Identity();
    fp.screenMean = {novel.fx * novelCam.x() / novelCam.z() + novel.cx,
                     novel.fy * novelCam.y() / novelCam.z() + novel.cy};
    fp.camDepth = novelCam.z();
    if (reason) {
        *reason = SplatSkip::None;
    }
    return fp;
}

std::optional<SplatFootprint> splat_covariance(const InputView &view, int x, int y, const CameraModel &novel,
                                               SplatSkip *reason) {
    const std::size_t p = static_cast<std::size_t>(y) * view.camera.width + x;
    if (!view.validDepth(p)) {
        throw InvalidInput("splat_covariance: pixel has no valid depth");
    }
    const auto n = view.normal.pixel(p);
    return splat_covariance(view.camera, Vec2(x, y), view.depth.data()[p], Vec3(n[0], n[1], n[2]),
                            view.uncertainty(p), novel, reason);
}

double max_eigenvalue(const Mat2 &m) {
    const double mean = 0.5 * (m(0, 0) + m(1, 1));
    const double half = 0.5 * (m(0, 0) - m(1, 1));
    const double offd = 0.5 * (m(0, 1) + m(1, 0));
    return mean + std::sqrt(half * half + offd * offd);
}

void finalize_splat_covariance(Splat &s, double uncertainty) {
    s.cov = uncertainty * s.baseCov + kLowPassFloor * Mat2::Identity();
    const double a = s.cov(0, 0);
    const double b = 0.5 * (s.cov(0, 1) + s.cov(1, 0));
    const double c = s.cov(1, 1);
    const double det = a * c - b * b;
    s.conicA = c / det;
    s.conicB = -b / det;
    s.conicC = a / det;
    const double mean = 0.5 * (a + c);
    const double r = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    s.stretch = (mean - r) / (mean + r);
}

std::vector<Splat> build_splats(const InputView &view, const CameraModel &novel, SplatStats *stats) {
    const int w = view.camera.width;
    const int h = view.camera.height;
    std::vector<Splat> splats;
    splats.reserve(view.depth.pixelCount());
    SplatStats local;
    const double sigma2 = kBaseFootprintSigma * kBaseFootprintSigma;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * w + x;
            if (!view.validDepth(p)) {
                continue;
            }
            const auto n = view.normal.pixel(p);
            SplatSkip why = SplatSkip::None;
            const auto fp = splat_covariance(view.camera, Vec2(x, y), view.depth.data()[p], Vec3(n[0], n[1], n[2]),
                                             1.0, novel, &why);
            if (!fp) {
                (why == SplatSkip::Grazing ? local.grazing : local.behind)++;
                continue;
            }
            Splat s;
            s.sourceView = view.id;
            s.sourcePixel = static_cast<std::uint32_t>(p);
            s.mean = fp->screenMean;
            s.camDepth = fp->camDepth;
            s.baseCov = sigma2 * fp->jacobian * fp->jacobian.transpose();
            finalize_splat_covariance(s, view.uncertainty(p));
            const auto c = view.color.pixel(p);
            for (int k = 0; k < 3; ++k) {
                s.payload[k] = view.mu * c[k];
            }
            const auto f = view.featureLogit.pixel(p);
            for (int k = 0; k < kFeatureChannels; ++k) {
                s.payload[3 + k] = sigmoid(f[k]);
            }
            splats.push_back(s);
        }
    }
    local.built = static_cast<std::int64_t>(splats.size());
    if (stats) {
        *stats = local;
    }
    return splats;
}

int cutoff_radius(std::span<const Splat> splats) {
    if (splats.empty()) {
        throw InvalidInput("cutoff_radius: empty splat list");
    }
    std::vector<double> eig;
    eig.reserve(splats.size());
    for (const auto &s : splats) {
        eig.push_back(max_eigenvalue(s.cov));
    }
    std::sort(eig.begin(), eig.end());
    const std::size_t drop = static_cast<std::size_t>(std::floor(0.03 * static_cast<double>(eig.size())));
    const double sigmaMax = std::sqrt(eig[eig.size() - 1 - drop]);
    return static_cast<int>(std::ceil(3.0 * sigmaMax));
}

ViewRaster rasterize_splats(std::vector<Splat> splats, int width, int height, int viewId,
                            const RasterOptions &options) {
    ViewRaster raster;
    raster.width = width;
    raster.height = height;
    raster.viewId = viewId;
    raster.splats = std::move(splats);
    const auto &sp = raster.splats;
    const std::size_t npix = raster.pixelCount();
    raster.payload.assign(npix * kPayloadSize, 0.0);
    raster.opacity.assign(npix, 0.0);
    raster.stretch.assign(npix, 0.0);

    const bool bounded = options.useCutoffRadius && !sp.empty();
    raster.radius = bounded ? cutoff_radius(sp) : -1;

    // Pixel-space bounding boxes and tile bins.
    const int tilesX = (width + kTileSize - 1) / kTileSize;
    const int tilesY = (height + kTileSize - 1) / kTileSize;
    std::vector<std::vector<std::int32_t>> tiles(static_cast<std::size_t>(tilesX) * tilesY);
    std::vector<std::array<int, 4>> boxes(sp.size());
    for (std::size_t i = 0; i < sp.size(); ++i) {
        int x0 = 0, x1 = width - 1, y0 = 0, y1 = height - 1;
        if (bounded) {
            const double r = raster.radius;
            const double mx = sp[i].mean.x();
            const double my = sp[i].mean.y();
            if (!std::isfinite(mx) || !std::isfinite(my) || mx + r < 0 || my + r < 0 || mx - r > width - 1 ||
                my - r > height - 1) {
                boxes[i] = {1, 0, 1, 0};
                continue;
            }
            x0 = std::max(0, static_cast<int>(std::ceil(mx - r)));
            x1 = std::min(width - 1, static_cast<int>(std::floor(mx + r)));
            y0 = std::max(0, static_cast<int>(std::ceil(my - r)));
            y1 = std::min(height - 1, static_cast<int>(std::floor(my + r)));
        }
        boxes[i] = {x0, x1, y0, y1};
        if (x0 > x1 || y0 > y1) {
            continue;
        }
        for (int ty = y0 / kTileSize; ty <= y1 / kTileSize; ++ty) {
            for (int tx = x0 / kTileSize; tx <= x1 / kTileSize; ++tx) {
                tiles[static_cast<std::size_t>(ty) * tilesX + tx].push_back(static_cast<std::int32_t>(i));
            }
        }
    }

    const int cap = options.maxFragments;
    const FragmentOrder order{&sp};
    std::vector<std::vector<Fragment>> rowFragments(options.retainFragments ? height : 0);
    std::vector<std::vector<std::uint32_t>> rowCounts(options.retainFragments ? height : 0);

#pragma omp parallel
    {
        std::vector<Fragment> frags;
#pragma omp for schedule(dynamic, 4)
        for (int y = 0; y < height; ++y) {
            if (options.retainFragments) {
                rowCounts[y].assign(width, 0);
            }
            for (int x = 0; x < width; ++x) {
                frags.clear();
                const auto &bin = tiles[static_cast<std::size_t>(y / kTileSize) * tilesX + x / kTileSize];
                for (const std::int32_t i : bin) {
                    const auto &b = boxes[i];
                    if (x < b[0] || x > b[1] || y < b[2] || y > b[3]) {
                        continue;
                    }
                    const double a = sp[i].alphaAt(x, y);
                    if (a > 0.0 && a >= options.minAlpha) {
                        frags.push_back({i, a, sp[i].camDepth});
                    }
                }
                if (cap > 0 && frags.size() > static_cast<std::size_t>(cap)) {
                    std::partial_sort(frags.begin(), frags.begin() + cap, frags.end(), order);
                    frags.resize(cap);
                } else {
                    std::sort(frags.begin(), frags.end(), order);
                }

                const std::size_t p = static_cast<std::size_t>(y) * width + x;
                double *out = raster.payload.data() + p * kPayloadSize;
                double t = 1.0;
                double stretchSum = 0.0;
                double alphaSum = 0.0;
                std::size_t used = 0;
                for (const auto &f : frags) {
                    const double wgt = f.alpha * t;
                    const auto &pl = sp[f.splat].payload;
                    for (int k = 0; k < kPayloadSize; ++k) {
                        out[k] += pl[k] * wgt;
                    }
                    stretchSum += f.alpha * sp[f.splat].stretch;
                    alphaSum += f.alpha;
                    t *= 1.0 - f.alpha;
                    ++used;
                    if (options.earlyTermination && t < kTerminationTransmittance) {
                        break;
                    }
                }
                raster.opacity[p] = 1.0 - t;
                raster.stretch[p] = alphaSum > 0.0 ? stretchSum / alphaSum : 0.0;
                if (options.retainFragments) {
                    rowCounts[y][x] = static_cast<std::uint32_t>(used);
                    rowFragments[y].insert(rowFragments[y].end(), frags.begin(),
                                           frags.begin() + static_cast<std::ptrdiff_t>(used));
                }
            }
        }
    }

    if (options.retainFragments) {
        raster.offsets.resize(npix + 1);
        raster.offsets[0] = 0;
        std::size_t total = 0;
        for (int y = 0; y < height; ++y) {
            total += rowFragments[y].size();
        }
        raster.fragments.reserve(total);
        std::size_t p = 0;
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x, ++p) {
                raster.offsets[p + 1] = raster.offsets[p] + rowCounts[y][x];
            }
            raster.fragments.insert(raster.fragments.end(), rowFragments[y].begin(), rowFragments[y].end());
            std::vector<Fragment>().swap(rowFragments[y]);
        }
    }
    return raster;
}

ViewRaster rasterize_view(const InputView &view, const CameraModel &novel, const RasterOptions &options) {
    SplatStats stats;
    auto splats = build_splats(view, novel, &stats);
    ViewRaster raster = rasterize_splats(std::move(splats), novel.width, novel.height, view.id, options);
    raster.stats = stats;
    return raster;
}

} // namespace splatview
