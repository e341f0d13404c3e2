// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatview/camera.hpp"
#include "splatview/scene.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace splatview {

/// Screen-space footprint of a unit-uncertainty splat before the low-pass floor, in pixels.
inline constexpr double kBaseFootprintSigma = 0.7;
/// Added to every screen covariance so it stays invertible (pixels^2).
inline constexpr double kLowPassFloor = 0.05;
inline constexpr double kPeakAlpha = 0.999;
inline constexpr int kDefaultMaxFragments = 150;
/// Compositing stops once the remaining transmittance drops below one grayscale level.
inline constexpr double kTerminationTransmittance = 1.0 / 255.0;
inline constexpr double kGrazingDeterminant = 1e-12;
/// Fragments weaker than this are dropped before the fragment cap is applied.
inline constexpr double kNegligibleAlpha = 1e-6;

using Payload = std::array<double, kPayloadSize>;

/// Bi-directional EWA footprint of one input pixel seen from a novel camera.
struct SplatFootprint {
    Vec2 screenMean;
    Mat2 jacobian; ///< d(novel pixel)/d(input pixel) through the tangent plane
    Mat2 cov;      ///< U * sigma0^2 * J J^T + floor * I
    double camDepth = 0.0;
};

enum class SplatSkip { None, Grazing, BehindNovel };

/// Footprint of input pixel `pixel` at `depth` with world `normal` and uncertainty multiplier
/// `uncertainty`. Returns nullopt (and sets `reason`) for grazing input geometry or a point
/// behind the novel camera.
std::optional<SplatFootprint> splat_covariance(const CameraModel &input, const Vec2 &pixel, double depth,
                                               const Vec3 &normal, double uncertainty,
                                               const CameraModel &novel, SplatSkip *reason = nullptr);

/// Convenience overload reading depth, normal and uncertainty from the view's maps.
std::optional<SplatFootprint> splat_covariance(const InputView &view, int x, int y, const CameraModel &novel,
                                               SplatSkip *reason = nullptr);

struct Splat {
    int sourceView = 0;
    std::uint32_t sourcePixel = 0; ///< row-major index in the source view
    Vec2 mean;
    Mat2 cov;
    Mat2 baseCov; ///< sigma0^2 J J^T, so cov = U * baseCov + floor * I
    double conicA = 0, conicB = 0, conicC = 0; ///< inverse covariance [[A, B], [B, C]]
    double camDepth = 0.0;
    double stretch = 1.0; ///< lambda_min / lambda_max of cov
    Payload payload{};

    double alphaAt(double x, double y) const {
        const double dx = x - mean.x();
        const double dy = y - mean.y();
        return kPeakAlpha * std::exp(-0.5 * (conicA * dx * dx + 2.0 * conicB * dx * dy + conicC * dy * dy));
    }
};

/// Fills cov, conic and stretch from baseCov and an uncertainty multiplier.
void finalize_splat_covariance(Splat &splat, double uncertainty);

struct SplatStats {
    std::int64_t built = 0;
    std::int64_t grazing = 0;
    std::int64_t behind = 0;
};

/// One splat per valid-depth pixel of the view, in row-major source order.
std::vector<Splat> build_splats(const InputView &view, const CameraModel &novel, SplatStats *stats = nullptr);

/// ceil(3 * sigma_max) where sigma_max^2 is the largest covariance eigenvalue remaining after the
/// top floor(3%) of per-splat largest eigenvalues are discarded. Throws InvalidInput when empty.
int cutoff_radius(std::span<const Splat> splats);

/// Largest eigenvalue of a symmetric 2x2 matrix.
double max_eigenvalue(const Mat2 &m);

struct RasterOptions {
    bool useCutoffRadius = true;
    int maxFragments = kDefaultMaxFragments; ///< <= 0 means unlimited
    bool earlyTermination = true;
    bool retainFragments = true;
    double minAlpha = kNegligibleAlpha;

    /// No cutoff radius, no fragment cap, no early termination, no alpha floor.
    static RasterOptions exhaustive() { return {false, 0, false, true, 0.0}; }
};

/// One composited contribution at a novel pixel. For layered rasters `splat` is -1 and the
/// entry stands for a whole depth bin.
struct Fragment {
    std::int32_t splat = -1;
    double alpha = 0.0;
    double depth = 0.0;
};

/// Per-view composite into a novel camera.
struct ViewRaster {
    int width = 0;
    int height = 0;
    int viewId = 0;
    int radius = 0;
    SplatStats stats;
    std::vector<Splat> splats;
    std::vector<double> payload;  ///< kPayloadSize per pixel, front-to-back composite
    std::vector<double> opacity;  ///< 1 - prod(1 - alpha) over the composited fragments
    std::vector<double> stretch;  ///< alpha-weighted mean splat stretch, 0 where empty
    std::vector<std::uint32_t> offsets; ///< fragments of pixel p are [offsets[p], offsets[p+1])
    std::vector<Fragment> fragments;    ///< depth-ascending per pixel, only the composited ones

    std::size_t pixelCount() const { return static_cast<std::size_t>(width) * height; }
    std::span<const Fragment> pixelFragments(std::size_t p) const {
        if (offsets.empty()) {
            return {};
        }
        return {fragments.data() + offsets[p], fragments.data() + offsets[p + 1]};
    }
    std::span<const double> pixelPayload(std::size_t p) const {
        return {payload.data() + p * kPayloadSize, static_cast<std::size_t>(kPayloadSize)};
    }
};

/// Splat, sort, cap and composite a prepared splat list. Ties in depth are broken by
/// (source view, source pixel), so the result does not depend on the order of `splats`.
ViewRaster rasterize_splats(std::vector<Splat> splats, int width, int height, int viewId,
                            const RasterOptions &options = {});

ViewRaster rasterize_view(const InputView &view, const CameraModel &novel, const RasterOptions &options = {});

} // namespace splatview
