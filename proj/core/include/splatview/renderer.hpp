// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatview/camera_select.hpp"
#include "splatview/compositing.hpp"
#include "splatview/ewa_splat.hpp"
#include "splatview/layered.hpp"
#include "splatview/scene.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace splatview {

/// Affine map from the pooled payload to RGB. Stands in for a learned decoder so that the
/// latent features have a gradient path.
struct LinearHead {
    Eigen::Matrix<double, 3, kPayloadSize> matrix = Eigen::Matrix<double, 3, kPayloadSize>::Zero();
    Vec3 bias = Vec3::Zero();

    /// [I_3 | 0], zero bias: output equals the pooled color channels.
    static LinearHead identity();
};

struct LinearHeadGrad {
    Eigen::Matrix<double, 3, kPayloadSize> matrix = Eigen::Matrix<double, 3, kPayloadSize>::Zero();
    Vec3 bias = Vec3::Zero();
};

/// matrix * pooled + bias, unclamped.
Vec3 apply_linear_head(const LinearHead &head, std::span<const double> pooled);

/// Accumulates d/d(matrix, bias) for upstream `grad` and returns d/d(pooled).
Eigen::Matrix<double, kPayloadSize, 1> linear_head_backward(const LinearHead &head, std::span<const double> pooled,
                                                            const Vec3 &grad, LinearHeadGrad &out);

/// lambda_min / lambda_max. Throws InvalidInput unless `cov` is symmetric positive definite.
double texture_stretch_weight(const Mat2 &cov);

struct RenderOptions {
    int k = kDefaultViewsKept;
    bool fast = false;
    int layers = kDefaultDepthLayers;
    int depthSamples = 1;
    RasterOptions raster{};
    int scoreDownscale = kDefaultScoreDownscale;
    double selectEpsilon = kDefaultDegenerateEpsilon;
    ScoreMode scoreMode = ScoreMode::Binary;
    double occlusionTolerance = kDefaultOcclusionTolerance;
};

/// Forward state of one render, kept for the backward pass.
struct RenderPass {
    CameraModel camera;
    std::vector<int> viewIndices;      ///< into scene.views
    std::vector<double> cameraWeights; ///< w_CS per view
    std::vector<ViewRaster> rasters;
    /// Per view, per pixel pooling weight w_CS * w_TS * w_PD. Treated as constant by the backward pass.
    std::vector<std::vector<double>> weights;
    std::vector<double> pooled; ///< kPayloadSize per pixel
    std::vector<double> raw;    ///< head output, 3 per pixel, unclamped
    std::vector<std::uint8_t> valid;

    std::size_t pixelCount() const { return static_cast<std::size_t>(camera.width) * camera.height; }
};

/// w_CS * w_TS * w_PD per view and pixel. Views with zero opacity at a pixel get weight 0.
std::vector<std::vector<double>> pooling_weights(std::span<const ViewRaster> rasters,
                                                 std::span<const double> cameraWeights, double sigma, int samples);

/// Pooled payload sum_n w_n c_n / sum_n w_n, with c_n the opacity-normalized composite of view n,
/// then the head. Fills pooled, raw and valid from rasters and weights.
void pool_and_decode(RenderPass &pass, const LinearHead &head);

/// Rasterizes the given views (full or layered), computes pooling weights and decodes.
RenderPass forward_pass(const Scene &scene, const CameraModel &camera, std::span<const int> viewIndices,
                        std::span<const double> cameraWeights, const LinearHead &head, const RenderOptions &options);

/// Gradients of a loss with upstream d/d(raw) into the head and every contributing view.
/// `viewGrads` is indexed like scene.views. Pooling weights are held constant.
void backward_pass(const Scene &scene, const RenderPass &pass, const LinearHead &head, std::span<const double> dRaw,
                   std::vector<ViewGradients> &viewGrads, LinearHeadGrad *headGrad, bool geometry = true);

struct RenderStats {
    std::int64_t splats = 0;
    std::int64_t grazingSkips = 0;
    std::int64_t behindSkips = 0;
    bool selectionFallback = false;
};

struct NovelRender {
    FloatImage color; ///< clamped to [0, 1], background where invalid
    std::vector<std::uint8_t> validity;
    std::vector<int> selectedIds;
    std::vector<FloatImage> perViewWeights; ///< parallel to selectedIds
    RenderStats stats;
};

/// Camera selection over `candidates` (indices into scene.views) for a novel camera.
Selection choose_views(const Scene &scene, const CameraModel &camera, std::span<const int> candidates, int k,
                       const RenderOptions &options);

/// Full pipeline: select views, rasterize, depth test, pool, decode. With `temporal` the
/// selection is smoothed across calls and w_CS comes from the smoothed weights; without it the
/// selected views are weighted uniformly. Throws InvalidInput for an empty scene.
NovelRender render_novel(const Scene &scene, const CameraModel &camera, const RenderOptions &options,
                         const LinearHead &head, SelectionState *temporal = nullptr);

/// Peak signal-to-noise ratio in dB over all channels (peak 1).
double psnr(const FloatImage &a, const FloatImage &b);

} // namespace splatview
