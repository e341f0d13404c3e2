// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatview/camera.hpp"
#include "splatview/image.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace splatview {

inline constexpr int kFeatureChannels = 6;
/// 3 harmonized color channels followed by the sigmoid features.
inline constexpr int kPayloadSize = 3 + kFeatureChannels;

/// Per-view optimizable attribute maps together with the view's camera.
///
/// Depth is camera-frame z in meters; entries that are not finite or not positive are invalid
/// and produce no splats. Normals are unit vectors in the world frame. Uncertainty is stored
/// as a log so that U = exp(logit) stays positive, features as pre-sigmoid logits.
struct InputView {
    int id = 0;
    CameraModel camera;
    FloatImage color;            // 3 channels, [0, 1]
    FloatImage depth;            // 1 channel
    FloatImage normal;           // 3 channels
    FloatImage uncertaintyLogit; // 1 channel
    FloatImage featureLogit;     // kFeatureChannels channels
    double mu = 1.0;

    bool validDepth(std::size_t pixel) const;
    double uncertainty(std::size_t pixel) const;
    /// Throws InvalidInput if map shapes disagree with the camera.
    void validate() const;
};

/// Uncertainty logit giving U = 0.5 (the tighter-than-EWA starting kernel).
double default_uncertainty_logit();

/// Builds a view with default-initialized optimizable maps (U = 0.5, features = 0.5, mu = 1).
InputView make_input_view(int id, const CameraModel &camera, FloatImage color, FloatImage depth,
                          FloatImage normal);

struct Scene {
    std::vector<InputView> views;
    Vec3 backgroundColor = Vec3::Zero();
    double depthSigma = 0.01;
    std::uint64_t rngSeed = 0;

    void validate() const;
    /// Index into `views` for a view id, or -1.
    int findView(int id) const;
};

/// Median valid depth over all views, 0 if there is none.
double median_valid_depth(const Scene &scene);

/// mu * color, unclamped.
FloatImage apply_harmonization(const InputView &view);

/// World point at `depth` along the ray through `pixel`.
/// Throws InvalidInput for non-positive depth or a pixel outside the image.
Vec3 lift_pixel(const InputView &view, const Vec2 &pixel, double depth);
Vec3 lift_pixel(const CameraModel &camera, const Vec2 &pixel, double depth);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace splatview
