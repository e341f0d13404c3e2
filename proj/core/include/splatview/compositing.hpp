// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatview/ewa_splat.hpp"

#include <span>
#include <vector>

namespace splatview {

struct CompositeResult {
    Payload payload{};
    double opacity = 0.0;
    std::size_t used = 0; ///< fragments consumed before early termination
};

/// Front-to-back compositing of depth-sorted (alpha, payload) pairs:
/// c = sum_i c_i a_i prod_{j<i} (1 - a_j).
CompositeResult composite_front_to_back(std::span<const double> alphas, std::span<const Payload> payloads,
                                        bool earlyTermination);

struct FragmentGrad {
    Payload dPayload{};
    double dAlpha = 0.0;
};

/// Gradients of a loss with respect to each fragment's payload and alpha, given the upstream
/// gradients on the composited payload and on the accumulated opacity. Depth order is constant.
///
/// dc/dc_i = a_i T_i and dc/da_i = T_i (c_i - B_{i+1}) where T_i = prod_{j<i}(1 - a_j) and
/// B_{i+1} is the composite of the fragments behind i. The latter equals
/// c_i T_i - sum_{l>i} c_l a_l prod_{j<l, j!=i}(1 - a_j) without dividing by (1 - a_i).
std::vector<FragmentGrad> composite_backward(std::span<const double> alphas, std::span<const Payload> payloads,
                                             std::span<const double> upstreamPayload, double upstreamOpacity = 0.0);

/// Per-fragment gradients for a whole raster, parallel to `raster.fragments`.
/// `upstreamOpacity` may be empty.
std::vector<FragmentGrad> composite_backward(const ViewRaster &raster, std::span<const double> upstreamPayload,
                                             std::span<const double> upstreamOpacity);

/// Gradients of the per-view parameter maps. Buffers are sized like the view's maps.
struct ViewGradients {
    std::vector<double> color;
    std::vector<double> depth;
    std::vector<double> normal;
    std::vector<double> uncertaintyLogit;
    std::vector<double> featureLogit;
    double mu = 0.0;
    bool touched = false;

    explicit ViewGradients(const InputView &view);
    ViewGradients() = default;
    bool allZero() const;
};

/// Chains fragment gradients of a full (non-layered) raster into the view's parameters.
/// Payload grads go through harmonization and the feature sigmoid; alpha grads go through the
/// Gaussian into the screen mean (analytic into depth) and the covariance (into uncertainty
/// analytically, into normal and depth by central differences of the covariance construction).
void attribute_backward(const InputView &view, const CameraModel &novel, const ViewRaster &raster,
                        std::span<const FragmentGrad> fragmentGrads, ViewGradients &grads, bool geometry = true);

} // namespace splatview
