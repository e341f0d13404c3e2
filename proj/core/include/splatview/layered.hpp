// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatview/ewa_splat.hpp"

#include <span>
#include <vector>

namespace splatview {

inline constexpr int kDefaultDepthLayers = 10;
/// The depth range is taken from a min/max raster at 1/16 of the novel resolution.
inline constexpr int kDepthRangeDownscale = 16;

struct DepthRange {
    double nearest = 0.0;
    double farthest = 0.0;
    bool empty = true;
};

/// Global min/max camera depth of splat centers landing in the image, via a coarse min/max raster.
DepthRange coarse_depth_range(std::span<const std::vector<Splat>> perViewSplats, int width, int height);

/// Order-free approximation of per-view compositing. Splats are binned into `layers` global
/// depth bins; inside a bin opacity accumulates as sum log(1 - alpha) and payloads as an
/// alpha-weighted mean; bins are then composited front to back. Each returned raster stores
/// one fragment per non-empty bin (splat = -1, alpha = bin opacity, depth = alpha-weighted mean
/// depth), which feeds the probabilistic depth test.
std::vector<ViewRaster> layered_composite(std::span<const InputView *const> views, const CameraModel &novel,
                                          int layers = kDefaultDepthLayers);

/// Same, on prepared splat lists (one list per view, `viewIds` parallel to it).
std::vector<ViewRaster> layered_composite_splats(std::vector<std::vector<Splat>> perViewSplats,
                                                 std::span<const int> viewIds, int width, int height,
                                                 int layers = kDefaultDepthLayers);

} // namespace splatview
