// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatview/scene.hpp"

#include <span>
#include <vector>

namespace splatview {

inline constexpr int kDefaultScoreDownscale = 8;
inline constexpr double kDefaultOcclusionTolerance = 0.02;
inline constexpr double kDefaultDegenerateEpsilon = 0.05;
inline constexpr double kDefaultTemporalLambda = 0.05;
inline constexpr int kDefaultViewsKept = 9;

enum class ScoreMode { Binary, DistanceRatio };

/// Per-view score of every cell of a downscaled novel-view raster.
struct ScoreMap {
    int viewId = 0;
    int width = 0;
    int height = 0;
    std::vector<double> scores;

    double total() const;
};

/// Nearest lifted point per cell of the downscaled novel raster, over a set of views.
struct CoverageRaster {
    int width = 0;
    int height = 0;
    std::vector<double> depth; ///< +inf where empty
    std::vector<Vec3> point;
};

CoverageRaster coverage_raster(std::span<const InputView *const> views, const CameraModel &novel, int downscale);

/// A cell scores for `view` when the surface point it sees reprojects inside the view with a
/// depth within `tolerance` (relative) of the view's own depth map there.
ScoreMap score_map(const CoverageRaster &coverage, const InputView &view, const CameraModel &novel, ScoreMode mode,
                   double tolerance = kDefaultOcclusionTolerance);

/// Score maps of every view in `views` against the union point cloud of the same views.
std::vector<ScoreMap> score_maps(std::span<const InputView *const> views, const CameraModel &novel,
                                 int downscale = kDefaultScoreDownscale, ScoreMode mode = ScoreMode::Binary,
                                 double tolerance = kDefaultOcclusionTolerance);

struct Selection {
    std::vector<int> viewIds; ///< in pick order
    double coverage = 0.0;    ///< sum over cells of the max selected score
    bool fallback = false;    ///< degenerate-case criterion was used
    int fallbackAt = -1;      ///< index in viewIds of the first fallback pick
};

/// Greedy maximum-coverage selection of K views. When the best marginal gain drops below
/// epsilon times the previous pick's gain, that pick and all later ones maximize the absolute
/// score instead. Ties go to the lower view id. Throws InvalidInput unless 1 <= K <= maps.
Selection select_cameras(std::span<const ScoreMap> maps, int k, double epsilon = kDefaultDegenerateEpsilon);

/// Coverage of an arbitrary subset (indices into maps).
double coverage_of(std::span<const ScoreMap> maps, std::span<const int> subset);

struct SelectionState {
    std::vector<int> viewIds;     ///< all candidate views
    std::vector<double> weights;  ///< smoothed scores, parallel to viewIds
    std::vector<int> selected;    ///< ids of the N highest weights
    double lambda = kDefaultTemporalLambda;
    int keep = kDefaultViewsKept;

    static SelectionState initial(std::vector<int> viewIds, double lambda = kDefaultTemporalLambda,
                                  int keep = kDefaultViewsKept);
};

/// w = lambda s + (1 - lambda) w_prev, then keep the N highest (ties to lower id).
/// `scores` is parallel to state.viewIds. Throws InvalidInput for lambda outside (0, 1].
SelectionState update_temporal_weights(const SelectionState &state, std::span<const double> scores, double lambda);

/// Binary scores for a selection: 1 for selected ids, 0 otherwise.
std::vector<double> selection_scores(const SelectionState &state, std::span<const int> selectedIds);

/// (w - min w) / sum(w - min w); uniform when all weights are equal.
std::vector<double> smooth_normalize(std::span<const double> weights);

} // namespace splatview
