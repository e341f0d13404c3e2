// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "splatview/camera_select.hpp"

#include "splatview/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace splatview {

double ScoreMap::total() const { return std::accumulate(scores.begin(), scores.end(), 0.0); }

CoverageRaster coverage_raster(std::span<const InputView *const> views, const CameraModel &novel, int downscale) {
    if (downscale < 1) {
        throw InvalidInput("coverage_raster: downscale must be >= 1");
    }
    CoverageRaster cov;
    cov.width = (novel.width + downscale - 1) / downscale;
    cov.height = (novel.height + downscale - 1) / downscale;
    const std::size_t ncell = static_cast<std::size_t>(cov.width) * cov.height;
    cov.depth.assign(ncell, std::numeric_limits<double>::infinity());
    cov.point.assign(ncell, Vec3::Zero());
    for (const InputView *view : views) {
        const int w = view->camera.width;
        const int h = view->camera.height;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t p = static_cast<std::size_t>(y) * w + x;
                if (!view->validDepth(p)) {
                    continue;
                }
                const Vec3 world = view->camera.toWorld(view->depth.data()[p] * view->camera.rayCamera(Vec2(x, y)));
                const Vec3 pc = novel.toCamera(world);
                if (!(pc.z() > 1e-9)) {
                    continue;
                }
                const double u = novel.fx * pc.x() / pc.z() + novel.cx;
                const double v = novel.fy * pc.y() / pc.z() + novel.cy;
                if (!novel.inBounds({u, v})) {
                    continue;
                }
                const int cx = std::clamp(static_cast<int>(std::floor((u + 0.5) / downscale)), 0, cov.width - 1);
                const int cy = std::clamp(static_cast<int>(std::floor((v + 0.5) / downscale)), 0, cov.height - 1);
                const std::size_t c = static_cast<std::size_t>(cy) * cov.width + cx;
                if (pc.z() < cov.depth[c]) {
                    cov.depth[c] = pc.z();
                    cov.point[c] = world;
                }
            }
        }
    }
    return cov;
}

ScoreMap score_map(const CoverageRaster &coverage, const InputView &view, const CameraModel &novel, ScoreMode mode,
                   double tolerance) {
    ScoreMap map;
    map.viewId = view.id;
    map.width = coverage.width;
    map.height = coverage.height;
    map.scores.assign(coverage.depth.size(), 0.0);
    const CameraModel &cam = view.camera;
    const Vec3 novelCenter = novel.center();
    const Vec3 viewCenter = cam.center();
    for (std::size_t c = 0; c < coverage.depth.size(); ++c) {
        if (!std::isfinite(coverage.depth[c])) {
            continue;
        }
        const Vec3 &world = coverage.point[c];
        const Vec3 pc = cam.toCamera(world);
        if (!(pc.z() > 1e-9)) {
            continue;
        }
        const double u = cam.fx * pc.x() / pc.z() + cam.cx;
        const double v = cam.fy * pc.y() / pc.z() + cam.cy;
        const int x = static_cast<int>(std::lround(u));
        const int y = static_cast<int>(std::lround(v));
        if (x < 0 || y < 0 || x >= cam.width || y >= cam.height) {
            continue;
        }
        const std::size_t p = static_cast<std::size_t>(y) * cam.width + x;
        if (!view.validDepth(p)) {
            continue;
        }
        if (std::abs(view.depth.data()[p] - pc.z()) >= tolerance * pc.z()) {
            continue;
        }
        if (mode == ScoreMode::Binary) {
            map.scores[c] = 1.0;
        } else {
            const double din = (world - viewCenter).norm();
            const double dnov = (world - novelCenter).norm();
            map.scores[c] = std::min(din, dnov) / std::max(din, dnov);
        }
    }
    return map;
}

std::vector<ScoreMap> score_maps(std::span<const InputView *const> views, const CameraModel &novel, int downscale,
                                 ScoreMode mode, double tolerance) {
    const CoverageRaster coverage = coverage_raster(views, novel, downscale);
    std::vector<ScoreMap> maps;
    maps.reserve(views.size());
    for (const InputView *v : views) {
        maps.push_back(score_map(coverage, *v, novel, mode, tolerance));
    }
    return maps;
}

double coverage_of(std::span<const ScoreMap> maps, std::span<const int> subset) {
    if (maps.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t c = 0; c < maps.front().scores.size(); ++c) {
        double best = 0.0;
        for (const int i : subset) {
            best = std::max(best, maps[i].scores[c]);
        }
        total += best;
    }
    return total;
}

Selection select_cameras(std::span<const ScoreMap> maps, int k, double epsilon) {
    if (k < 1 || k > static_cast<int>(maps.size())) {
        throw InvalidInput("select_cameras: K must be in [1, number of views]");
    }
    const std::size_t ncell = maps.front().scores.size();
    for (const auto &m : maps) {
        if (m.scores.size() != ncell) {
            throw InvalidInput("select_cameras: score maps differ in size");
        }
    }
    // candidates in id order so that strict comparisons give the lower-id tie-break
    std::vector<std::size_t> order(maps.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return maps[a].viewId < maps[b].viewId; });

    std::vector<double> best(ncell, 0.0);
    std::vector<bool> taken(maps.size(), false);
    Selection sel;
    double prevGain = 0.0;
    for (int pick = 0; pick < k; ++pick) {
        std::size_t arg = maps.size();
        double argGain = -1.0;
        for (const std::size_t i : order) {
            if (taken[i]) {
                continue;
            }
            double gain = 0.0;
            for (std::size_t c = 0; c < ncell; ++c) {
                gain += std::max(0.0, maps[i].scores[c] - best[c]);
            }
            if (gain > argGain) {
                argGain = gain;
                arg = i;
            }
        }
        if (!sel.fallback && pick > 0 && (prevGain <= 0.0 || argGain / prevGain < epsilon)) {
            sel.fallback = true;
            sel.fallbackAt = pick;
        }
        if (sel.fallback) {
            double argTotal = -1.0;
            for (const std::size_t i : order) {
                if (taken[i]) {
                    continue;
                }
                const double t = maps[i].total();
                if (t > argTotal) {
                    argTotal = t;
                    arg = i;
                }
            }
            argGain = 0.0;
            for (std::size_t c = 0; c < ncell; ++c) {
                argGain += std::max(0.0, maps[arg].scores[c] - best[c]);
            }
        }
        taken[arg] = true;
        sel.viewIds.push_back(maps[arg].viewId);
        for (std::size_t c = 0; c < ncell; ++c) {
            best[c] = std::max(best[c], maps[arg].scores[c]);
        }
        if (!sel.fallback) {
            prevGain = argGain;
        }
    }
    sel.coverage = std::accumulate(best.begin(), best.end(), 0.0);
    return sel;
}

SelectionState SelectionState::initial(std::vector<int> viewIds, double lambda, int keep) {
    SelectionState s;
    s.weights.assign(viewIds.size(), 0.0);
    s.viewIds = std::move(viewIds);
    s.lambda = lambda;
    s.keep = keep;
    return s;
}

SelectionState update_temporal_weights(const SelectionState &state, std::span<const double> scores, double lambda) {
    if (!(lambda > 0.0 && lambda <= 1.0)) {
        throw InvalidInput("update_temporal_weights: lambda must be in (0, 1]");
    }
    if (scores.size() != state.viewIds.size()) {
        throw InvalidInput("update_temporal_weights: score count mismatch");
    }
    SelectionState next = state;
    next.lambda = lambda;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        next.weights[i] = lambda * scores[i] + (1.0 - lambda) * state.weights[i];
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (next.weights[a] != next.weights[b]) {
            return next.weights[a] > next.weights[b];
        }
        return next.viewIds[a] < next.viewIds[b];
    });
    next.selected.clear();
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(std::max(0, state.keep)), order.size());
    for (std::size_t i = 0; i < keep; ++i) {
        next.selected.push_back(next.viewIds[order[i]]);
    }
    return next;
}

std::vector<double> selection_scores(const SelectionState &state, std::span<const int> selectedIds) {
    std::vector<double> s(state.viewIds.size(), 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (std::find(selectedIds.begin(), selectedIds.end(), state.viewIds[i]) != selectedIds.end()) {
            s[i] = 1.0;
        }
    }
    return s;
}

std::vector<double> smooth_normalize(std::span<const double> weights) {
    if (weights.empty()) {
        throw InvalidInput("smooth_normalize: empty selection");
    }
    const double lo = *std::min_element(weights.begin(), weights.end());
    double sum = 0.0;
    for (const double w : weights) {
        sum += w - lo;
    }
    std::vector<double> out(weights.size());
    if (sum < 1e-12) {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(weights.size()));
        return out;
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
        out[i] = (weights[i] - lo) / sum;
    }
    return out;
}

} // namespace splatview
