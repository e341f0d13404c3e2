// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatview/adam.hpp"
#include "splatview/renderer.hpp"
#include "splatview/scene.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

namespace splatview {

struct LearningRates {
    double head = 1e-4;
    double normal = 1e-4;
    double depth = 1e-4;
    double features = 1e-3;
    double uncertainty = 1e-2;
    double color = 1e-3;
    double mu = 1e-3;
};

/// Which parameter groups receive updates.
struct ParameterMask {
    bool head = true;
    bool color = true;
    bool depth = true;
    bool normal = true;
    bool uncertainty = true;
    bool features = true;
    bool mu = false;

    bool geometry() const { return depth || normal || uncertainty; }
};

struct OptimConfig {
    int iterations = 1000;
    int patchSize = 150;
    LearningRates lr;
    AdamConfig adam;
    int selectPool = 13;
    int selectUse = 9;
    std::uint64_t seed = 0;
    RenderOptions render;
    ParameterMask mask;

    double muRegularization = 0.2; ///< lambda of the mu regularizer
    bool photoConsistency = false;
    int photoPairs = 2;            ///< <= 0 uses every ordered pair
    double photoCoverage = 0.5;    ///< reprojected opacity needed to count a pixel as covered

    /// Throws InvalidInput for negative or non-finite rates, patchSize < 16 or use > pool.
    void validate() const;
};

struct LossTerms {
    int iteration = 0;
    int holdout = -1; ///< view id
    double total = 0.0;
    double l1 = 0.0;
    double muRegularizer = 0.0;
    double photo = 0.0;
    int validPixels = 0;
};

/// Residuals smaller than this get a zero L1 subgradient.
inline constexpr double kResidualDeadband = 1e-9;

/// lambda * sum (mu_i - 1)^2 / N.
double mu_regularizer(const Scene &scene, double lambda);

/// Divides every normal by its length. Zero-length normals revert to `previous` when given,
/// otherwise to the direction pointing back at the view's camera.
void renormalize_normals(Scene &scene, const Scene *previous = nullptr);
void renormalize_normals(InputView &view, const FloatImage *previous = nullptr);

/// Leave-one-out optimizer owning the Adam state of the head and every view.
class Trainer {
  public:
    Trainer(Scene &scene, LinearHead &head, OptimConfig config);

    /// One iteration: hold out a random view, pick sources among the others, render a random
    /// patch of the holdout, take the L1 loss against mu_h * color_h (plus the mu regularizer and
    /// photo-consistency terms when enabled), backpropagate and step Adam.
    /// Returns nullopt when 10 patches in a row had no valid pixel.
    std::optional<LossTerms> loo_step(std::mt19937_64 &rng);

    /// Gradients computed by the last step, indexed like scene.views.
    const std::vector<ViewGradients> &lastGradients() const { return grads_; }
    const std::vector<int> &lastSources() const { return lastSources_; }
    const OptimConfig &config() const { return config_; }

  private:
    struct ViewAdam {
        AdamState color, depth, normal, uncertainty, features, mu;
    };

    double photo_term(int target, int source, std::mt19937_64 &rng);
    void apply_updates(const std::vector<bool> &active);

    Scene &scene_;
    LinearHead &head_;
    OptimConfig config_;
    std::vector<ViewAdam> adam_;
    AdamState headMatrix_, headBias_;
    std::vector<ViewGradients> grads_;
    LinearHeadGrad headGrad_;
    std::vector<int> lastSources_;
    int iteration_ = 0;
};

/// Runs `config.iterations` leave-one-out steps. Loss terms of each completed step are returned
/// and, when `trace` is non-null, written as CSV rows.
std::vector<LossTerms> optimize(Scene &scene, LinearHead &head, const OptimConfig &config,
                                std::ostream *trace = nullptr);

struct HarmonizeResult {
    std::vector<double> mu; ///< parallel to scene.views
    std::vector<LossTerms> trace;
};

/// Per-view exposure harmonization: optimizes mu (and colors when `optimizeColors`) under
/// holdout L1 + mu regularizer + photo-consistency. Other parameter groups stay fixed.
HarmonizeResult harmonize(Scene &scene, LinearHead &head, OptimConfig config, bool optimizeColors = false,
                          std::ostream *trace = nullptr);

void write_loss_header(std::ostream &os);
void write_loss_row(std::ostream &os, const LossTerms &terms);

} // namespace splatview
