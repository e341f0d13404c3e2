// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include "splatview/errors.hpp"
#include "splatview/optimizer.hpp"
#include "splatview/synthetic.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace splatview;

namespace {

OptimConfig small_config() {
    OptimConfig c;
    c.patchSize = 24;
    c.seed = 3;
    return c;
}

void expect_same_scene(const Scene &a, const Scene &b) {
    ASSERT_EQ(a.views.size(), b.views.size());
    for (std::size_t i = 0; i < a.views.size(); ++i) {
        EXPECT_EQ(a.views[i].color, b.views[i].color);
        EXPECT_EQ(a.views[i].depth, b.views[i].depth);
        EXPECT_EQ(a.views[i].normal, b.views[i].normal);
        EXPECT_EQ(a.views[i].uncertaintyLogit, b.views[i].uncertaintyLogit);
        EXPECT_EQ(a.views[i].featureLogit, b.views[i].featureLogit);
        EXPECT_EQ(a.views[i].mu, b.views[i].mu);
    }
}

double max_abs_diff(const FloatImage &a, const FloatImage &b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        m = std::max(m, std::abs(static_cast<double>(a.data()[i]) - b.data()[i]));
    }
    return m;
}

} // namespace

TEST(Optimizer, ZeroLearningRatesLeaveParametersBitIdentical) {
    Scene s = gen_synthetic(oracle::smooth_spec(GeometryPreset::TwoWalls, 3, 32, 1)).scene;
    std::mt19937_64 jr(1);
    oracle::jitter_scene(s, jr, 0.02, 0.1, 0.5);
    const Scene before = s;
    LinearHead head = LinearHead::identity();
    OptimConfig c = small_config();
    c.lr = LearningRates{0, 0, 0, 0, 0, 0, 0};
    c.mask.mu = true;
    c.photoConsistency = true;
    Trainer t(s, head, c);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 3; ++i) {
        const auto terms = t.loo_step(rng);
        ASSERT_TRUE(terms.has_value());
        EXPECT_GT(terms->l1, 0.0);
    }
    expect_same_scene(before, s);
    EXPECT_EQ(head.matrix, LinearHead::identity().matrix);
    EXPECT_EQ(head.bias, LinearHead::identity().bias);
}

TEST(Optimizer, HoldoutReceivesOnlyMuGradient) {
    Scene s = gen_synthetic(oracle::smooth_spec(GeometryPreset::BoxCorner, 4, 32, 2)).scene;
    std::mt19937_64 jr(2);
    oracle::jitter_scene(s, jr, 0.02, 0.1, 0.5);
    LinearHead head = LinearHead::identity();
    OptimConfig c = small_config();
    c.mask.mu = true;
    Trainer t(s, head, c);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 6; ++i) {
        const auto terms = t.loo_step(rng);
        ASSERT_TRUE(terms.has_value());
        const int h = s.findView(terms->holdout);
        ASSERT_GE(h, 0);
        const ViewGradients &g = t.lastGradients()[h];
        auto zero = [](const std::vector<double> &v) {
            return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
        };
        EXPECT_TRUE(zero(g.color));
        EXPECT_TRUE(zero(g.depth));
        EXPECT_TRUE(zero(g.normal));
        EXPECT_TRUE(zero(g.uncertaintyLogit));
        EXPECT_TRUE(zero(g.featureLogit));
        EXPECT_NE(g.mu, 0.0);
        for (int src : t.lastSources()) {
            EXPECT_NE(src, terms->holdout);
        }
    }
}

TEST(Optimizer, SelfConsistentFlatSceneBarelyMoves) {
    SyntheticSpec spec;
    spec.texture = TextureKind::Flat;
    spec.resolution = 32;
    spec.views = 3;
    Scene s = gen_synthetic(spec).scene;
    const Scene before = s;
    LinearHead head = LinearHead::identity();
    OptimConfig c = small_config();
    Trainer t(s, head, c);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 3; ++i) {
        const auto terms = t.loo_step(rng);
        ASSERT_TRUE(terms.has_value());
        EXPECT_LT(terms->total, 1e-3);
    }
    for (std::size_t i = 0; i < s.views.size(); ++i) {
        EXPECT_LT(max_abs_diff(s.views[i].color, before.views[i].color), c.lr.color * 1e-2);
        EXPECT_LT(max_abs_diff(s.views[i].depth, before.views[i].depth), c.lr.depth * 1e-2);
        EXPECT_LT(max_abs_diff(s.views[i].normal, before.views[i].normal), c.lr.normal * 1e-2);
        EXPECT_LT(max_abs_diff(s.views[i].uncertaintyLogit, before.views[i].uncertaintyLogit),
                  c.lr.uncertainty * 1e-2);
        EXPECT_LT(max_abs_diff(s.views[i].featureLogit, before.views[i].featureLogit), c.lr.features * 1e-2);
    }
    EXPECT_LT((head.matrix - LinearHead::identity().matrix).cwiseAbs().maxCoeff(), c.lr.head * 1e-2);
}

TEST(Optimizer, LossDecreasesOnPerturbedDepth) {
    SyntheticSpec spec = oracle::smooth_spec(GeometryPreset::TexturedPlane, 3, 48, 3);
    spec.depthNoise = 0.02;
    spec.depthNoiseCell = 0.0;
    Scene s = gen_synthetic(spec).scene;
    LinearHead head = LinearHead::identity();
    OptimConfig c = small_config();
    c.iterations = 60;
    c.patchSize = 32;
    c.mask.color = false;
    std::ostringstream csv;
    const auto trace = optimize(s, head, c, &csv);
    ASSERT_EQ(trace.size(), 60u);
    double first = 0.0;
    double last = 0.0;
    for (int i = 0; i < 10; ++i) {
        first += trace[i].l1;
        last += trace[trace.size() - 1 - i].l1;
    }
    EXPECT_LT(last, first);
    for (const auto &t : trace) {
        EXPECT_TRUE(std::isfinite(t.total));
    }
    const std::string text = csv.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 61);
}

TEST(Optimizer, RenormalizeNormals) {
    Scene s = gen_synthetic(oracle::smooth_spec(GeometryPreset::BoxCorner, 2, 16, 4)).scene;
    const Scene unit = s;
    renormalize_normals(s);
    expect_same_scene(unit, s);

    for (float &v : s.views[0].normal.data()) {
        v *= 2.0f;
    }
    renormalize_normals(s);
    EXPECT_LT(max_abs_diff(s.views[0].normal, unit.views[0].normal), 1e-6);

    std::mt19937_64 rng(3);
    std::normal_distribution<float> n01;
    for (float &v : s.views[1].normal.data()) {
        v = n01(rng);
    }
    const std::size_t zeroPixel = 5;
    for (int k = 0; k < 3; ++k) {
        s.views[1].normal.data()[zeroPixel * 3 + k] = 0.0f;
    }
    renormalize_normals(s, &unit);
    for (std::size_t p = 0; p < s.views[1].normal.pixelCount(); ++p) {
        const auto n = s.views[1].normal.pixel(p);
        EXPECT_NEAR(std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]), 1.0, 1e-6);
    }
    for (int k = 0; k < 3; ++k) {
        EXPECT_EQ(s.views[1].normal.data()[zeroPixel * 3 + k], unit.views[1].normal.data()[zeroPixel * 3 + k]);
    }
}

TEST(Optimizer, MuRegularizer) {
    Scene s = gen_synthetic(oracle::smooth_spec(GeometryPreset::TexturedPlane, 4, 16, 5)).scene;
    EXPECT_EQ(mu_regularizer(s, 0.2), 0.0);
    s.views[1].mu = 1.5;
    s.views[3].mu = 0.8;
    EXPECT_NEAR(mu_regularizer(s, 0.2), 0.2 * (0.25 + 0.04) / 4.0, 1e-15);
    // strictly convex along any coordinate
    for (double m : {0.3, 1.0, 1.7}) {
        const double h = 1e-3;
        s.views[2].mu = m + h;
        const double up = mu_regularizer(s, 0.2);
        s.views[2].mu = m - h;
        const double dn = mu_regularizer(s, 0.2);
        s.views[2].mu = m;
        EXPECT_GT(up + dn - 2.0 * mu_regularizer(s, 0.2), 0.0);
    }
}

TEST(Optimizer, ConsistentSceneKeepsMuNearOne) {
    // The holdout L1 shrinks with a common exposure scale, so all mu settle below 1 by roughly
    // N * L1 / (2 lambda). A coarse texture keeps the reprojection residual, and that offset, small.
    SyntheticSpec spec = oracle::smooth_spec(GeometryPreset::TexturedPlane, 3, 32, 6);
    spec.textureScale = 0.5;
    Scene s = gen_synthetic(spec).scene;
    LinearHead head = LinearHead::identity();
    OptimConfig c = small_config();
    c.iterations = 500;
    c.patchSize = 32;
    const HarmonizeResult r = harmonize(s, head, c);
    ASSERT_EQ(r.mu.size(), 3u);
    for (double m : r.mu) {
        EXPECT_NEAR(m, 1.0, 0.02);
        EXPECT_NEAR(m / r.mu[0], 1.0, 0.005);
    }
    EXPECT_EQ(r.trace.size(), 500u);
}

TEST(Optimizer, NonFiniteInputAborts) {
    Scene s = gen_synthetic(oracle::smooth_spec(GeometryPreset::TexturedPlane, 2, 16, 7)).scene;
    for (auto &v : s.views) {
        std::fill(v.color.data().begin(), v.color.data().end(), std::numeric_limits<float>::quiet_NaN());
    }
    LinearHead head = LinearHead::identity();
    OptimConfig c = small_config();
    c.patchSize = 16;
    c.iterations = 2;
    EXPECT_THROW(optimize(s, head, c), NumericalError);
}

TEST(Optimizer, ConfigValidation) {
    OptimConfig c;
    EXPECT_NO_THROW(c.validate());
    c.lr.depth = -1e-4;
    EXPECT_THROW(c.validate(), InvalidInput);
    c = OptimConfig{};
    c.patchSize = 8;
    EXPECT_THROW(c.validate(), InvalidInput);
    c = OptimConfig{};
    c.selectUse = 20;
    EXPECT_THROW(c.validate(), InvalidInput);

    Scene one = gen_synthetic(oracle::smooth_spec(GeometryPreset::TexturedPlane, 1, 16, 1)).scene;
    LinearHead head = LinearHead::identity();
    EXPECT_THROW(harmonize(one, head, small_config()), InvalidInput);
}
