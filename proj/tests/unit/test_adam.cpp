// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include "splatview/adam.hpp"
#include "splatview/errors.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace splatview;

TEST(Adam, MatchesScalarReference) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n01;
    std::vector<double> p(5);
    for (double &x : p) {
        x = n01(rng);
    }
    std::vector<double> ref = p;
    std::vector<oracle::ScalarAdam> refState(p.size());
    AdamState state;
    for (int step = 0; step < 200; ++step) {
        std::vector<double> g(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            g[i] = 2.0 * p[i] + 0.1 * n01(rng);
        }
        adam_update(std::span<double>(p), g, state, 1e-2);
        for (std::size_t i = 0; i < p.size(); ++i) {
            ref[i] = refState[i].step(ref[i], g[i], 1e-2);
        }
    }
    EXPECT_EQ(state.step, 200);
    for (std::size_t i = 0; i < p.size(); ++i) {
        EXPECT_NEAR(p[i], ref[i], 1e-12);
    }
}

TEST(Adam, FloatStorageTracksReference) {
    std::vector<float> p{0.5f, -0.25f};
    std::vector<double> ref{0.5, -0.25};
    oracle::ScalarAdam a, b;
    AdamState state;
    for (int step = 0; step < 50; ++step) {
        const std::vector<double> g{static_cast<double>(p[0]) - 1.0, static_cast<double>(p[1])};
        adam_update(std::span<float>(p), g, state, 1e-3);
        ref[0] = a.step(ref[0], ref[0] - 1.0, 1e-3);
        ref[1] = b.step(ref[1], ref[1], 1e-3);
    }
    EXPECT_NEAR(p[0], ref[0], 1e-6);
    EXPECT_NEAR(p[1], ref[1], 1e-6);
}

TEST(Adam, FirstStepHasMagnitudeLr) {
    std::vector<double> p{1.0, 1.0};
    const std::vector<double> g{3.0, -1e-3};
    AdamState state;
    adam_update(std::span<double>(p), g, state, 0.1);
    EXPECT_NEAR(p[0], 0.9, 1e-6);
    EXPECT_NEAR(p[1], 1.1, 1e-4);
}

TEST(Adam, NonFiniteGradientThrowsAndLeavesParams) {
    std::vector<double> p{1.0, 2.0, 3.0};
    const std::vector<double> g{0.1, std::numeric_limits<double>::quiet_NaN(), 0.2};
    AdamState state;
    try {
        adam_update(std::span<double>(p), g, state, 0.1, {}, "depth[7]");
        FAIL() << "expected NumericalError";
    } catch (const NumericalError &e) {
        EXPECT_NE(std::string(e.what()).find("depth[7]"), std::string::npos);
    }
    EXPECT_EQ(p, (std::vector<double>{1.0, 2.0, 3.0}));
    EXPECT_EQ(state.step, 0);
}

TEST(Adam, ZeroLearningRateIsIdentity) {
    std::vector<float> p{0.1f, 0.2f};
    const std::vector<double> g{5.0, -5.0};
    AdamState state;
    adam_update(std::span<float>(p), g, state, 0.0);
    EXPECT_EQ(p, (std::vector<float>{0.1f, 0.2f}));
}
