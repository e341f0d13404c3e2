// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace splatview {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moment buffers and step counter for one parameter group.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step = 0;
};

/// One bias-corrected Adam step in place. Throws NumericalError naming `label` and the offending
/// index if any gradient entry is not finite; the parameters are left untouched in that case.
void adam_update(std::span<float> param, std::span<const double> grad, AdamState &state, double lr,
                 const AdamConfig &config = {}, const std::string &label = "param");
void adam_update(std::span<double> param, std::span<const double> grad, AdamState &state, double lr,
                 const AdamConfig &config = {}, const std::string &label = "param");

} // namespace splatview
