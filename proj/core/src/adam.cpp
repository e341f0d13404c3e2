// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "splatview/adam.hpp"

#include "splatview/errors.hpp"

#include <cmath>

namespace splatview {

namespace {

template <class T>
void adam_impl(std::span<T> param, std::span<const double> grad, AdamState &state, double lr,
               const AdamConfig &cfg, const std::string &label) {
    if (param.size() != grad.size()) {
        throw InvalidInput("adam_update(" + label + "): parameter and gradient sizes differ");
    }
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!std::isfinite(grad[i])) {
            throw NumericalError("adam_update(" + label + "): non-finite gradient " + std::to_string(grad[i]) +
                                 " at index " + std::to_string(i) + " (step " + std::to_string(state.step + 1) + ")");
        }
    }
    if (state.m.size() != param.size()) {
        state.m.assign(param.size(), 0.0);
        state.v.assign(param.size(), 0.0);
        state.step = 0;
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        param[i] = static_cast<T>(param[i] - lr * mhat / (std::sqrt(vhat) + cfg.epsilon));
    }
}

} // namespace

void adam_update(std::span<float> param, std::span<const double> grad, AdamState &state, double lr,
                 const AdamConfig &config, const std::string &label) {
    adam_impl(param, grad, state, lr, config, label);
}

void adam_update(std::span<double> param, std::span<const double> grad, AdamState &state, double lr,
                 const AdamConfig &config, const std::string &label) {
    adam_impl(param, grad, state, lr, config, label);
}

} // namespace splatview
