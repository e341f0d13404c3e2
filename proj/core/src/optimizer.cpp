// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "splatview/optimizer.hpp"

#include "splatview/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

namespace splatview {

void OptimConfig::validate() const {
    const double rates[] = {lr.head, lr.normal, lr.depth, lr.features, lr.uncertainty, lr.color, lr.mu};
    for (const double r : rates) {
        if (!(r >= 0.0) || !std::isfinite(r)) {
            throw InvalidInput("optimizer: learning rates must be finite and non-negative");
        }
    }
    if (patchSize < 16) {
        throw InvalidInput("optimizer: patch size must be >= 16");
    }
    if (selectUse < 1 || selectUse > selectPool) {
        throw InvalidInput("optimizer: views used must be in [1, selection pool]");
    }
    if (iterations < 0) {
        throw InvalidInput("optimizer: iterations must be >= 0");
    }
}

double mu_regularizer(const Scene &scene, double lambda) {
    if (scene.views.empty()) {
        return 0.0;
    }
    double s = 0.0;
    for (const auto &v : scene.views) {
        s += (v.mu - 1.0) * (v.mu - 1.0);
    }
    return lambda * s / static_cast<double>(scene.views.size());
}

void renormalize_normals(InputView &view, const FloatImage *previous) {
    auto &n = view.normal.data();
    const Vec3 towardCamera = -view.camera.rotation.row(2).transpose();
    for (std::size_t p = 0; p < view.normal.pixelCount(); ++p) {
        const double x = n[p * 3], y = n[p * 3 + 1], z = n[p * 3 + 2];
        const double len = std::sqrt(x * x + y * y + z * z);
        if (len > 0.0 && std::isfinite(len)) {
            n[p * 3] = static_cast<float>(x / len);
            n[p * 3 + 1] = static_cast<float>(y / len);
            n[p * 3 + 2] = static_cast<float>(z / len);
        } else if (previous) {
            for (int k = 0; k < 3; ++k) {
                n[p * 3 + k] = previous->data()[p * 3 + k];
            }
        } else {
            for (int k = 0; k < 3; ++k) {
                n[p * 3 + k] = static_cast<float>(towardCamera[k]);
            }
        }
    }
}

void renormalize_normals(Scene &scene, const Scene *previous) {
    for (std::size_t i = 0; i < scene.views.size(); ++i) {
        renormalize_normals(scene.views[i], previous ? &previous->views.at(i).normal : nullptr);
    }
}

Trainer::Trainer(Scene &scene, LinearHead &head, OptimConfig config)
    : scene_(scene), head_(head), config_(std::move(config)), adam_(scene.views.size()) {
    for (const auto &v : scene_.views) {
        grads_.emplace_back(v);
    }
}

double Trainer::photo_term(int target, int source, std::mt19937_64 &rng) {
    InputView &tv = scene_.views[target];
    const CameraModel &full = tv.camera;
    const int pw = std::min(config_.patchSize, full.width);
    const int ph = std::min(config_.patchSize, full.height);
    const int x0 = std::uniform_int_distribution<int>(0, full.width - pw)(rng);
    const int y0 = std::uniform_int_distribution<int>(0, full.height - ph)(rng);
    const CameraModel cam = full.cropped(x0, y0, pw, ph);

    RasterOptions ro = config_.render.raster;
    ro.retainFragments = true;
    const ViewRaster raster = rasterize_view(scene_.views[source], cam, ro);
    const std::size_t npix = raster.pixelCount();

    std::size_t count = 0;
    for (std::size_t p = 0; p < npix; ++p) {
        count += raster.opacity[p] >= config_.photoCoverage ? 1 : 0;
    }
    if (count == 0) {
        return 0.0;
    }
    const double norm = 1.0 / (3.0 * static_cast<double>(count));
    std::vector<double> upPayload(npix * kPayloadSize, 0.0);
    std::vector<double> upOpacity(npix, 0.0);
    ViewGradients &tg = grads_[target];
    double loss = 0.0;
    for (std::size_t p = 0; p < npix; ++p) {
        const double a = raster.opacity[p];
        if (a < config_.photoCoverage) {
            continue;
        }
        const int px = x0 + static_cast<int>(p % pw);
        const int py = y0 + static_cast<int>(p / pw);
        const std::size_t tp = static_cast<std::size_t>(py) * full.width + px;
        const auto c = raster.pixelPayload(p);
        double dA = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double col = tv.color.data()[tp * 3 + k];
            const double r = tv.mu * col - c[k] / a;
            loss += r * r * norm;
            const double g = 2.0 * r * norm;
            tg.mu += g * col;
            tg.color[tp * 3 + k] += g * tv.mu;
            // d/d(c/a) = -g
            upPayload[p * kPayloadSize + k] = -g / a;
            dA += g * c[k] / (a * a);
        }
        upOpacity[p] = dA;
    }
    tg.touched = true;
    const auto fragGrads = composite_backward(raster, upPayload, upOpacity);
    attribute_backward(scene_.views[source], cam, raster, fragGrads, grads_[source], config_.mask.geometry());
    return loss;
}

void Trainer::apply_updates(const std::vector<bool> &active) {
    const ParameterMask &mask = config_.mask;
    const LearningRates &lr = config_.lr;
    for (std::size_t i = 0; i < scene_.views.size(); ++i) {
        if (!active[i]) {
            continue;
        }
        InputView &v = scene_.views[i];
        ViewGradients &g = grads_[i];
        ViewAdam &st = adam_[i];
        const std::string tag = "view " + std::to_string(v.id) + " ";
        if (mask.color) {
            adam_update(v.color.data(), g.color, st.color, lr.color, config_.adam, tag + "color");
        }
        if (mask.depth) {
            adam_update(v.depth.data(), g.depth, st.depth, lr.depth, config_.adam, tag + "depth");
        }
        if (mask.normal) {
            const FloatImage before = v.normal;
            adam_update(v.normal.data(), g.normal, st.normal, lr.normal, config_.adam, tag + "normal");
            auto &n = v.normal.data();
            for (std::size_t p = 0; p < v.normal.pixelCount(); ++p) {
                if (n[p * 3] == before.data()[p * 3] && n[p * 3 + 1] == before.data()[p * 3 + 1] &&
                    n[p * 3 + 2] == before.data()[p * 3 + 2]) {
                    continue;
                }
                const double x = n[p * 3], y = n[p * 3 + 1], z = n[p * 3 + 2];
                const double len = std::sqrt(x * x + y * y + z * z);
                for (int k = 0; k < 3; ++k) {
                    n[p * 3 + k] = len > 0.0 ? static_cast<float>(n[p * 3 + k] / len) : before.data()[p * 3 + k];
                }
            }
        }
        if (mask.uncertainty) {
            adam_update(v.uncertaintyLogit.data(), g.uncertaintyLogit, st.uncertainty, lr.uncertainty, config_.adam,
                        tag + "uncertainty");
        }
        if (mask.features) {
            adam_update(v.featureLogit.data(), g.featureLogit, st.features, lr.features, config_.adam,
                        tag + "features");
        }
        if (mask.mu) {
            double mu = v.mu;
            adam_update(std::span<double>(&mu, 1), std::span<const double>(&g.mu, 1), st.mu, lr.mu, config_.adam,
                        tag + "mu");
            v.mu = std::max(0.0, mu);
        }
    }
    if (mask.head) {
        adam_update(std::span<double>(head_.matrix.data(), static_cast<std::size_t>(head_.matrix.size())),
                    std::span<const double>(headGrad_.matrix.data(), static_cast<std::size_t>(headGrad_.matrix.size())),
                    headMatrix_, lr.head, config_.adam, "head matrix");
        adam_update(std::span<double>(head_.bias.data(), 3), std::span<const double>(headGrad_.bias.data(), 3),
                    headBias_, lr.head, config_.adam, "head bias");
    }
}

std::optional<LossTerms> Trainer::loo_step(std::mt19937_64 &rng) {
    const int nviews = static_cast<int>(scene_.views.size());
    if (nviews < 2) {
        throw InvalidInput("loo_step: at least two views are required");
    }
    ++iteration_;
    for (std::size_t i = 0; i < grads_.size(); ++i) {
        grads_[i] = ViewGradients(scene_.views[i]);
    }
    headGrad_ = LinearHeadGrad{};

    const int holdout = std::uniform_int_distribution<int>(0, nviews - 1)(rng);
    std::vector<int> candidates;
    for (int i = 0; i < nviews; ++i) {
        if (i != holdout) {
            candidates.push_back(i);
        }
    }
    InputView &hv = scene_.views[holdout];
    const int pool = std::min(config_.selectPool, static_cast<int>(candidates.size()));
    const Selection sel = choose_views(scene_, hv.camera, candidates, pool, config_.render);
    std::vector<int> sourceIds = sel.viewIds;
    if (static_cast<int>(sourceIds.size()) > config_.selectUse) {
        std::vector<int> picked;
        std::sample(sourceIds.begin(), sourceIds.end(), std::back_inserter(picked), config_.selectUse, rng);
        sourceIds = std::move(picked);
    }
    std::vector<int> sources;
    for (const int id : sourceIds) {
        sources.push_back(scene_.findView(id));
    }
    lastSources_ = sources;
    const std::vector<double> wcs(sources.size(), 1.0 / static_cast<double>(sources.size()));

    const CameraModel &full = hv.camera;
    const int pw = std::min(config_.patchSize, full.width);
    const int ph = std::min(config_.patchSize, full.height);
    std::optional<RenderPass> pass;
    int x0 = 0, y0 = 0;
    std::size_t validCount = 0;
    for (int attempt = 0; attempt < 10; ++attempt) {
        x0 = std::uniform_int_distribution<int>(0, full.width - pw)(rng);
        y0 = std::uniform_int_distribution<int>(0, full.height - ph)(rng);
        RenderPass candidate = forward_pass(scene_, full.cropped(x0, y0, pw, ph), sources, wcs, head_, config_.render);
        validCount = static_cast<std::size_t>(std::count(candidate.valid.begin(), candidate.valid.end(), 1));
        if (validCount > 0) {
            pass = std::move(candidate);
            break;
        }
    }
    if (!pass) {
        std::cerr << "warning: iteration " << iteration_ << " skipped, no valid pixels in 10 patches of view "
                  << hv.id << "\n";
        return std::nullopt;
    }

    LossTerms terms;
    terms.iteration = iteration_;
    terms.holdout = hv.id;
    terms.validPixels = static_cast<int>(validCount);
    const std::size_t npix = pass->pixelCount();
    std::vector<double> dRaw(npix * 3, 0.0);
    const double norm = 1.0 / (3.0 * static_cast<double>(validCount));
    ViewGradients &hg = grads_[holdout];
    for (std::size_t p = 0; p < npix; ++p) {
        if (!pass->valid[p]) {
            continue;
        }
        const std::size_t tp = static_cast<std::size_t>(y0 + static_cast<int>(p / pw)) * full.width + x0 +
                               static_cast<int>(p % pw);
        for (int k = 0; k < 3; ++k) {
            const double target = hv.color.data()[tp * 3 + k];
            const double r = pass->raw[p * 3 + k] - hv.mu * target;
            terms.l1 += std::abs(r) * norm;
            const double s = std::abs(r) <= kResidualDeadband ? 0.0 : (r > 0.0 ? norm : -norm);
            dRaw[p * 3 + k] = s;
            hg.mu -= s * target;
        }
    }
    backward_pass(scene_, *pass, head_, dRaw, grads_, &headGrad_, config_.mask.geometry());

    std::vector<bool> active(scene_.views.size(), false);
    for (const int s : sources) {
        active[s] = true;
    }
    if (config_.mask.mu) {
        const double lambda = config_.muRegularization;
        terms.muRegularizer = mu_regularizer(scene_, lambda);
        const double n = static_cast<double>(nviews);
        for (int i = 0; i < nviews; ++i) {
            grads_[i].mu += 2.0 * lambda * (scene_.views[i].mu - 1.0) / n;
            active[i] = true;
        }
    }
    if (config_.photoConsistency) {
        std::vector<std::pair<int, int>> pairs;
        for (int a = 0; a < nviews; ++a) {
            for (int b = 0; b < nviews; ++b) {
                if (a != b) {
                    pairs.emplace_back(a, b);
                }
            }
        }
        if (config_.photoPairs > 0 && static_cast<int>(pairs.size()) > config_.photoPairs) {
            std::vector<std::pair<int, int>> picked;
            std::sample(pairs.begin(), pairs.end(), std::back_inserter(picked), config_.photoPairs, rng);
            pairs = std::move(picked);
        }
        for (const auto &[target, source] : pairs) {
            terms.photo += photo_term(target, source, rng);
            active[target] = true;
            active[source] = true;
        }
    }
    terms.total = terms.l1 + terms.muRegularizer + terms.photo;
    if (!std::isfinite(terms.total)) {
        throw NumericalError("loo_step: non-finite loss at iteration " + std::to_string(iteration_) +
                             " (holdout view " + std::to_string(hv.id) + ")");
    }
    // The holdout only supervises; only its mu may move.
    if (!config_.mask.mu && !config_.photoConsistency) {
        active[holdout] = false;
    }
    apply_updates(active);
    return terms;
}

std::vector<LossTerms> optimize(Scene &scene, LinearHead &head, const OptimConfig &config, std::ostream *trace) {
    config.validate();
    std::vector<LossTerms> out;
    if (trace) {
        write_loss_header(*trace);
    }
    if (config.iterations == 0) {
        return out;
    }
    Trainer trainer(scene, head, config);
    std::mt19937_64 rng(config.seed);
    for (int it = 0; it < config.iterations; ++it) {
        if (auto t = trainer.loo_step(rng)) {
            out.push_back(*t);
            if (trace) {
                write_loss_row(*trace, *t);
            }
        }
    }
    return out;
}

HarmonizeResult harmonize(Scene &scene, LinearHead &head, OptimConfig config, bool optimizeColors,
                          std::ostream *trace) {
    config.mask = ParameterMask{false, optimizeColors, false, false, false, false, true};
    config.photoConsistency = true;
    HarmonizeResult result;
    result.trace = optimize(scene, head, config, trace);
    for (const auto &v : scene.views) {
        result.mu.push_back(v.mu);
    }
    return result;
}

void write_loss_header(std::ostream &os) { os << "iteration,holdout,loss,l1,mu_regularizer,photo,valid_pixels\n"; }

void write_loss_row(std::ostream &os, const LossTerms &t) {
    os << t.iteration << ',' << t.holdout << ',' << t.total << ',' << t.l1 << ',' << t.muRegularizer << ','
       << t.photo << ',' << t.validPixels << '\n';
}

} // namespace splatview
