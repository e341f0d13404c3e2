// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "splatview/renderer.hpp"

#include "splatview/depth_test.hpp"
#include "splatview/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace splatview {

LinearHead LinearHead::identity() {
    LinearHead h;
    h.matrix.block<3, 3>(0, 0).setIdentity();
    return h;
}

Vec3 apply_linear_head(const LinearHead &head, std::span<const double> pooled) {
    const Eigen::Map<const Eigen::Matrix<double, kPayloadSize, 1>> p(pooled.data());
    return head.matrix * p + head.bias;
}

Eigen::Matrix<double, kPayloadSize, 1> linear_head_backward(const LinearHead &head, std::span<const double> pooled,
                                                            const Vec3 &grad, LinearHeadGrad &out) {
    const Eigen::Map<const Eigen::Matrix<double, kPayloadSize, 1>> p(pooled.data());
    out.matrix += grad * p.transpose();
    out.bias += grad;
    return head.matrix.transpose() * grad;
}

double texture_stretch_weight(const Mat2 &cov) {
    const double a = cov(0, 0);
    const double c = cov(1, 1);
    const double b = cov(0, 1);
    if (!cov.allFinite() || std::abs(b - cov(1, 0)) > 1e-12 * std::max(1.0, std::abs(b))) {
        throw InvalidInput("texture_stretch_weight: covariance must be symmetric");
    }
    const double mean = 0.5 * (a + c);
    const double r = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    const double lo = mean - r;
    const double hi = mean + r;
    if (!(lo > 0.0)) {
        throw InvalidInput("texture_stretch_weight: covariance must be positive definite");
    }
    return lo / hi;
}

std::vector<std::vector<double>> pooling_weights(std::span<const ViewRaster> rasters,
                                                 std::span<const double> cameraWeights, double sigma, int samples) {
    const std::size_t nviews = rasters.size();
    std::vector<std::vector<double>> weights(nviews);
    if (nviews == 0) {
        return weights;
    }
    const std::size_t npix = rasters.front().pixelCount();
    for (auto &w : weights) {
        w.assign(npix, 0.0);
    }
#pragma omp parallel
    {
        std::vector<DepthMixture> mixtures(nviews);
#pragma omp for schedule(dynamic, 64)
        for (std::size_t p = 0; p < npix; ++p) {
            bool any = false;
            for (std::size_t n = 0; n < nviews; ++n) {
                mixtures[n] = build_mixture(rasters[n].pixelFragments(p));
                any = any || rasters[n].opacity[p] > 0.0;
            }
            if (!any) {
                continue;
            }
            const auto front = prob_front(mixtures, sigma, samples);
            for (std::size_t n = 0; n < nviews; ++n) {
                if (rasters[n].opacity[p] > 0.0) {
                    weights[n][p] = cameraWeights[n] * rasters[n].stretch[p] * front[n];
                }
            }
        }
    }
    return weights;
}

void pool_and_decode(RenderPass &pass, const LinearHead &head) {
    const std::size_t npix = pass.pixelCount();
    pass.pooled.assign(npix * kPayloadSize, 0.0);
    pass.raw.assign(npix * 3, 0.0);
    pass.valid.assign(npix, 0);
    for (std::size_t p = 0; p < npix; ++p) {
        double wsum = 0.0;
        double *pooled = pass.pooled.data() + p * kPayloadSize;
        for (std::size_t n = 0; n < pass.rasters.size(); ++n) {
            const double w = pass.weights[n][p];
            if (!(w > 0.0)) {
                continue;
            }
            const double inv = w / pass.rasters[n].opacity[p];
            const auto c = pass.rasters[n].pixelPayload(p);
            for (int k = 0; k < kPayloadSize; ++k) {
                pooled[k] += inv * c[k];
            }
            wsum += w;
        }
        if (!(wsum > 0.0)) {
            continue;
        }
        for (int k = 0; k < kPayloadSize; ++k) {
            pooled[k] /= wsum;
        }
        pass.valid[p] = 1;
        const Vec3 rgb = apply_linear_head(head, {pooled, static_cast<std::size_t>(kPayloadSize)});
        for (int k = 0; k < 3; ++k) {
            pass.raw[p * 3 + k] = rgb[k];
        }
    }
}

RenderPass forward_pass(const Scene &scene, const CameraModel &camera, std::span<const int> viewIndices,
                        std::span<const double> cameraWeights, const LinearHead &head, const RenderOptions &options) {
    if (viewIndices.empty()) {
        throw InvalidInput("render: no views selected");
    }
    if (cameraWeights.size() != viewIndices.size()) {
        throw InvalidInput("render: camera weight count mismatch");
    }
    RenderPass pass;
    pass.camera = camera;
    pass.viewIndices.assign(viewIndices.begin(), viewIndices.end());
    pass.cameraWeights.assign(cameraWeights.begin(), cameraWeights.end());
    if (options.fast) {
        std::vector<const InputView *> views;
        for (const int i : viewIndices) {
            views.push_back(&scene.views.at(i));
        }
        pass.rasters = layered_composite(views, camera, options.layers);
    } else {
        for (const int i : viewIndices) {
            RasterOptions ro = options.raster;
            ro.retainFragments = true;
            pass.rasters.push_back(rasterize_view(scene.views.at(i), camera, ro));
        }
    }
    pass.weights = pooling_weights(pass.rasters, pass.cameraWeights, scene.depthSigma, options.depthSamples);
    pool_and_decode(pass, head);
    return pass;
}

void backward_pass(const Scene &scene, const RenderPass &pass, const LinearHead &head, std::span<const double> dRaw,
                   std::vector<ViewGradients> &viewGrads, LinearHeadGrad *headGrad, bool geometry) {
    const std::size_t npix = pass.pixelCount();
    const std::size_t nviews = pass.rasters.size();
    std::vector<std::vector<double>> upPayload(nviews, std::vector<double>(npix * kPayloadSize, 0.0));
    std::vector<std::vector<double>> upOpacity(nviews, std::vector<double>(npix, 0.0));
    LinearHeadGrad scratch;
    LinearHeadGrad &hg = headGrad ? *headGrad : scratch;

    for (std::size_t p = 0; p < npix; ++p) {
        if (!pass.valid[p]) {
            continue;
        }
        const Vec3 g(dRaw[p * 3], dRaw[p * 3 + 1], dRaw[p * 3 + 2]);
        if (g.isZero(0.0)) {
            continue;
        }
        const auto dPooled = linear_head_backward(
            head, {pass.pooled.data() + p * kPayloadSize, static_cast<std::size_t>(kPayloadSize)}, g, hg);
        double wsum = 0.0;
        for (std::size_t n = 0; n < nviews; ++n) {
            if (pass.weights[n][p] > 0.0) {
                wsum += pass.weights[n][p];
            }
        }
        for (std::size_t n = 0; n < nviews; ++n) {
            const double w = pass.weights[n][p];
            if (!(w > 0.0)) {
                continue;
            }
            // pooled += (w / wsum) * c / A
            const double a = pass.rasters[n].opacity[p];
            const double scale = w / wsum;
            const auto c = pass.rasters[n].pixelPayload(p);
            double dA = 0.0;
            for (int k = 0; k < kPayloadSize; ++k) {
                const double dNorm = scale * dPooled[k];
                upPayload[n][p * kPayloadSize + k] = dNorm / a;
                dA -= dNorm * c[k] / (a * a);
            }
            upOpacity[n][p] = dA;
        }
    }

    for (std::size_t n = 0; n < nviews; ++n) {
        const int vi = pass.viewIndices[n];
        const auto fragGrads = composite_backward(pass.rasters[n], upPayload[n], upOpacity[n]);
        attribute_backward(scene.views[vi], pass.camera, pass.rasters[n], fragGrads, viewGrads.at(vi), geometry);
    }
}

Selection choose_views(const Scene &scene, const CameraModel &camera, std::span<const int> candidates, int k,
                       const RenderOptions &options) {
    std::vector<const InputView *> views;
    for (const int i : candidates) {
        views.push_back(&scene.views.at(i));
    }
    const auto maps =
        score_maps(views, camera, options.scoreDownscale, options.scoreMode, options.occlusionTolerance);
    return select_cameras(maps, std::min<int>(k, static_cast<int>(maps.size())), options.selectEpsilon);
}

NovelRender render_novel(const Scene &scene, const CameraModel &camera, const RenderOptions &options,
                         const LinearHead &head, SelectionState *temporal) {
    if (scene.views.empty()) {
        throw InvalidInput("render_novel: scene has no views");
    }
    if (options.k < 1) {
        throw InvalidInput("render_novel: k must be >= 1");
    }
    std::vector<int> all(scene.views.size());
    std::iota(all.begin(), all.end(), 0);
    const Selection sel = choose_views(scene, camera, all, options.k, options);

    std::vector<int> useIds = sel.viewIds;
    std::vector<double> wcs;
    if (temporal) {
        if (temporal->viewIds.empty()) {
            std::vector<int> ids;
            for (const auto &v : scene.views) {
                ids.push_back(v.id);
            }
            *temporal = SelectionState::initial(ids, temporal->lambda, temporal->keep);
        }
        *temporal = update_temporal_weights(*temporal, selection_scores(*temporal, sel.viewIds), temporal->lambda);
        useIds = temporal->selected;
        std::vector<double> w;
        for (const int id : useIds) {
            const auto it = std::find(temporal->viewIds.begin(), temporal->viewIds.end(), id);
            w.push_back(temporal->weights[static_cast<std::size_t>(it - temporal->viewIds.begin())]);
        }
        wcs = smooth_normalize(w);
    } else {
        wcs.assign(useIds.size(), 1.0 / static_cast<double>(useIds.size()));
    }
    if (useIds.empty()) {
        throw InvalidInput("render_novel: zero selected views");
    }
    std::vector<int> indices;
    for (const int id : useIds) {
        indices.push_back(scene.findView(id));
    }

    const RenderPass pass = forward_pass(scene, camera, indices, wcs, head, options);

    NovelRender out;
    out.selectedIds = useIds;
    out.stats.selectionFallback = sel.fallback;
    const std::size_t npix = pass.pixelCount();
    out.color = FloatImage(camera.width, camera.height, 3);
    out.validity = pass.valid;
    for (std::size_t p = 0; p < npix; ++p) {
        for (int k = 0; k < 3; ++k) {
            const double v = pass.valid[p] ? std::clamp(pass.raw[p * 3 + k], 0.0, 1.0) : scene.backgroundColor[k];
            out.color.data()[p * 3 + k] = static_cast<float>(v);
        }
    }
    for (std::size_t n = 0; n < pass.rasters.size(); ++n) {
        FloatImage w(camera.width, camera.height, 1);
        for (std::size_t p = 0; p < npix; ++p) {
            w.data()[p] = static_cast<float>(pass.weights[n][p]);
        }
        out.perViewWeights.push_back(std::move(w));
        out.stats.splats += pass.rasters[n].stats.built;
        out.stats.grazingSkips += pass.rasters[n].stats.grazing;
        out.stats.behindSkips += pass.rasters[n].stats.behind;
    }
    return out;
}

double psnr(const FloatImage &a, const FloatImage &b) {
    if (!a.sameShape(b) || a.empty()) {
        throw InvalidInput("psnr: images differ in shape");
    }
    double se = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        const double d = static_cast<double>(a.data()[i]) - b.data()[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.data().size());
    if (mse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(1.0 / mse);
}

} // namespace splatview
