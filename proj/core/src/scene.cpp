// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "splatview/scene.hpp"

#include "splatview/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace splatview {

bool InputView::validDepth(std::size_t pixel) const {
    const float d = depth.data()[pixel];
    return std::isfinite(d) && d > 0.0f;
}

double InputView::uncertainty(std::size_t pixel) const {
    return std::exp(static_cast<double>(uncertaintyLogit.data()[pixel]));
}

void InputView::validate() const {
    camera.validate();
    const int w = camera.width;
    const int h = camera.height;
    auto check = [&](const FloatImage &img, int channels, const char *name) {
        if (img.width() != w || img.height() != h || img.channels() != channels) {
            throw InvalidInput("view " + std::to_string(id) + ": " + name + " map has shape " +
                               std::to_string(img.width()) + "x" + std::to_string(img.height()) + "x" +
                               std::to_string(img.channels()) + ", expected " + std::to_string(w) + "x" +
                               std::to_string(h) + "x" + std::to_string(channels));
        }
    };
    check(color, 3, "color");
    check(depth, 1, "depth");
    check(normal, 3, "normal");
    check(uncertaintyLogit, 1, "uncertainty");
    check(featureLogit, kFeatureChannels, "feature");
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
        throw InvalidInput("view " + std::to_string(id) + ": mu must be finite and >= 0");
    }
}

double default_uncertainty_logit() { return std::log(0.5); }

InputView make_input_view(int id, const CameraModel &camera, FloatImage color, FloatImage depth,
                          FloatImage normal) {
    InputView v;
    v.id = id;
    v.camera = camera;
    v.color = std::move(color);
    v.depth = std::move(depth);
    v.normal = std::move(normal);
    v.uncertaintyLogit =
        FloatImage(camera.width, camera.height, 1, static_cast<float>(default_uncertainty_logit()));
    // sigmoid(0) = 0.5
    v.featureLogit = FloatImage(camera.width, camera.height, kFeatureChannels, 0.0f);
    v.mu = 1.0;
    return v;
}

void Scene::validate() const {
    if (views.empty()) {
        throw InvalidInput("scene: at least one view is required");
    }
    std::set<int> ids;
    for (const auto &v : views) {
        v.validate();
        if (!ids.insert(v.id).second) {
            throw InvalidInput("scene: duplicate view id " + std::to_string(v.id));
        }
    }
    if (!(depthSigma > 0.0)) {
        throw InvalidInput("scene: depthSigma must be positive");
    }
}

int Scene::findView(int id) const {
    for (std::size_t i = 0; i < views.size(); ++i) {
        if (views[i].id == id) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

double median_valid_depth(const Scene &scene) {
    std::vector<float> depths;
    for (const auto &v : scene.views) {
        for (std::size_t p = 0; p < v.depth.pixelCount(); ++p) {
            if (v.validDepth(p)) {
                depths.push_back(v.depth.data()[p]);
            }
        }
    }
    if (depths.empty()) {
        return 0.0;
    }
    const auto mid = depths.begin() + static_cast<std::ptrdiff_t>(depths.size() / 2);
    std::nth_element(depths.begin(), mid, depths.end());
    return *mid;
}

FloatImage apply_harmonization(const InputView &view) {
    FloatImage out = view.color;
    for (float &c : out.data()) {
        c = static_cast<float>(view.mu * c);
    }
    return out;
}

Vec3 lift_pixel(const CameraModel &camera, const Vec2 &pixel, double depth) {
    if (!(depth > 0.0) || !std::isfinite(depth)) {
        throw InvalidInput("lift_pixel: depth must be positive");
    }
    if (!camera.inBounds(pixel)) {
        throw InvalidInput("lift_pixel: pixel outside image bounds");
    }
    return camera.toWorld(depth * camera.rayCamera(pixel));
}

Vec3 lift_pixel(const InputView &view, const Vec2 &pixel, double depth) {
    return lift_pixel(view.camera, pixel, depth);
}

} // namespace splatview
