// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "splatview/scene_io.hpp"

#include "splatview/errors.hpp"
#include "splatview/image_io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

namespace splatview {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json(const fs::path &path) {
    if (!fs::exists(path)) {
        throw ParseError(path.string() + ": file not found");
    }
    std::ifstream is(path);
    try {
        return json::parse(is);
    } catch (const json::parse_error &e) {
        throw ParseError(path.string() + ": byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

void write_json(const fs::path &path, const json &doc) {
    std::ofstream os(path);
    if (!os) {
        throw ParseError(path.string() + ": cannot open for writing");
    }
    os << doc.dump(2) << '\n';
}

template <typename T>
T field(const json &obj, const char *key, const std::string &ctx) {
    if (!obj.contains(key)) {
        throw ParseError(ctx + ": missing field '" + key + "'");
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception &e) {
        throw ParseError(ctx + ": field '" + key + "': " + e.what());
    }
}

FloatImage load_map(const fs::path &dir, const std::string &file, int w, int h, int channels, const std::string &ctx) {
    const fs::path path = dir / file;
    if (!fs::exists(path)) {
        throw ParseError(ctx + ": referenced file '" + path.string() + "' does not exist");
    }
    FloatImage img = path.extension() == ".ppm" ? read_ppm(path) : read_pfm(path);
    if (img.width() != w || img.height() != h || img.channels() != channels) {
        throw ParseError(path.string() + ": dimensions " + std::to_string(img.width()) + "x" +
                         std::to_string(img.height()) + "x" + std::to_string(img.channels()) +
                         " do not match the manifest (" + std::to_string(w) + "x" + std::to_string(h) + "x" +
                         std::to_string(channels) + ")");
    }
    return img;
}

Mat3 rotation_from(const std::vector<double> &r, const std::string &ctx) {
    if (r.size() != 9) {
        throw ParseError(ctx + ": rotation must have 9 numbers, got " + std::to_string(r.size()));
    }
    Mat3 m;
    for (int i = 0; i < 9; ++i) {
        m(i / 3, i % 3) = r[static_cast<std::size_t>(i)];
    }
    return m;
}

Vec3 translation_from(const std::vector<double> &t, const std::string &ctx) {
    if (t.size() != 3) {
        throw ParseError(ctx + ": translation must have 3 numbers, got " + std::to_string(t.size()));
    }
    return {t[0], t[1], t[2]};
}

std::vector<double> flatten(const Mat3 &m) {
    std::vector<double> r(9);
    for (int i = 0; i < 9; ++i) {
        r[static_cast<std::size_t>(i)] = m(i / 3, i % 3);
    }
    return r;
}

} // namespace

FloatImage stack_feature_planes(const FloatImage &features) {
    const int w = features.width();
    const int h = features.height();
    const int c = features.channels();
    FloatImage out(w, h * c, 1);
    for (int k = 0; k < c; ++k) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                out.at(x, k * h + y) = features.at(x, y, k);
            }
        }
    }
    return out;
}

FloatImage unstack_feature_planes(const FloatImage &stacked, int channels) {
    const int w = stacked.width();
    const int h = stacked.height() / channels;
    FloatImage out(w, h, channels);
    for (int k = 0; k < channels; ++k) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                out.at(x, y, k) = stacked.at(x, k * h + y);
            }
        }
    }
    return out;
}

Scene load_scene(const fs::path &dir) {
    const fs::path manifestPath = dir / kManifestName;
    const json doc = read_json(manifestPath);
    const std::string ctx = manifestPath.string();
    if (!doc.is_object()) {
        throw ParseError(ctx + ": manifest must be a JSON object");
    }
    const int version = field<int>(doc, "version", ctx);
    if (version != kManifestVersion) {
        throw UnsupportedFormat(ctx + ": manifest version " + std::to_string(version) + " is not supported");
    }
    Scene scene;
    if (doc.contains("backgroundColor")) {
        const auto bg = field<std::vector<double>>(doc, "backgroundColor", ctx);
        if (bg.size() != 3) {
            throw ParseError(ctx + ": backgroundColor must have 3 numbers");
        }
        scene.backgroundColor = {bg[0], bg[1], bg[2]};
    }
    if (doc.contains("seed")) {
        scene.rngSeed = field<std::uint64_t>(doc, "seed", ctx);
    }
    const json &views = doc.contains("views") ? doc.at("views") : json();
    if (!views.is_array() || views.empty()) {
        throw ParseError(ctx + ": 'views' must be a non-empty array");
    }
    std::set<int> ids;
    for (std::size_t i = 0; i < views.size(); ++i) {
        const json &v = views[i];
        const std::string vctx = ctx + ": views[" + std::to_string(i) + "]";
        CameraModel cam;
        cam.width = field<int>(v, "width", vctx);
        cam.height = field<int>(v, "height", vctx);
        cam.fx = field<double>(v, "fx", vctx);
        cam.fy = field<double>(v, "fy", vctx);
        cam.cx = field<double>(v, "cx", vctx);
        cam.cy = field<double>(v, "cy", vctx);
        cam.rotation = rotation_from(field<std::vector<double>>(v, "rotation", vctx), vctx);
        cam.translation = translation_from(field<std::vector<double>>(v, "translation", vctx), vctx);
        try {
            cam.validate();
        } catch (const InvalidInput &e) {
            throw ParseError(vctx + ": " + e.what());
        }
        const int id = field<int>(v, "id", vctx);
        if (!ids.insert(id).second) {
            throw ParseError(vctx + ": duplicate view id " + std::to_string(id));
        }
        const int w = cam.width;
        const int h = cam.height;
        InputView view = make_input_view(id, cam,
                                         load_map(dir, field<std::string>(v, "colorFile", vctx), w, h, 3, vctx),
                                         load_map(dir, field<std::string>(v, "depthFile", vctx), w, h, 1, vctx),
                                         load_map(dir, field<std::string>(v, "normalFile", vctx), w, h, 3, vctx));
        if (v.contains("uncertaintyFile")) {
            view.uncertaintyLogit = load_map(dir, field<std::string>(v, "uncertaintyFile", vctx), w, h, 1, vctx);
        }
        if (v.contains("featureFile")) {
            view.featureLogit = unstack_feature_planes(
                load_map(dir, field<std::string>(v, "featureFile", vctx), w, h * kFeatureChannels, 1, vctx),
                kFeatureChannels);
        }
        if (v.contains("mu")) {
            view.mu = field<double>(v, "mu", vctx);
        }
        scene.views.push_back(std::move(view));
    }
    if (doc.contains("depthSigma") && doc.at("depthSigma").is_number()) {
        scene.depthSigma = doc.at("depthSigma").get<double>();
    } else if (!doc.contains("depthSigma") || doc.at("depthSigma") == "auto") {
        scene.depthSigma = 0.01 * median_valid_depth(scene);
    } else {
        throw ParseError(ctx + ": depthSigma must be a number or \"auto\"");
    }
    try {
        scene.validate();
    } catch (const InvalidInput &e) {
        throw ParseError(ctx + ": " + e.what());
    }
    return scene;
}

void save_scene(const Scene &scene, const fs::path &dir) {
    scene.validate();
    fs::create_directories(dir);
    json views = json::array();
    for (const auto &v : scene.views) {
        const std::string stem = "view_" + std::to_string(v.id);
        const auto &c = v.camera;
        write_pfm(dir / (stem + "_color.pfm"), v.color);
        write_pfm(dir / (stem + "_depth.pfm"), v.depth);
        write_pfm(dir / (stem + "_normal.pfm"), v.normal);
        write_pfm(dir / (stem + "_uncertainty.pfm"), v.uncertaintyLogit);
        write_pfm(dir / (stem + "_features.pfm"), stack_feature_planes(v.featureLogit));
        views.push_back({{"id", v.id},
                         {"width", c.width},
                         {"height", c.height},
                         {"fx", c.fx},
                         {"fy", c.fy},
                         {"cx", c.cx},
                         {"cy", c.cy},
                         {"rotation", flatten(c.rotation)},
                         {"translation", {c.translation.x(), c.translation.y(), c.translation.z()}},
                         {"colorFile", stem + "_color.pfm"},
                         {"depthFile", stem + "_depth.pfm"},
                         {"normalFile", stem + "_normal.pfm"},
                         {"uncertaintyFile", stem + "_uncertainty.pfm"},
                         {"featureFile", stem + "_features.pfm"},
                         {"mu", v.mu}});
    }
    const json doc = {{"version", kManifestVersion},
                      {"backgroundColor",
                       {scene.backgroundColor.x(), scene.backgroundColor.y(), scene.backgroundColor.z()}},
                      {"depthSigma", scene.depthSigma},
                      {"seed", scene.rngSeed},
                      {"views", views}};
    write_json(dir / kManifestName, doc);
}

void save_ground_truth_mu(const std::map<int, double> &mu, const fs::path &dir) {
    json doc = json::object();
    for (const auto &[id, m] : mu) {
        doc[std::to_string(id)] = m;
    }
    fs::create_directories(dir);
    write_json(dir / kGroundTruthMuName, doc);
}

std::optional<std::map<int, double>> load_ground_truth_mu(const fs::path &dir) {
    const fs::path path = dir / kGroundTruthMuName;
    if (!fs::exists(path)) {
        return std::nullopt;
    }
    const json doc = read_json(path);
    std::map<int, double> out;
    for (const auto &[key, value] : doc.items()) {
        out[std::stoi(key)] = value.get<double>();
    }
    return out;
}

void save_head(const LinearHead &head, const fs::path &dir) {
    json matrix = json::array();
    for (int r = 0; r < 3; ++r) {
        std::vector<double> row(kPayloadSize);
        for (int c = 0; c < kPayloadSize; ++c) {
            row[static_cast<std::size_t>(c)] = head.matrix(r, c);
        }
        matrix.push_back(row);
    }
    fs::create_directories(dir);
    write_json(dir / kHeadName, {{"matrix", matrix}, {"bias", {head.bias.x(), head.bias.y(), head.bias.z()}}});
}

LinearHead load_head(const fs::path &dir) {
    const fs::path path = dir / kHeadName;
    if (!fs::exists(path)) {
        return LinearHead::identity();
    }
    const json doc = read_json(path);
    const std::string ctx = path.string();
    const auto rows = field<std::vector<std::vector<double>>>(doc, "matrix", ctx);
    const auto bias = field<std::vector<double>>(doc, "bias", ctx);
    if (rows.size() != 3 || bias.size() != 3) {
        throw ParseError(ctx + ": head must have 3 rows and 3 bias entries");
    }
    LinearHead head;
    for (int r = 0; r < 3; ++r) {
        if (rows[static_cast<std::size_t>(r)].size() != static_cast<std::size_t>(kPayloadSize)) {
            throw ParseError(ctx + ": head row " + std::to_string(r) + " must have " + std::to_string(kPayloadSize) +
                             " entries");
        }
        for (int c = 0; c < kPayloadSize; ++c) {
            head.matrix(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        }
        head.bias[r] = bias[static_cast<std::size_t>(r)];
    }
    return head;
}

CameraModel camera_from_json_text(const std::string &text) {
    const std::string ctx = "pose";
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        throw ParseError(ctx + ": byte " + std::to_string(e.byte) + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw ParseError(ctx + ": expected a JSON object");
    }
    CameraModel cam;
    cam.rotation = rotation_from(field<std::vector<double>>(doc, "rotation", ctx), ctx);
    cam.translation = translation_from(field<std::vector<double>>(doc, "translation", ctx), ctx);
    cam.width = field<int>(doc, "width", ctx);
    cam.height = field<int>(doc, "height", ctx);
    const double f = 0.5 * cam.height / std::tan(std::numbers::pi / 6.0);
    cam.fy = doc.contains("fy") ? field<double>(doc, "fy", ctx) : f;
    cam.fx = doc.contains("fx") ? field<double>(doc, "fx", ctx) : cam.fy;
    cam.cx = doc.contains("cx") ? field<double>(doc, "cx", ctx) : 0.5 * (cam.width - 1);
    cam.cy = doc.contains("cy") ? field<double>(doc, "cy", ctx) : 0.5 * (cam.height - 1);
    try {
        cam.validate();
    } catch (const InvalidInput &e) {
        throw ParseError(ctx + ": " + e.what());
    }
    return cam;
}

} // namespace splatview
