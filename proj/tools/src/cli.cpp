// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "splatview_tools/cli.hpp"

#include "splatview/errors.hpp"
#include "splatview/image_io.hpp"
#include "splatview/optimizer.hpp"
#include "splatview/parallel.hpp"
#include "splatview/renderer.hpp"
#include "splatview/scene_io.hpp"
#include "splatview/synthetic.hpp"
#include "splatview_tools/serve.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

namespace splatview::tools {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Usage problems detected after parsing (mutually exclusive flags and the like).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path &path) {
    std::ifstream is(path);
    if (!is) {
        throw ParseError(path.string() + ": cannot open file");
    }
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

CameraModel read_pose(const fs::path &path) {
    try {
        return camera_from_json_text(read_text(path));
    } catch (const ParseError &e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_loss_csv(const std::string &path, const std::vector<LossTerms> &trace) {
    std::ofstream os(path);
    if (!os) {
        throw ParseError(path + ": cannot open for writing");
    }
    write_loss_header(os);
    for (const auto &t : trace) {
        write_loss_row(os, t);
    }
}

HttpServer *g_server = nullptr;

extern "C" void handle_stop_signal(int) {
    if (g_server) {
        g_server->stop();
    }
}

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Multi-view point splatting: optimize, render and serve calibrated view sets", "splatview"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    std::string sceneDir;
    std::string outPath;
    std::string posePath;
    std::string lossCsv;
    std::uint64_t seed = 0;
    int iters = 0;
    int patch = 150;
    int viewId = -1;
    int width = 0;
    int height = 0;
    int k = kDefaultViewsKept;
    int samples = 1;
    bool fast = false;
    bool freezeColors = false;
    bool harmonizeColors = false;
    double sigma = 0.0;

    auto *optimizeCmd = app.add_subcommand("optimize", "Leave-one-out optimization of per-view attributes");
    optimizeCmd->add_option("--scene", sceneDir, "Scene directory")->required();
    optimizeCmd->add_option("--iters", iters, "Iterations")->required()->check(CLI::NonNegativeNumber);
    optimizeCmd->add_option("--seed", seed, "Random seed");
    optimizeCmd->add_option("--patch", patch, "Patch size in pixels")->check(CLI::Range(16, 1 << 16));
    optimizeCmd->add_option("--out", outPath, "Output scene directory (default: overwrite --scene)");
    optimizeCmd->add_option("--loss-csv", lossCsv, "Write the per-iteration loss trace as CSV");
    optimizeCmd->add_flag("--freeze-colors", freezeColors, "Keep input colors fixed");
    optimizeCmd->add_option("--sigma", sigma, "Depth-test sigma in meters (default: from the manifest)");

    auto *renderCmd = app.add_subcommand("render", "Render a novel view");
    renderCmd->add_option("--scene", sceneDir, "Scene directory")->required();
    auto *poseOpt = renderCmd->add_option("--pose", posePath, "Pose JSON file");
    auto *viewOpt = renderCmd->add_option("--view", viewId, "Render the pose of a stored view");
    poseOpt->excludes(viewOpt);
    renderCmd->add_option("--width", width, "Output width")->check(CLI::PositiveNumber);
    renderCmd->add_option("--height", height, "Output height")->check(CLI::PositiveNumber);
    renderCmd->add_flag("--fast", fast, "Layered approximation");
    renderCmd->add_option("--k", k, "Views to select")->check(CLI::PositiveNumber);
    renderCmd->add_option("--s", samples, "Depth-test samples")->check(CLI::PositiveNumber);
    renderCmd->add_option("--sigma", sigma, "Depth-test sigma in meters (default: from the manifest)");
    renderCmd->add_option("--out", outPath, "Output image (.png, .ppm or .pfm)")->required();

    auto *harmonizeCmd = app.add_subcommand("harmonize", "Estimate per-view exposure coefficients");
    harmonizeCmd->add_option("--scene", sceneDir, "Scene directory")->required();
    harmonizeCmd->add_option("--iters", iters, "Iterations")->required()->check(CLI::NonNegativeNumber);
    harmonizeCmd->add_option("--out", outPath, "Output scene directory")->required();
    harmonizeCmd->add_option("--seed", seed, "Random seed");
    harmonizeCmd->add_option("--patch", patch, "Patch size in pixels")->check(CLI::Range(16, 1 << 16));
    harmonizeCmd->add_option("--loss-csv", lossCsv, "Write the per-iteration loss trace as CSV");
    harmonizeCmd->add_flag("--colors", harmonizeColors, "Co-optimize colors with the exposure coefficients");

    auto *selectCmd = app.add_subcommand("select", "Print the views selected for a pose");
    selectCmd->add_option("--scene", sceneDir, "Scene directory")->required();
    selectCmd->add_option("--pose", posePath, "Pose JSON file")->required();
    selectCmd->add_option("--k", k, "Views to select")->check(CLI::PositiveNumber);

    std::string preset = "textured-plane";
    std::string texture = "value-noise";
    SyntheticSpec spec;
    auto *synthCmd = app.add_subcommand("synth", "Generate a synthetic scene");
    synthCmd->add_option("--preset", preset, "textured-plane | two-walls | box-corner")
        ->check(CLI::IsMember({"textured-plane", "two-walls", "box-corner"}));
    synthCmd->add_option("--views", spec.views, "View count")->check(CLI::PositiveNumber);
    synthCmd->add_option("--seed", spec.seed, "Random seed");
    synthCmd->add_option("--out", outPath, "Output scene directory")->required();
    synthCmd->add_option("--resolution", spec.resolution, "Image width and height")->check(CLI::Range(16, 8192));
    synthCmd->add_option("--arc", spec.arcDegrees, "Arc spanned by the views in degrees");
    synthCmd->add_option("--texture", texture, "checker | value-noise | flat")
        ->check(CLI::IsMember({"checker", "value-noise", "flat"}));
    synthCmd->add_option("--texture-scale", spec.textureScale, "Texture cell size in meters")
        ->check(CLI::PositiveNumber);
    synthCmd->add_option("--depth-noise", spec.depthNoise, "Relative depth noise on --depth-noise-view");
    synthCmd->add_option("--depth-noise-view", spec.depthNoiseView, "View receiving depth noise");
    synthCmd->add_option("--exposure-view", spec.exposureView, "View whose colors are divided by the factor");
    synthCmd->add_option("--exposure-factor", spec.exposureFactor, "Exposure factor")->check(CLI::PositiveNumber);

    std::string host = "127.0.0.1";
    int port = 8080;
    auto *serveCmd = app.add_subcommand("serve", "Serve renders over HTTP");
    serveCmd->add_option("--scene", sceneDir, "Scene directory")->required();
    serveCmd->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));
    serveCmd->add_option("--host", host, "Bind address");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success &e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\n" << "run 'splatview --help' for usage\n";
        return kExitUsage;
    }

    configure_threads();
    try {
        if (optimizeCmd->parsed()) {
            Scene scene = load_scene(sceneDir);
            LinearHead head = load_head(sceneDir);
            if (sigma > 0.0) {
                scene.depthSigma = sigma;
            }
            OptimConfig cfg;
            cfg.iterations = iters;
            cfg.seed = seed;
            cfg.patchSize = patch;
            cfg.mask.color = !freezeColors;
            const std::vector<LossTerms> trace = iters > 0 ? optimize(scene, head, cfg) : std::vector<LossTerms>{};
            const fs::path dest = outPath.empty() ? fs::path(sceneDir) : fs::path(outPath);
            save_scene(scene, dest);
            save_head(head, dest);
            if (!lossCsv.empty()) {
                write_loss_csv(lossCsv, trace);
            }
            out << json{{"iterations", trace.size()},
                        {"finalLoss", trace.empty() ? 0.0 : trace.back().total},
                        {"out", dest.string()}}
                       .dump()
                << "\n";
        } else if (renderCmd->parsed()) {
            const Scene scene = [&] {
                Scene s = load_scene(sceneDir);
                if (sigma > 0.0) {
                    s.depthSigma = sigma;
                }
                return s;
            }();
            const LinearHead head = load_head(sceneDir);
            CameraModel cam;
            if (!posePath.empty()) {
                cam = read_pose(posePath);
            } else if (viewId >= 0 || *viewOpt) {
                const int idx = scene.findView(viewId);
                if (idx < 0) {
                    throw InvalidInput("view id " + std::to_string(viewId) + " is not in the scene");
                }
                cam = scene.views[static_cast<std::size_t>(idx)].camera;
            } else {
                throw UsageError("render: one of --pose or --view is required");
            }
            if (width > 0 || height > 0) {
                cam = cam.resized(width > 0 ? width : cam.width, height > 0 ? height : cam.height);
            }
            RenderOptions opts;
            opts.fast = fast;
            opts.k = k;
            opts.depthSamples = samples;
            const NovelRender r = render_novel(scene, cam, opts, head);
            write_image(outPath, r.color);
            out << json{{"selectedViews", r.selectedIds}, {"out", outPath}}.dump() << "\n";
        } else if (harmonizeCmd->parsed()) {
            Scene scene = load_scene(sceneDir);
            LinearHead head = load_head(sceneDir);
            OptimConfig cfg;
            cfg.iterations = iters;
            cfg.seed = seed;
            cfg.patchSize = patch;
            const HarmonizeResult res = harmonize(scene, head, cfg, harmonizeColors);
            save_scene(scene, outPath);
            save_head(head, outPath);
            if (!lossCsv.empty()) {
                write_loss_csv(lossCsv, res.trace);
            }
            json mu = json::object();
            for (std::size_t i = 0; i < scene.views.size(); ++i) {
                mu[std::to_string(scene.views[i].id)] = res.mu[i];
            }
            out << json{{"mu", mu}}.dump() << "\n";
        } else if (selectCmd->parsed()) {
            const Scene scene = load_scene(sceneDir);
            const CameraModel cam = read_pose(posePath);
            std::vector<int> all(scene.views.size());
            for (std::size_t i = 0; i < all.size(); ++i) {
                all[i] = static_cast<int>(i);
            }
            RenderOptions opts;
            const Selection sel = choose_views(scene, cam, all, k, opts);
            out << json{{"views", sel.viewIds}, {"coverage", sel.coverage}, {"fallback", sel.fallback}}.dump()
                << "\n";
        } else if (synthCmd->parsed()) {
            spec.preset = *parse_preset(preset);
            spec.texture = *parse_texture(texture);
            const SyntheticScene syn = gen_synthetic(spec);
            save_scene(syn.scene, outPath);
            if (!syn.groundTruthMu.empty()) {
                save_ground_truth_mu(syn.groundTruthMu, outPath);
            }
            out << json{{"views", spec.views}, {"preset", preset}, {"out", outPath}}.dump() << "\n";
        } else if (serveCmd->parsed()) {
            RenderService service(load_scene(sceneDir), load_head(sceneDir));
            HttpServer server(service);
            g_server = &server;
            std::signal(SIGINT, handle_stop_signal);
            std::signal(SIGTERM, handle_stop_signal);
            err << "serving " << service.scene().views.size() << " views on http://" << host << ":" << port << "\n";
            const bool ok = server.listen(host, port);
            g_server = nullptr;
            if (!ok) {
                err << "error: cannot listen on " << host << ":" << port << "\n";
                return kExitData;
            }
        }
    } catch (const UsageError &e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument &e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::runtime_error &e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}

} // namespace splatview::tools
