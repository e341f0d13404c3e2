// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include "splatview/image_io.hpp"
#include "splatview/scene_io.hpp"
#include "splatview/synthetic.hpp"
#include "splatview_tools/cli.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace splatview;
using namespace splatview::tools;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run(std::vector<std::string> args) {
    args.insert(args.begin(), "splatview");
    std::vector<const char *> argv;
    for (const auto &a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("splatview_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

std::string pose_json(const CameraModel &c) {
    std::vector<double> r;
    for (int i = 0; i < 9; ++i) {
        r.push_back(c.rotation(i / 3, i % 3));
    }
    return json{{"rotation", r},
                {"translation", {c.translation.x(), c.translation.y(), c.translation.z()}},
                {"width", c.width},
                {"height", c.height},
                {"fx", c.fx},
                {"fy", c.fy},
                {"cx", c.cx},
                {"cy", c.cy}}
        .dump();
}

} // namespace

TEST_F(Cli, UsageErrorsExitWithOne) {
    EXPECT_EQ(run({}).code, kExitUsage);
    EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
    EXPECT_EQ(run({"render", "--scene", dir_.string()}).code, kExitUsage);
    EXPECT_EQ(run({"synth", "--out", dir_.string(), "--preset", "sphere"}).code, kExitUsage);
    const auto both = run({"render", "--scene", dir_.string(), "--view", "0", "--pose", "p.json", "--out", "x.png"});
    EXPECT_EQ(both.code, kExitUsage);
    EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST_F(Cli, DataErrorsExitWithTwo) {
    const auto r = run({"render", "--scene", (dir_ / "nowhere").string(), "--view", "0", "--out",
                        (dir_ / "x.png").string()});
    EXPECT_EQ(r.code, kExitData);
    EXPECT_NE(r.err.find("manifest.json"), std::string::npos) << r.err;
}

TEST_F(Cli, SynthThenZeroIterationOptimizeLeavesSceneUnchanged) {
    const fs::path scene = dir_ / "scene";
    const auto s = run({"synth", "--preset", "two-walls", "--views", "3", "--resolution", "32", "--seed", "4",
                        "--out", scene.string()});
    ASSERT_EQ(s.code, kExitOk) << s.err;
    const Scene before = load_scene(scene);
    ASSERT_EQ(before.views.size(), 3u);
    const fs::path out = dir_ / "optimized";
    const auto o = run({"optimize", "--scene", scene.string(), "--iters", "0", "--out", out.string()});
    ASSERT_EQ(o.code, kExitOk) << o.err;
    EXPECT_EQ(json::parse(o.out)["iterations"].get<int>(), 0);
    const Scene after = load_scene(out);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(before.views[i].color, after.views[i].color);
        EXPECT_EQ(before.views[i].depth, after.views[i].depth);
        EXPECT_EQ(before.views[i].normal, after.views[i].normal);
        EXPECT_EQ(before.views[i].featureLogit, after.views[i].featureLogit);
    }
    EXPECT_TRUE(fs::exists(out / kHeadName));
}

TEST_F(Cli, ShortOptimizeWritesLossCsv) {
    const fs::path scene = dir_ / "scene";
    ASSERT_EQ(run({"synth", "--views", "3", "--resolution", "32", "--out", scene.string(), "--depth-noise", "0.02"})
                  .code,
              kExitOk);
    const fs::path csv = dir_ / "loss.csv";
    const auto o = run({"optimize", "--scene", scene.string(), "--iters", "3", "--patch", "16", "--loss-csv",
                        csv.string(), "--freeze-colors"});
    ASSERT_EQ(o.code, kExitOk) << o.err;
    std::ifstream in(csv);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        ++lines;
    }
    EXPECT_EQ(lines, 4);
}

TEST_F(Cli, RenderStoredViewReachesPsnr) {
    const fs::path scene = dir_ / "scene";
    ASSERT_EQ(run({"synth", "--views", "3", "--resolution", "128", "--out", scene.string()}).code, kExitOk);
    const fs::path png = dir_ / "v1.png";
    const auto r = run({"render", "--scene", scene.string(), "--view", "1", "--out", png.string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto dec = oracle::decode_png(read_file_bytes(png));
    FloatImage img(dec.width, dec.height, 3);
    img.data() = dec.data;
    const Scene s = load_scene(scene);
    EXPECT_GE(psnr(img, s.views[1].color), 40.0);

    const fs::path pfm = dir_ / "fast.pfm";
    const auto f = run({"render", "--scene", scene.string(), "--view", "1", "--fast", "--width", "64", "--height",
                        "64", "--out", pfm.string()});
    ASSERT_EQ(f.code, kExitOk) << f.err;
    EXPECT_EQ(read_pfm(pfm).width(), 64);
}

TEST_F(Cli, SelectOnDisjointCoveragePrintsBothViews) {
    SyntheticSpec spec;
    spec.preset = GeometryPreset::TexturedPlane;
    const SyntheticGeometry g = preset_geometry(spec.preset, spec.distance);
    Scene s;
    s.views.push_back(render_synthetic_view(spec, g, look_at(Vec3::Zero(), Vec3(-0.45, 0, 1), 48, 48, 30), 0));
    s.views.push_back(render_synthetic_view(spec, g, look_at(Vec3::Zero(), Vec3(0.45, 0, 1), 48, 48, 30), 1));
    s.depthSigma = 0.01;
    save_scene(s, dir_ / "scene");
    const CameraModel wide = look_at(Vec3::Zero(), Vec3(0, 0, 1), 64, 32, 40);
    std::ofstream(dir_ / "pose.json") << pose_json(wide);
    const auto r = run({"select", "--scene", (dir_ / "scene").string(), "--pose", (dir_ / "pose.json").string(),
                        "--k", "2"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const json j = json::parse(r.out);
    auto views = j["views"].get<std::vector<int>>();
    std::sort(views.begin(), views.end());
    EXPECT_EQ(views, (std::vector<int>{0, 1}));
    EXPECT_FALSE(j["fallback"].get<bool>());
    EXPECT_GT(j["coverage"].get<double>(), 0.0);
}

TEST_F(Cli, SynthExposureWritesGroundTruthAndHarmonizeRuns) {
    const fs::path scene = dir_ / "scene";
    ASSERT_EQ(run({"synth", "--views", "2", "--resolution", "32", "--exposure-view", "1", "--exposure-factor", "1.3",
                   "--out", scene.string()})
                  .code,
              kExitOk);
    const auto gt = load_ground_truth_mu(scene);
    ASSERT_TRUE(gt.has_value());
    EXPECT_DOUBLE_EQ(gt->at(1), 1.3);
    const auto h = run({"harmonize", "--scene", scene.string(), "--iters", "2", "--patch", "16", "--out",
                        (dir_ / "h").string()});
    ASSERT_EQ(h.code, kExitOk) << h.err;
    EXPECT_EQ(json::parse(h.out)["mu"].size(), 2u);
}
