// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatview/renderer.hpp"
#include "splatview/scene.hpp"

#include <filesystem>
#include <map>
#include <optional>

namespace splatview {

inline constexpr int kManifestVersion = 1;
inline constexpr const char *kManifestName = "manifest.json";
inline constexpr const char *kGroundTruthMuName = "gt_mu.json";
inline constexpr const char *kHeadName = "head.json";

/// Reads `dir/manifest.json` and every map it references. Color files may be PFM or PPM, the
/// other maps are PFM. Feature maps are one PFM holding the channel planes stacked vertically
/// (width x 6*height). Missing optional maps get the defaults of make_input_view.
/// A depthSigma of "auto" resolves to 0.01 x median valid depth.
/// Throws ParseError naming the offending file.
Scene load_scene(const std::filesystem::path &dir);

/// Writes all maps as PFM plus the manifest. Creates `dir` if needed.
void save_scene(const Scene &scene, const std::filesystem::path &dir);

/// Ground-truth exposure sidecar: view id -> mu that undoes the synthetic perturbation.
void save_ground_truth_mu(const std::map<int, double> &mu, const std::filesystem::path &dir);
std::optional<std::map<int, double>> load_ground_truth_mu(const std::filesystem::path &dir);

/// Decoder head sidecar; load returns the identity head when the file is absent.
void save_head(const LinearHead &head, const std::filesystem::path &dir);
LinearHead load_head(const std::filesystem::path &dir);

/// Parses a pose document {rotation:[9], translation:[3], width, height, fx?, fy?, cx?, cy?}.
/// Missing intrinsics default to a 60 degree vertical field of view centered on the image.
CameraModel camera_from_json_text(const std::string &text);

FloatImage stack_feature_planes(const FloatImage &features);
FloatImage unstack_feature_planes(const FloatImage &stacked, int channels);

} // namespace splatview
