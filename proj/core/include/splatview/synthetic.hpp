// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatview/scene.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace splatview {

enum class GeometryPreset { TexturedPlane, TwoWalls, BoxCorner };
enum class TextureKind { Checker, ValueNoise, Flat };

std::optional<GeometryPreset> parse_preset(const std::string &name);
std::optional<TextureKind> parse_texture(const std::string &name);
const char *preset_name(GeometryPreset preset);

/// Views sit on a horizontal arc of radius `distance` around the target (0, 0, distance),
/// spread evenly over `arcDegrees`; a single view sits at the origin looking down +z.
struct SyntheticSpec {
    GeometryPreset preset = GeometryPreset::TexturedPlane;
    int resolution = 128;
    int views = 3;
    double arcDegrees = 30.0;
    double distance = 1.0;
    double fovYDegrees = 60.0;
    TextureKind texture = TextureKind::ValueNoise;
    double textureScale = 0.12; // meters per texture cell
    /// Multiplicative depth noise of this relative amplitude, applied to `depthNoiseView`: value
    /// noise with `depthNoiseCell` pixels per lattice cell, or independent per pixel when the cell is 0.
    double depthNoise = 0.0;
    int depthNoiseView = 0;
    double depthNoiseCell = 8.0;
    /// Stored colors of `exposureView` are divided by `exposureFactor`.
    int exposureView = -1;
    double exposureFactor = 1.0;
    std::uint64_t seed = 0;

    /// Throws InvalidInput.
    void validate() const;
};

/// Planar patch used both for generation and as a ray-cast reference.
struct SyntheticPlane {
    Vec3 origin;
    Vec3 normal;
    Vec3 axisU;
    Vec3 axisV;
    double minU, maxU, minV, maxV;
    int textureId;
};

struct SyntheticGeometry {
    std::vector<SyntheticPlane> planes;
};

SyntheticGeometry preset_geometry(GeometryPreset preset, double distance);

struct RayHit {
    double t;  // along the un-normalized ray, equal to camera z for camera rays with z = 1
    int plane; // -1 on miss
};
RayHit cast_ray(const SyntheticGeometry &geometry, const Vec3 &origin, const Vec3 &direction);

/// Texture color at a world point on plane `plane`.
Vec3 texture_color(const SyntheticSpec &spec, const SyntheticPlane &plane, const Vec3 &world);

/// Camera for view `index` of the arc.
CameraModel synthetic_camera(const SyntheticSpec &spec, int index);

struct SyntheticScene {
    Scene scene;
    /// View id -> mu restoring the unperturbed colors (only when an exposure perturbation is set).
    std::map<int, double> groundTruthMu;
};

/// Analytic ray-cast scene. Deterministic in `spec` (including the seed).
SyntheticScene gen_synthetic(const SyntheticSpec &spec);

/// Renders the analytic scene (color, depth, normal) from an arbitrary camera.
InputView render_synthetic_view(const SyntheticSpec &spec, const SyntheticGeometry &geometry,
                                const CameraModel &camera, int id);

} // namespace splatview
