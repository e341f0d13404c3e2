// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

// Independent reference implementations used by the unit and acceptance tests.

#pragma once

#include "splatview/camera_select.hpp"
#include "splatview/ewa_splat.hpp"
#include "splatview/renderer.hpp"
#include "splatview/scene.hpp"
#include "splatview/synthetic.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace splatview::oracle {

/// Projects with an explicit 3x4 intrinsics-times-extrinsics matrix in homogeneous coordinates.
Vec2 homogeneous_project(const CameraModel &cam, const Vec3 &world);

/// Composites every splat at every pixel with no radius, cap or termination. Alphas come from
/// an explicit matrix inverse of the covariance; order is (depth, view, pixel).
struct BruteRaster {
    std::vector<double> payload; // kPayloadSize per pixel
    std::vector<double> opacity;
};
BruteRaster brute_force_composite(const std::vector<Splat> &splats, int width, int height);

/// Best coverage over all subsets of size <= k.
double exhaustive_best_coverage(std::span<const ScoreMap> maps, int k);

/// Scalar Adam, written from the textbook update.
struct ScalarAdam {
    double m = 0.0, v = 0.0;
    int t = 0;
    double step(double param, double grad, double lr, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8);
};

/// Minimal PFM/PPM decoders written separately from the library parser.
struct DecodedImage {
    int width = 0, height = 0, channels = 0;
    std::vector<float> data; // top row first
};
DecodedImage reference_decode_pfm(const std::vector<std::uint8_t> &bytes);
DecodedImage reference_decode_ppm(const std::vector<std::uint8_t> &bytes);
/// PNG decode through libpng's simplified reader.
DecodedImage decode_png(const std::vector<std::uint8_t> &bytes);

/// Nearest intersection of a ray with an axis-aligned z plane limited in x. Returns +inf on miss.
double ray_z_plane(const Vec3 &origin, const Vec3 &dir, double z, double minX, double maxX);

/// Central difference with the step actually representable in float storage.
double float_central_difference(float &slot, double h, const std::function<double()> &f);

/// Random depth-sorted fragment stack.
struct Stack {
    std::vector<double> alphas;
    std::vector<Payload> payloads;
};
Stack random_stack(std::mt19937_64 &rng, int minSize, int maxSize);

/// g . composite(stack) + gOpacity * opacity, evaluated from the explicit sum in long double.
long double stack_objective(const Stack &stack, const std::vector<double> &g, double gOpacity);

/// Perturbs depth, normals, uncertainty and features of a synthetic scene with seeded noise.
void jitter_scene(Scene &scene, std::mt19937_64 &rng, double depthRel, double normalAngle, double logitSpread);

/// Camera close to `base`, rotated by up to `angleDeg` about a random axis through the look-at point.
CameraModel nearby_camera(const CameraModel &base, std::mt19937_64 &rng, double angleDeg, double lookDistance);

double mse(const FloatImage &a, const FloatImage &b);

/// Synthetic scene tuned for render tests: value-noise texture, 0.25 m cells.
SyntheticSpec smooth_spec(GeometryPreset preset, int views, int resolution, std::uint64_t seed);

/// Half squared error of a forward pass (uniform camera weights, full rasterization) against
/// `target` over valid pixels. Optionally returns d/d(raw) and the pass itself.
double render_loss(const Scene &scene, const CameraModel &camera, const std::vector<int> &sources,
                   const FloatImage &target, const LinearHead &head, std::vector<double> *dRaw = nullptr,
                   RenderPass *pass = nullptr);

/// |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor);

} // namespace splatview::oracle
