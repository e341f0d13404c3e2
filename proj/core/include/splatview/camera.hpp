// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

namespace splatview {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;

/// Pinhole camera with a world-to-camera rigid transform: x_cam = rotation * x_world + translation.
///
/// Pixel coordinates are continuous with pixel centers at integers, so column c of an image
/// covers u in [c - 0.5, c + 0.5]. The camera looks down +z, x right, y down.
struct CameraModel {
    int width = 1;
    int height = 1;
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 center() const { return -rotation.transpose() * translation; }
    Vec3 toCamera(const Vec3 &world) const { return rotation * world + translation; }
    Vec3 toWorld(const Vec3 &cam) const { return rotation.transpose() * (cam - translation); }

    /// Camera-frame direction with z = 1 through a pixel.
    Vec3 rayCamera(const Vec2 &pixel) const {
        return {(pixel.x() - cx) / fx, (pixel.y() - cy) / fy, 1.0};
    }

    bool inBounds(const Vec2 &pixel) const {
        return pixel.x() >= -0.5 && pixel.y() >= -0.5 && pixel.x() <= width - 0.5 &&
               pixel.y() <= height - 0.5;
    }

    /// Throws InvalidInput if any invariant is broken.
    void validate() const;

    /// Same pose, intrinsics rescaled to a new resolution.
    CameraModel resized(int newWidth, int newHeight) const;

    /// Crop window starting at (x0, y0). Pixel (x0, y0) of this camera becomes (0, 0).
    CameraModel cropped(int x0, int y0, int cropWidth, int cropHeight) const;
};

struct Projection {
    Vec2 pixel;
    double camDepth;
};

/// Perspective projection. Throws BehindCamera when camera-frame z <= 1e-9.
Projection project_point(const CameraModel &camera, const Vec3 &world);

/// d(pixel)/d(world point) at a point in front of the camera.
Mat23 projection_jacobian(const CameraModel &camera, const Vec3 &world);

/// Camera whose optical axis passes through `target`, y axis aligned with world +y (down).
CameraModel look_at(const Vec3 &eye, const Vec3 &target, int width, int height, double fovYDegrees);

} // namespace splatview
