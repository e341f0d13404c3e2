// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "splatview/camera.hpp"

#include "splatview/errors.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace splatview {

void CameraModel::validate() const {
    if (width < 1 || height < 1) {
        throw InvalidInput("camera: width and height must be >= 1");
    }
    if (!(fx > 0.0) || !(fy > 0.0)) {
        throw InvalidInput("camera: fx and fy must be positive");
    }
    const double orthoErr = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (!(orthoErr <= 1e-6) || std::abs(rotation.determinant() - 1.0) > 1e-6) {
        throw InvalidInput("camera: rotation must be orthonormal with determinant +1");
    }
    if (!translation.allFinite()) {
        throw InvalidInput("camera: translation must be finite");
    }
}

CameraModel CameraModel::resized(int newWidth, int newHeight) const {
    CameraModel out = *this;
    const double sx = static_cast<double>(newWidth) / width;
    const double sy = static_cast<double>(newHeight) / height;
    out.width = newWidth;
    out.height = newHeight;
    out.fx = fx * sx;
    out.fy = fy * sy;
    // pixel centers sit on integers, so the continuous image edge is at -0.5
    out.cx = (cx + 0.5) * sx - 0.5;
    out.cy = (cy + 0.5) * sy - 0.5;
    return out;
}

CameraModel CameraModel::cropped(int x0, int y0, int cropWidth, int cropHeight) const {
    CameraModel out = *this;
    out.width = cropWidth;
    out.height = cropHeight;
    out.cx = cx - x0;
    out.cy = cy - y0;
    return out;
}

Projection project_point(const CameraModel &camera, const Vec3 &world) {
    const Vec3 pc = camera.toCamera(world);
    if (!(pc.z() > 1e-9)) {
        throw BehindCamera("project_point: point is behind the camera");
    }
    return {{camera.fx * pc.x() / pc.z() + camera.cx, camera.fy * pc.y() / pc.z() + camera.cy}, pc.z()};
}

Mat23 projection_jacobian(const CameraModel &camera, const Vec3 &world) {
    const Vec3 pc = camera.toCamera(world);
    const double iz = 1.0 / pc.z();
    Mat23 dPixelDCam;
    dPixelDCam << camera.fx * iz, 0.0, -camera.fx * pc.x() * iz * iz, //
        0.0, camera.fy * iz, -camera.fy * pc.y() * iz * iz;
    return dPixelDCam * camera.rotation;
}

CameraModel look_at(const Vec3 &eye, const Vec3 &target, int width, int height, double fovYDegrees) {
    const Vec3 forward = (target - eye).normalized();
    Vec3 right = Vec3::UnitY().cross(forward);
    if (right.norm() < 1e-9) {
        right = Vec3::UnitX();
    }
    right.normalize();
    const Vec3 down = forward.cross(right);

    CameraModel cam;
    cam.width = width;
    cam.height = height;
    cam.fy = 0.5 * height / std::tan(0.5 * fovYDegrees * std::numbers::pi / 180.0);
    cam.fx = cam.fy;
    cam.cx = 0.5 * (width - 1);
    cam.cy = 0.5 * (height - 1);
    cam.rotation.row(0) = right;
    cam.rotation.row(1) = down;
    cam.rotation.row(2) = forward;
    cam.translation = -cam.rotation * eye;
    return cam;
}

} // namespace splatview
