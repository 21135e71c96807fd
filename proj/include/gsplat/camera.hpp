#pragma once

#include "gsplat/core.hpp"

#include <string>

namespace gsplat {

// Pinhole camera: intrinsics in pixels plus a world-to-camera rigid transform.
struct CameraModel {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;
    Mat3 rotation = Mat3::Identity();   // world-to-camera
    Vec3 translation = Vec3::Zero();

    Vec3 world_to_camera(const Vec3& p_world) const { return rotation * p_world + translation; }

    Vec3 camera_center() const { return -(rotation.transpose() * translation); }

    // fx, fy > 0; principal point inside the image; rotation orthonormal within 1e-6.
    bool valid(std::string* why = nullptr) const;
};

}  // namespace gsplat
