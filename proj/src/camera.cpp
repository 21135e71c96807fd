#include "gsplat/camera.hpp"

namespace gsplat {

bool CameraModel::valid(std::string* why) const {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (!(fx > 0.0) || !(fy > 0.0)) return fail("focal lengths must be positive");
    if (width <= 0 || height <= 0) return fail("image size must be positive");
    if (!(cx >= 0.0 && cx < width)) return fail("cx outside image");
    if (!(cy >= 0.0 && cy < height)) return fail("cy outside image");
    const Mat3 rtr = rotation.transpose() * rotation;
    if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6)
        return fail("rotation not orthonormal within 1e-6");
    if (!translation.allFinite() || !rotation.allFinite()) return fail("non-finite pose");
    return true;
}

}  // namespace gsplat
