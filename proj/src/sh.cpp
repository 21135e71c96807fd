#include "gsplat/sh.hpp"

#include <algorithm>
#include <stdexcept>

namespace gsplat {
namespace sh {

void basis(int degree, const Vec3& dir, std::span<double> out) {
    const double x = dir.x(), y = dir.y(), z = dir.z();
    out[0] = kC0;
    if (degree < 1) return;
    out[1] = -kC1 * y;
    out[2] = kC1 * z;
    out[3] = -kC1 * x;
    if (degree < 2) return;
    out[4] = kC2[0] * x * y;
    out[5] = kC2[1] * y * z;
    out[6] = kC2[2] * (2.0 * z * z - x * x - y * y);
    out[7] = kC2[3] * x * z;
    out[8] = kC2[4] * (x * x - y * y);
}

void basis_grad(int degree, const Vec3& dir, std::span<Vec3> out) {
    const double x = dir.x(), y = dir.y(), z = dir.z();
    out[0] = Vec3::Zero();
    if (degree < 1) return;
    out[1] = Vec3(0.0, -kC1, 0.0);
    out[2] = Vec3(0.0, 0.0, kC1);
    out[3] = Vec3(-kC1, 0.0, 0.0);
    if (degree < 2) return;
    out[4] = kC2[0] * Vec3(y, x, 0.0);
    out[5] = kC2[1] * Vec3(0.0, z, y);
    out[6] = kC2[2] * Vec3(-2.0 * x, -2.0 * y, 4.0 * z);
    out[7] = kC2[3] * Vec3(z, 0.0, x);
    out[8] = kC2[4] * Vec3(2.0 * x, -2.0 * y, 0.0);
}

namespace {

int degree_for_count(std::size_t count) {
    switch (count) {
        case 1: return 0;
        case 4: return 1;
        case 9: return 2;
        default: throw std::invalid_argument("eval_sh: coefficient count must be 1, 4 or 9");
    }
}

}  // namespace

}  // namespace sh

Vec3 eval_sh_raw(std::span<const Vec3> coeffs, const Vec3& view_dir) {
    const int degree = sh::degree_for_count(coeffs.size());
    double b[9];
    sh::basis(degree, view_dir, std::span<double>(b, coeffs.size()));
    Vec3 color = Vec3::Constant(0.5);
    for (std::size_t k = 0; k < coeffs.size(); ++k) color += b[k] * coeffs[k];
    return color;
}

Vec3 eval_sh(std::span<const Vec3> coeffs, const Vec3& view_dir) {
    const Vec3 raw = eval_sh_raw(coeffs, view_dir);
    return raw.cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace gsplat
