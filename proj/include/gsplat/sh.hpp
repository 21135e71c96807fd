#pragma once

#include "gsplat/core.hpp"

#include <array>
#include <span>

namespace gsplat {

// Real spherical harmonics up to degree 2, in the ordering and sign
// convention used by splatting renderers. Colors evaluate as
//   clamp(sum_k b_k(dir) * c_k + 0.5, 0, 1).
namespace sh {

constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                           -1.0925484305920792, 0.5462742152960396};

constexpr int basis_count(int degree) { return (degree + 1) * (degree + 1); }

// Fills basis[0 .. basis_count(degree)) for a unit direction.
void basis(int degree, const Vec3& dir, std::span<double> out);

// Per-basis gradient with respect to the (unnormalized-at-call-site) direction.
void basis_grad(int degree, const Vec3& dir, std::span<Vec3> out);

}  // namespace sh

// Post-offset, clamped color. |view_dir| must be 1 within 1e-6.
Vec3 eval_sh(std::span<const Vec3> coeffs, const Vec3& view_dir);

// Variant exposing the pre-clamp value so callers can mask gradients.
Vec3 eval_sh_raw(std::span<const Vec3> coeffs, const Vec3& view_dir);

}  // namespace gsplat
