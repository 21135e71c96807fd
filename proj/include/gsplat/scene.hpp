#pragma once

#include "gsplat/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gsplat {

// One anisotropic 3D Gaussian. Every optimizer-facing field is stored
// unconstrained: scale in log-space, opacity and affordance as logits, the
// rotation as a quaternion that is renormalized after each optimizer step.
struct GaussianPrimitive {
    Vec3 mean = Vec3::Zero();
    Vec3 log_scale = Vec3::Zero();
    Vec4 rotation = Vec4(1, 0, 0, 0);  // (w, x, y, z)
    double opacity_logit = 0.0;
    std::vector<Vec3> sh_coeffs;       // (degree+1)^2 RGB triples
    VecX semantic_latent;              // length l
    double affordance_logit = 0.0;

    double opacity() const { return sigmoid(opacity_logit); }
    double affordance() const { return sigmoid(affordance_logit); }

    void renormalize_rotation() {
        const double n = rotation.norm();
        if (n > 0.0) rotation /= n;
    }
};

struct GaussianScene {
    std::vector<GaussianPrimitive> gaussians;
    double extent = 0.0;  // radius of the bounding sphere of the means
    int sh_degree = 1;    // 0..2
    int latent_dim = 0;

    std::size_t size() const { return gaussians.size(); }

    int sh_coeff_count() const { return (sh_degree + 1) * (sh_degree + 1); }

    // Recomputes extent from the means (max distance to the centroid).
    void recompute_extent();

    // Checks per-primitive layout against sh_degree / latent_dim.
    void validate() const;
};

// Sigma = R S S^T R^T with S = diag(exp(log_scale)) and R from the
// normalized quaternion. Throws std::invalid_argument on a zero quaternion.
Mat3 covariance_from_params(const Vec3& log_scale, const Vec4& rotation);

Mat3 rotation_matrix(const Vec4& quaternion);

// quaternion product a*b, both (w,x,y,z)
Vec4 quaternion_multiply(const Vec4& a, const Vec4& b);

Vec4 quaternion_from_matrix(const Mat3& rotation);

// SPLATF1 container: 8-byte magic "SPLATF1\0", u32 count, u32 latent_dim,
// u32 sh_degree, f32 extent, then per-Gaussian records in field declaration
// order, all little-endian f32.
void save_scene(const GaussianScene& scene, const std::string& path);
GaussianScene load_scene(const std::string& path);

std::vector<std::uint8_t> serialize_scene(const GaussianScene& scene);
GaussianScene deserialize_scene(const std::uint8_t* data, std::size_t size);

// Hash of the serialized bytes; used by determinism checks and stage reports.
std::uint64_t scene_hash(const GaussianScene& scene);

// Interop export: ASCII PLY with x,y,z and 8-bit red,green,blue
// (degree-0 SH color).
void export_scene_ply(const GaussianScene& scene, const std::string& path);

}  // namespace gsplat
