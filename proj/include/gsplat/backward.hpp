#pragma once

#include "gsplat/losses.hpp"
#include "gsplat/rasterizer.hpp"

#include <string>
#include <vector>

namespace gsplat {

// dL/d(rendered buffer) images; any empty image contributes nothing.
struct UpstreamGradients {
    Image rgb;
    Image semantic;
    Image affordance;
    Image alpha;
    Image depth;
};

// Per-Gaussian gradients mirroring every GaussianPrimitive field.
struct SceneGradients {
    std::vector<Vec3> mean;
    std::vector<Vec3> log_scale;
    std::vector<Vec4> rotation;
    std::vector<double> opacity_logit;
    std::vector<std::vector<Vec3>> sh_coeffs;
    std::vector<VecX> semantic_latent;
    std::vector<double> affordance_logit;

    void resize_like(const GaussianScene& scene);
    void set_zero();
    bool all_finite() const;
};

// Analytic reverse pass of render_view: pixel-space upstream gradients back
// to every Gaussian parameter, including the projection Jacobian and the
// quaternion / log-scale / logit reparameterizations. Culled Gaussians get
// zero gradients. Tiles accumulate locally and reduce in fixed tile order,
// so results are run-to-run identical.
SceneGradients composite_backward(const GaussianScene& scene, const CameraModel& cam,
                                  const UpstreamGradients& upstream,
                                  const RenderSettings& settings = {});

// A rendering loss: photometric + semantic + affordance terms against fixed
// targets. Empty targets disable the corresponding term.
struct LossSpec {
    Image rgb_target;
    Image semantic_target;   // already encoded + resized, H x W x l
    Image affordance_target;
    LossWeights weights;
};

double total_loss(const GaussianScene& scene, const CameraModel& cam, const LossSpec& spec,
                  const RenderSettings& settings = {});

// Renders, differentiates the losses and runs composite_backward.
SceneGradients analytic_gradients(const GaussianScene& scene, const CameraModel& cam,
                                  const LossSpec& spec, const RenderSettings& settings = {});

// Central finite differences against analytic_gradients, per parameter class.
struct GradCheckReport {
    struct ClassResult {
        std::string parameter_class;
        double max_rel_error = 0.0;
        std::size_t worst_gaussian = 0;
        int worst_component = 0;
        double analytic = 0.0;
        double finite_diff = 0.0;
    };
    std::vector<ClassResult> classes;
    double tolerance = 1e-3;
    bool passed = false;

    std::string to_string() const;
};

// relative error = |a - fd| / max(|a|, |fd|, 1e-6)
GradCheckReport finite_diff_check(const GaussianScene& scene, const CameraModel& cam,
                                  const LossSpec& spec, double h = 1e-4, double tolerance = 1e-3,
                                  const RenderSettings& settings = {});

}  // namespace gsplat
