#pragma once

#include "gsplat/backward.hpp"
#include "gsplat/camera.hpp"
#include "gsplat/codec.hpp"
#include "gsplat/image.hpp"
#include "gsplat/scene.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace gsplat {

// Standard Adam with bias correction; operates elementwise on a flat span.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step = 0;

    void resize(std::size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
    }
};

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-15;
};

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, const AdamParams& hp = {});

struct SeedPoint {
    Vec3 position;
    Vec3 color;  // [0,1]
};

struct TrainingFrame {
    CameraModel camera;
    Image rgb;         // H x W x 3
    Image features;    // H_f x W_f x C ground-truth embeddings
    Image affordance;  // H x W x 1 in [0,1]
};

struct TrainingDataset {
    std::vector<TrainingFrame> frames;
    std::vector<SeedPoint> seed_points;
};

struct TrainConfig {
    int phase1_iters = 2000;
    int phase2_iters = 1000;
    // Per-class learning rates; lr_mean is scaled by scene extent.
    double lr_mean = 1.6e-4;
    double lr_log_scale = 5e-3;
    double lr_rotation = 1e-3;
    double lr_opacity = 5e-2;
    double lr_sh = 2.5e-3;
    double lr_semantic = 2.5e-2;
    double lr_affordance = 5e-2;
    LossWeights weights;
    double prune_opacity_threshold = 0.005;
    int prune_interval = 500;
    std::uint64_t seed = 0;
    int sh_degree = 1;
    int latent_dim = 3;
    RenderSettings render;

    // key = value text file; unknown keys are an error.
    static TrainConfig from_file(const std::string& path);
};

// One Gaussian per seed point: degree-0 SH from the seed color, isotropic
// scale from the mean distance to the 3 nearest seeds, opacity 0.1,
// zero latents, affordance 0.1.
GaussianScene init_scene(const TrainingDataset& dataset, int sh_degree, int latent_dim);

struct TrainTraceRow {
    int iteration = 0;
    int frame = 0;
    double photometric = 0.0;
    double affordance = 0.0;
    double semantic = 0.0;
    double total = 0.0;
};

struct TrainTrace {
    std::vector<TrainTraceRow> rows;
    void write_csv(const std::string& path) const;
};

// Phase 1: photometric + affordance on one sampled frame per iteration;
// Adam on every class except the semantic latents; quaternions renormalized
// after each step; low-opacity Gaussians pruned every prune_interval steps.
TrainTrace train_phase1(GaussianScene& scene, const TrainingDataset& dataset,
                        const TrainConfig& cfg);

// Phase 2: semantic latents only; every other field is byte-identical
// before and after. Throws if codec.latent_dim() != scene.latent_dim.
TrainTrace train_phase2(GaussianScene& scene, const TrainingDataset& dataset,
                        const FeatureCodec& codec, const TrainConfig& cfg);

}  // namespace gsplat
