#include "gsplat/trainer.hpp"

#include "gsplat/io.hpp"
#include "gsplat/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace gsplat {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, const AdamParams& hp) {
    if (params.size() != grads.size()) throw std::invalid_argument("adam_step: size mismatch");
    if (state.m.size() != params.size()) state.resize(params.size());
    state.step += 1;
    const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * grads[i];
        state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + hp.eps);
    }
}

GaussianScene init_scene(const TrainingDataset& dataset, int sh_degree, int latent_dim) {
    const auto& seeds = dataset.seed_points;
    if (seeds.empty()) throw std::invalid_argument("init_scene: empty seed point cloud");

    GaussianScene scene;
    scene.sh_degree = sh_degree;
    scene.latent_dim = latent_dim;
    scene.gaussians.resize(seeds.size());

    // neighbor distances for per-point isotropic scale
    std::vector<std::array<double, 3>> points(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i)
        points[i] = {seeds[i].position.x(), seeds[i].position.y(), seeds[i].position.z()};
    const KdTree<3> tree(points);

    const int coeffs = scene.sh_coeff_count();
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        auto& g = scene.gaussians[i];
        g.mean = seeds[i].position;
        g.rotation = Vec4(1, 0, 0, 0);
        g.opacity_logit = logit(0.1);
        g.affordance_logit = logit(0.1);
        g.semantic_latent = VecX::Zero(latent_dim);
        g.sh_coeffs.assign(coeffs, Vec3::Zero());
        // invert the +0.5 offset so eval_sh reproduces the seed color
        g.sh_coeffs[0] = (seeds[i].color - Vec3::Constant(0.5)) / sh::kC0;
    }

    scene.recompute_extent();

    for (std::size_t i = 0; i < seeds.size(); ++i) {
        auto& g = scene.gaussians[i];
        if (seeds.size() >= 2) {
            const std::size_t k = std::min<std::size_t>(3, seeds.size() - 1);
            std::vector<std::pair<double, std::uint32_t>> nn;
            tree.knn(points[i], k + 1, nn);  // includes the point itself
            double mean_dist = 0.0;
            std::size_t counted = 0;
            for (const auto& [d2, j] : nn) {
                if (j == i) continue;
                mean_dist += std::sqrt(d2);
                if (++counted == k) break;
            }
            mean_dist /= static_cast<double>(counted);
            g.log_scale = Vec3::Constant(std::log(std::max(mean_dist, 1e-12)));
        } else {
            // no neighbors: fall back to 1% of extent (floor of 1 world unit)
            g.log_scale = Vec3::Constant(std::log(0.01 * std::max(scene.extent, 1.0)));
        }
    }
    return scene;
}

namespace {

// flat per-class parameter views for the optimizer
enum ParamClass : int {
    kMean = 0,
    kLogScale,
    kRotation,
    kOpacity,
    kSh,
    kSemantic,
    kAffordance,
    kClassCount
};

std::size_t class_size(const GaussianScene& scene, int cls) {
    const std::size_t n = scene.size();
    switch (cls) {
        case kMean:
        case kLogScale: return n * 3;
        case kRotation: return n * 4;
        case kOpacity:
        case kAffordance: return n;
        case kSh: return n * scene.sh_coeff_count() * 3;
        case kSemantic: return n * scene.latent_dim;
        default: return 0;
    }
}

void gather_params(const GaussianScene& scene, int cls, std::vector<double>& out) {
    out.clear();
    out.reserve(class_size(scene, cls));
    for (const auto& g : scene.gaussians) {
        switch (cls) {
            case kMean:
                out.insert(out.end(), g.mean.data(), g.mean.data() + 3);
                break;
            case kLogScale:
                out.insert(out.end(), g.log_scale.data(), g.log_scale.data() + 3);
                break;
            case kRotation:
                out.insert(out.end(), g.rotation.data(), g.rotation.data() + 4);
                break;
            case kOpacity:
                out.push_back(g.opacity_logit);
                break;
            case kSh:
                for (const auto& c : g.sh_coeffs) out.insert(out.end(), c.data(), c.data() + 3);
                break;
            case kSemantic:
                out.insert(out.end(), g.semantic_latent.data(),
                           g.semantic_latent.data() + g.semantic_latent.size());
                break;
            case kAffordance:
                out.push_back(g.affordance_logit);
                break;
        }
    }
}

void scatter_params(GaussianScene& scene, int cls, const std::vector<double>& in) {
    std::size_t idx = 0;
    for (auto& g : scene.gaussians) {
        switch (cls) {
            case kMean:
                g.mean = Vec3(in[idx], in[idx + 1], in[idx + 2]);
                idx += 3;
                break;
            case kLogScale:
                g.log_scale = Vec3(in[idx], in[idx + 1], in[idx + 2]);
                idx += 3;
                break;
            case kRotation:
                g.rotation = Vec4(in[idx], in[idx + 1], in[idx + 2], in[idx + 3]);
                idx += 4;
                break;
            case kOpacity:
                g.opacity_logit = in[idx++];
                break;
            case kSh:
                for (auto& c : g.sh_coeffs) {
                    c = Vec3(in[idx], in[idx + 1], in[idx + 2]);
                    idx += 3;
                }
                break;
            case kSemantic:
                for (Eigen::Index i = 0; i < g.semantic_latent.size(); ++i)
                    g.semantic_latent[i] = in[idx++];
                break;
            case kAffordance:
                g.affordance_logit = in[idx++];
                break;
        }
    }
}

void gather_grads(const SceneGradients& grads, const GaussianScene& scene, int cls,
                  std::vector<double>& out) {
    out.clear();
    out.reserve(class_size(scene, cls));
    for (std::size_t i = 0; i < scene.size(); ++i) {
        switch (cls) {
            case kMean:
                out.insert(out.end(), grads.mean[i].data(), grads.mean[i].data() + 3);
                break;
            case kLogScale:
                out.insert(out.end(), grads.log_scale[i].data(), grads.log_scale[i].data() + 3);
                break;
            case kRotation:
                out.insert(out.end(), grads.rotation[i].data(), grads.rotation[i].data() + 4);
                break;
            case kOpacity:
                out.push_back(grads.opacity_logit[i]);
                break;
            case kSh:
                for (const auto& c : grads.sh_coeffs[i])
                    out.insert(out.end(), c.data(), c.data() + 3);
                break;
            case kSemantic:
                out.insert(out.end(), grads.semantic_latent[i].data(),
                           grads.semantic_latent[i].data() + grads.semantic_latent[i].size());
                break;
            case kAffordance:
                out.push_back(grads.affordance_logit[i]);
                break;
        }
    }
}

double class_lr(const TrainConfig& cfg, const GaussianScene& scene, int cls) {
    switch (cls) {
        case kMean: return cfg.lr_mean * std::max(scene.extent, 1e-12);
        case kLogScale: return cfg.lr_log_scale;
        case kRotation: return cfg.lr_rotation;
        case kOpacity: return cfg.lr_opacity;
        case kSh: return cfg.lr_sh;
        case kSemantic: return cfg.lr_semantic;
        case kAffordance: return cfg.lr_affordance;
        default: return 0.0;
    }
}

// drops Adam state rows of pruned Gaussians, preserving survivor order
void prune_state(AdamState& state, const std::vector<bool>& keep, std::size_t stride) {
    if (state.m.empty()) return;
    std::size_t write = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (!keep[i]) continue;
        for (std::size_t c = 0; c < stride; ++c) {
            state.m[write * stride + c] = state.m[i * stride + c];
            state.v[write * stride + c] = state.v[i * stride + c];
        }
        ++write;
    }
    state.m.resize(write * stride);
    state.v.resize(write * stride);
}

void prune_scene(GaussianScene& scene, std::array<AdamState, kClassCount>& states,
                 double opacity_threshold) {
    std::vector<bool> keep(scene.size());
    std::size_t kept = 0;
    for (std::size_t i = 0; i < scene.size(); ++i) {
        keep[i] = scene.gaussians[i].opacity() >= opacity_threshold;
        kept += keep[i];
    }
    if (kept == scene.size() || kept == 0) return;  // never prune to an empty scene

    const std::size_t strides[kClassCount] = {
        3, 3, 4, 1, static_cast<std::size_t>(scene.sh_coeff_count()) * 3,
        static_cast<std::size_t>(scene.latent_dim), 1};
    for (int cls = 0; cls < kClassCount; ++cls) prune_state(states[cls], keep, strides[cls]);

    std::vector<GaussianPrimitive> survivors;
    survivors.reserve(kept);
    for (std::size_t i = 0; i < scene.size(); ++i)
        if (keep[i]) survivors.push_back(std::move(scene.gaussians[i]));
    scene.gaussians = std::move(survivors);
}

}  // namespace

TrainTrace train_phase1(GaussianScene& scene, const TrainingDataset& dataset,
                        const TrainConfig& cfg) {
    if (dataset.frames.size() < 2)
        throw std::invalid_argument("train_phase1: need at least 2 frames");
    scene.validate();

    Rng rng(cfg.seed);
    std::array<AdamState, kClassCount> states;
    TrainTrace trace;
    trace.rows.reserve(cfg.phase1_iters);
    std::vector<double> params, grad_values;

    for (int iter = 0; iter < cfg.phase1_iters; ++iter) {
        const std::size_t frame_idx = rng.uniform_index(dataset.frames.size());
        const TrainingFrame& frame = dataset.frames[frame_idx];

        const RenderedBuffers buffers = render_view(scene, frame.camera, cfg.render);
        UpstreamGradients upstream;
        upstream.rgb = Image(frame.camera.height, frame.camera.width, 3);
        const double photo = photometric_loss_grad(buffers.rgb, frame.rgb,
                                                   cfg.weights.lambda_ssim, upstream.rgb);
        upstream.affordance = Image(frame.camera.height, frame.camera.width, 1);
        const double aff = affordance_loss_grad(buffers.affordance, frame.affordance,
                                                cfg.weights.kappa_b, upstream.affordance);
        const double loss = photo + aff;
        if (!std::isfinite(loss))
            throw std::runtime_error("train_phase1: non-finite loss at iteration " +
                                     std::to_string(iter));

        const SceneGradients grads = composite_backward(scene, frame.camera, upstream, cfg.render);

        for (int cls = 0; cls < kClassCount; ++cls) {
            if (cls == kSemantic) continue;  // phase 2 territory
            gather_params(scene, cls, params);
            gather_grads(grads, scene, cls, grad_values);
            adam_step(params, grad_values, states[cls], class_lr(cfg, scene, cls));
            scatter_params(scene, cls, params);
        }
        for (auto& g : scene.gaussians) g.renormalize_rotation();

        trace.rows.push_back({iter, static_cast<int>(frame_idx), photo, aff, 0.0, loss});

        if (cfg.prune_interval > 0 && (iter + 1) % cfg.prune_interval == 0)
            prune_scene(scene, states, cfg.prune_opacity_threshold);
    }
    return trace;
}

TrainTrace train_phase2(GaussianScene& scene, const TrainingDataset& dataset,
                        const FeatureCodec& codec, const TrainConfig& cfg) {
    if (dataset.frames.empty()) throw std::invalid_argument("train_phase2: empty dataset");
    if (codec.latent_dim() != scene.latent_dim)
        throw std::invalid_argument("train_phase2: codec latent_dim != scene latent_dim");
    scene.validate();

    // encoded + resized targets are constant; build them once per frame
    std::vector<Image> targets;
    targets.reserve(dataset.frames.size());
    for (const auto& frame : dataset.frames)
        targets.push_back(semantic_target(frame.features, codec, frame.camera.height,
                                          frame.camera.width));

    Rng rng(cfg.seed + 1);
    AdamState state;
    TrainTrace trace;
    trace.rows.reserve(cfg.phase2_iters);
    std::vector<double> params, grad_values;

    for (int iter = 0; iter < cfg.phase2_iters; ++iter) {
        const std::size_t frame_idx = rng.uniform_index(dataset.frames.size());
        const TrainingFrame& frame = dataset.frames[frame_idx];

        const RenderedBuffers buffers = render_view(scene, frame.camera, cfg.render);
        UpstreamGradients upstream;
        upstream.semantic = Image(frame.camera.height, frame.camera.width, scene.latent_dim);
        const double loss = semantic_loss_core_grad(buffers.semantic, targets[frame_idx],
                                                    cfg.weights.kappa_s, upstream.semantic);
        if (!std::isfinite(loss))
            throw std::runtime_error("train_phase2: non-finite loss at iteration " +
                                     std::to_string(iter));

        const SceneGradients grads = composite_backward(scene, frame.camera, upstream, cfg.render);

        gather_params(scene, kSemantic, params);
        gather_grads(grads, scene, kSemantic, grad_values);
        adam_step(params, grad_values, state, cfg.lr_semantic);
        scatter_params(scene, kSemantic, params);

        trace.rows.push_back({iter, static_cast<int>(frame_idx), 0.0, 0.0, loss, loss});
    }
    return trace;
}

void TrainTrace::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "iteration,frame,photometric,affordance,semantic,total\n";
    for (const auto& row : rows)
        out << row.iteration << ',' << row.frame << ',' << format_double(row.photometric) << ','
            << format_double(row.affordance) << ',' << format_double(row.semantic) << ','
            << format_double(row.total) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

TrainConfig TrainConfig::from_file(const std::string& path) {
    const ConfigFile file = ConfigFile::load(path);
    const ConfigBlock& b = file.global;
    TrainConfig cfg;
    for (const auto& [key, _] : b.values) {
        static const char* known[] = {
            "phase1_iters", "phase2_iters", "lr_mean", "lr_log_scale", "lr_rotation",
            "lr_opacity", "lr_sh", "lr_semantic", "lr_affordance", "kappa_s", "kappa_g",
            "kappa_b", "lambda_ssim", "prune_opacity_threshold", "prune_interval", "seed",
            "sh_degree", "latent_dim"};
        if (std::find_if(std::begin(known), std::end(known),
                         [&](const char* k) { return key == k; }) == std::end(known))
            throw std::runtime_error("unknown training config key: " + key);
    }
    cfg.phase1_iters = static_cast<int>(b.get_int_or("phase1_iters", cfg.phase1_iters));
    cfg.phase2_iters = static_cast<int>(b.get_int_or("phase2_iters", cfg.phase2_iters));
    cfg.lr_mean = b.get_double_or("lr_mean", cfg.lr_mean);
    cfg.lr_log_scale = b.get_double_or("lr_log_scale", cfg.lr_log_scale);
    cfg.lr_rotation = b.get_double_or("lr_rotation", cfg.lr_rotation);
    cfg.lr_opacity = b.get_double_or("lr_opacity", cfg.lr_opacity);
    cfg.lr_sh = b.get_double_or("lr_sh", cfg.lr_sh);
    cfg.lr_semantic = b.get_double_or("lr_semantic", cfg.lr_semantic);
    cfg.lr_affordance = b.get_double_or("lr_affordance", cfg.lr_affordance);
    cfg.weights.kappa_s = b.get_double_or("kappa_s", cfg.weights.kappa_s);
    cfg.weights.kappa_g = b.get_double_or("kappa_g", cfg.weights.kappa_g);
    cfg.weights.kappa_b = b.get_double_or("kappa_b", cfg.weights.kappa_b);
    cfg.weights.lambda_ssim = b.get_double_or("lambda_ssim", cfg.weights.lambda_ssim);
    cfg.prune_opacity_threshold =
        b.get_double_or("prune_opacity_threshold", cfg.prune_opacity_threshold);
    cfg.prune_interval = static_cast<int>(b.get_int_or("prune_interval", cfg.prune_interval));
    cfg.seed = static_cast<std::uint64_t>(b.get_int_or("seed", 0));
    cfg.sh_degree = static_cast<int>(b.get_int_or("sh_degree", cfg.sh_degree));
    cfg.latent_dim = static_cast<int>(b.get_int_or("latent_dim", cfg.latent_dim));

    if (cfg.phase1_iters <= 0 || cfg.phase2_iters <= 0)
        throw std::runtime_error("iteration counts must be positive");
    for (double lr : {cfg.lr_mean, cfg.lr_log_scale, cfg.lr_rotation, cfg.lr_opacity, cfg.lr_sh,
                      cfg.lr_semantic, cfg.lr_affordance})
        if (lr <= 0.0) throw std::runtime_error("learning rates must be positive");
    return cfg;
}

}  // namespace gsplat
