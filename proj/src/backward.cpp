#include "gsplat/backward.hpp"

#include "compositing_detail.hpp"
#include "gsplat/sh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace gsplat {

void SceneGradients::resize_like(const GaussianScene& scene) {
    const std::size_t n = scene.size();
    mean.assign(n, Vec3::Zero());
    log_scale.assign(n, Vec3::Zero());
    rotation.assign(n, Vec4::Zero());
    opacity_logit.assign(n, 0.0);
    sh_coeffs.assign(n, std::vector<Vec3>(scene.sh_coeff_count(), Vec3::Zero()));
    semantic_latent.assign(n, VecX::Zero(scene.latent_dim));
    affordance_logit.assign(n, 0.0);
}

void SceneGradients::set_zero() {
    std::fill(mean.begin(), mean.end(), Vec3::Zero());
    std::fill(log_scale.begin(), log_scale.end(), Vec3::Zero());
    std::fill(rotation.begin(), rotation.end(), Vec4::Zero());
    std::fill(opacity_logit.begin(), opacity_logit.end(), 0.0);
    for (auto& per : sh_coeffs) std::fill(per.begin(), per.end(), Vec3::Zero());
    for (auto& v : semantic_latent) v.setZero();
    std::fill(affordance_logit.begin(), affordance_logit.end(), 0.0);
}

bool SceneGradients::all_finite() const {
    for (const auto& v : mean)
        if (!v.allFinite()) return false;
    for (const auto& v : log_scale)
        if (!v.allFinite()) return false;
    for (const auto& v : rotation)
        if (!v.allFinite()) return false;
    for (double v : opacity_logit)
        if (!std::isfinite(v)) return false;
    for (const auto& per : sh_coeffs)
        for (const auto& v : per)
            if (!v.allFinite()) return false;
    for (const auto& v : semantic_latent)
        if (!v.allFinite()) return false;
    for (double v : affordance_logit)
        if (!std::isfinite(v)) return false;
    return true;
}

namespace {

struct PixelRecord {
    std::uint32_t local_pos;  // index into the tile candidate list
    std::uint32_t splat_id;   // index into view.splats
    double alpha_prime;
    double gauss;
    double t_before;
    double dx, dy;
    bool clamped;
};

// projection-space gradients accumulated per prepared splat
struct TileAccum {
    std::vector<Vec3> d_color;
    std::vector<double> d_sem;  // flat, latent_dim per splat
    std::vector<double> d_beta;
    std::vector<double> d_alpha_value;
    std::vector<double> d_depth_value;
    std::vector<Mat2> d_conic;
    std::vector<Vec2> d_mean2d;

    void resize(std::size_t n, int latent_dim) {
        d_color.assign(n, Vec3::Zero());
        d_sem.assign(n * static_cast<std::size_t>(latent_dim), 0.0);
        d_beta.assign(n, 0.0);
        d_alpha_value.assign(n, 0.0);
        d_depth_value.assign(n, 0.0);
        d_conic.assign(n, Mat2::Zero());
        d_mean2d.assign(n, Vec2::Zero());
    }
};

void check_upstream(const Image& img, int h, int w, int c, const char* name) {
    if (img.empty()) return;
    if (img.height != h || img.width != w || img.channels != c)
        throw std::invalid_argument(std::string("composite_backward: upstream ") + name +
                                    " shape mismatch");
}

}  // namespace

SceneGradients composite_backward(const GaussianScene& scene, const CameraModel& cam,
                                  const UpstreamGradients& upstream,
                                  const RenderSettings& settings) {
    scene.validate();
    const int l = scene.latent_dim;
    check_upstream(upstream.rgb, cam.height, cam.width, 3, "rgb");
    check_upstream(upstream.semantic, cam.height, cam.width, l, "semantic");
    check_upstream(upstream.affordance, cam.height, cam.width, 1, "affordance");
    check_upstream(upstream.alpha, cam.height, cam.width, 1, "alpha");
    check_upstream(upstream.depth, cam.height, cam.width, 1, "depth");

    const PreparedView view = prepare_view(scene, cam, settings);
    SceneGradients grads;
    grads.resize_like(scene);

    const bool has_rgb = !upstream.rgb.empty();
    const bool has_sem = !upstream.semantic.empty() && l > 0;
    const bool has_aff = !upstream.affordance.empty();
    const bool has_alpha = !upstream.alpha.empty();
    const bool has_depth = !upstream.depth.empty();

    const int tile_count = view.tiles_x * view.tiles_y;
    std::vector<TileAccum> tile_accums(tile_count);

    detail::for_each_tile(tile_count, [&](int tile) {
        const auto& candidates = view.tile_splats[tile];
        if (candidates.empty()) return;
        TileAccum& acc = tile_accums[tile];
        acc.resize(candidates.size(), l);

        const int tx = tile % view.tiles_x, ty = tile / view.tiles_x;
        const int x0 = tx * view.tile_size, x1 = std::min(view.width, x0 + view.tile_size);
        const int y0 = ty * view.tile_size, y1 = std::min(view.height, y0 + view.tile_size);

        std::vector<PixelRecord> records;
        records.reserve(64);
        std::vector<double> suffix_sem(l, 0.0);
        std::vector<double> u_sem(l, 0.0);

        for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) {
                records.clear();
                detail::walk_pixel(view, candidates, x + 0.5, y + 0.5, settings,
                                   [&](std::uint32_t id, const PreparedSplat&, double alpha_prime,
                                       double gauss, double transmittance, double dx, double dy,
                                       bool clamped) {
                                       records.push_back({0, id, alpha_prime, gauss,
                                                          transmittance, dx, dy, clamped});
                                   });
                if (records.empty()) continue;
                // contributions are an in-order subsequence of the candidate
                // list; recover each record's candidate position by cursor
                {
                    std::size_t cursor = 0;
                    for (auto& rec : records) {
                        while (candidates[cursor] != rec.splat_id) ++cursor;
                        rec.local_pos = static_cast<std::uint32_t>(cursor);
                        ++cursor;
                    }
                }

                const Vec3 u_rgb = has_rgb ? Vec3(upstream.rgb.at(y, x, 0), upstream.rgb.at(y, x, 1),
                                                  upstream.rgb.at(y, x, 2))
                                           : Vec3::Zero();
                if (has_sem)
                    for (int c = 0; c < l; ++c) u_sem[c] = upstream.semantic.at(y, x, c);
                const double u_aff = has_aff ? upstream.affordance.at(y, x, 0) : 0.0;
                const double u_alpha = has_alpha ? upstream.alpha.at(y, x, 0) : 0.0;
                const double u_depth = has_depth ? upstream.depth.at(y, x, 0) : 0.0;

                Vec3 suffix_rgb = Vec3::Zero();
                std::fill(suffix_sem.begin(), suffix_sem.end(), 0.0);
                double suffix_beta = 0.0, suffix_ones = 0.0, suffix_depth = 0.0;

                for (std::size_t ri = records.size(); ri-- > 0;) {
                    const PixelRecord& rec = records[ri];
                    const PreparedSplat& s = view.splats[rec.splat_id];
                    const auto& latent = scene.gaussians[s.scene_index].semantic_latent;
                    const double w = rec.alpha_prime * rec.t_before;
                    const double one_minus = 1.0 - rec.alpha_prime;

                    if (has_rgb) acc.d_color[rec.local_pos] += w * u_rgb;
                    if (has_sem) {
                        double* dst = &acc.d_sem[rec.local_pos * static_cast<std::size_t>(l)];
                        for (int c = 0; c < l; ++c) dst[c] += w * u_sem[c];
                    }
                    if (has_aff) acc.d_beta[rec.local_pos] += w * u_aff;
                    if (has_depth) acc.d_depth_value[rec.local_pos] += w * u_depth;

                    // dL/dalpha': own contribution at T_i minus the
                    // attenuation of everything composited behind
                    double d_alpha_prime = 0.0;
                    if (has_rgb)
                        d_alpha_prime +=
                            u_rgb.dot(rec.t_before * s.color - suffix_rgb / one_minus);
                    if (has_sem)
                        for (int c = 0; c < l; ++c)
                            d_alpha_prime +=
                                u_sem[c] * (rec.t_before * latent[c] - suffix_sem[c] / one_minus);
                    if (has_aff)
                        d_alpha_prime += u_aff * (rec.t_before * s.beta - suffix_beta / one_minus);
                    if (has_alpha)
                        d_alpha_prime += u_alpha * (rec.t_before - suffix_ones / one_minus);
                    if (has_depth)
                        d_alpha_prime +=
                            u_depth * (rec.t_before * s.depth - suffix_depth / one_minus);

                    if (!rec.clamped) {
                        // alpha' = alpha * exp(power)
                        acc.d_alpha_value[rec.local_pos] += rec.gauss * d_alpha_prime;
                        const double d_power = s.alpha * rec.gauss * d_alpha_prime;
                        const double dx = rec.dx, dy = rec.dy;
                        Mat2 dd;
                        dd << dx * dx, dx * dy, dx * dy, dy * dy;
                        acc.d_conic[rec.local_pos] += -0.5 * d_power * dd;
                        const double ca = s.conic(0, 0), cb = s.conic(0, 1), cc = s.conic(1, 1);
                        acc.d_mean2d[rec.local_pos] +=
                            d_power * Vec2(ca * dx + cb * dy, cb * dx + cc * dy);
                    }

                    suffix_rgb += w * s.color;
                    if (has_sem)
                        for (int c = 0; c < l; ++c) suffix_sem[c] += w * latent[c];
                    suffix_beta += w * s.beta;
                    suffix_ones += w;
                    suffix_depth += w * s.depth;
                }
            }
        }
    });

    // ordered reduction: per-splat projection-space gradients, tile by tile
    std::vector<Vec3> d_color(view.splats.size(), Vec3::Zero());
    std::vector<double> d_sem(view.splats.size() * static_cast<std::size_t>(l), 0.0);
    std::vector<double> d_beta(view.splats.size(), 0.0);
    std::vector<double> d_alpha_value(view.splats.size(), 0.0);
    std::vector<double> d_depth_value(view.splats.size(), 0.0);
    std::vector<Mat2> d_conic(view.splats.size(), Mat2::Zero());
    std::vector<Vec2> d_mean2d(view.splats.size(), Vec2::Zero());

    for (int tile = 0; tile < tile_count; ++tile) {
        const auto& candidates = view.tile_splats[tile];
        if (candidates.empty()) continue;
        const TileAccum& acc = tile_accums[tile];
        for (std::size_t p = 0; p < candidates.size(); ++p) {
            const std::uint32_t id = candidates[p];
            d_color[id] += acc.d_color[p];
            for (int c = 0; c < l; ++c)
                d_sem[id * static_cast<std::size_t>(l) + c] +=
                    acc.d_sem[p * static_cast<std::size_t>(l) + c];
            d_beta[id] += acc.d_beta[p];
            d_alpha_value[id] += acc.d_alpha_value[p];
            d_depth_value[id] += acc.d_depth_value[p];
            d_conic[id] += acc.d_conic[p];
            d_mean2d[id] += acc.d_mean2d[p];
        }
    }

    // per-splat chain through projection, SH and the reparameterizations
    for (std::uint32_t id = 0; id < view.splats.size(); ++id) {
        const PreparedSplat& s = view.splats[id];
        const std::uint32_t gi = s.scene_index;
        const GaussianPrimitive& g = scene.gaussians[gi];

        for (int c = 0; c < l; ++c)
            grads.semantic_latent[gi][c] += d_sem[id * static_cast<std::size_t>(l) + c];

        grads.affordance_logit[gi] += s.beta * (1.0 - s.beta) * d_beta[id];
        grads.opacity_logit[gi] += s.alpha * (1.0 - s.alpha) * d_alpha_value[id];

        // color -> SH coefficients and view direction (clamped channels are flat)
        {
            const int degree = scene.sh_degree;
            const int count = scene.sh_coeff_count();
            double b[9];
            sh::basis(degree, s.view_dir, std::span<double>(b, static_cast<std::size_t>(count)));
            Vec3 d_raw = Vec3::Zero();
            for (int c = 0; c < 3; ++c)
                if (!s.color_clamped[c]) d_raw[c] = d_color[id][c];
            if (!d_raw.isZero(0.0)) {
                for (int k = 0; k < count; ++k)
                    grads.sh_coeffs[gi][k] += b[k] * d_raw;
                if (degree > 0 && s.view_dist > 0.0) {
                    Vec3 grad_b[9];
                    sh::basis_grad(degree, s.view_dir,
                                   std::span<Vec3>(grad_b, static_cast<std::size_t>(count)));
                    Vec3 d_dir = Vec3::Zero();
                    for (int k = 0; k < count; ++k)
                        d_dir += grad_b[k] * g.sh_coeffs[k].dot(d_raw);
                    const Mat3 proj = (Mat3::Identity() - s.view_dir * s.view_dir.transpose()) /
                                      s.view_dist;
                    grads.mean[gi] += proj * d_dir;  // proj is symmetric
                }
            }
        }

        Vec3 d_pcam = Vec3::Zero();
        const double z = s.p_cam.z();
        const double inv_z = 1.0 / z, inv_z2 = inv_z * inv_z;

        // mean2d = (fx x / z + cx, fy y / z + cy)
        d_pcam.x() += d_mean2d[id].x() * cam.fx * inv_z;
        d_pcam.y() += d_mean2d[id].y() * cam.fy * inv_z;
        d_pcam.z() += -d_mean2d[id].x() * cam.fx * s.p_cam.x() * inv_z2 -
                      d_mean2d[id].y() * cam.fy * s.p_cam.y() * inv_z2;

        // expected-depth channel composites z directly
        d_pcam.z() += d_depth_value[id];

        if (!d_conic[id].isZero(0.0)) {
            // conic = cov2d^-1  =>  dL/dC = -conic * dL/dconic * conic
            const Mat2 d_cov2d = -(s.conic * d_conic[id] * s.conic);
            const Mat3 sigma = covariance_from_params(g.log_scale, g.rotation);
            Mat23 jac = Mat23::Zero();
            jac(0, 0) = cam.fx * inv_z;
            jac(0, 2) = -cam.fx * s.p_cam.x() * inv_z2;
            jac(1, 1) = cam.fy * inv_z;
            jac(1, 2) = -cam.fy * s.p_cam.y() * inv_z2;
            const Mat23 t = jac * cam.rotation;

            const Mat3 d_sigma = t.transpose() * d_cov2d * t;
            const Mat23 d_t = (d_cov2d + d_cov2d.transpose()) * t * sigma;
            const Mat23 d_jac = d_t * cam.rotation.transpose();

            d_pcam.x() += d_jac(0, 2) * (-cam.fx * inv_z2);
            d_pcam.y() += d_jac(1, 2) * (-cam.fy * inv_z2);
            d_pcam.z() += d_jac(0, 0) * (-cam.fx * inv_z2) + d_jac(1, 1) * (-cam.fy * inv_z2) +
                          d_jac(0, 2) * (2.0 * cam.fx * s.p_cam.x() * inv_z2 * inv_z) +
                          d_jac(1, 2) * (2.0 * cam.fy * s.p_cam.y() * inv_z2 * inv_z);

            // sigma = M M^T, M = R diag(exp(log_scale))
            const Vec4 q = g.rotation / g.rotation.norm();
            const Mat3 r = rotation_matrix(g.rotation);
            const Vec3 scale = g.log_scale.array().exp();
            const Mat3 m = r * scale.asDiagonal();
            const Mat3 d_m = (d_sigma + d_sigma.transpose()) * m;
            const Mat3 d_r = d_m * scale.asDiagonal();
            for (int j = 0; j < 3; ++j) {
                const double d_scale_j = r.col(j).dot(d_m.col(j));
                grads.log_scale[gi][j] += scale[j] * d_scale_j;
            }

            // rotation matrix -> unit quaternion -> raw quaternion
            const double w = q[0], x = q[1], y = q[2], zq = q[3];
            Mat3 dr_dw, dr_dx, dr_dy, dr_dz;
            dr_dw << 0, -zq, y, zq, 0, -x, -y, x, 0;
            dr_dx << 0, y, zq, y, -2 * x, -w, zq, w, -2 * x;
            dr_dy << -2 * y, x, w, x, 0, zq, -w, zq, -2 * y;
            dr_dz << -2 * zq, -w, x, w, -2 * zq, y, x, y, 0;
            Vec4 d_qhat(2.0 * dr_dw.cwiseProduct(d_r).sum(), 2.0 * dr_dx.cwiseProduct(d_r).sum(),
                        2.0 * dr_dy.cwiseProduct(d_r).sum(), 2.0 * dr_dz.cwiseProduct(d_r).sum());
            const double norm = g.rotation.norm();
            grads.rotation[gi] += (d_qhat - q * q.dot(d_qhat)) / norm;
        }

        grads.mean[gi] += cam.rotation.transpose() * d_pcam;
    }

    return grads;
}

double total_loss(const GaussianScene& scene, const CameraModel& cam, const LossSpec& spec,
                  const RenderSettings& settings) {
    const RenderedBuffers buffers = render_view(scene, cam, settings);
    double loss = 0.0;
    if (!spec.rgb_target.empty())
        loss += photometric_loss(buffers.rgb, spec.rgb_target, spec.weights.lambda_ssim);
    if (!spec.semantic_target.empty())
        loss += semantic_loss_core(buffers.semantic, spec.semantic_target, spec.weights.kappa_s);
    if (!spec.affordance_target.empty())
        loss += affordance_loss(buffers.affordance, spec.affordance_target, spec.weights.kappa_b);
    return loss;
}

SceneGradients analytic_gradients(const GaussianScene& scene, const CameraModel& cam,
                                  const LossSpec& spec, const RenderSettings& settings) {
    const RenderedBuffers buffers = render_view(scene, cam, settings);
    UpstreamGradients upstream;
    if (!spec.rgb_target.empty()) {
        upstream.rgb = Image(cam.height, cam.width, 3);
        photometric_loss_grad(buffers.rgb, spec.rgb_target, spec.weights.lambda_ssim, upstream.rgb);
    }
    if (!spec.semantic_target.empty()) {
        upstream.semantic = Image(cam.height, cam.width, scene.latent_dim);
        semantic_loss_core_grad(buffers.semantic, spec.semantic_target, spec.weights.kappa_s,
                                upstream.semantic);
    }
    if (!spec.affordance_target.empty()) {
        upstream.affordance = Image(cam.height, cam.width, 1);
        affordance_loss_grad(buffers.affordance, spec.affordance_target, spec.weights.kappa_b,
                             upstream.affordance);
    }
    return composite_backward(scene, cam, upstream, settings);
}

std::string GradCheckReport::to_string() const {
    std::string out =
        "parameter class      max rel err   worst         analytic       finite diff\n";
    char line[160];
    for (const auto& c : classes) {
        char worst[32];
        std::snprintf(worst, sizeof(worst), "(%zu,%d)", c.worst_gaussian, c.worst_component);
        std::snprintf(line, sizeof(line), "%-20s %-13.3e %-13s %- 14.6e %- 14.6e\n",
                      c.parameter_class.c_str(), c.max_rel_error, worst, c.analytic,
                      c.finite_diff);
        out += line;
    }
    char tail[64];
    std::snprintf(tail, sizeof(tail), "RESULT: %s (tolerance %.1e)\n", passed ? "pass" : "FAIL",
                  tolerance);
    out += tail;
    return out;
}

GradCheckReport finite_diff_check(const GaussianScene& scene, const CameraModel& cam,
                                  const LossSpec& spec, double h, double tolerance,
                                  const RenderSettings& settings) {
    const SceneGradients analytic = analytic_gradients(scene, cam, spec, settings);

    GradCheckReport report;
    report.tolerance = tolerance;
    report.classes.resize(7);
    const char* names[7] = {"mean",       "log_scale",       "rotation", "opacity_logit",
                            "sh_coeffs",  "semantic_latent", "affordance_logit"};
    for (int i = 0; i < 7; ++i) report.classes[i].parameter_class = names[i];

    GaussianScene work = scene;
    auto probe = [&](double* param, double analytic_value, int cls, std::size_t gaussian,
                     int component) {
        const double saved = *param;
        *param = saved + h;
        const double loss_plus = total_loss(work, cam, spec, settings);
        *param = saved - h;
        const double loss_minus = total_loss(work, cam, spec, settings);
        *param = saved;
        if (!std::isfinite(loss_plus) || !std::isfinite(loss_minus))
            throw std::runtime_error("finite_diff_check: non-finite loss at gaussian " +
                                     std::to_string(gaussian));
        const double fd = (loss_plus - loss_minus) / (2.0 * h);
        const double rel = std::abs(analytic_value - fd) /
                           std::max({std::abs(analytic_value), std::abs(fd), 1e-6});
        auto& cr = report.classes[cls];
        if (rel > cr.max_rel_error) {
            cr.max_rel_error = rel;
            cr.worst_gaussian = gaussian;
            cr.worst_component = component;
            cr.analytic = analytic_value;
            cr.finite_diff = fd;
        }
    };

    for (std::size_t i = 0; i < work.size(); ++i) {
        auto& g = work.gaussians[i];
        for (int c = 0; c < 3; ++c) probe(&g.mean[c], analytic.mean[i][c], 0, i, c);
        for (int c = 0; c < 3; ++c) probe(&g.log_scale[c], analytic.log_scale[i][c], 1, i, c);
        for (int c = 0; c < 4; ++c) probe(&g.rotation[c], analytic.rotation[i][c], 2, i, c);
        probe(&g.opacity_logit, analytic.opacity_logit[i], 3, i, 0);
        for (std::size_t k = 0; k < g.sh_coeffs.size(); ++k)
            for (int c = 0; c < 3; ++c)
                probe(&g.sh_coeffs[k][c], analytic.sh_coeffs[i][k][c], 4, i,
                      static_cast<int>(k) * 3 + c);
        for (int c = 0; c < work.latent_dim; ++c)
            probe(&g.semantic_latent[c], analytic.semantic_latent[i][c], 5, i, c);
        probe(&g.affordance_logit, analytic.affordance_logit[i], 6, i, 0);
    }

    report.passed = true;
    for (const auto& c : report.classes)
        if (c.max_rel_error > tolerance) report.passed = false;
    return report;
}

}  // namespace gsplat
