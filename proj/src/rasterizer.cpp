#include "gsplat/rasterizer.hpp"

#include "compositing_detail.hpp"
#include "gsplat/sh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>

namespace gsplat {

namespace {

std::atomic<int> g_render_threads{0};  // 0 -> use hardware concurrency

int effective_threads() {
    const int configured = g_render_threads.load(std::memory_order_relaxed);
    if (configured > 0) return configured;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Projects one Gaussian; fills `out` and returns false when culled.
bool project_detail(const GaussianPrimitive& g, const CameraModel& cam,
                    const RenderSettings& settings, PreparedSplat* out) {
    const Vec3 p_cam = cam.world_to_camera(g.mean);
    if (p_cam.z() <= settings.near_plane) return false;

    const double z = p_cam.z();
    const Vec2 mean2d(cam.fx * p_cam.x() / z + cam.cx, cam.fy * p_cam.y() / z + cam.cy);

    const Mat3 sigma = covariance_from_params(g.log_scale, g.rotation);
    Mat23 jac = Mat23::Zero();
    jac(0, 0) = cam.fx / z;
    jac(0, 2) = -cam.fx * p_cam.x() / (z * z);
    jac(1, 1) = cam.fy / z;
    jac(1, 2) = -cam.fy * p_cam.y() / (z * z);
    const Mat23 t = jac * cam.rotation;
    Mat2 cov2d = t * sigma * t.transpose();
    cov2d(0, 0) += settings.cov2d_regularization;
    cov2d(1, 1) += settings.cov2d_regularization;

    // 3-sigma footprint from the largest eigenvalue of the 2x2 covariance
    const double mid = 0.5 * (cov2d(0, 0) + cov2d(1, 1));
    const double half = std::sqrt(std::max(0.0, 0.25 * (cov2d(0, 0) - cov2d(1, 1)) *
                                                    (cov2d(0, 0) - cov2d(1, 1)) +
                                                cov2d(0, 1) * cov2d(0, 1)));
    const double lambda_max = mid + half;
    const double radius = 3.0 * std::sqrt(std::max(lambda_max, 0.0));

    if (mean2d.x() + radius < 0.0 || mean2d.x() - radius > cam.width ||
        mean2d.y() + radius < 0.0 || mean2d.y() - radius > cam.height)
        return false;

    const Vec3 cam_center = cam.camera_center();
    Vec3 view_dir = g.mean - cam_center;
    const double view_dist = view_dir.norm();
    view_dir = view_dist > 0.0 ? Vec3(view_dir / view_dist) : Vec3(0, 0, 1);

    const Vec3 raw = eval_sh_raw(g.sh_coeffs, view_dir);

    out->mean2d = mean2d;
    out->cov2d = cov2d;
    out->conic = cov2d.inverse();
    out->depth = z;
    for (int c = 0; c < 3; ++c) {
        out->color[c] = std::clamp(raw[c], 0.0, 1.0);
        out->color_clamped[c] = raw[c] < 0.0 || raw[c] > 1.0;
    }
    out->alpha = g.opacity();
    out->beta = g.affordance();
    out->radius = radius;
    out->p_cam = p_cam;
    out->view_dir = view_dir;
    out->view_dist = view_dist;
    return true;
}

}  // namespace

namespace detail {

void for_each_tile(int tile_count, const std::function<void(int)>& fn) {
    const int threads = std::min(effective_threads(), tile_count);
    if (threads <= 1) {
        for (int i = 0; i < tile_count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(threads);
    const int chunk = (tile_count + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        const int begin = w * chunk;
        const int end = std::min(tile_count, begin + chunk);
        if (begin >= end) break;
        workers.emplace_back([&fn, begin, end] {
            for (int i = begin; i < end; ++i) fn(i);
        });
    }
    for (auto& worker : workers) worker.join();
}

}  // namespace detail

void set_render_threads(int n) { g_render_threads.store(n, std::memory_order_relaxed); }

int render_threads() { return effective_threads(); }

std::optional<SplatProjection> project_gaussian(const GaussianPrimitive& g, const CameraModel& cam,
                                                const RenderSettings& settings) {
    std::string why;
    if (!cam.valid(&why)) throw std::invalid_argument("invalid camera: " + why);
    PreparedSplat prepared;
    if (!project_detail(g, cam, settings, &prepared)) return std::nullopt;
    SplatProjection proj;
    proj.mean2d = prepared.mean2d;
    proj.cov2d = prepared.cov2d;
    proj.depth = prepared.depth;
    proj.color = prepared.color;
    proj.alpha = prepared.alpha;
    proj.affordance = prepared.beta;
    proj.radius = prepared.radius;
    return proj;
}

PreparedView prepare_view(const GaussianScene& scene, const CameraModel& cam,
                          const RenderSettings& settings) {
    std::string why;
    if (!cam.valid(&why)) throw std::invalid_argument("invalid camera: " + why);

    PreparedView view;
    view.width = cam.width;
    view.height = cam.height;
    view.tile_size = std::max(1, settings.tile_size);
    view.tiles_x = (cam.width + view.tile_size - 1) / view.tile_size;
    view.tiles_y = (cam.height + view.tile_size - 1) / view.tile_size;

    view.splats.reserve(scene.size());
    for (std::size_t i = 0; i < scene.size(); ++i) {
        PreparedSplat s;
        if (!project_detail(scene.gaussians[i], cam, settings, &s)) continue;
        s.scene_index = static_cast<std::uint32_t>(i);
        view.splats.push_back(s);
    }

    // global depth sort, ties broken by primitive index for determinism
    std::sort(view.splats.begin(), view.splats.end(),
              [](const PreparedSplat& a, const PreparedSplat& b) {
                  if (a.depth != b.depth) return a.depth < b.depth;
                  return a.scene_index < b.scene_index;
              });

    view.tile_splats.assign(static_cast<std::size_t>(view.tiles_x) * view.tiles_y, {});
    for (std::uint32_t id = 0; id < view.splats.size(); ++id) {
        const PreparedSplat& s = view.splats[id];
        // pixel centers sit at integer + 0.5; compute the covered pixel range
        const int px0 = std::max(0, static_cast<int>(std::floor(s.mean2d.x() - s.radius - 0.5)));
        const int px1 = std::min(cam.width - 1, static_cast<int>(std::ceil(s.mean2d.x() + s.radius - 0.5)));
        const int py0 = std::max(0, static_cast<int>(std::floor(s.mean2d.y() - s.radius - 0.5)));
        const int py1 = std::min(cam.height - 1, static_cast<int>(std::ceil(s.mean2d.y() + s.radius - 0.5)));
        if (px0 > px1 || py0 > py1) continue;
        const int tx0 = px0 / view.tile_size, tx1 = px1 / view.tile_size;
        const int ty0 = py0 / view.tile_size, ty1 = py1 / view.tile_size;
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx)
                view.tile_splats[static_cast<std::size_t>(ty) * view.tiles_x + tx].push_back(id);
    }
    return view;
}

RenderedBuffers render_view(const GaussianScene& scene, const CameraModel& cam,
                            const RenderSettings& settings) {
    scene.validate();
    const PreparedView view = prepare_view(scene, cam, settings);
    const int l = scene.latent_dim;

    RenderedBuffers out;
    out.rgb = Image(cam.height, cam.width, 3);
    out.semantic = Image(cam.height, cam.width, l);
    out.affordance = Image(cam.height, cam.width, 1);
    out.alpha = Image(cam.height, cam.width, 1);
    out.depth = Image(cam.height, cam.width, 1);

    detail::for_each_tile(view.tiles_x * view.tiles_y, [&](int tile) {
        const auto& candidates = view.tile_splats[tile];
        if (candidates.empty()) return;
        const int tx = tile % view.tiles_x, ty = tile / view.tiles_x;
        const int x0 = tx * view.tile_size, x1 = std::min(cam.width, x0 + view.tile_size);
        const int y0 = ty * view.tile_size, y1 = std::min(cam.height, y0 + view.tile_size);
        for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) {
                const double px = x + 0.5, py = y + 0.5;
                detail::walk_pixel(
                    view, candidates, px, py, settings,
                    [&](std::uint32_t, const PreparedSplat& s, double alpha_prime, double,
                        double transmittance, double, double, bool) {
                        const double w = alpha_prime * transmittance;
                        for (int c = 0; c < 3; ++c) out.rgb.at(y, x, c) += w * s.color[c];
                        const auto& latent = scene.gaussians[s.scene_index].semantic_latent;
                        for (int c = 0; c < l; ++c) out.semantic.at(y, x, c) += w * latent[c];
                        out.affordance.at(y, x, 0) += w * s.beta;
                        out.alpha.at(y, x, 0) += w;
                        out.depth.at(y, x, 0) += w * s.depth;
                    });
            }
        }
    });
    return out;
}

Image render_scalar_map(const GaussianScene& scene, const CameraModel& cam,
                        std::span<const double> values, const RenderSettings& settings) {
    if (values.size() != scene.size())
        throw std::invalid_argument("render_scalar_map: one value per Gaussian required");
    const PreparedView view = prepare_view(scene, cam, settings);
    Image out(cam.height, cam.width, 1);

    detail::for_each_tile(view.tiles_x * view.tiles_y, [&](int tile) {
        const auto& candidates = view.tile_splats[tile];
        if (candidates.empty()) return;
        const int tx = tile % view.tiles_x, ty = tile / view.tiles_x;
        const int x0 = tx * view.tile_size, x1 = std::min(cam.width, x0 + view.tile_size);
        const int y0 = ty * view.tile_size, y1 = std::min(cam.height, y0 + view.tile_size);
        for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) {
                detail::walk_pixel(view, candidates, x + 0.5, y + 0.5, settings,
                                   [&](std::uint32_t, const PreparedSplat& s, double alpha_prime,
                                       double, double transmittance, double, double, bool) {
                                       out.at(y, x, 0) +=
                                           alpha_prime * transmittance * values[s.scene_index];
                                   });
            }
        }
    });
    return out;
}

}  // namespace gsplat
