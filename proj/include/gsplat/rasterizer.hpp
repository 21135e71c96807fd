#pragma once

#include "gsplat/camera.hpp"
#include "gsplat/core.hpp"
#include "gsplat/image.hpp"
#include "gsplat/scene.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace gsplat {

// Compositing constants. These follow the reference splatting convention;
// they are part of the rendering definition, so the backward pass, the naive
// reference compositor and all oracles must use the same values.
struct RenderSettings {
    double near_plane = 0.01;        // splats at depth <= near_plane are culled
    double cov2d_regularization = 0.3;  // added to the cov2d diagonal, px^2
    double alpha_clamp = 0.99;       // per-splat alpha' ceiling
    double min_transmittance = 1e-4; // front-to-back early exit
    int tile_size = 16;
};

struct SplatProjection {
    Vec2 mean2d;         // pixels
    Mat2 cov2d;          // pixels^2, regularized
    double depth = 0.0;  // camera z
    Vec3 color;          // SH evaluated for this view
    double alpha = 0.0;
    double affordance = 0.0;
    double radius = 0.0;  // 3-sigma footprint half-side, pixels
};

// EWA projection of one Gaussian. Returns nullopt when the splat is culled
// (behind the near plane, or its 3-sigma footprint misses the image).
std::optional<SplatProjection> project_gaussian(const GaussianPrimitive& g, const CameraModel& cam,
                                                const RenderSettings& settings = {});

struct RenderedBuffers {
    Image rgb;         // H x W x 3 in [0,1]
    Image semantic;    // H x W x l
    Image affordance;  // H x W x 1 in [0,1]
    Image alpha;       // H x W x 1 in [0,1]
    Image depth;       // H x W x 1, alpha-weighted expected depth
};

// Splats retained for a view, depth-sorted (ties by primitive index) and
// binned into tiles. Shared between the forward compositor and the backward
// pass so both walk identical candidate lists.
struct PreparedSplat {
    std::uint32_t scene_index = 0;
    Vec2 mean2d;
    Mat2 conic;   // inverse of cov2d
    Mat2 cov2d;
    double depth = 0.0;
    Vec3 color;
    bool color_clamped[3] = {false, false, false};
    double alpha = 0.0;
    double beta = 0.0;
    double radius = 0.0;
    Vec3 p_cam;      // camera-space mean
    Vec3 view_dir;   // unit direction mean - camera center
    double view_dist = 0.0;
};

struct PreparedView {
    int width = 0;
    int height = 0;
    int tile_size = 16;
    int tiles_x = 0;
    int tiles_y = 0;
    std::vector<PreparedSplat> splats;                    // depth-sorted
    std::vector<std::vector<std::uint32_t>> tile_splats;  // per tile, indices into splats
};

PreparedView prepare_view(const GaussianScene& scene, const CameraModel& cam,
                          const RenderSettings& settings = {});

// Tile-based front-to-back alpha compositing of RGB, semantic, affordance,
// alpha and expected-depth buffers. Deterministic: depth sort ties break on
// primitive index and tiles write disjoint pixels.
RenderedBuffers render_view(const GaussianScene& scene, const CameraModel& cam,
                            const RenderSettings& settings = {});

// Composites one arbitrary scalar per Gaussian with the standard render
// weights (used for similarity maps). values.size() must equal scene.size().
Image render_scalar_map(const GaussianScene& scene, const CameraModel& cam,
                        std::span<const double> values, const RenderSettings& settings = {});

// Number of worker threads for tile loops (default: hardware concurrency).
// Rendering results are independent of this setting.
void set_render_threads(int n);
int render_threads();

}  // namespace gsplat
