#pragma once

#include "gsplat/rasterizer.hpp"

#include <cmath>
#include <cstdlib>
#include <functional>

namespace gsplat::detail {

// Front-to-back walk of one pixel's candidate splats. fn is called once per
// contributing splat with the blend state; the walk stops at the
// transmittance floor. Both the forward compositor and the backward pass run
// exactly this loop, so their contribution sets are identical by
// construction.
template <typename Fn>
inline void walk_pixel(const PreparedView& view, const std::vector<std::uint32_t>& candidates,
                       double px, double py, const RenderSettings& settings, Fn&& fn) {
    double transmittance = 1.0;
    for (const std::uint32_t id : candidates) {
        const PreparedSplat& s = view.splats[id];
        const double dx = px - s.mean2d.x();
        const double dy = py - s.mean2d.y();
        // splats contribute only within their 3-sigma square footprint
        if (std::abs(dx) > s.radius || std::abs(dy) > s.radius) continue;
        const double power =
            -0.5 * (s.conic(0, 0) * dx * dx + 2.0 * s.conic(0, 1) * dx * dy +
                    s.conic(1, 1) * dy * dy);
        const double gauss = std::exp(power);
        double alpha_prime = s.alpha * gauss;
        bool clamped = false;
        if (alpha_prime > settings.alpha_clamp) {
            alpha_prime = settings.alpha_clamp;
            clamped = true;
        }
        fn(id, s, alpha_prime, gauss, transmittance, dx, dy, clamped);
        transmittance *= 1.0 - alpha_prime;
        if (transmittance < settings.min_transmittance) break;
    }
}

// Runs fn(tile_index) for every tile, splitting contiguous chunks across
// worker threads. Tiles write disjoint pixels, so scheduling cannot affect
// results.
void for_each_tile(int tile_count, const std::function<void(int)>& fn);

}  // namespace gsplat::detail
