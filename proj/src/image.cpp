#include "gsplat/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gsplat {

Image bilinear_resize(const Image& src, int out_height, int out_width) {
    if (src.empty()) throw std::invalid_argument("bilinear_resize: empty image");
    if (out_height <= 0 || out_width <= 0)
        throw std::invalid_argument("bilinear_resize: non-positive output size");

    Image dst(out_height, out_width, src.channels);
    const double sy = static_cast<double>(src.height) / out_height;
    const double sx = static_cast<double>(src.width) / out_width;

    for (int y = 0; y < out_height; ++y) {
        // half-pixel centers, clamped to the source border
        const double fy = (y + 0.5) * sy - 0.5;
        const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, src.height - 1);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double wy = std::clamp(fy - y0, 0.0, 1.0);
        for (int x = 0; x < out_width; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, src.width - 1);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double wx = std::clamp(fx - x0, 0.0, 1.0);
            for (int c = 0; c < src.channels; ++c) {
                const double top = (1.0 - wx) * src.at(y0, x0, c) + wx * src.at(y0, x1, c);
                const double bot = (1.0 - wx) * src.at(y1, x0, c) + wx * src.at(y1, x1, c);
                dst.at(y, x, c) = (1.0 - wy) * top + wy * bot;
            }
        }
    }
    return dst;
}

}  // namespace gsplat
