#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace gsplat {

// Dense H x W x C buffer of doubles, row-major with interleaved channels.
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    Image() = default;
    Image(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {}

    bool empty() const { return data.empty(); }
    std::size_t size() const { return data.size(); }

    double& at(int y, int x, int c) {
        assert(y >= 0 && y < height && x >= 0 && x < width && c >= 0 && c < channels);
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c) const {
        assert(y >= 0 && y < height && x >= 0 && x < width && c >= 0 && c < channels);
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    bool same_shape(const Image& other) const {
        return height == other.height && width == other.width && channels == other.channels;
    }
};

// Bilinear resize, channel-wise. Sample positions use the half-pixel-center
// convention; edge samples clamp to the border.
Image bilinear_resize(const Image& src, int out_height, int out_width);

}  // namespace gsplat
