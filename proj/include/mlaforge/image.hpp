#pragma once

#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mlaforge {

// Simple row-major 2D raster.
template <typename T>
class Image {
public:
    Image() = default;
    Image(int width, int height, T fill = T{})
        : width_(width), height_(height),
          data_(static_cast<size_t>(width) * height, fill) {
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("Image: non-positive dimensions");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& at(int x, int y) {
        assert(in_bounds(x, y));
        return data_[static_cast<size_t>(y) * width_ + x];
    }
    const T& at(int x, int y) const {
        assert(in_bounds(x, y));
        return data_[static_cast<size_t>(y) * width_ + x];
    }

    T* row(int y) { return data_.data() + static_cast<size_t>(y) * width_; }
    const T* row(int y) const {
        return data_.data() + static_cast<size_t>(y) * width_;
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width_ && y >= 0 && y < height_;
    }

    // bilinear sample; clamps to the border
    double sample_bilinear(double x, double y) const {
        if (x < 0) x = 0;
        if (y < 0) y = 0;
        if (x > width_ - 1) x = width_ - 1;
        if (y > height_ - 1) y = height_ - 1;
        const int x0 = static_cast<int>(x);
        const int y0 = static_cast<int>(y);
        const int x1 = x0 + 1 < width_ ? x0 + 1 : x0;
        const int y1 = y0 + 1 < height_ ? y0 + 1 : y0;
        const double fx = x - x0;
        const double fy = y - y0;
        const double v00 = at(x0, y0), v10 = at(x1, y0);
        const double v01 = at(x0, y1), v11 = at(x1, y1);
        return (1 - fy) * ((1 - fx) * v00 + fx * v10) +
               fy * ((1 - fx) * v01 + fx * v11);
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

enum class BayerPattern { RGGB, GRBG, GBRG, BGGR };

// channel index at (x, y): 0 = R, 1 = G, 2 = B
inline int bayer_channel(BayerPattern p, int x, int y) {
    const int xo = x & 1, yo = y & 1;
    switch (p) {
        case BayerPattern::RGGB: return yo == 0 ? (xo == 0 ? 0 : 1) : (xo == 0 ? 1 : 2);
        case BayerPattern::GRBG: return yo == 0 ? (xo == 0 ? 1 : 0) : (xo == 0 ? 2 : 1);
        case BayerPattern::GBRG: return yo == 0 ? (xo == 0 ? 1 : 2) : (xo == 0 ? 0 : 1);
        case BayerPattern::BGGR: return yo == 0 ? (xo == 0 ? 2 : 1) : (xo == 0 ? 1 : 0);
    }
    return 1;
}

const char* bayer_pattern_name(BayerPattern p);
BayerPattern bayer_pattern_from_name(const std::string& name);

}  // namespace mlaforge
