#pragma once

#include <cmath>

#include "mlaforge/geometry.hpp"
#include "mlaforge/image.hpp"

namespace mlaforge::testing {

// Noiseless binary hexagonal disc image: discs of radius
// disc_factor * spacing/2 on the hex lattice (row pitch sqrt(3)/2 d,
// odd rows shifted d/2), rotated about the image center and translated.
inline Image<float> hex_disc_image(int width, int height, double spacing,
                                   double alpha_deg, Vec2 offset = {0, 0},
                                   double disc_factor = 0.8) {
    Image<float> img(width, height, 0.0f);
    const double a = deg_to_rad(alpha_deg);
    const double r = disc_factor * spacing / 2.0;
    const double dy = std::sqrt(3.0) * spacing / 2.0;
    const Vec2 center{(width - 1) / 2.0, (height - 1) / 2.0};

    const double reach = std::hypot(width, height) / 2.0 + 2 * spacing;
    const int j_lim = static_cast<int>(std::ceil(reach / dy));
    const int i_lim = static_cast<int>(std::ceil(reach / spacing));
    for (int j = -j_lim; j <= j_lim; ++j) {
        const double shift = (std::abs(j) % 2 == 1) ? 0.5 : 0.0;
        for (int i = -i_lim; i <= i_lim; ++i) {
            const Vec2 local{(i + shift) * spacing, j * dy};
            const Vec2 c = center + offset + rotate(local, a);
            const int x0 = std::max(0, static_cast<int>(c.x - r) - 1);
            const int x1 = std::min(width - 1, static_cast<int>(c.x + r) + 1);
            const int y0 = std::max(0, static_cast<int>(c.y - r) - 1);
            const int y1 = std::min(height - 1, static_cast<int>(c.y + r) + 1);
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const double ddx = x - c.x, ddy = y - c.y;
                    const double rr = std::sqrt(ddx * ddx + ddy * ddy);
                    if (rr <= r - 0.71) {
                        img.at(x, y) = 1.0f;
                    } else if (rr < r + 0.71) {
                        // area coverage of the disc edge, 4x4 samples
                        int hits = 0;
                        for (int sy = 0; sy < 4; ++sy)
                            for (int sx = 0; sx < 4; ++sx) {
                                const double px = ddx + (sx + 0.5) / 4.0 - 0.5;
                                const double py = ddy + (sy + 0.5) / 4.0 - 0.5;
                                if (px * px + py * py <= r * r) ++hits;
                            }
                        img.at(x, y) = std::max(img.at(x, y),
                                                static_cast<float>(hits) / 16.0f);
                    }
                }
        }
    }
    return img;
}

}  // namespace mlaforge::testing
