#pragma once

#include <vector>

#include "mlaforge/grid_model.hpp"
#include "mlaforge/image.hpp"

namespace mlaforge {

struct BaselineOptions {
    double expected_spacing_px = 15.0;  // sets disk radius and suppression
    double disk_radius_px = 0.0;        // 0: expected_spacing / 2
    int jobs = 0;
};

// Disk-kernel convolution followed by integer-pixel local maxima under
// non-maximum suppression of radius half the expected spacing.
std::vector<Vec2> disk_filter_maxima(const Image<float>& img,
                                     const BaselineOptions& opt = {});

// Iterated integer-index assignment and linear least squares for the
// lattice basis and offset. Throws on assignment collisions above 5 %.
GridModel fit_grid_ls(const std::vector<Vec2>& peaks, int sensor_px_x,
                      int sensor_px_y);

// full baseline: maxima detection + grid fit, tagged "baseline-dansereau"
GridModel estimate_grid_baseline(const Image<float>& raw_wi,
                                 const BaselineOptions& opt = {});

}  // namespace mlaforge
