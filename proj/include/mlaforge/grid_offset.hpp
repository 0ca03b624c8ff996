#pragma once

#include <vector>

#include "mlaforge/grid_fourier.hpp"
#include "mlaforge/grid_model.hpp"
#include "mlaforge/image.hpp"

namespace mlaforge {

struct DetectedCenter {
    int cluster_id = 0;
    Vec2 centroid_px;
    double mass = 0.0;
};

struct DetectedCenters {
    std::vector<DetectedCenter> centers;
    Vec2 region_center_px;
    double region_radius_px = 0.0;
};

// Radius (in microlenses) of the central region where perspective and
// orthogonal projections stay within half a pixel: the largest integer i
// with d * i * (lambda - 1) < 0.5, lambda ~ (F + f) / F. Capped so the
// disc stays inside the sensor.
int restrict_region_ml(double spacing_px, double main_focal_mm,
                       double ml_focal_um, int sensor_px_x, int sensor_px_y);

// 2x2 box sum of a raw mosaiced image to gray, half resolution. A pixel
// (x, y) of the result covers raw pixels (2x..2x+1, 2y..2y+1); its
// center sits at (2x + 0.5, 2y + 0.5) in raw coordinates.
Image<float> mosaic_to_gray_halfres(const Image<float>& raw);

// Microlens detection inside the disc region: Gaussian blur, local
// thresholding against the Gaussian-weighted mean (17 px blocks),
// 8-connected labeling, intensity centroids on the smoothed image.
// Clusters touching the region boundary are discarded.
DetectedCenters detect_centers(const Image<float>& img, Vec2 region_center_px,
                               double region_radius_px,
                               double smoothing_sigma = 1.0);

struct OffsetOptions {
    bool refine = true;           // weighted-median refinement pass
    bool median_per_axis = true;  // false: geometric (Weiszfeld) median
};

// Global grid offset from detected centers: nearest-grid-point matching,
// per-axis median, then a center-weighted median refinement.
Vec2 estimate_offset(double spacing_px, double rotation_deg,
                     const DetectedCenters& centers, int sensor_px_x,
                     int sensor_px_y, const OffsetOptions& opt = {});

// separable Gaussian blur, truncated at ~3 sigma
Image<float> gaussian_blur(const Image<float>& img, double sigma);

struct ProposedOptions {
    FourierOptions fourier;
    // rough optics knowledge for the restricted detection region
    double main_focal_mm = 30.0;
    double ml_focal_um = 40.0;
    OffsetOptions offset;
};

// Full proposed estimator: Fourier spacing/rotation, then spatial offset
// in the restricted central region.
GridModel estimate_grid_proposed(const Image<float>& raw_wi,
                                 const ProposedOptions& opt);

}  // namespace mlaforge
