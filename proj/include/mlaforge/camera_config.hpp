#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "mlaforge/image.hpp"

namespace mlaforge {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Full physical description of sensor, MLA, main lens, aperture and noise.
// Lengths carry their unit in the field name; angles are degrees.
struct CameraConfig {
    int sensor_px_x = 0;
    int sensor_px_y = 0;
    double pixel_pitch_um = 0.0;       // p
    int bit_depth = 10;
    double gamma_encode = 0.4;
    double ml_diameter_um = 0.0;       // d
    double ml_focal_um = 0.0;          // f
    double main_focal_mm = 0.0;        // F, also used as the image distance
    double grid_rotation_deg = 0.0;    // alpha
    double tilt_beta_deg = 0.0;        // beta, about y
    double tilt_gamma_deg = 0.0;       // gamma, about x
    double grid_offset_um_x = 0.0;
    double grid_offset_um_y = 0.0;
    double grid_noise_sigma_px = 0.0;  // sigma_g
    double aperture_distance_mm = 0.0; // a
    double aperture_radius_mm = std::numeric_limits<double>::infinity();  // R_a
    double image_noise_sigma = 0.0;    // sigma_n, normalized intensity
    BayerPattern bayer_pattern = BayerPattern::GRBG;
    uint64_t rng_seed = 1;

    // throws ConfigError with a description of the first violated invariant
    void validate() const;

    double sensor_width_um() const { return sensor_px_x * pixel_pitch_um; }
    double sensor_height_um() const { return sensor_px_y * pixel_pitch_um; }
    double main_focal_um() const { return main_focal_mm * 1000.0; }
    double aperture_distance_um() const { return aperture_distance_mm * 1000.0; }
    double aperture_radius_um() const { return aperture_radius_mm * 1000.0; }
    // f-number matched main lens aperture radius, F / (2N) with N = f/d
    double main_aperture_radius_um() const {
        return main_focal_um() * ml_diameter_um / (2.0 * ml_focal_um);
    }
    // sensor center in the pixel frame (pixel (0,0) center sits at 0.0)
    double center_px_x() const { return (sensor_px_x - 1) / 2.0; }
    double center_px_y() const { return (sensor_px_y - 1) / 2.0; }

    // Lytro Illum parameterization used throughout the evaluation
    static CameraConfig lytro_illum(double main_focal_mm = 30.0);

    std::string to_json() const;
    static CameraConfig from_json(const std::string& text);
    static CameraConfig load(const std::string& path);
    void save(const std::string& path) const;
};

}  // namespace mlaforge
