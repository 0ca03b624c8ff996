#pragma once

#include <string>
#include <vector>

#include "mlaforge/camera_config.hpp"
#include "mlaforge/geometry.hpp"

namespace mlaforge {

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LensIndex {
    int i = 0;
    int j = 0;
};

struct LensRecord {
    LensIndex index;
    Vec3 ideal_center_um;   // pre-rotation MLA frame, noise included
    Vec3 center_um;         // after rotation/tilt and shift to z = -F
    Vec2 perspective_px;    // projection through the exit pupil center
    Vec2 orthogonal_px;     // z dropped to the sensor plane
    double lambda = 1.0;
};

// Regular-grid parameters in the sensor pixel frame: spacing of the
// projected lattice, its rotation, and its offset relative to the
// sensor center.
struct GridParams {
    double spacing_px = 0.0;
    double rotation_deg = 0.0;
    Vec2 offset_px;
};

struct MlaGroundTruth {
    std::vector<LensRecord> lenses;
    // MLA-frame parameters
    double spacing_um = 0.0;
    double rotation_deg = 0.0;
    double beta_deg = 0.0;
    double gamma_deg = 0.0;
    Vec2 offset_um;
    double mla_width_um = 0.0;
    double mla_height_um = 0.0;
    // regular-grid view of the perspectively projected lattice (exact for
    // zero tilt, where lambda is constant)
    GridParams projected;
};

struct AccuracyBounds {
    double delta_f_um = 0.0;        // microlens focal length tolerance
    double delta_delta_deg = 0.0;   // common tilt tolerance
    double delta_dx_max_px = 0.0;   // local spacing distortion at the corner
    double delta_dy_max_px = 0.0;
    double spacing_bound_px = 0.0;  // grid spacing estimation requirement
    double rotation_bound_deg = 0.0;
    double offset_bound_px = 0.5;
    int i_max = 0;
    int j_max = 0;
    int l_max = 0;

    std::string to_json() const;
};

// Combined MLA orientation, R_x(gamma) * R_y(beta) * R_z(alpha).
Mat3 mla_rotation(const CameraConfig& config);

// MLA size (w, h) such that the rotated and tilted array covers the full
// sensor. Throws ModelError for degenerate orientations.
std::pair<double, double> mla_extent(const CameraConfig& config);

// Ideal (pre-rotation) hexagonal lattice covering the MLA extent,
// centered at the grid offset, with per-lens Gaussian grid noise drawn
// deterministically from config.rng_seed.
struct IdealCenter {
    LensIndex index;
    Vec3 center_um;
};
std::vector<IdealCenter> generate_ideal_centers(const CameraConfig& config);

// Applies rotation, tilt and the shift to z = -F.
std::vector<Vec3> transform_centers(const std::vector<IdealCenter>& ideal,
                                    const CameraConfig& config);

// Perspective projection through the exit pupil center onto the sensor
// plane z = -F - f. Returns pixel coordinates and the scaling factor.
struct ProjectedCenter {
    Vec2 px;
    double lambda = 1.0;
};
ProjectedCenter project_perspective(const Vec3& center_um,
                                    const CameraConfig& config);

Vec2 project_orthogonal(const Vec3& center_um, const CameraConfig& config);

// Full ground-truth table. Keeps every lens whose perspective center
// falls within the sensor plus a one-microlens margin.
MlaGroundTruth build_ground_truth(const CameraConfig& config);

AccuracyBounds accuracy_bounds(const CameraConfig& config);

// Pixel frame helpers (pixel (0,0) center at 0.0, sensor center at
// ((s_x - 1)/2, (s_y - 1)/2)).
inline Vec2 um_to_px(const CameraConfig& c, const Vec2& um) {
    return {um.x / c.pixel_pitch_um + c.center_px_x(),
            um.y / c.pixel_pitch_um + c.center_px_y()};
}

// Serialization: JSON header with the grid parameters and a config echo,
// CSV table `i,j,cx_px,cy_px,cox_px,coy_px,lambda` at 9 significant digits.
void save_ground_truth(const MlaGroundTruth& gt, const CameraConfig& config,
                       const std::string& json_path, const std::string& csv_path);
MlaGroundTruth load_ground_truth(const std::string& json_path);

}  // namespace mlaforge
