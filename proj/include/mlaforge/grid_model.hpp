#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mlaforge/geometry.hpp"

namespace mlaforge {

struct EstimationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Estimated regular hexagonal grid in the sensor pixel frame. The
// canonical orientation convention: rotation_deg is the angle of the
// lattice row vector nearest the x-axis, folded into [-30, 30) degrees;
// offset_px shifts the lattice relative to the image center.
struct GridModel {
    double spacing_px = 0.0;   // d-hat
    double rotation_deg = 0.0; // alpha-hat
    Vec2 offset_px;            // o-hat
    Vec2 basis1_px;            // b-hat_1, canonical row vector
    Vec2 basis2_px;            // b-hat_2
    std::string method;        // "proposed" | "baseline-dansereau" | ...
    // hyperparameters and diagnostics of the Fourier path
    double hp_window_sigma = 0.0;
    double hp_gamma = 0.0;
    double hp_stretch_low = 0.0;
    double objective = 0.0;
    double runtime_s = 0.0;

    // canonical basis vectors derived from (spacing, rotation)
    void set_canonical_basis();

    std::string to_json() const;
    static GridModel from_json(const std::string& text);
    static GridModel load(const std::string& path);
    void save(const std::string& path) const;
};

struct GridPoint {
    int i = 0;
    int j = 0;
    Vec2 px;
};

// All lattice points of the grid model within the sensor plus a
// one-microlens margin, indexed by (i, j). The lattice is the hex grid
// with spacing d (row pitch sqrt(3) d / 2, odd rows shifted by d/2),
// rotated about the image center and translated by the offset.
std::vector<GridPoint> build_grid(const GridModel& grid, int sensor_px_x,
                                  int sensor_px_y);

// single lattice point (same construction as build_grid)
Vec2 grid_point(const GridModel& grid, int i, int j, double center_x,
                double center_y);

// Canonical orientation from any hex lattice basis pair: returns the
// shortest lattice vector whose angle folds into [-30, 30) degrees (the
// row vector) and its +60 degree companion.
std::pair<Vec2, Vec2> canonical_hex_basis(const Vec2& b1, const Vec2& b2);

}  // namespace mlaforge
