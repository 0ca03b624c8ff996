#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mlaforge/camera_model.hpp"
#include "mlaforge/grid_model.hpp"

namespace mlaforge {

struct QualityReport {
    std::string method;
    std::string wi_id;
    double q_g_px = 0.0;
    double q_s_px = 0.0;
    double q_r_deg = 0.0;
    double offset_err_px = 0.0;
    double runtime_s = 0.0;
    int matched = 0;
    int rejected = 0;
    // requirement gate against the accuracy bounds
    bool spacing_ok = false;
    bool rotation_ok = false;
    bool offset_ok = false;
    // sweep covariates
    double F_mm = 0.0;
    double sigma_g = 0.0;
    double sigma_n = 0.0;
    std::string aperture;
};

// RMS distance between estimated grid points and the nearest true
// perspective centers; pairs farther than half a spacing are rejected.
// Throws if more than 10 % of the points stay unmatched.
std::pair<double, int> q_g(const std::vector<GridPoint>& grid_points,
                           const MlaGroundTruth& truth, double spacing_px);

// Expected RMS of a chi-distributed ideal estimate, sigma_g sqrt(2/M)
// Gamma((M+1)/2) / Gamma(M/2), evaluated via lgamma.
double q_g_ideal_expectation(double sigma_g, int64_t M);

// |d_hat - d| and |alpha_hat - alpha| with the rotation difference folded
// by the 60-degree lattice symmetry into [0, 30].
std::pair<double, double> q_s_q_r(const GridModel& grid,
                                  const MlaGroundTruth& truth);

// offset error modulo lattice translations
double offset_error(const GridModel& grid, const MlaGroundTruth& truth);

QualityReport evaluate_grid(const GridModel& grid, const MlaGroundTruth& truth,
                            const AccuracyBounds& bounds, int sensor_px_x,
                            int sensor_px_y);

struct CorpusGroupStats {
    std::string method;
    double F_mm = 0.0;
    double sigma_g = 0.0;
    double sigma_n = 0.0;
    std::string aperture;
    int count = 0;
    double qg_mean = 0.0, qg_median = 0.0;
    double qs_mean = 0.0, qs_median = 0.0;
    double qr_mean = 0.0, qr_median = 0.0;
    double offset_mean = 0.0;
    double runtime_mean = 0.0;
};

struct CorpusSummary {
    std::vector<CorpusGroupStats> groups;
    struct Correlation {
        std::string method;
        std::optional<double> r_F, r_sigma_g, r_sigma_n, r_vignetting;
    };
    std::vector<Correlation> correlations;

    std::string to_csv() const;
    std::string to_markdown() const;
};

// Pearson correlation; nullopt when either variable is constant.
std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y);

CorpusSummary corpus_stats(const std::vector<QualityReport>& reports);

}  // namespace mlaforge
