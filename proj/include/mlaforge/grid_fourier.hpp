#pragma once

#include <array>
#include <optional>
#include <vector>

#include "mlaforge/fft.hpp"
#include "mlaforge/grid_model.hpp"
#include "mlaforge/image.hpp"

namespace mlaforge {

struct Hyperparams {
    double window_sigma = 100.0;  // Gaussian window std, px
    double gamma = 0.05;          // compression exponent, << 1
    double stretch_low = 0.3;     // q, lower bound of the stretched range
};

// fixed upper bound of the contrast stretch
inline constexpr double kStretchHigh = 0.99;

struct FrequencyPeaks {
    // per direction: centroid of the n-th harmonic, n = 1..N (cycles/px)
    std::array<std::vector<Vec2>, 2> harmonics;
    std::array<double, 2> spread = {0.0, 0.0};  // s-hat_i
};

struct FourierOptions {
    double expected_d_min_px = 10.0;
    double expected_d_max_px = 30.0;
    int n_harmonics = 5;
    int pad_factor = 2;         // final measurement
    int search_pad_factor = 1;  // during hyperparameter search
    int fft_threads = 0;        // 0: hardware concurrency
    int jobs = 0;               // parallel objective evaluations

    // differential evolution (rand/1/bin)
    int de_population = 15;
    double de_weight = 0.7;
    double de_crossover = 0.9;
    int de_max_generations = 60;
    double de_tol = 1e-9;
    int de_patience = 10;
    uint64_t de_seed = 0x5eed;

    // hyperparameter search box
    double sigma_min = 30.0, sigma_max = 600.0;
    double gamma_min = 0.01, gamma_max = 0.5;
    double q_min = 0.05, q_max = 0.9;
};

// Contrast stretch [q, 0.99] -> [0, 1] with clipping, then gamma
// compression. Input must be normalized to [0, 1].
Image<float> preprocess(const Image<float>& img, const Hyperparams& hp);

// Rotationally symmetric Gaussian window (std sigma) and radial Hann
// window of radius min(w, h)/2, both about the image center. Returns the
// windowed image cropped to the Hann support square (everything outside
// is zero).
Image<float> apply_windows(const Image<float>& img, double sigma);

// Harmonic peak detection: locates the two hexagonal frequency basis
// directions inside the annulus implied by [d_min, d_max] and follows
// their first n multiples, each refined by an intensity-weighted cluster
// centroid.
FrequencyPeaks detect_peaks(const Spectrum& spec, double d_min_px,
                            double d_max_px, int n_harmonics);

// Spatial basis from the two frequency basis vectors (2x2 inversion).
std::pair<Vec2, Vec2> freq_to_spatial(const Vec2& f1, const Vec2& f2);

// Sum over both directions of the sample standard deviation of the
// consecutive harmonic gaps. Requires >= 3 harmonics per direction.
double spread_objective(const FrequencyPeaks& peaks);

struct OptimizeResult {
    Hyperparams hp;
    FrequencyPeaks peaks;   // measured at the final pad factor
    double objective = 0.0;
    int evaluations = 0;
};

// Differential evolution over (sigma, gamma, q), minimizing the spread
// objective of the full pipeline. Deterministic for a fixed seed.
OptimizeResult optimize_hyperparams(const Image<float>& wi,
                                    const FourierOptions& opt);

struct SpacingRotation {
    double spacing_px = 0.0;
    double rotation_deg = 0.0;
    Vec2 basis1_px;
    Vec2 basis2_px;
    Hyperparams hp;
    double objective = 0.0;
    FrequencyPeaks peaks;
};

// Full spacing/rotation pipeline on a raw mosaiced white image
// (normalized to [0, 1]). Harmonics are fused by n-normalized averaging
// before the basis inversion.
SpacingRotation estimate_spacing_rotation(const Image<float>& wi,
                                          const FourierOptions& opt = {});

// convenience overload for quantized raw images
SpacingRotation estimate_spacing_rotation(const Image<uint16_t>& raw,
                                          int maxval,
                                          const FourierOptions& opt = {});

}  // namespace mlaforge
