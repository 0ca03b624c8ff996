#pragma once

#include <string>
#include <vector>

#include "mlaforge/wi_synth.hpp"

namespace mlaforge {

// Cartesian sweep over focal lengths, aperture levels, grid variants and
// image noise levels.
struct SweepSpec {
    CameraConfig base;                 // template; F/aperture/etc. overridden
    std::vector<double> focal_lengths_mm = {30.0, 47.0, 117.0, 249.0};
    std::vector<ApertureLevel> apertures = {ApertureLevel::none,
                                            ApertureLevel::mild,
                                            ApertureLevel::strong};
    int variants = 20;                 // random (rotation, offset) draws
    double rotation_range_deg = 0.3;   // alpha uniform in +-range
    std::vector<double> noise_levels = {0.0, 0.002, 0.005, 0.01};
    int rays_per_pixel = 128;
    uint64_t seed = 7;
    int jobs = 0;

    std::string to_json() const;
    static SweepSpec from_json(const std::string& text);
    static SweepSpec load(const std::string& path);
};

struct CorpusEntry {
    std::string id;
    double F_mm = 0.0;
    std::string aperture;
    double alpha_deg = 0.0;
    double offset_um_x = 0.0, offset_um_y = 0.0;
    double sigma_n = 0.0;
    std::string img_path;
    std::string gt_path;
    bool failed = false;
};

struct CorpusManifest {
    std::vector<CorpusEntry> entries;

    void save_csv(const std::string& path) const;
    static CorpusManifest load_csv(const std::string& path);
};

// Renders the sweep into out_dir: per entry a 16-bit PGM raw mosaiced
// image, a ground-truth JSON+CSV sidecar, and a manifest row. Noise
// variants share the rendered base image.
CorpusManifest generate_corpus(const SweepSpec& sweep,
                               const std::string& out_dir);

}  // namespace mlaforge
