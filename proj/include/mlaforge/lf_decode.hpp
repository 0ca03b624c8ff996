#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mlaforge/camera_model.hpp"
#include "mlaforge/grid_model.hpp"
#include "mlaforge/image.hpp"

namespace mlaforge {

struct DecodeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RgbImage {
    Image<float> r, g, b;
    int width() const { return r.width(); }
    int height() const { return r.height(); }
};

struct DecodeOptions {
    double black_level = 0.0;  // raw units, normalized scale
    double white_level = 1.0;
    int patch_size = 0;  // 0: ceil(spacing)
    enum class Resample { gradient_guided, bilinear } resample =
        Resample::gradient_guided;
    bool demosaic = true;  // Malvar; false keeps a gray channel triple
    int jobs = 0;
};

struct DevignetteResult {
    Image<float> image;
    Image<uint8_t> mask;  // 0 where the white image carries no signal
};

// v = clip((raw - black) / (white - black), 0, 1); white-image pixels
// below 1 % of the white maximum are masked invalid.
DevignetteResult devignette(const Image<float>& raw, const Image<float>& white,
                            double black_level, double white_level);

// Malvar-He-Cutler 5x5 linear demosaicing, edge-replicated borders.
RgbImage demosaic_malvar(const Image<float>& mosaic, BayerPattern pattern);

struct AlignedLattice {
    int k = 0;             // integer spacing after alignment
    Vec2 origin;           // lens (0,0) position in the aligned image
    double row_pitch = 0;  // sqrt(3) k / 2
    int width = 0, height = 0;
    int i_min = 0, i_max = 0, j_min = 0, j_max = 0;
};

struct AlignResult {
    RgbImage image;
    Image<uint8_t> mask;
    AlignedLattice lattice;
};

// One similarity resampling (rotation by -alpha, uniform scale k/d, integer
// translation of lens (0,0)) putting the grid on pixel centers with
// integer spacing k = ceil(d) and odd-row shift k/2.
AlignResult align_to_grid(const RgbImage& img, const Image<uint8_t>& mask,
                          const GridModel& grid, int jobs = 0);

// 4D light field, subaperture-major storage: [u][v][t][s][channel].
struct LightField {
    int patch = 0;  // P, angular dims are P x P
    int ns = 0, nt = 0;
    int channels = 3;
    int row0_shifted = 0;  // hex parity of spatial row t = 0
    std::vector<float> data;
    std::vector<uint8_t> mask;  // per (u, v, t, s)

    float& at(int u, int v, int s, int t, int ch) {
        return data[((((static_cast<size_t>(u) * patch + v) * nt + t) * ns + s) *
                         channels +
                     ch)];
    }
    float at(int u, int v, int s, int t, int ch) const {
        return data[((((static_cast<size_t>(u) * patch + v) * nt + t) * ns + s) *
                         channels +
                     ch)];
    }
    uint8_t mask_at(int u, int v, int s, int t) const {
        return mask[(((static_cast<size_t>(u) * patch + v) * nt + t) * ns + s)];
    }
};

LightField slice_to_4d(const AlignResult& aligned, int patch_size, int jobs = 0);

// Hexagonal to rectangular spatial resampling: the output width doubles
// (x-pitch k/2); missing samples are filled by gradient-guided 1D or
// bilinear interpolation.
LightField hex_to_rect(const LightField& lf,
                       DecodeOptions::Resample mode =
                           DecodeOptions::Resample::gradient_guided,
                       int jobs = 0);

struct DecodeProvenance {
    std::string grid_json;
    std::string options_json;
};

struct DecodeResult {
    LightField lf;
    DecodeProvenance provenance;
};

DecodeResult decode(const Image<float>& raw, const Image<float>& white,
                    BayerPattern pattern, const GridModel& grid,
                    const DecodeOptions& options);

// single subaperture sampled directly from the aligned image
struct Subaperture {
    Image<float> values;
    Image<uint8_t> valid;
};
Subaperture extract_subaperture(const Image<float>& aligned,
                                const Image<uint8_t>& mask,
                                const AlignedLattice& lattice, int u, int v,
                                int patch_size);

// Mean absolute difference between a peripheral and the central
// subaperture over jointly valid lenses; flat scenes decode to zero.
double ghosting_metric(const Image<float>& aligned, const Image<uint8_t>& mask,
                       const AlignedLattice& lattice, int patch_size,
                       int edge_offset = 0);

void save_light_field(const LightField& lf, const std::string& dir,
                      const DecodeProvenance& provenance);

}  // namespace mlaforge
