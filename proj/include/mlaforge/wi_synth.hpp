#pragma once

#include <array>
#include <functional>
#include <string>

#include "mlaforge/camera_model.hpp"
#include "mlaforge/image.hpp"

namespace mlaforge {

struct SynthesisParams {
    int rays_per_pixel = 128;
    uint64_t rng_seed = 0;  // 0: use config.rng_seed
    // per-channel gains applied at mosaic time; rows are the sensor's
    // R/G/B responses to a white scene
    std::array<double, 9> color_response = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    int jobs = 0;  // 0: hardware concurrency
};

struct WhiteImage {
    Image<float> samples;  // normalized intensity
    bool mosaiced = false;
    BayerPattern pattern = BayerPattern::GRBG;
    int bit_depth = 0;  // 0 while linear float
    std::string metadata_ref;
};

struct RenderResult {
    WhiteImage image;  // linear, unmosaiced, max normalized to 1
    MlaGroundTruth truth;
};

// Ray-traced white image: per pixel, rays are drawn from the pixel
// center through stratified samples of the owning microlens aperture,
// refracted at the microlens and the main lens, and culled at the main
// lens aperture (f-number matched) and the object-side aperture. Each
// surviving ray is weighted by the cos^4 of its angle on the
// microlens-to-main-lens leg.
RenderResult render_white_image(const CameraConfig& config,
                                const SynthesisParams& params);

WhiteImage mosaic_bayer(const WhiteImage& img, BayerPattern pattern,
                        const std::array<double, 9>& color_response);

WhiteImage add_image_noise(const WhiteImage& img, double sigma_n,
                           uint64_t seed);

Image<uint16_t> encode_and_quantize(const WhiteImage& img, double gamma,
                                    int bit_depth);

// inverse of encode_and_quantize up to quantization
Image<float> decode_raw(const Image<uint16_t>& raw, double gamma,
                        int bit_depth);

enum class ApertureLevel { none, mild, strong };
const char* aperture_level_name(ApertureLevel level);
ApertureLevel aperture_level_from_name(const std::string& name);

// Object-side aperture radius (mm) such that the image of the outermost
// (corner) microlens loses the requested fraction of its area:
// none = unvignetted, mild = 50 %, strong = 85 %. Solved by bisection on
// the two-disc overlap.
double solve_aperture_radius_mm(const CameraConfig& config, ApertureLevel level);

// Synthetic lenslet image: scales every pixel of a rendered white image
// by a per-lens scene value (a focal-plane Lambertian scene).
Image<float> modulate_by_lens(const Image<float>& white,
                              const MlaGroundTruth& truth,
                              const CameraConfig& config,
                              const std::function<float(int, int)>& scene);

}  // namespace mlaforge
