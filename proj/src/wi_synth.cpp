#include "mlaforge/wi_synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mlaforge/parallel.hpp"
#include "mlaforge/rng.hpp"

namespace mlaforge {

namespace {

// nearest-lens lookup on a uniform grid over perspective centers
class LensLookup {
public:
    LensLookup(const MlaGroundTruth& gt, const CameraConfig& config)
        : cell_px_(gt.projected.spacing_px > 0 ? gt.projected.spacing_px
                                               : config.ml_diameter_um /
                                                     config.pixel_pitch_um) {
        min_x_ = min_y_ = 1e300;
        double max_x = -1e300, max_y = -1e300;
        for (const auto& l : gt.lenses) {
            min_x_ = std::min(min_x_, l.perspective_px.x);
            min_y_ = std::min(min_y_, l.perspective_px.y);
            max_x = std::max(max_x, l.perspective_px.x);
            max_y = std::max(max_y, l.perspective_px.y);
        }
        nx_ = static_cast<int>((max_x - min_x_) / cell_px_) + 2;
        ny_ = static_cast<int>((max_y - min_y_) / cell_px_) + 2;
        cells_.resize(static_cast<size_t>(nx_) * ny_);
        for (size_t k = 0; k < gt.lenses.size(); ++k) {
            const auto& p = gt.lenses[k].perspective_px;
            cells_[cell_index(p.x, p.y)].push_back(static_cast<int>(k));
        }
        lenses_ = &gt.lenses;
    }

    // index of the lens with the nearest perspective center, or -1
    int nearest(double x, double y) const {
        const int cx = static_cast<int>((x - min_x_) / cell_px_);
        const int cy = static_cast<int>((y - min_y_) / cell_px_);
        int best = -1;
        double best_d2 = 4.0 * cell_px_ * cell_px_;
        for (int dy = -1; dy <= 1; ++dy) {
            const int yy = cy + dy;
            if (yy < 0 || yy >= ny_) continue;
            for (int dx = -1; dx <= 1; ++dx) {
                const int xx = cx + dx;
                if (xx < 0 || xx >= nx_) continue;
                for (int k : cells_[static_cast<size_t>(yy) * nx_ + xx]) {
                    const auto& p = (*lenses_)[k].perspective_px;
                    const double d2 = (p.x - x) * (p.x - x) + (p.y - y) * (p.y - y);
                    if (d2 < best_d2) {
                        best_d2 = d2;
                        best = k;
                    }
                }
            }
        }
        return best;
    }

private:
    size_t cell_index(double x, double y) const {
        int cx = std::clamp(static_cast<int>((x - min_x_) / cell_px_), 0, nx_ - 1);
        int cy = std::clamp(static_cast<int>((y - min_y_) / cell_px_), 0, ny_ - 1);
        return static_cast<size_t>(cy) * nx_ + cx;
    }

    double cell_px_;
    double min_x_ = 0, min_y_ = 0;
    int nx_ = 0, ny_ = 0;
    std::vector<std::vector<int>> cells_;
    const std::vector<LensRecord>* lenses_ = nullptr;
};

void stratification(int rays, int& nx, int& ny) {
    nx = static_cast<int>(std::sqrt(static_cast<double>(rays)));
    while (nx > 1 && rays % nx != 0) --nx;
    ny = rays / nx;
}

}  // namespace

RenderResult render_white_image(const CameraConfig& config,
                                const SynthesisParams& params) {
    config.validate();
    if (params.rays_per_pixel < 1)
        throw std::invalid_argument("rays_per_pixel must be >= 1");

    RenderResult result;
    result.truth = build_ground_truth(config);
    const MlaGroundTruth& gt = result.truth;
    const LensLookup lookup(gt, config);

    const int W = config.sensor_px_x;
    const int H = config.sensor_px_y;
    const double p = config.pixel_pitch_um;
    const double cx = config.center_px_x();
    const double cy = config.center_px_y();
    const double f_ml = config.ml_focal_um;
    const double F = config.main_focal_um();
    const double sensor_z = -F - f_ml;
    const double r_ml = config.ml_diameter_um / 2.0;
    const double r_main2 = config.main_aperture_radius_um() *
                           config.main_aperture_radius_um();
    const bool has_stop = std::isfinite(config.aperture_radius_mm);
    const double a_um = config.aperture_distance_um();
    const double r_stop2 = has_stop
                               ? config.aperture_radius_um() * config.aperture_radius_um()
                               : 0.0;

    // microlens disc basis in the tilted MLA plane
    const Mat3 R = mla_rotation(config);
    const Vec3 e1{R.m[0][0], R.m[1][0], R.m[2][0]};
    const Vec3 e2{R.m[0][1], R.m[1][1], R.m[2][1]};

    int sx_n = 0, sy_n = 0;
    stratification(params.rays_per_pixel, sx_n, sy_n);
    const int rays = params.rays_per_pixel;
    const uint64_t seed =
        params.rng_seed != 0 ? params.rng_seed : config.rng_seed;

    result.image.samples = Image<float>(W, H);
    Image<float>& img = result.image.samples;

    parallel_for(
        0, H,
        [&](int64_t yi) {
            const int y = static_cast<int>(yi);
            float* row = img.row(y);
            const double qy = (y - cy) * p;
            for (int x = 0; x < W; ++x) {
                const int li = lookup.nearest(x, y);
                if (li < 0) {
                    row[x] = 0.0f;
                    continue;
                }
                const LensRecord& lens = gt.lenses[li];
                const Vec3& c = lens.center_um;
                const double qx = (x - cx) * p;

                RandomStream rng(seed, static_cast<uint64_t>(yi) * W + x);
                double weight_sum = 0.0;
                for (int ry = 0; ry < sy_n; ++ry) {
                    for (int rx = 0; rx < sx_n; ++rx) {
                        const double u1 = (rx + rng.next_double()) / sx_n;
                        const double u2 = (ry + rng.next_double()) / sy_n;
                        const double rr = r_ml * std::sqrt(u1);
                        const double th = 2.0 * kPi * u2;
                        const double du = rr * std::cos(th);
                        const double dv = rr * std::sin(th);
                        const Vec3 m{c.x + du * e1.x + dv * e2.x,
                                     c.y + du * e1.y + dv * e2.y,
                                     c.z + du * e1.z + dv * e2.z};

                        // sensor -> microlens leg
                        const double dz_in = m.z - sensor_z;
                        const double six = (m.x - qx) / dz_in;
                        const double siy = (m.y - qy) / dz_in;
                        // paraxial refraction at the microlens
                        const double sox = six - (m.x - c.x) / f_ml;
                        const double soy = siy - (m.y - c.y) / f_ml;
                        // to the main lens plane z = 0
                        const double hx = m.x - sox * m.z;
                        const double hy = m.y - soy * m.z;
                        if (hx * hx + hy * hy > r_main2) continue;
                        if (has_stop) {
                            const double s2x = sox - hx / F;
                            const double s2y = soy - hy / F;
                            const double px_ = hx + s2x * a_um;
                            const double py_ = hy + s2y * a_um;
                            if (px_ * px_ + py_ * py_ > r_stop2) continue;
                        }
                        const double t = 1.0 + sox * sox + soy * soy;
                        weight_sum += 1.0 / (t * t);  // cos^4 of the ray angle
                    }
                }
                row[x] = static_cast<float>(weight_sum / rays);
            }
        },
        params.jobs, 8);

    // normalize the global maximum to 1
    float max_v = 0.0f;
    for (int y = 0; y < H; ++y) {
        const float* row = img.row(y);
        for (int x = 0; x < W; ++x) max_v = std::max(max_v, row[x]);
    }
    if (max_v > 0.0f) {
        const float inv = 1.0f / max_v;
        parallel_for(
            0, H,
            [&](int64_t y) {
                float* row = img.row(static_cast<int>(y));
                for (int x = 0; x < W; ++x) row[x] *= inv;
            },
            params.jobs, 64);
    }

    result.image.mosaiced = false;
    result.image.pattern = config.bayer_pattern;
    return result;
}

WhiteImage mosaic_bayer(const WhiteImage& img, BayerPattern pattern,
                        const std::array<double, 9>& color_response) {
    if (img.mosaiced)
        throw std::invalid_argument("mosaic_bayer: image already mosaiced");
    // white scene: per-site gain is the channel's total response
    float gain[3];
    for (int c = 0; c < 3; ++c)
        gain[c] = static_cast<float>(color_response[3 * c] +
                                     color_response[3 * c + 1] +
                                     color_response[3 * c + 2]);
    WhiteImage out;
    out.samples = img.samples;
    out.mosaiced = true;
    out.pattern = pattern;
    out.bit_depth = img.bit_depth;
    out.metadata_ref = img.metadata_ref;
    for (int y = 0; y < out.samples.height(); ++y) {
        float* row = out.samples.row(y);
        const float gr = gain[bayer_channel(pattern, 0, y)];
        const float gg = gain[bayer_channel(pattern, 1, y)];
        for (int x = 0; x < out.samples.width(); x += 2) row[x] *= gr;
        for (int x = 1; x < out.samples.width(); x += 2) row[x] *= gg;
    }
    return out;
}

WhiteImage add_image_noise(const WhiteImage& img, double sigma_n,
                           uint64_t seed) {
    if (sigma_n < 0)
        throw std::invalid_argument("add_image_noise: sigma_n must be >= 0");
    WhiteImage out = img;
    if (sigma_n == 0) return out;
    Image<float>& s = out.samples;
    const int W = s.width();
    for (int y = 0; y < s.height(); ++y) {
        float* row = s.row(y);
        for (int x = 0; x < W; ++x) {
            RandomStream rng(seed, 0x6e6f697365ULL,
                             static_cast<uint64_t>(y) * W + x);
            const double v = row[x] + sigma_n * rng.next_gaussian();
            row[x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return out;
}

Image<uint16_t> encode_and_quantize(const WhiteImage& img, double gamma,
                                    int bit_depth) {
    if (bit_depth < 8 || bit_depth > 16)
        throw std::invalid_argument("encode_and_quantize: bad bit depth");
    const double scale = (1 << bit_depth) - 1;
    Image<uint16_t> out(img.samples.width(), img.samples.height());
    for (int y = 0; y < out.height(); ++y) {
        const float* src = img.samples.row(y);
        uint16_t* dst = out.row(y);
        for (int x = 0; x < out.width(); ++x) {
            const double v = std::clamp(static_cast<double>(src[x]), 0.0, 1.0);
            dst[x] = static_cast<uint16_t>(
                std::lround(std::pow(v, gamma) * scale));
        }
    }
    return out;
}

Image<float> decode_raw(const Image<uint16_t>& raw, double gamma,
                        int bit_depth) {
    const double scale = (1 << bit_depth) - 1;
    const double inv_gamma = 1.0 / gamma;
    Image<float> out(raw.width(), raw.height());
    for (int y = 0; y < out.height(); ++y) {
        const uint16_t* src = raw.row(y);
        float* dst = out.row(y);
        for (int x = 0; x < out.width(); ++x)
            dst[x] = static_cast<float>(std::pow(src[x] / scale, inv_gamma));
    }
    return out;
}

const char* aperture_level_name(ApertureLevel level) {
    switch (level) {
        case ApertureLevel::none: return "none";
        case ApertureLevel::mild: return "mild";
        case ApertureLevel::strong: return "strong";
    }
    return "none";
}

ApertureLevel aperture_level_from_name(const std::string& name) {
    if (name == "none") return ApertureLevel::none;
    if (name == "mild") return ApertureLevel::mild;
    if (name == "strong") return ApertureLevel::strong;
    throw std::invalid_argument("unknown aperture level: " + name);
}

namespace {

// area of the intersection of two discs
double disc_overlap_area(double r1, double r2, double dist) {
    if (dist >= r1 + r2) return 0.0;
    if (dist <= std::abs(r1 - r2)) {
        const double r = std::min(r1, r2);
        return kPi * r * r;
    }
    const double d2 = dist * dist, r1sq = r1 * r1, r2sq = r2 * r2;
    const double a1 = std::acos((d2 + r1sq - r2sq) / (2.0 * dist * r1));
    const double a2 = std::acos((d2 + r2sq - r1sq) / (2.0 * dist * r2));
    return r1sq * (a1 - std::sin(2 * a1) / 2) + r2sq * (a2 - std::sin(2 * a2) / 2);
}

}  // namespace

Image<float> modulate_by_lens(const Image<float>& white,
                              const MlaGroundTruth& truth,
                              const CameraConfig& config,
                              const std::function<float(int, int)>& scene) {
    const LensLookup lookup(truth, config);
    Image<float> out(white.width(), white.height());
    for (int y = 0; y < white.height(); ++y) {
        const float* src = white.row(y);
        float* dst = out.row(y);
        for (int x = 0; x < white.width(); ++x) {
            const int li = lookup.nearest(x, y);
            dst[x] = li < 0 ? 0.0f
                            : src[x] * scene(truth.lenses[li].index.i,
                                             truth.lenses[li].index.j);
        }
    }
    return out;
}

double solve_aperture_radius_mm(const CameraConfig& config, ApertureLevel level) {
    if (level == ApertureLevel::none)
        return std::numeric_limits<double>::infinity();
    const double target = level == ApertureLevel::mild ? 0.5 : 0.85;

    // outermost microlens: the MLA corner
    const auto [w, h] = mla_extent(config);
    const Vec2 c{w / 2.0 + config.grid_offset_um_x,
                 h / 2.0 + config.grid_offset_um_y};
    const double F = config.main_focal_um();
    const double f = config.ml_focal_um;
    const double a = config.aperture_distance_um();
    const double lambda = (F + f) / F;
    const double r_img = config.ml_diameter_um / 2.0;

    // on the sensor plane, the stop clips the lens image to a disc of
    // radius R_a * f / F centered at c * (lambda - a f / F^2)
    const Vec2 img_center = c * lambda;
    const Vec2 clip_center = c * (lambda - a * f / (F * F));
    const double dist = (img_center - clip_center).norm();

    auto blocked = [&](double ra_um) {
        const double r_clip = ra_um * f / F;
        const double kept =
            disc_overlap_area(r_img, r_clip, dist) / (kPi * r_img * r_img);
        return 1.0 - kept;
    };

    double lo = 1.0, hi = 1.0;
    while (blocked(hi) > target) hi *= 2.0;
    while (blocked(lo) < target) lo /= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (blocked(mid) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi) / 1000.0;
}

}  // namespace mlaforge
