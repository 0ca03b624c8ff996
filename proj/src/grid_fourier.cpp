#include "mlaforge/grid_fourier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mlaforge/parallel.hpp"
#include "mlaforge/rng.hpp"

namespace mlaforge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// |f| of the hexagonal fundamental for spacing d: 2 / (sqrt(3) d)
double fundamental_freq(double d_px) { return 2.0 / (std::sqrt(3.0) * d_px); }

struct CropFrame {
    int x0 = 0, y0 = 0, size = 0;  // centered square, side min(w, h)
    double cx = 0, cy = 0;         // image center in source coordinates
};

CropFrame crop_frame(int width, int height) {
    CropFrame f;
    f.size = std::min(width, height);
    f.x0 = (width - f.size) / 2;
    f.y0 = (height - f.size) / 2;
    f.cx = (width - 1) / 2.0;
    f.cy = (height - 1) / 2.0;
    return f;
}

// radial window profile, sampled for linear interpolation
class WindowProfile {
public:
    WindowProfile(double sigma, double hann_radius)
        : step_(0.25), inv_step_(1.0 / step_) {
        const int n = static_cast<int>(hann_radius * inv_step_) + 2;
        values_.resize(n);
        for (int i = 0; i < n; ++i) {
            const double r = i * step_;
            if (r >= hann_radius) {
                values_[i] = 0.0f;
                continue;
            }
            const double g = std::exp(-r * r / (2.0 * sigma * sigma));
            const double h = std::cos(kPi * r / (2.0 * hann_radius));
            values_[i] = static_cast<float>(g * h * h);
        }
    }

    float operator()(double r) const {
        const double t = r * inv_step_;
        const int i = static_cast<int>(t);
        if (i + 1 >= static_cast<int>(values_.size())) return 0.0f;
        const float a = values_[i], b = values_[i + 1];
        return a + (b - a) * static_cast<float>(t - i);
    }

private:
    double step_, inv_step_;
    std::vector<float> values_;
};

float stretch_gamma(float v, const Hyperparams& hp) {
    const float lo = static_cast<float>(hp.stretch_low);
    const float span = static_cast<float>(kStretchHigh - hp.stretch_low);
    float t = (v - lo) / span;
    t = std::clamp(t, 0.0f, 1.0f);
    return std::pow(t, static_cast<float>(hp.gamma));
}

// Crop of the white image pre-quantized to 16-bit levels so that each
// hyperparameter candidate maps values through a 64k table instead of a
// per-pixel pow.
struct SearchImage {
    Image<uint16_t> levels;
    double center_x = 0.0;  // image center in crop coordinates
    double center_y = 0.0;
};

SearchImage make_search_image(const Image<float>& wi) {
    const CropFrame f = crop_frame(wi.width(), wi.height());
    SearchImage s;
    s.levels = Image<uint16_t>(f.size, f.size);
    s.center_x = f.cx - f.x0;
    s.center_y = f.cy - f.y0;
    for (int y = 0; y < f.size; ++y) {
        const float* src = wi.row(f.y0 + y) + f.x0;
        uint16_t* dst = s.levels.row(y);
        for (int x = 0; x < f.size; ++x) {
            const float v = std::clamp(src[x], 0.0f, 1.0f);
            dst[x] = static_cast<uint16_t>(std::lround(v * 65535.0f));
        }
    }
    return s;
}

// preprocess + windows fused over the crop square
Image<float> windowed_stretch(const SearchImage& s, const Hyperparams& hp,
                              int jobs) {
    const int size = s.levels.width();
    const double hann_radius = size / 2.0;
    const WindowProfile win(hp.window_sigma, hann_radius);

    std::vector<float> lut(65536);
    for (int i = 0; i < 65536; ++i)
        lut[i] = stretch_gamma(static_cast<float>(i) / 65535.0f, hp);

    Image<float> out(size, size);
    parallel_for(
        0, size,
        [&](int64_t yy) {
            const int y = static_cast<int>(yy);
            const uint16_t* src = s.levels.row(y);
            float* dst = out.row(y);
            const double dy = y - s.center_y;
            const double dy2 = dy * dy;
            for (int x = 0; x < size; ++x) {
                const double dx = x - s.center_x;
                const float w = win(std::sqrt(dx * dx + dy2));
                dst[x] = w == 0.0f ? 0.0f : lut[src[x]] * w;
            }
        },
        jobs, 32);
    return out;
}

}  // namespace

Image<float> preprocess(const Image<float>& img, const Hyperparams& hp) {
    if (!(hp.stretch_low > 0.0) || hp.stretch_low >= kStretchHigh)
        throw EstimationError("preprocess: stretch_low out of range");
    if (!(hp.gamma > 0.0) || hp.gamma > 1.0)
        throw EstimationError("preprocess: gamma out of range");
    Image<float> out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        const float* src = img.row(y);
        float* dst = out.row(y);
        for (int x = 0; x < img.width(); ++x) dst[x] = stretch_gamma(src[x], hp);
    }
    return out;
}

Image<float> apply_windows(const Image<float>& img, double sigma) {
    if (!(sigma > 0)) throw EstimationError("apply_windows: sigma must be > 0");
    const CropFrame f = crop_frame(img.width(), img.height());
    const double hann_radius = f.size / 2.0;
    Image<float> out(f.size, f.size);
    for (int y = 0; y < f.size; ++y) {
        const float* src = img.row(f.y0 + y) + f.x0;
        float* dst = out.row(y);
        const double dy = (f.y0 + y) - f.cy;
        for (int x = 0; x < f.size; ++x) {
            const double dx = (f.x0 + x) - f.cx;
            const double r = std::sqrt(dx * dx + dy * dy);
            if (r >= hann_radius) {
                dst[x] = 0.0f;
                continue;
            }
            const double g = std::exp(-r * r / (2.0 * sigma * sigma));
            const double h = std::cos(kPi * r / (2.0 * hann_radius));
            dst[x] = src[x] * static_cast<float>(g * h * h);
        }
    }
    return out;
}

namespace {

// Intensity-weighted centroid of the connected cluster above 30 % of the
// local maximum, inside a 9x9 neighborhood. The window is re-centered on
// the running centroid so that the truncation stays symmetric about the
// true peak.
Vec2 cluster_centroid(const Spectrum& spec, int bx, int by) {
    constexpr int kHalf = 4;
    constexpr int kSide = 2 * kHalf + 1;

    Vec2 result = spec.bin_to_freq(bx, by);
    for (int iter = 0; iter < 8; ++iter) {
        double mags[kSide][kSide];
        bool member[kSide][kSide] = {};
        double peak = 0.0;
        for (int dy = -kHalf; dy <= kHalf; ++dy)
            for (int dx = -kHalf; dx <= kHalf; ++dx) {
                const double m = spec.mag_at(bx + dx, by + dy);
                mags[dy + kHalf][dx + kHalf] = m;
                peak = std::max(peak, m);
            }

        // flood from the window center across bins above the threshold
        const double thresh = 0.3 * peak;
        std::vector<std::pair<int, int>> stack{{kHalf, kHalf}};
        member[kHalf][kHalf] = true;
        while (!stack.empty()) {
            auto [cy, cx] = stack.back();
            stack.pop_back();
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int ny = cy + dy, nx = cx + dx;
                    if (ny < 0 || ny >= kSide || nx < 0 || nx >= kSide) continue;
                    if (member[ny][nx] || mags[ny][nx] <= thresh) continue;
                    member[ny][nx] = true;
                    stack.emplace_back(ny, nx);
                }
        }

        double wsum = 0.0;
        Vec2 fsum{0.0, 0.0};
        double cx_acc = 0.0, cy_acc = 0.0;
        for (int dy = -kHalf; dy <= kHalf; ++dy)
            for (int dx = -kHalf; dx <= kHalf; ++dx) {
                if (!member[dy + kHalf][dx + kHalf]) continue;
                const double m = mags[dy + kHalf][dx + kHalf];
                fsum += spec.bin_to_freq(bx + dx, by + dy) * m;
                cx_acc += dx * m;
                cy_acc += dy * m;
                wsum += m;
            }
        result = fsum / wsum;
        const int sx = static_cast<int>(std::lround(cx_acc / wsum));
        const int sy = static_cast<int>(std::lround(cy_acc / wsum));
        if (sx == 0 && sy == 0) break;
        bx += sx;
        by += sy;
    }
    return result;
}

// hill-climb to the nearest local maximum (8-neighborhood)
void refine_to_local_max(const Spectrum& spec, int& bx, int& by) {
    for (int it = 0; it < 4096; ++it) {
        double best = spec.mag_at(bx, by);
        int nbx = bx, nby = by;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const double m = spec.mag_at(bx + dx, by + dy);
                if (m > best) {
                    best = m;
                    nbx = bx + dx;
                    nby = by + dy;
                }
            }
        if (nbx == bx && nby == by) return;
        bx = nbx;
        by = nby;
    }
}

struct HarmonicScan {
    std::vector<Vec2> centroids;
};

// follow multiples of the fundamental; stops when the peak drowns in the
// local floor
std::vector<Vec2> scan_harmonics(const Spectrum& spec, const Vec2& f1,
                                 int n_harmonics) {
    std::vector<Vec2> out;
    const double d_f = f1.norm();
    const double search_radius = 0.2 * d_f;
    Vec2 base = f1;
    for (int n = 1; n <= n_harmonics; ++n) {
        const Vec2 predicted = base * static_cast<double>(n);
        if (std::abs(predicted.x) > 0.499 || std::abs(predicted.y) > 0.499)
            break;  // beyond Nyquist
        int pbx, pby;
        spec.freq_to_bin(predicted, pbx, pby);
        const int radius_bins =
            std::max(3, static_cast<int>(search_radius * spec.nx()));
        const int stride = std::max(1, radius_bins / 16);

        // coarse grid scan for the strongest bin, then hill-climb
        double best = -1.0, floor_acc = 0.0;
        int cnt = 0, bbx = pbx, bby = pby;
        std::vector<double> samples;
        samples.reserve(1024);
        for (int dy = -radius_bins; dy <= radius_bins; dy += stride)
            for (int dx = -radius_bins; dx <= radius_bins; dx += stride) {
                const double m = spec.mag_at(pbx + dx, pby + dy);
                samples.push_back(m);
                if (m > best) {
                    best = m;
                    bbx = pbx + dx;
                    bby = pby + dy;
                }
                floor_acc += m;
                ++cnt;
            }
        std::nth_element(samples.begin(), samples.begin() + samples.size() / 2,
                         samples.end());
        const double floor = samples[samples.size() / 2];
        refine_to_local_max(spec, bbx, bby);
        const double peak = spec.mag_at(bbx, bby);
        if (!(peak > 5.0 * floor) || peak <= 0.0) break;

        const Vec2 centroid = cluster_centroid(spec, bbx, bby);
        if (n > 1) {
            // harmonics must stay collinear with the fundamental
            const double dev = std::abs(
                fold_angle(centroid.angle() - base.angle(), 2.0 * kPi));
            if (dev > deg_to_rad(1.0)) break;
            // and radially consistent: the texel envelope has zeros that
            // can push a peak onto a neighboring lobe
            const double radial =
                std::abs(centroid.norm() / n - base.norm());
            const double gate = std::max(
                1e-3 * base.norm(), 0.75 * std::sqrt(2.0) / spec.nx() / n);
            if (radial > gate) break;
        }
        out.push_back(centroid);
        if (n == 1) base = centroid;  // re-anchor the multiples
    }
    return out;
}

}  // namespace

FrequencyPeaks detect_peaks(const Spectrum& spec, double d_min_px,
                            double d_max_px, int n_harmonics) {
    if (!(d_min_px > 0) || d_max_px <= d_min_px)
        throw EstimationError("detect_peaks: bad expected spacing range");
    const double f_lo = fundamental_freq(d_max_px) * 0.9;
    const double f_hi = fundamental_freq(d_min_px) * 1.1;

    // gather annulus magnitudes in the fx >= 0 half-plane
    const int bx_max =
        std::min(spec.nx() / 2, static_cast<int>(f_hi * spec.nx()) + 1);
    const int by_max = static_cast<int>(f_hi * spec.ny()) + 1;
    struct Bin {
        int bx, by;
        double mag;
    };
    std::vector<Bin> annulus;
    double max_mag = 0.0;
    for (int by = -by_max; by <= by_max; ++by) {
        for (int bx = 0; bx <= bx_max; ++bx) {
            if (bx == 0 && by <= 0) continue;  // conjugate duplicates
            const Vec2 f = spec.bin_to_freq(bx, by);
            const double fn = f.norm();
            if (fn < f_lo || fn > f_hi) continue;
            const double m = spec.mag_at(bx, by);
            annulus.push_back({bx, by, m});
            max_mag = std::max(max_mag, m);
        }
    }
    if (annulus.empty() || max_mag <= 0.0)
        throw EstimationError("detect_peaks: empty fundamental annulus");

    // strong strict local maxima, deduplicated by direction
    std::vector<Bin> candidates;
    for (const Bin& b : annulus) {
        if (b.mag < 0.2 * max_mag) continue;
        bool is_max = true;
        for (int dy = -1; dy <= 1 && is_max; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                if (spec.mag_at(b.bx + dx, b.by + dy) > b.mag) {
                    is_max = false;
                    break;
                }
            }
        if (is_max) candidates.push_back(b);
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Bin& a, const Bin& b) { return a.mag > b.mag; });

    std::vector<Vec2> dirs;  // canonical upper-half-plane fundamentals
    for (const Bin& b : candidates) {
        Vec2 f = spec.bin_to_freq(b.bx, b.by);
        if (f.y < 0 || (f.y == 0 && f.x < 0)) f = f * -1.0;
        bool dup = false;
        for (const Vec2& d : dirs) {
            const double da =
                std::abs(fold_angle(f.angle() - d.angle(), 2.0 * kPi));
            if (da < deg_to_rad(20.0) || da > deg_to_rad(160.0)) {
                dup = true;
                break;
            }
        }
        if (!dup) dirs.push_back(f);
        if (dirs.size() == 3) break;
    }
    if (dirs.size() < 2)
        throw EstimationError("detect_peaks: lattice not hexagonal");

    std::sort(dirs.begin(), dirs.end(),
              [](const Vec2& a, const Vec2& b) { return a.angle() < b.angle(); });

    // pick a pair ~60 degrees apart
    Vec2 f1, f2;
    bool found = false;
    for (size_t a = 0; a < dirs.size() && !found; ++a)
        for (size_t b = a + 1; b < dirs.size() && !found; ++b) {
            const double da = dirs[b].angle() - dirs[a].angle();
            if (std::abs(da - kPi / 3.0) < deg_to_rad(5.0)) {
                f1 = dirs[a];
                f2 = dirs[b];
                found = true;
            }
        }
    if (!found && dirs.size() >= 2) {
        // 120-degree pair: the missing middle direction is their sum
        for (size_t a = 0; a < dirs.size() && !found; ++a)
            for (size_t b = a + 1; b < dirs.size() && !found; ++b) {
                const double da = dirs[b].angle() - dirs[a].angle();
                if (std::abs(da - 2.0 * kPi / 3.0) < deg_to_rad(5.0)) {
                    f1 = dirs[a];
                    f2 = dirs[a] + dirs[b];
                    found = true;
                }
            }
    }
    if (!found) throw EstimationError("detect_peaks: lattice not hexagonal");

    // hexagonal sanity: comparable fundamental lengths
    if (std::abs(f1.norm() - f2.norm()) > 0.05 * (f1.norm() + f2.norm()))
        throw EstimationError("detect_peaks: lattice not hexagonal");

    FrequencyPeaks peaks;
    peaks.harmonics[0] = scan_harmonics(spec, f1, n_harmonics);
    peaks.harmonics[1] = scan_harmonics(spec, f2, n_harmonics);
    for (int i = 0; i < 2; ++i) {
        if (peaks.harmonics[i].size() < 2)
            throw EstimationError("detect_peaks: too few harmonics");
        const auto& h = peaks.harmonics[i];
        if (h.size() >= 3) {
            std::vector<double> gaps;
            for (size_t n = 0; n + 1 < h.size(); ++n)
                gaps.push_back((h[n + 1] - h[n]).norm());
            const double mean =
                std::accumulate(gaps.begin(), gaps.end(), 0.0) / gaps.size();
            double ss = 0.0;
            for (double g : gaps) ss += (g - mean) * (g - mean);
            peaks.spread[i] = std::sqrt(ss / (gaps.size() - 1));
        } else {
            peaks.spread[i] = kInf;
        }
    }
    return peaks;
}

std::pair<Vec2, Vec2> freq_to_spatial(const Vec2& f1, const Vec2& f2) {
    const double det = f1.x * f2.y - f1.y * f2.x;
    if (std::abs(det) < 1e-12)
        throw EstimationError("freq_to_spatial: collinear frequency basis");
    const Vec2 b1{f2.y / det, -f2.x / det};
    const Vec2 b2{-f1.y / det, f1.x / det};
    return {b1, b2};
}

double spread_objective(const FrequencyPeaks& peaks) {
    for (int i = 0; i < 2; ++i)
        if (peaks.harmonics[i].size() < 3)
            throw EstimationError("spread_objective: need >= 3 harmonics");
    return peaks.spread[0] + peaks.spread[1];
}

namespace {

struct Evaluation {
    double objective = kInf;
    FrequencyPeaks peaks;
};

Evaluation evaluate_candidate(const SearchImage& si, const Hyperparams& hp,
                              const FourierOptions& opt, int pad, int threads) {
    Evaluation ev;
    try {
        const Image<float> prepped = windowed_stretch(si, hp, threads);
        const Spectrum spec = compute_spectrum(prepped, pad, threads);
        ev.peaks = detect_peaks(spec, opt.expected_d_min_px,
                                opt.expected_d_max_px, opt.n_harmonics);
        ev.objective = spread_objective(ev.peaks);
    } catch (const EstimationError&) {
        ev.objective = kInf;
    }
    return ev;
}

}  // namespace

OptimizeResult optimize_hyperparams(const Image<float>& wi,
                                    const FourierOptions& opt) {
    const SearchImage si = make_search_image(wi);
    const int NP = std::max(4, opt.de_population);
    const double lo[3] = {opt.sigma_min, opt.gamma_min, opt.q_min};
    const double hi[3] = {opt.sigma_max, opt.gamma_max, opt.q_max};
    const int jobs = opt.jobs > 0 ? opt.jobs : default_jobs();
    const int eval_threads = std::max(1, (opt.fft_threads > 0
                                              ? opt.fft_threads
                                              : default_jobs()) /
                                             jobs);

    auto make_hp = [](const double* v) {
        return Hyperparams{v[0], v[1], v[2]};
    };

    OptimizeResult result;
    result.objective = kInf;

    // degenerate box: nothing to search
    if (lo[0] == hi[0] && lo[1] == hi[1] && lo[2] == hi[2]) {
        const Hyperparams hp = make_hp(lo);
        const Evaluation ev =
            evaluate_candidate(si, hp, opt, opt.pad_factor, default_jobs());
        if (!std::isfinite(ev.objective))
            throw EstimationError("optimize_hyperparams: no lattice found");
        result.hp = hp;
        result.peaks = ev.peaks;
        result.objective = ev.objective;
        result.evaluations = 1;
        return result;
    }

    std::vector<std::array<double, 3>> pop(NP);
    std::vector<double> score(NP, kInf);
    for (int k = 0; k < NP; ++k) {
        RandomStream rng(opt.de_seed, 0xbeefULL, static_cast<uint64_t>(k));
        for (int d = 0; d < 3; ++d)
            pop[k][d] = lo[d] + (hi[d] - lo[d]) * rng.next_double();
    }

    int evals = 0;
    auto evaluate_all = [&](const std::vector<std::array<double, 3>>& xs,
                            std::vector<double>& out_scores) {
        out_scores.assign(xs.size(), kInf);
        parallel_for(
            0, static_cast<int64_t>(xs.size()),
            [&](int64_t k) {
                out_scores[k] = evaluate_candidate(si, make_hp(xs[k].data()),
                                                   opt, opt.search_pad_factor,
                                                   eval_threads)
                                    .objective;
            },
            jobs, 1);
        evals += static_cast<int>(xs.size());
    };

    evaluate_all(pop, score);
    if (std::none_of(score.begin(), score.end(),
                     [](double s) { return std::isfinite(s); }))
        throw EstimationError("optimize_hyperparams: no lattice found");

    double best_seen = *std::min_element(score.begin(), score.end());
    int stale = 0;
    for (int gen = 1; gen <= opt.de_max_generations; ++gen) {
        std::vector<std::array<double, 3>> trials(NP);
        for (int k = 0; k < NP; ++k) {
            RandomStream rng(opt.de_seed, static_cast<uint64_t>(gen),
                             static_cast<uint64_t>(k));
            int r1, r2, r3;
            do { r1 = static_cast<int>(rng.next_below(NP)); } while (r1 == k);
            do { r2 = static_cast<int>(rng.next_below(NP)); } while (r2 == k || r2 == r1);
            do { r3 = static_cast<int>(rng.next_below(NP)); } while (r3 == k || r3 == r1 || r3 == r2);
            const int jrand = static_cast<int>(rng.next_below(3));
            for (int d = 0; d < 3; ++d) {
                double v;
                if (rng.next_double() < opt.de_crossover || d == jrand) {
                    v = pop[r1][d] + opt.de_weight * (pop[r2][d] - pop[r3][d]);
                    v = std::clamp(v, lo[d], hi[d]);
                } else {
                    v = pop[k][d];
                }
                trials[k][d] = v;
            }
        }
        std::vector<double> trial_score;
        evaluate_all(trials, trial_score);
        for (int k = 0; k < NP; ++k) {
            if (trial_score[k] <= score[k]) {
                score[k] = trial_score[k];
                pop[k] = trials[k];
            }
        }
        const double best_now = *std::min_element(score.begin(), score.end());
        if (best_seen - best_now < opt.de_tol) {
            if (++stale >= opt.de_patience) break;
        } else {
            stale = 0;
        }
        best_seen = std::min(best_seen, best_now);
    }

    // Re-score the leading candidates at the final pad factor. The gap
    // spread saturates near the optimum while the tangential peak bias
    // keeps shrinking with the window sigma, so among near-equal
    // objectives the widest window wins.
    std::vector<int> order(NP);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return score[a] < score[b]; });
    std::vector<int> shortlist(order.begin(),
                               order.begin() + std::min(NP, 3));
    int widest = -1;
    for (int k = 0; k < NP; ++k)
        if (std::isfinite(score[k]) &&
            (widest < 0 || pop[k][0] > pop[widest][0]))
            widest = k;
    if (widest >= 0 &&
        std::find(shortlist.begin(), shortlist.end(), widest) == shortlist.end())
        shortlist.push_back(widest);

    const int final_threads = opt.fft_threads > 0 ? opt.fft_threads : default_jobs();
    struct Scored {
        Hyperparams hp;
        Evaluation ev;
    };
    std::vector<Scored> rescored;
    for (int idx : shortlist) {
        if (!std::isfinite(score[idx])) continue;
        const Hyperparams hp = make_hp(pop[idx].data());
        Evaluation ev = evaluate_candidate(si, hp, opt, opt.pad_factor,
                                           final_threads);
        ++evals;
        if (std::isfinite(ev.objective))
            rescored.push_back({hp, std::move(ev)});
    }
    if (rescored.empty())
        throw EstimationError("optimize_hyperparams: no lattice found");
    double best_obj = kInf;
    for (const auto& s : rescored) best_obj = std::min(best_obj, s.ev.objective);
    const Scored* winner = nullptr;
    for (const auto& s : rescored) {
        if (s.ev.objective > 2.0 * best_obj) continue;
        if (!winner || s.hp.window_sigma > winner->hp.window_sigma) winner = &s;
    }
    result.hp = winner->hp;
    result.peaks = winner->ev.peaks;
    result.objective = winner->ev.objective;
    result.evaluations = evals;
    return result;
}

SpacingRotation estimate_spacing_rotation(const Image<float>& wi,
                                          const FourierOptions& opt) {
    const OptimizeResult best = optimize_hyperparams(wi, opt);

    // Fuse the harmonic ladder into a single fundamental per direction by
    // least squares through the origin, f_hat_{i,n} ~ n f_i. Weighting by
    // n favors the high harmonics, whose relative centroid error is
    // smallest.
    Vec2 fused[2];
    for (int i = 0; i < 2; ++i) {
        Vec2 acc{0.0, 0.0};
        double nn = 0.0;
        const auto& h = best.peaks.harmonics[i];
        for (size_t n = 0; n < h.size(); ++n) {
            acc += h[n] * static_cast<double>(n + 1);
            nn += static_cast<double>((n + 1) * (n + 1));
        }
        fused[i] = acc / nn;
    }

    const auto [b1, b2] = freq_to_spatial(fused[0], fused[1]);

    const auto [row, companion] = canonical_hex_basis(b1, b2);

    SpacingRotation out;
    out.spacing_px = row.norm();
    out.rotation_deg = rad_to_deg(fold_angle(row.angle(), kPi / 3.0));
    out.basis1_px = row;
    out.basis2_px = companion;
    out.hp = best.hp;
    out.objective = best.objective;
    out.peaks = best.peaks;
    return out;
}

SpacingRotation estimate_spacing_rotation(const Image<uint16_t>& raw,
                                          int maxval,
                                          const FourierOptions& opt) {
    Image<float> wi(raw.width(), raw.height());
    const float inv = 1.0f / static_cast<float>(maxval);
    for (int y = 0; y < raw.height(); ++y) {
        const uint16_t* src = raw.row(y);
        float* dst = wi.row(y);
        for (int x = 0; x < raw.width(); ++x) dst[x] = src[x] * inv;
    }
    return estimate_spacing_rotation(wi, opt);
}

}  // namespace mlaforge
