#include "mlaforge/grid_offset.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>

namespace mlaforge {

int restrict_region_ml(double spacing_px, double main_focal_mm,
                       double ml_focal_um, int sensor_px_x, int sensor_px_y) {
    const double half_min = std::min(sensor_px_x, sensor_px_y) / 2.0;
    const int cap = std::max(1, static_cast<int>(half_min / spacing_px));
    if (!(ml_focal_um > 0)) return cap;  // lambda = 1, unbounded
    const double F_um = main_focal_mm * 1000.0;
    const double lambda = (F_um + ml_focal_um) / F_um;
    const double growth = spacing_px * (lambda - 1.0);
    if (growth <= 0) return cap;
    int i = static_cast<int>(std::floor(0.5 / growth));
    if (0.5 / growth == std::floor(0.5 / growth)) --i;  // strict inequality
    return std::clamp(i, 1, cap);
}

Image<float> mosaic_to_gray_halfres(const Image<float>& raw) {
    const int w = raw.width() / 2;
    const int h = raw.height() / 2;
    Image<float> out(w, h);
    for (int y = 0; y < h; ++y) {
        const float* r0 = raw.row(2 * y);
        const float* r1 = raw.row(2 * y + 1);
        float* dst = out.row(y);
        for (int x = 0; x < w; ++x)
            dst[x] = 0.25f * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
    }
    return out;
}

Image<float> gaussian_blur(const Image<float>& img, double sigma) {
    if (!(sigma > 0)) return img;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<float> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] =
            static_cast<float>(std::exp(-0.5 * i * i / (sigma * sigma)));
        sum += kernel[i + radius];
    }
    for (float& k : kernel) k = static_cast<float>(k / sum);

    const int W = img.width(), H = img.height();
    Image<float> tmp(W, H), out(W, H);
    for (int y = 0; y < H; ++y) {
        const float* src = img.row(y);
        float* dst = tmp.row(y);
        for (int x = 0; x < W; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int xx = std::clamp(x + k, 0, W - 1);
                acc += kernel[k + radius] * src[xx];
            }
            dst[x] = static_cast<float>(acc);
        }
    }
    for (int y = 0; y < H; ++y) {
        float* dst = out.row(y);
        for (int x = 0; x < W; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int yy = std::clamp(y + k, 0, H - 1);
                acc += kernel[k + radius] * tmp.at(x, yy);
            }
            dst[x] = static_cast<float>(acc);
        }
    }
    return out;
}

namespace {

// Gaussian-weighted local mean over a 17 px block, the usual adaptive
// threshold reference
Image<float> local_gaussian_mean(const Image<float>& img, int block = 17) {
    const int radius = block / 2;
    const double sigma = 0.3 * ((block - 1) * 0.5 - 1) + 0.8;
    std::vector<float> kernel(block);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] =
            static_cast<float>(std::exp(-0.5 * i * i / (sigma * sigma)));
        sum += kernel[i + radius];
    }
    for (float& k : kernel) k = static_cast<float>(k / sum);

    const int W = img.width(), H = img.height();
    Image<float> tmp(W, H), out(W, H);
    for (int y = 0; y < H; ++y) {
        const float* src = img.row(y);
        float* dst = tmp.row(y);
        for (int x = 0; x < W; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[k + radius] * src[std::clamp(x + k, 0, W - 1)];
            dst[x] = static_cast<float>(acc);
        }
    }
    for (int y = 0; y < H; ++y) {
        float* dst = out.row(y);
        for (int x = 0; x < W; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[k + radius] * tmp.at(x, std::clamp(y + k, 0, H - 1));
            dst[x] = static_cast<float>(acc);
        }
    }
    return out;
}

double median_of(std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        const double lo = *std::max_element(v.begin(), v.begin() + mid);
        m = 0.5 * (m + lo);
    }
    return m;
}

// weighted median: value m minimizing sum w |x - m|
double weighted_median(std::vector<std::pair<double, double>>& vw) {
    if (vw.empty()) return 0.0;
    std::sort(vw.begin(), vw.end());
    double total = 0.0;
    for (const auto& [v, w] : vw) total += w;
    double acc = 0.0;
    for (const auto& [v, w] : vw) {
        acc += w;
        if (acc >= total / 2.0) return v;
    }
    return vw.back().first;
}

}  // namespace

DetectedCenters detect_centers(const Image<float>& img, Vec2 region_center_px,
                               double region_radius_px,
                               double smoothing_sigma) {
    DetectedCenters result;
    result.region_center_px = region_center_px;
    result.region_radius_px = region_radius_px;

    const int x0 = std::max(0, static_cast<int>(region_center_px.x - region_radius_px) - 1);
    const int x1 = std::min(img.width() - 1,
                            static_cast<int>(region_center_px.x + region_radius_px) + 1);
    const int y0 = std::max(0, static_cast<int>(region_center_px.y - region_radius_px) - 1);
    const int y1 = std::min(img.height() - 1,
                            static_cast<int>(region_center_px.y + region_radius_px) + 1);
    if (x1 <= x0 || y1 <= y0)
        throw EstimationError("detect_centers: empty detection region");

    // work on the region crop only
    Image<float> crop(x1 - x0 + 1, y1 - y0 + 1);
    for (int y = y0; y <= y1; ++y)
        std::copy(img.row(y) + x0, img.row(y) + x1 + 1, crop.row(y - y0));

    const Image<float> smooth = gaussian_blur(crop, smoothing_sigma);
    const Image<float> mean = local_gaussian_mean(smooth, 17);

    const int W = crop.width(), H = crop.height();
    const double r2 = region_radius_px * region_radius_px;
    auto inside = [&](int x, int y) {
        const double dx = (x + x0) - region_center_px.x;
        const double dy = (y + y0) - region_center_px.y;
        return dx * dx + dy * dy < r2;
    };

    Image<int32_t> label(W, H, 0);
    int next_label = 0;
    std::vector<DetectedCenter> centers;
    for (int sy = 0; sy < H; ++sy) {
        for (int sx = 0; sx < W; ++sx) {
            if (label.at(sx, sy) != 0) continue;
            if (!(smooth.at(sx, sy) > mean.at(sx, sy)) || !inside(sx, sy)) continue;

            // flood this cluster (8-connectivity)
            ++next_label;
            std::vector<std::pair<int, int>> stack{{sx, sy}};
            label.at(sx, sy) = next_label;
            double mass = 0.0, mx = 0.0, my = 0.0;
            bool touches_boundary = false;
            int area = 0;
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                const double v = smooth.at(cx, cy);
                mass += v;
                mx += v * (cx + x0);
                my += v * (cy + y0);
                ++area;
                const double ddx = (cx + x0) - region_center_px.x;
                const double ddy = (cy + y0) - region_center_px.y;
                if (ddx * ddx + ddy * ddy >= (region_radius_px - 1.5) *
                                                 (region_radius_px - 1.5))
                    touches_boundary = true;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx, ny = cy + dy;
                        if (nx < 0 || nx >= W || ny < 0 || ny >= H) continue;
                        if (label.at(nx, ny) != 0) continue;
                        if (!(smooth.at(nx, ny) > mean.at(nx, ny)) || !inside(nx, ny))
                            continue;
                        label.at(nx, ny) = next_label;
                        stack.emplace_back(nx, ny);
                    }
            }
            if (touches_boundary || area < 4 || mass <= 0.0) continue;
            centers.push_back({next_label, {mx / mass, my / mass}, mass});
        }
    }
    if (centers.empty())
        throw EstimationError("detect_centers: no microlenses detected");
    result.centers = std::move(centers);
    return result;
}

Vec2 estimate_offset(double spacing_px, double rotation_deg,
                     const DetectedCenters& centers, int sensor_px_x,
                     int sensor_px_y, const OffsetOptions& opt) {
    if (centers.centers.size() < 10)
        throw EstimationError("estimate_offset: need >= 10 detected centers");

    GridModel zero;
    zero.spacing_px = spacing_px;
    zero.rotation_deg = rotation_deg;
    zero.offset_px = {0.0, 0.0};
    zero.set_canonical_basis();
    const double cx = (sensor_px_x - 1) / 2.0;
    const double cy = (sensor_px_y - 1) / 2.0;

    // nearest lattice point of the (rotated) hex grid
    const double a = deg_to_rad(rotation_deg);
    auto nearest_residual = [&](const Vec2& p, const Vec2& offset) {
        const Vec2 local = rotate(p - Vec2{cx, cy} - offset, -a);
        // candidate rows around local.y
        const double dy = std::sqrt(3.0) * spacing_px / 2.0;
        const int j0 = static_cast<int>(std::floor(local.y / dy));
        Vec2 best{1e30, 1e30};
        for (int j = j0 - 1; j <= j0 + 2; ++j) {
            const double shift = (std::abs(j) % 2 == 1) ? 0.5 : 0.0;
            const double fi = local.x / spacing_px - shift;
            for (int i = static_cast<int>(std::floor(fi)); i <= static_cast<int>(std::floor(fi)) + 1; ++i) {
                const Vec2 g{(i + shift) * spacing_px, j * dy};
                const Vec2 r = local - g;
                if (r.norm2() < best.norm2()) best = r;
            }
        }
        return rotate(best, a);  // back to sensor frame
    };

    auto median_offset = [&](const Vec2& base, bool weighted,
                             double weight_sigma) {
        std::vector<std::pair<double, double>> rx, ry;
        std::vector<Vec2> residuals;
        for (const auto& c : centers.centers) {
            const Vec2 r = nearest_residual(c.centroid_px, base);
            if (r.norm() > spacing_px / 2.0) continue;  // unmatched
            double w = 1.0;
            if (weighted) {
                const double dist = (c.centroid_px - centers.region_center_px).norm();
                w = std::exp(-dist * dist / (2.0 * weight_sigma * weight_sigma));
            }
            rx.push_back({r.x, w});
            ry.push_back({r.y, w});
            residuals.push_back(r);
        }
        if (rx.size() < 10)
            throw EstimationError("estimate_offset: too few matched centers");

        Vec2 med;
        if (opt.median_per_axis || !weighted) {
            if (weighted) {
                med = {weighted_median(rx), weighted_median(ry)};
            } else {
                std::vector<double> xs, ys;
                xs.reserve(rx.size());
                ys.reserve(ry.size());
                for (auto& [v, w] : rx) xs.push_back(v);
                for (auto& [v, w] : ry) ys.push_back(v);
                med = {median_of(xs), median_of(ys)};
            }
        } else {
            // Weiszfeld iteration for the 2D geometric median
            med = {0.0, 0.0};
            for (int it = 0; it < 50; ++it) {
                Vec2 num{0, 0};
                double den = 0;
                size_t idx = 0;
                for (const auto& r : residuals) {
                    const double w = rx[idx++].second;
                    const double dist = std::max(1e-9, (r - med).norm());
                    num += r * (w / dist);
                    den += w / dist;
                }
                const Vec2 next = num / den;
                if ((next - med).norm() < 1e-12) break;
                med = next;
            }
        }

        // spread check: residuals must concentrate, otherwise the
        // upstream spacing/rotation is wrong
        std::vector<double> devs;
        devs.reserve(residuals.size());
        for (const auto& r : residuals) devs.push_back((r - med).norm());
        std::sort(devs.begin(), devs.end());
        const double p90 = devs[static_cast<size_t>(0.9 * (devs.size() - 1))];
        if (2.0 * p90 > spacing_px / 2.0)
            throw EstimationError("estimate_offset: offset ambiguous");
        return med;
    };

    const Vec2 o0 = median_offset({0.0, 0.0}, false, 0.0);
    if (!opt.refine) return o0;

    const double sigma_w = centers.region_radius_px / 2.0;
    const Vec2 correction = median_offset(o0, true, sigma_w);
    if (correction.norm() >= spacing_px / 2.0)
        throw EstimationError("estimate_offset: offset ambiguous");
    return o0 + correction;
}

GridModel estimate_grid_proposed(const Image<float>& raw_wi,
                                 const ProposedOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    const SpacingRotation sr = estimate_spacing_rotation(raw_wi, opt.fourier);

    const int radius_ml =
        restrict_region_ml(sr.spacing_px, opt.main_focal_mm, opt.ml_focal_um,
                           raw_wi.width(), raw_wi.height());
    const double radius_px = radius_ml * sr.spacing_px;
    const Vec2 center{(raw_wi.width() - 1) / 2.0, (raw_wi.height() - 1) / 2.0};

    // detection runs on the half-resolution gray image
    const Image<float> gray = mosaic_to_gray_halfres(raw_wi);
    const Vec2 center_half{(center.x - 0.5) / 2.0, (center.y - 0.5) / 2.0};
    DetectedCenters det =
        detect_centers(gray, center_half, radius_px / 2.0, 1.0);
    // map centroids back to full-resolution coordinates
    for (auto& c : det.centers)
        c.centroid_px = {2.0 * c.centroid_px.x + 0.5, 2.0 * c.centroid_px.y + 0.5};
    det.region_center_px = center;
    det.region_radius_px = radius_px;

    const Vec2 offset =
        estimate_offset(sr.spacing_px, sr.rotation_deg, det, raw_wi.width(),
                        raw_wi.height(), opt.offset);

    GridModel grid;
    grid.spacing_px = sr.spacing_px;
    grid.rotation_deg = sr.rotation_deg;
    grid.offset_px = offset;
    grid.basis1_px = sr.basis1_px;
    grid.basis2_px = sr.basis2_px;
    grid.method = "proposed";
    grid.hp_window_sigma = sr.hp.window_sigma;
    grid.hp_gamma = sr.hp.gamma;
    grid.hp_stretch_low = sr.hp.stretch_low;
    grid.objective = sr.objective;
    grid.runtime_s = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    return grid;
}

}  // namespace mlaforge
