#include "mlaforge/grid_baseline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <unordered_map>

#include "mlaforge/fft.hpp"
#include "mlaforge/parallel.hpp"

namespace mlaforge {

std::vector<Vec2> disk_filter_maxima(const Image<float>& img,
                                     const BaselineOptions& opt) {
    const double radius =
        opt.disk_radius_px > 0 ? opt.disk_radius_px : opt.expected_spacing_px / 2.0;
    const int r = std::max(1, static_cast<int>(std::round(radius)));

    Image<float> kernel(2 * r + 1, 2 * r + 1, 0.0f);
    int count = 0;
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x)
            if (x * x + y * y <= r * r) {
                kernel.at(x + r, y + r) = 1.0f;
                ++count;
            }
    for (int y = 0; y < kernel.height(); ++y)
        for (int x = 0; x < kernel.width(); ++x) kernel.at(x, y) /= count;

    const int threads = opt.jobs > 0 ? opt.jobs : default_jobs();
    const Image<float> filtered = convolve_fft(img, kernel, threads);

    float max_v = 0.0f;
    for (int y = 0; y < filtered.height(); ++y) {
        const float* row = filtered.row(y);
        for (int x = 0; x < filtered.width(); ++x)
            max_v = std::max(max_v, row[x]);
    }
    const float thresh = 0.02f * max_v;

    // strict 3x3 local maxima above threshold
    struct Peak {
        int x, y;
        float v;
    };
    std::vector<Peak> raw_peaks;
    for (int y = 1; y + 1 < filtered.height(); ++y) {
        const float* rm = filtered.row(y - 1);
        const float* r0 = filtered.row(y);
        const float* rp = filtered.row(y + 1);
        for (int x = 1; x + 1 < filtered.width(); ++x) {
            const float v = r0[x];
            if (v <= thresh) continue;
            if (v < r0[x - 1] || v <= r0[x + 1]) continue;
            if (v < rm[x - 1] || v < rm[x] || v < rm[x + 1]) continue;
            if (v <= rp[x - 1] || v <= rp[x] || v <= rp[x + 1]) continue;
            raw_peaks.push_back({x, y, v});
        }
    }

    // non-maximum suppression over half the expected spacing
    const double nms = 0.5 * opt.expected_spacing_px;
    const double nms2 = nms * nms;
    std::sort(raw_peaks.begin(), raw_peaks.end(), [](const Peak& a, const Peak& b) {
        if (a.v != b.v) return a.v > b.v;
        return std::tie(a.y, a.x) < std::tie(b.y, b.x);
    });
    const double cell = std::max(1.0, nms);
    auto key = [&](int x, int y) {
        return (static_cast<int64_t>(y / cell) << 32) ^
               static_cast<int64_t>(x / cell);
    };
    std::unordered_map<int64_t, std::vector<Vec2>> accepted_hash;
    std::vector<Vec2> accepted;
    for (const Peak& p : raw_peaks) {
        bool keep = true;
        const int cx = static_cast<int>(p.x / cell);
        const int cy = static_cast<int>(p.y / cell);
        for (int dy = -1; dy <= 1 && keep; ++dy)
            for (int dx = -1; dx <= 1 && keep; ++dx) {
                auto it = accepted_hash.find(
                    (static_cast<int64_t>(cy + dy) << 32) ^
                    static_cast<int64_t>(cx + dx));
                if (it == accepted_hash.end()) continue;
                for (const Vec2& q : it->second)
                    if ((q - Vec2{static_cast<double>(p.x),
                                  static_cast<double>(p.y)}).norm2() < nms2) {
                        keep = false;
                        break;
                    }
            }
        if (!keep) continue;
        const Vec2 v{static_cast<double>(p.x), static_cast<double>(p.y)};
        accepted.push_back(v);
        accepted_hash[key(p.x, p.y)].push_back(v);
    }
    return accepted;
}

namespace {

// solve the symmetric 3x3 system A x = b in place
std::array<double, 3> solve3(double A[3][3], const double b[3]) {
    double m[3][4];
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) m[i][j] = A[i][j];
        m[i][3] = b[i];
    }
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r2 = col + 1; r2 < 3; ++r2)
            if (std::abs(m[r2][col]) > std::abs(m[pivot][col])) pivot = r2;
        std::swap(m[col], m[pivot]);
        if (std::abs(m[col][col]) < 1e-12)
            throw EstimationError("fit_grid_ls: singular normal equations");
        for (int r2 = 0; r2 < 3; ++r2) {
            if (r2 == col) continue;
            const double f = m[r2][col] / m[col][col];
            for (int c2 = col; c2 < 4; ++c2) m[r2][c2] -= f * m[col][c2];
        }
    }
    return {m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]};
}

}  // namespace

GridModel fit_grid_ls(const std::vector<Vec2>& peaks, int sensor_px_x,
                      int sensor_px_y) {
    if (peaks.size() < 100)
        throw EstimationError("fit_grid_ls: need >= 100 peaks");

    // nearest-neighbor statistics on a uniform hash
    const double area =
        static_cast<double>(sensor_px_x) * sensor_px_y / peaks.size();
    const double cell = std::max(2.0, std::sqrt(area));
    std::unordered_map<int64_t, std::vector<int>> hash;
    auto key = [&](double x, double y) {
        return (static_cast<int64_t>(std::floor(y / cell)) << 32) ^
               (static_cast<int64_t>(std::floor(x / cell)) & 0xffffffff);
    };
    for (size_t k = 0; k < peaks.size(); ++k)
        hash[key(peaks[k].x, peaks[k].y)].push_back(static_cast<int>(k));

    auto nearest = [&](const Vec2& p, int self) {
        int best = -1;
        double best_d2 = 16.0 * cell * cell;
        const int cx = static_cast<int>(std::floor(p.x / cell));
        const int cy = static_cast<int>(std::floor(p.y / cell));
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                auto it = hash.find((static_cast<int64_t>(cy + dy) << 32) ^
                                    (static_cast<int64_t>(cx + dx) & 0xffffffff));
                if (it == hash.end()) continue;
                for (int k : it->second) {
                    if (k == self) continue;
                    const double d2 = (peaks[k] - p).norm2();
                    if (d2 < best_d2) {
                        best_d2 = d2;
                        best = k;
                    }
                }
            }
        return best;
    };

    std::vector<double> nn_dist, nn_angle;
    nn_dist.reserve(peaks.size());
    for (size_t k = 0; k < peaks.size(); ++k) {
        const int nb = nearest(peaks[k], static_cast<int>(k));
        if (nb < 0) continue;
        const Vec2 diff = peaks[nb] - peaks[k];
        nn_dist.push_back(diff.norm());
        nn_angle.push_back(fold_angle(diff.angle(), kPi / 3.0));
    }
    if (nn_dist.size() < 100)
        throw EstimationError("fit_grid_ls: peaks too sparse");
    auto median = [](std::vector<double> v) {
        std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
        return v[v.size() / 2];
    };
    double d0 = median(nn_dist);
    double a0 = median(nn_angle);

    // anchor the lattice at the peak closest to the image center
    const Vec2 center{(sensor_px_x - 1) / 2.0, (sensor_px_y - 1) / 2.0};
    Vec2 anchor = peaks[0];
    for (const Vec2& p : peaks)
        if ((p - center).norm2() < (anchor - center).norm2()) anchor = p;

    Vec2 b1 = rotate({d0, 0.0}, a0);
    Vec2 b2 = rotate({d0 / 2.0, std::sqrt(3.0) * d0 / 2.0}, a0);
    Vec2 origin = anchor;

    std::vector<std::pair<int, int>> last_idx(peaks.size(), {INT32_MIN, 0});
    double collision_rate = 0.0;
    for (int iter = 0; iter < 10; ++iter) {
        const double det = b1.x * b2.y - b1.y * b2.x;
        if (std::abs(det) < 1e-9)
            throw EstimationError("fit_grid_ls: degenerate basis");

        bool changed = false;
        std::unordered_map<int64_t, int> occupancy;
        int collisions = 0;
        double A[3][3] = {};
        double bx[3] = {}, by[3] = {};
        for (size_t k = 0; k < peaks.size(); ++k) {
            const Vec2 rel = peaks[k] - origin;
            const double u = (rel.x * b2.y - rel.y * b2.x) / det;
            const double v = (-rel.x * b1.y + rel.y * b1.x) / det;
            const int i = static_cast<int>(std::lround(u));
            const int j = static_cast<int>(std::lround(v));
            if (last_idx[k] != std::make_pair(i, j)) {
                changed = true;
                last_idx[k] = {i, j};
            }
            const int64_t okey =
                (static_cast<int64_t>(i) << 32) ^ (j & 0xffffffff);
            if (++occupancy[okey] > 1) ++collisions;

            const double row[3] = {1.0, static_cast<double>(i),
                                   static_cast<double>(j)};
            for (int r2 = 0; r2 < 3; ++r2) {
                for (int c2 = 0; c2 < 3; ++c2) A[r2][c2] += row[r2] * row[c2];
                bx[r2] += row[r2] * peaks[k].x;
                by[r2] += row[r2] * peaks[k].y;
            }
        }
        collision_rate = static_cast<double>(collisions) / peaks.size();
        if (collision_rate > 0.05)
            throw EstimationError("fit_grid_ls: lattice fit failed");

        const auto sx = solve3(A, bx);
        const auto sy = solve3(A, by);
        origin = {sx[0], sy[0]};
        b1 = {sx[1], sy[1]};
        b2 = {sx[2], sy[2]};
        if (!changed && iter > 0) break;
    }

    // canonical row vector and cell-reduced offset
    const auto [row, companion] = canonical_hex_basis(b1, b2);

    GridModel grid;
    grid.spacing_px = row.norm();
    grid.rotation_deg = rad_to_deg(fold_angle(row.angle(), kPi / 3.0));
    grid.method = "baseline-dansereau";

    // reduce the anchor into the lattice cell around the image center
    const Vec2 rel = origin - center;
    const double det = b1.x * b2.y - b1.y * b2.x;
    const double u = (rel.x * b2.y - rel.y * b2.x) / det;
    const double v = (-rel.x * b1.y + rel.y * b1.x) / det;
    const Vec2 folded = rel - b1 * std::round(u) - b2 * std::round(v);
    grid.offset_px = folded;
    grid.basis1_px = row;
    grid.basis2_px = companion;
    return grid;
}

GridModel estimate_grid_baseline(const Image<float>& raw_wi,
                                 const BaselineOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto peaks = disk_filter_maxima(raw_wi, opt);
    GridModel grid = fit_grid_ls(peaks, raw_wi.width(), raw_wi.height());
    grid.runtime_s = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    return grid;
}

}  // namespace mlaforge
