#include "mlaforge/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace mlaforge {

namespace {

// uniform hash over the true perspective centers
class TruthLookup {
public:
    TruthLookup(const MlaGroundTruth& truth, double cell)
        : cell_(cell), lenses_(&truth.lenses) {
        for (size_t k = 0; k < truth.lenses.size(); ++k)
            hash_[key(truth.lenses[k].perspective_px)].push_back(
                static_cast<int>(k));
    }

    // squared distance to the nearest true center, or a large sentinel
    double nearest_d2(const Vec2& p) const {
        const int cx = static_cast<int>(std::floor(p.x / cell_));
        const int cy = static_cast<int>(std::floor(p.y / cell_));
        double best = 1e300;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                auto it = hash_.find((static_cast<int64_t>(cy + dy) << 32) ^
                                     (static_cast<int64_t>(cx + dx) & 0xffffffff));
                if (it == hash_.end()) continue;
                for (int k : it->second)
                    best = std::min(best,
                                    ((*lenses_)[k].perspective_px - p).norm2());
            }
        return best;
    }

private:
    int64_t key(const Vec2& p) const {
        return (static_cast<int64_t>(std::floor(p.y / cell_)) << 32) ^
               (static_cast<int64_t>(std::floor(p.x / cell_)) & 0xffffffff);
    }
    double cell_;
    const std::vector<LensRecord>* lenses_;
    std::unordered_map<int64_t, std::vector<int>> hash_;
};

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (v.size() % 2 == 0)
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
    return m;
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

}  // namespace

std::pair<double, int> q_g(const std::vector<GridPoint>& grid_points,
                           const MlaGroundTruth& truth, double spacing_px) {
    if (grid_points.empty())
        throw EstimationError("q_g: empty estimated grid");
    const TruthLookup lookup(truth, spacing_px);
    const double reject2 = spacing_px * spacing_px / 4.0;
    double ss = 0.0;
    int matched = 0, rejected = 0;
    for (const auto& gp : grid_points) {
        const double d2 = lookup.nearest_d2(gp.px);
        if (d2 > reject2) {
            ++rejected;
            continue;
        }
        ss += d2;
        ++matched;
    }
    if (matched == 0 || rejected > 0.1 * grid_points.size())
        throw EstimationError("q_g: grid mismatch");
    return {std::sqrt(ss / matched), matched};
}

double q_g_ideal_expectation(double sigma_g, int64_t M) {
    if (M < 1) throw std::invalid_argument("q_g_ideal_expectation: M >= 1");
    if (sigma_g == 0.0) return 0.0;
    const double m = static_cast<double>(M);
    const double lg = std::lgamma((m + 1.0) / 2.0) - std::lgamma(m / 2.0);
    return sigma_g * std::sqrt(2.0 / m) * std::exp(lg);
}

std::pair<double, double> q_s_q_r(const GridModel& grid,
                                  const MlaGroundTruth& truth) {
    const double qs = std::abs(grid.spacing_px - truth.projected.spacing_px);
    const double diff = deg_to_rad(grid.rotation_deg - truth.projected.rotation_deg);
    const double qr = std::abs(rad_to_deg(fold_angle(diff, kPi / 3.0)));
    return {qs, qr};
}

double offset_error(const GridModel& grid, const MlaGroundTruth& truth) {
    // compare modulo lattice translations of the true grid
    const Vec2 delta = grid.offset_px - truth.projected.offset_px;
    const double a = deg_to_rad(truth.projected.rotation_deg);
    const double d = truth.projected.spacing_px;
    const Vec2 b1 = rotate({d, 0.0}, a);
    const Vec2 b2 = rotate({d / 2.0, std::sqrt(3.0) * d / 2.0}, a);
    const double det = b1.x * b2.y - b1.y * b2.x;
    const double u = (delta.x * b2.y - delta.y * b2.x) / det;
    const double v = (-delta.x * b1.y + delta.y * b1.x) / det;
    Vec2 best = delta - b1 * std::round(u) - b2 * std::round(v);
    // neighbors can be closer than the rounded cell
    for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
            const Vec2 cand = delta - b1 * (std::round(u) + di) -
                              b2 * (std::round(v) + dj);
            if (cand.norm2() < best.norm2()) best = cand;
        }
    return best.norm();
}

QualityReport evaluate_grid(const GridModel& grid, const MlaGroundTruth& truth,
                            const AccuracyBounds& bounds, int sensor_px_x,
                            int sensor_px_y) {
    QualityReport rep;
    rep.method = grid.method;
    rep.runtime_s = grid.runtime_s;

    const auto points = build_grid(grid, sensor_px_x, sensor_px_y);
    const TruthLookup lookup(truth, grid.spacing_px);
    const double reject2 = grid.spacing_px * grid.spacing_px / 4.0;
    double ss = 0.0;
    int matched = 0, rejected = 0;
    for (const auto& gp : points) {
        const double d2 = lookup.nearest_d2(gp.px);
        if (d2 > reject2) {
            ++rejected;
            continue;
        }
        ss += d2;
        ++matched;
    }
    if (matched == 0) throw EstimationError("evaluate_grid: grid mismatch");
    rep.q_g_px = std::sqrt(ss / matched);
    rep.matched = matched;
    rep.rejected = rejected;

    const auto [qs, qr] = q_s_q_r(grid, truth);
    rep.q_s_px = qs;
    rep.q_r_deg = qr;
    rep.offset_err_px = offset_error(grid, truth);

    rep.spacing_ok = qs < bounds.spacing_bound_px;
    rep.rotation_ok = qr < bounds.rotation_bound_deg;
    rep.offset_ok = rep.offset_err_px < bounds.offset_bound_px;
    return rep;
}

std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) return std::nullopt;
    const double mx = mean(x), my = mean(y);
    double sxx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0 || syy <= 0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

CorpusSummary corpus_stats(const std::vector<QualityReport>& reports) {
    if (reports.size() < 2)
        throw std::invalid_argument("corpus_stats: need >= 2 reports");

    CorpusSummary summary;
    using GroupKey = std::tuple<std::string, double, double, double, std::string>;
    std::map<GroupKey, std::vector<const QualityReport*>> groups;
    std::map<std::string, std::vector<const QualityReport*>> by_method;
    for (const auto& r : reports) {
        groups[{r.method, r.F_mm, r.sigma_g, r.sigma_n, r.aperture}].push_back(&r);
        by_method[r.method].push_back(&r);
    }

    for (const auto& [key, rs] : groups) {
        CorpusGroupStats g;
        std::tie(g.method, g.F_mm, g.sigma_g, g.sigma_n, g.aperture) = key;
        g.count = static_cast<int>(rs.size());
        std::vector<double> qg, qs, qr, off, rt;
        for (const auto* r : rs) {
            qg.push_back(r->q_g_px);
            qs.push_back(r->q_s_px);
            qr.push_back(r->q_r_deg);
            off.push_back(r->offset_err_px);
            rt.push_back(r->runtime_s);
        }
        g.qg_mean = mean(qg);
        g.qg_median = median(qg);
        g.qs_mean = mean(qs);
        g.qs_median = median(qs);
        g.qr_mean = mean(qr);
        g.qr_median = median(qr);
        g.offset_mean = mean(off);
        g.runtime_mean = mean(rt);
        summary.groups.push_back(g);
    }

    auto vignetting_ordinal = [](const std::string& s) {
        if (s == "mild") return 1.0;
        if (s == "strong") return 2.0;
        return 0.0;
    };
    for (const auto& [method, rs] : by_method) {
        CorpusSummary::Correlation c;
        c.method = method;
        std::vector<double> qg, F, sg, sn, vig;
        for (const auto* r : rs) {
            qg.push_back(r->q_g_px);
            F.push_back(r->F_mm);
            sg.push_back(r->sigma_g);
            sn.push_back(r->sigma_n);
            vig.push_back(vignetting_ordinal(r->aperture));
        }
        c.r_F = pearson(F, qg);
        c.r_sigma_g = pearson(sg, qg);
        c.r_sigma_n = pearson(sn, qg);
        c.r_vignetting = pearson(vig, qg);
        summary.correlations.push_back(c);
    }
    return summary;
}

namespace {

std::string opt_str(const std::optional<double>& v) {
    if (!v) return "null";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", *v);
    return buf;
}

}  // namespace

std::string CorpusSummary::to_csv() const {
    std::ostringstream out;
    out << "method,F_mm,sigma_g,sigma_n,aperture,Qg_mean,Qg_median,Qs_mean,"
           "Qr_mean,runtime_mean\n";
    char buf[256];
    for (const auto& g : groups) {
        std::snprintf(buf, sizeof(buf), "%s,%g,%g,%g,%s,%.6g,%.6g,%.6g,%.6g,%.3f\n",
                      g.method.c_str(), g.F_mm, g.sigma_g, g.sigma_n,
                      g.aperture.c_str(), g.qg_mean, g.qg_median, g.qs_mean,
                      g.qr_mean, g.runtime_mean);
        out << buf;
    }
    out << "\n# correlations: method,r_F,r_sigma_g,r_sigma_n,r_vignetting\n";
    for (const auto& c : correlations)
        out << "# " << c.method << "," << opt_str(c.r_F) << ","
            << opt_str(c.r_sigma_g) << "," << opt_str(c.r_sigma_n) << ","
            << opt_str(c.r_vignetting) << "\n";
    return out.str();
}

std::string CorpusSummary::to_markdown() const {
    std::ostringstream out;
    out << "| F (mm) | sigma_g (px) | method | Qg mean (px) | Qg median (px) | "
           "Qs mean (px) | Qr mean (deg) | runtime (s) |\n";
    out << "|---|---|---|---|---|---|---|---|\n";

    // aggregate over noise/aperture, mirroring a per-(F, sigma_g) table
    using RowKey = std::tuple<double, double, std::string>;
    std::map<RowKey, std::vector<const CorpusGroupStats*>> rows;
    for (const auto& g : groups)
        rows[{g.F_mm, g.sigma_g, g.method}].push_back(&g);
    char buf[256];
    for (const auto& [key, gs] : rows) {
        double qg = 0, qgm = 0, qs = 0, qr = 0, rt = 0;
        int n = 0;
        for (const auto* g : gs) {
            qg += g->qg_mean * g->count;
            qgm += g->qg_median * g->count;
            qs += g->qs_mean * g->count;
            qr += g->qr_mean * g->count;
            rt += g->runtime_mean * g->count;
            n += g->count;
        }
        std::snprintf(buf, sizeof(buf),
                      "| %g | %g | %s | %.4f | %.4f | %.5f | %.5f | %.1f |\n",
                      std::get<0>(key), std::get<1>(key),
                      std::get<2>(key).c_str(), qg / n, qgm / n, qs / n,
                      qr / n, rt / n);
        out << buf;
    }
    out << "\nPearson correlation of Qg with the sweep variables:\n\n";
    out << "| method | F | sigma_g | sigma_n | vignetting |\n|---|---|---|---|---|\n";
    for (const auto& c : correlations)
        out << "| " << c.method << " | " << opt_str(c.r_F) << " | "
            << opt_str(c.r_sigma_g) << " | " << opt_str(c.r_sigma_n) << " | "
            << opt_str(c.r_vignetting) << " |\n";
    return out.str();
}

}  // namespace mlaforge
