#include "mlaforge/grid_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mlaforge {

using nlohmann::json;

void GridModel::set_canonical_basis() {
    const double a = deg_to_rad(rotation_deg);
    basis1_px = rotate({spacing_px, 0.0}, a);
    basis2_px = rotate({spacing_px / 2.0, std::sqrt(3.0) * spacing_px / 2.0}, a);
}

std::string GridModel::to_json() const {
    json j;
    j["spacing_px"] = spacing_px;
    j["rotation_deg"] = rotation_deg;
    j["offset_px"] = {offset_px.x, offset_px.y};
    j["basis"] = {{basis1_px.x, basis1_px.y}, {basis2_px.x, basis2_px.y}};
    j["method"] = method;
    j["hyperparams"] = {{"window_sigma", hp_window_sigma},
                        {"gamma", hp_gamma},
                        {"stretch_low", hp_stretch_low}};
    j["objective"] = objective;
    j["runtime_s"] = runtime_s;
    return j.dump(2);
}

GridModel GridModel::from_json(const std::string& text) {
    json j = json::parse(text);
    GridModel g;
    g.spacing_px = j.at("spacing_px").get<double>();
    g.rotation_deg = j.at("rotation_deg").get<double>();
    g.offset_px = {j.at("offset_px").at(0).get<double>(),
                   j.at("offset_px").at(1).get<double>()};
    if (j.contains("basis")) {
        g.basis1_px = {j["basis"].at(0).at(0).get<double>(),
                       j["basis"].at(0).at(1).get<double>()};
        g.basis2_px = {j["basis"].at(1).at(0).get<double>(),
                       j["basis"].at(1).at(1).get<double>()};
    } else {
        g.set_canonical_basis();
    }
    g.method = j.value("method", std::string());
    if (j.contains("hyperparams")) {
        g.hp_window_sigma = j["hyperparams"].value("window_sigma", 0.0);
        g.hp_gamma = j["hyperparams"].value("gamma", 0.0);
        g.hp_stretch_low = j["hyperparams"].value("stretch_low", 0.0);
    }
    g.objective = j.value("objective", 0.0);
    g.runtime_s = j.value("runtime_s", 0.0);
    return g;
}

GridModel GridModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void GridModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << to_json() << "\n";
}

std::pair<Vec2, Vec2> canonical_hex_basis(const Vec2& b1, const Vec2& b2) {
    const Vec2 cands[8] = {b1,          b2,          b1 + b2,        b1 - b2,
                           b1 * -1.0,   b2 * -1.0,   (b1 + b2) * -1.0,
                           (b1 - b2) * -1.0};
    double min_len = 1e300;
    for (const Vec2& v : cands) min_len = std::min(min_len, v.norm());

    // among the six short lattice vectors, exactly one folds into range
    Vec2 row{0, 0}, companion{0, 0};
    double best_dev = 1e300;
    for (const Vec2& v : cands) {
        if (v.norm() > 1.2 * min_len) continue;
        const double dev =
            std::abs(v.angle() - fold_angle(v.angle(), kPi / 3.0));
        if (dev < best_dev) {
            best_dev = dev;
            row = v;
        }
    }
    double best_da = 1e300;
    for (const Vec2& v : cands) {
        if (v.norm() > 1.2 * min_len) continue;
        const double da = std::abs(
            fold_angle(v.angle() - row.angle() - kPi / 3.0, 2.0 * kPi));
        if (da < best_da) {
            best_da = da;
            companion = v;
        }
    }
    return {row, companion};
}

Vec2 grid_point(const GridModel& grid, int i, int j, double center_x,
                double center_y) {
    const double d = grid.spacing_px;
    const double row_shift = (std::abs(j) % 2 == 1) ? 0.5 : 0.0;
    const Vec2 local{(i + row_shift) * d, j * std::sqrt(3.0) * d / 2.0};
    const Vec2 r = rotate(local, deg_to_rad(grid.rotation_deg));
    return {center_x + grid.offset_px.x + r.x, center_y + grid.offset_px.y + r.y};
}

std::vector<GridPoint> build_grid(const GridModel& grid, int sensor_px_x,
                                  int sensor_px_y) {
    if (!(grid.spacing_px > 0) || !std::isfinite(grid.rotation_deg) ||
        !std::isfinite(grid.offset_px.x) || !std::isfinite(grid.offset_px.y))
        throw std::invalid_argument("build_grid: non-finite grid parameters");

    const double cx = (sensor_px_x - 1) / 2.0;
    const double cy = (sensor_px_y - 1) / 2.0;
    const double margin = grid.spacing_px;
    const double dy = std::sqrt(3.0) * grid.spacing_px / 2.0;
    // generous index bounds; points are filtered per position
    const double reach =
        std::sqrt(cx * cx + cy * cy) + 2.0 * grid.spacing_px +
        grid.offset_px.norm();
    const int i_lim = static_cast<int>(std::ceil(reach / grid.spacing_px)) + 1;
    const int j_lim = static_cast<int>(std::ceil(reach / dy)) + 1;

    std::vector<GridPoint> points;
    for (int j = -j_lim; j <= j_lim; ++j) {
        for (int i = -i_lim; i <= i_lim; ++i) {
            const Vec2 p = grid_point(grid, i, j, cx, cy);
            if (p.x < -margin || p.x > sensor_px_x - 1 + margin ||
                p.y < -margin || p.y > sensor_px_y - 1 + margin)
                continue;
            points.push_back({i, j, p});
        }
    }
    return points;
}

}  // namespace mlaforge
