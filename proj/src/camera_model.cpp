#include "mlaforge/camera_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mlaforge/rng.hpp"

namespace mlaforge {

using nlohmann::json;

Mat3 mla_rotation(const CameraConfig& config) {
    return Mat3::rotation_x(deg_to_rad(config.tilt_gamma_deg)) *
           Mat3::rotation_y(deg_to_rad(config.tilt_beta_deg)) *
           Mat3::rotation_z(deg_to_rad(config.grid_rotation_deg));
}

std::pair<double, double> mla_extent(const CameraConfig& config) {
    // First two rows of R * (w, h, 0)^T = (s_x, s_y, *)^T, a 2x2 system.
    const Mat3 R = mla_rotation(config);
    const double a = R.m[0][0], b = R.m[0][1];
    const double c = R.m[1][0], d = R.m[1][1];
    const double det = a * d - b * c;
    if (std::abs(det) < 1e-4)
        throw ModelError("mla_extent: degenerate MLA orientation");
    const double sx = config.sensor_width_um();
    const double sy = config.sensor_height_um();
    const double w = (d * sx - b * sy) / det;
    const double h = (-c * sx + a * sy) / det;
    if (!(w > 0) || !(h > 0))
        throw ModelError("mla_extent: degenerate MLA orientation");
    return {w, h};
}

std::vector<IdealCenter> generate_ideal_centers(const CameraConfig& config) {
    config.validate();
    const auto [w, h] = mla_extent(config);
    const double d = config.ml_diameter_um;
    const double dx = d;
    const double dy = std::sqrt(3.0) * d / 2.0;
    const double sigma_um = config.grid_noise_sigma_px * config.pixel_pitch_um;
    const Vec2 og{config.grid_offset_um_x, config.grid_offset_um_y};

    const int j_lim = static_cast<int>(std::ceil((h / 2.0) / dy)) + 1;
    const int i_lim = static_cast<int>(std::ceil((w / 2.0) / dx)) + 1;

    std::vector<IdealCenter> centers;
    centers.reserve(static_cast<size_t>(2 * i_lim + 1) * (2 * j_lim + 1));
    for (int j = -j_lim; j <= j_lim; ++j) {
        const double row_shift = (std::abs(j) % 2 == 1) ? 0.5 : 0.0;
        const double y = j * dy;
        if (std::abs(y) > h / 2.0 + dy) continue;
        for (int i = -i_lim; i <= i_lim; ++i) {
            const double x = (i + row_shift) * dx;
            if (std::abs(x) > w / 2.0 + dx) continue;
            Vec3 c{og.x + x, og.y + y, 0.0};
            if (sigma_um > 0) {
                RandomStream rng(config.rng_seed,
                                 static_cast<uint64_t>(int64_t(i) + (1 << 20)),
                                 static_cast<uint64_t>(int64_t(j) + (1 << 20)));
                c.x += sigma_um * rng.next_gaussian();
                c.y += sigma_um * rng.next_gaussian();
            }
            centers.push_back({{i, j}, c});
        }
    }
    if (centers.empty()) throw ModelError("generate_ideal_centers: empty MLA");
    return centers;
}

std::vector<Vec3> transform_centers(const std::vector<IdealCenter>& ideal,
                                    const CameraConfig& config) {
    const Mat3 R = mla_rotation(config);
    const Vec3 shift{0.0, 0.0, -config.main_focal_um()};
    std::vector<Vec3> out;
    out.reserve(ideal.size());
    for (const auto& c : ideal) out.push_back(R * c.center_um + shift);
    return out;
}

ProjectedCenter project_perspective(const Vec3& center_um,
                                    const CameraConfig& config) {
    if (center_um.z >= 0)
        throw ModelError("project_perspective: center not behind the exit pupil");
    const double target_z = -config.main_focal_um() - config.ml_focal_um;
    const double lambda = target_z / center_um.z;
    const Vec3 cp = center_um * lambda;
    return {um_to_px(config, cp.xy()), lambda};
}

Vec2 project_orthogonal(const Vec3& center_um, const CameraConfig& config) {
    return um_to_px(config, center_um.xy());
}

MlaGroundTruth build_ground_truth(const CameraConfig& config) {
    MlaGroundTruth gt;
    const auto ideal = generate_ideal_centers(config);
    const auto moved = transform_centers(ideal, config);
    const auto [w, h] = mla_extent(config);

    const double margin_px = config.ml_diameter_um / config.pixel_pitch_um;
    const double lo_x = -margin_px, hi_x = config.sensor_px_x - 1 + margin_px;
    const double lo_y = -margin_px, hi_y = config.sensor_px_y - 1 + margin_px;

    gt.lenses.reserve(ideal.size());
    for (size_t k = 0; k < ideal.size(); ++k) {
        const auto proj = project_perspective(moved[k], config);
        if (proj.px.x < lo_x || proj.px.x > hi_x || proj.px.y < lo_y ||
            proj.px.y > hi_y)
            continue;
        LensRecord rec;
        rec.index = ideal[k].index;
        rec.ideal_center_um = ideal[k].center_um;
        rec.center_um = moved[k];
        rec.perspective_px = proj.px;
        rec.lambda = proj.lambda;
        rec.orthogonal_px = project_orthogonal(moved[k], config);
        gt.lenses.push_back(rec);
    }
    if (gt.lenses.empty()) throw ModelError("build_ground_truth: empty MLA");

    gt.spacing_um = config.ml_diameter_um;
    gt.rotation_deg = config.grid_rotation_deg;
    gt.beta_deg = config.tilt_beta_deg;
    gt.gamma_deg = config.tilt_gamma_deg;
    gt.offset_um = {config.grid_offset_um_x, config.grid_offset_um_y};
    gt.mla_width_um = w;
    gt.mla_height_um = h;

    // zero-tilt lambda; for tilted configurations this is the on-axis value
    const double lambda0 =
        (config.main_focal_um() + config.ml_focal_um) / config.main_focal_um();
    gt.projected.spacing_px =
        lambda0 * config.ml_diameter_um / config.pixel_pitch_um;
    gt.projected.rotation_deg = config.grid_rotation_deg;
    const Vec2 og{config.grid_offset_um_x, config.grid_offset_um_y};
    gt.projected.offset_px =
        rotate(og, deg_to_rad(config.grid_rotation_deg)) *
        (lambda0 / config.pixel_pitch_um);
    return gt;
}

AccuracyBounds accuracy_bounds(const CameraConfig& config) {
    config.validate();
    AccuracyBounds b;
    const double p = config.pixel_pitch_um;
    const double d = config.ml_diameter_um;
    const double f = config.ml_focal_um;
    const double F = config.main_focal_um();
    const double sx = config.sensor_width_um();
    const double sy = config.sensor_height_um();

    b.delta_f_um = p * f / d;

    // tilt tolerance: monotone cubic in the common tilt angle (radians)
    {
        const double target = p * f / d;
        const double lin = sx + sy;
        const double cub = 5.0 * sx / 6.0 + sy / 3.0;
        double lo = 0.0, hi = 0.5;
        while (lin * hi + cub * hi * hi * hi < target) hi *= 2.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (lin * mid + cub * mid * mid * mid < target ? lo : hi) = mid;
        }
        b.delta_delta_deg = rad_to_deg(0.5 * (lo + hi));
    }

    const double dx_px = d / p;
    const double dy_px = std::sqrt(3.0) * d / (2.0 * p);
    b.i_max = static_cast<int>(std::ceil(config.sensor_px_x / (2.0 * dx_px)));
    b.j_max = static_cast<int>(std::ceil(config.sensor_px_y / (2.0 * dy_px)));
    b.l_max = std::max(b.i_max, b.j_max);

    b.spacing_bound_px = 0.5 / b.l_max;
    b.rotation_bound_deg = rad_to_deg(std::asin(0.5 * p / (b.i_max * d)));
    b.offset_bound_px = 0.5;

    // local spacing distortion with both tilts at the tolerance bound,
    // evaluated at the outermost index pair; the tilt signs are free, so
    // take the worst combination
    {
        const double dyu = std::sqrt(3.0) * d / 2.0;
        for (int sign_b : {1, -1}) {
            for (int sign_g : {1, -1}) {
                CameraConfig tilted = config;
                tilted.grid_rotation_deg = 0.0;
                tilted.tilt_beta_deg = sign_b * b.delta_delta_deg;
                tilted.tilt_gamma_deg = sign_g * b.delta_delta_deg;
                const Mat3 R = mla_rotation(tilted);

                auto project = [&](double i, double j, int si, int sj) -> Vec2 {
                    const double shift =
                        (std::abs(static_cast<int>(std::round(j))) % 2 == 1)
                            ? 0.5
                            : 0.0;
                    const Vec3 ideal{si * (i + shift) * d, sj * j * dyu, 0.0};
                    const Vec3 cc = R * ideal + Vec3{0.0, 0.0, -F};
                    const double lambda = (-F - f) / cc.z;
                    return {lambda * cc.x / p, lambda * cc.y / p};
                };
                auto spacing_x = [&](int si, int sj) {
                    return (project(b.i_max, b.j_max, si, sj) -
                            project(b.i_max - 1, b.j_max, si, sj))
                        .norm();
                };
                auto spacing_y = [&](int si, int sj) {
                    return std::sqrt(3.0) *
                           (project(b.i_max, b.j_max, si, sj) -
                            project(b.i_max, b.j_max - 1, si, sj))
                               .norm() /
                           2.0;
                };
                b.delta_dx_max_px =
                    std::max(b.delta_dx_max_px,
                             std::abs(spacing_x(1, 1) - spacing_x(-1, -1)));
                b.delta_dy_max_px =
                    std::max(b.delta_dy_max_px,
                             std::abs(spacing_y(1, 1) - spacing_y(-1, -1)));
            }
        }
    }
    return b;
}

std::string AccuracyBounds::to_json() const {
    json j;
    j["delta_f_um"] = delta_f_um;
    j["delta_delta_deg"] = delta_delta_deg;
    j["delta_dx_max_px"] = delta_dx_max_px;
    j["delta_dy_max_px"] = delta_dy_max_px;
    j["spacing_bound_px"] = spacing_bound_px;
    j["rotation_bound_deg"] = rotation_bound_deg;
    j["offset_bound_px"] = offset_bound_px;
    j["i_max"] = i_max;
    j["j_max"] = j_max;
    j["l_max"] = l_max;
    return j.dump(2);
}

void save_ground_truth(const MlaGroundTruth& gt, const CameraConfig& config,
                       const std::string& json_path,
                       const std::string& csv_path) {
    json j;
    j["spacing_um"] = gt.spacing_um;
    j["rotation_deg"] = gt.rotation_deg;
    j["beta_deg"] = gt.beta_deg;
    j["gamma_deg"] = gt.gamma_deg;
    j["offset_um"] = {gt.offset_um.x, gt.offset_um.y};
    j["mla_extent_um"] = {gt.mla_width_um, gt.mla_height_um};
    j["projected"] = {{"spacing_px", gt.projected.spacing_px},
                      {"rotation_deg", gt.projected.rotation_deg},
                      {"offset_px", {gt.projected.offset_px.x, gt.projected.offset_px.y}}};
    j["lens_count"] = gt.lenses.size();
    j["centers_csv"] = std::filesystem::path(csv_path).filename().string();
    j["config"] = json::parse(config.to_json());
    std::ofstream out(json_path);
    if (!out) throw ModelError("cannot write " + json_path);
    out << j.dump(2) << "\n";

    std::ofstream csv(csv_path);
    if (!csv) throw ModelError("cannot write " + csv_path);
    csv << "i,j,cx_px,cy_px,cox_px,coy_px,lambda\n";
    char line[256];
    for (const auto& l : gt.lenses) {
        std::snprintf(line, sizeof(line), "%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                      l.index.i, l.index.j, l.perspective_px.x,
                      l.perspective_px.y, l.orthogonal_px.x, l.orthogonal_px.y,
                      l.lambda);
        csv << line;
    }
}

MlaGroundTruth load_ground_truth(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw ModelError("cannot open " + json_path);
    json j;
    in >> j;

    MlaGroundTruth gt;
    gt.spacing_um = j.at("spacing_um").get<double>();
    gt.rotation_deg = j.at("rotation_deg").get<double>();
    gt.beta_deg = j.value("beta_deg", 0.0);
    gt.gamma_deg = j.value("gamma_deg", 0.0);
    gt.offset_um = {j.at("offset_um").at(0).get<double>(),
                    j.at("offset_um").at(1).get<double>()};
    gt.mla_width_um = j.at("mla_extent_um").at(0).get<double>();
    gt.mla_height_um = j.at("mla_extent_um").at(1).get<double>();
    gt.projected.spacing_px = j.at("projected").at("spacing_px").get<double>();
    gt.projected.rotation_deg = j.at("projected").at("rotation_deg").get<double>();
    gt.projected.offset_px = {
        j.at("projected").at("offset_px").at(0).get<double>(),
        j.at("projected").at("offset_px").at(1).get<double>()};

    const std::string csv_name = j.at("centers_csv").get<std::string>();
    const std::string csv_path =
        (std::filesystem::path(json_path).parent_path() / csv_name).string();
    std::ifstream csv(csv_path);
    if (!csv) throw ModelError("cannot open " + csv_path);
    std::string line;
    std::getline(csv, line);  // header
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        LensRecord rec;
        double cx, cy, cox, coy, lambda;
        if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf,%lf,%lf", &rec.index.i,
                        &rec.index.j, &cx, &cy, &cox, &coy, &lambda) != 7)
            throw ModelError("bad ground-truth CSV row: " + line);
        rec.perspective_px = {cx, cy};
        rec.orthogonal_px = {cox, coy};
        rec.lambda = lambda;
        gt.lenses.push_back(rec);
    }
    return gt;
}

}  // namespace mlaforge
