#include "mlaforge/camera_config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mlaforge {

using nlohmann::json;

void CameraConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
    if (sensor_px_x <= 0 || sensor_px_y <= 0) fail("sensor_px must be positive");
    if (!(pixel_pitch_um > 0)) fail("pixel_pitch_um must be > 0");
    if (bit_depth < 8 || bit_depth > 16) fail("bit_depth must be in [8, 16]");
    if (!(gamma_encode > 0)) fail("gamma_encode must be > 0");
    if (!(ml_diameter_um > 0)) fail("ml_diameter_um must be > 0");
    if (!(ml_focal_um > 0)) fail("ml_focal_um must be > 0");
    if (!(main_focal_mm > 0)) fail("main_focal_mm must be > 0");
    if (!(std::abs(grid_rotation_deg) < 30.0)) fail("|grid_rotation_deg| must be < 30");
    if (grid_noise_sigma_px < 0) fail("grid_noise_sigma_px must be >= 0");
    if (!(aperture_distance_mm >= 0)) fail("aperture_distance_mm must be >= 0");
    if (!(aperture_radius_mm > 0)) fail("aperture_radius_mm must be > 0");
    if (image_noise_sigma < 0) fail("image_noise_sigma must be >= 0");
}

CameraConfig CameraConfig::lytro_illum(double F_mm) {
    CameraConfig c;
    c.sensor_px_x = 7728;
    c.sensor_px_y = 5368;
    c.pixel_pitch_um = 1.4;
    c.bit_depth = 10;
    c.gamma_encode = 0.4;
    c.ml_diameter_um = 20.0;
    c.ml_focal_um = 40.0;  // fixed f/2 microlenses
    c.main_focal_mm = F_mm;
    c.grid_noise_sigma_px = 0.0143;
    c.aperture_distance_mm = F_mm;
    c.aperture_radius_mm = std::numeric_limits<double>::infinity();
    c.bayer_pattern = BayerPattern::GRBG;
    return c;
}

namespace {

json to_json_obj(const CameraConfig& c) {
    json j;
    j["sensor_px"] = {c.sensor_px_x, c.sensor_px_y};
    j["pixel_pitch_um"] = c.pixel_pitch_um;
    j["bit_depth"] = c.bit_depth;
    j["gamma_encode"] = c.gamma_encode;
    j["ml_diameter_um"] = c.ml_diameter_um;
    j["ml_focal_um"] = c.ml_focal_um;
    j["main_focal_mm"] = c.main_focal_mm;
    j["grid_rotation_deg"] = c.grid_rotation_deg;
    j["tilt_beta_deg"] = c.tilt_beta_deg;
    j["tilt_gamma_deg"] = c.tilt_gamma_deg;
    j["grid_offset_um"] = {c.grid_offset_um_x, c.grid_offset_um_y};
    j["grid_noise_sigma_px"] = c.grid_noise_sigma_px;
    j["aperture_distance_mm"] = c.aperture_distance_mm;
    if (std::isinf(c.aperture_radius_mm))
        j["aperture_radius_mm"] = "inf";
    else
        j["aperture_radius_mm"] = c.aperture_radius_mm;
    j["image_noise_sigma"] = c.image_noise_sigma;
    j["bayer_pattern"] = bayer_pattern_name(c.bayer_pattern);
    j["rng_seed"] = c.rng_seed;
    return j;
}

CameraConfig from_json_obj(const json& j) {
    CameraConfig c;
    try {
        const auto& px = j.at("sensor_px");
        c.sensor_px_x = px.at(0).get<int>();
        c.sensor_px_y = px.at(1).get<int>();
        c.pixel_pitch_um = j.at("pixel_pitch_um").get<double>();
        c.bit_depth = j.value("bit_depth", 10);
        c.gamma_encode = j.value("gamma_encode", 0.4);
        c.ml_diameter_um = j.at("ml_diameter_um").get<double>();
        c.ml_focal_um = j.at("ml_focal_um").get<double>();
        c.main_focal_mm = j.at("main_focal_mm").get<double>();
        c.grid_rotation_deg = j.value("grid_rotation_deg", 0.0);
        c.tilt_beta_deg = j.value("tilt_beta_deg", 0.0);
        c.tilt_gamma_deg = j.value("tilt_gamma_deg", 0.0);
        if (j.contains("grid_offset_um")) {
            c.grid_offset_um_x = j["grid_offset_um"].at(0).get<double>();
            c.grid_offset_um_y = j["grid_offset_um"].at(1).get<double>();
        }
        c.grid_noise_sigma_px = j.value("grid_noise_sigma_px", 0.0);
        c.aperture_distance_mm = j.value("aperture_distance_mm", c.main_focal_mm);
        if (j.contains("aperture_radius_mm")) {
            const auto& r = j["aperture_radius_mm"];
            c.aperture_radius_mm =
                r.is_string() ? std::numeric_limits<double>::infinity()
                              : r.get<double>();
        }
        c.image_noise_sigma = j.value("image_noise_sigma", 0.0);
        c.bayer_pattern =
            bayer_pattern_from_name(j.value("bayer_pattern", std::string("GRBG")));
        c.rng_seed = j.value("rng_seed", uint64_t{1});
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

}  // namespace

std::string CameraConfig::to_json() const { return to_json_obj(*this).dump(2); }

CameraConfig CameraConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: parse error: ") + e.what());
    }
    return from_json_obj(j);
}

CameraConfig CameraConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void CameraConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("config: cannot write " + path);
    out << to_json() << "\n";
}

}  // namespace mlaforge
