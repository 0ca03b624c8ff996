#include "mlaforge/corpus.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mlaforge/image_io.hpp"
#include "mlaforge/rng.hpp"

namespace mlaforge {

namespace fs = std::filesystem;
using nlohmann::json;

std::string SweepSpec::to_json() const {
    json j;
    j["base"] = json::parse(base.to_json());
    j["focal_lengths_mm"] = focal_lengths_mm;
    json aps = json::array();
    for (auto a : apertures) aps.push_back(aperture_level_name(a));
    j["apertures"] = aps;
    j["variants"] = variants;
    j["rotation_range_deg"] = rotation_range_deg;
    j["noise_levels"] = noise_levels;
    j["rays_per_pixel"] = rays_per_pixel;
    j["seed"] = seed;
    return j.dump(2);
}

SweepSpec SweepSpec::from_json(const std::string& text) {
    json j = json::parse(text);
    SweepSpec s;
    s.base = CameraConfig::from_json(j.at("base").dump());
    if (j.contains("focal_lengths_mm"))
        s.focal_lengths_mm = j["focal_lengths_mm"].get<std::vector<double>>();
    if (j.contains("apertures")) {
        s.apertures.clear();
        for (const auto& a : j["apertures"])
            s.apertures.push_back(aperture_level_from_name(a.get<std::string>()));
    }
    s.variants = j.value("variants", 20);
    s.rotation_range_deg = j.value("rotation_range_deg", 0.3);
    if (j.contains("noise_levels"))
        s.noise_levels = j["noise_levels"].get<std::vector<double>>();
    s.rays_per_pixel = j.value("rays_per_pixel", 128);
    s.seed = j.value("seed", uint64_t{7});
    return s;
}

SweepSpec SweepSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("sweep: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void CorpusManifest::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "id,F_mm,aperture,alpha_deg,ox,oy,sigma_n,img_path,gt_path\n";
    char line[1024];
    for (const auto& e : entries) {
        std::snprintf(line, sizeof(line), "%s,%g,%s,%.9g,%.9g,%.9g,%g,%s,%s\n",
                      e.id.c_str(), e.F_mm, e.aperture.c_str(), e.alpha_deg,
                      e.offset_um_x, e.offset_um_y, e.sigma_n,
                      e.failed ? "FAILED" : e.img_path.c_str(),
                      e.failed ? "FAILED" : e.gt_path.c_str());
        out << line;
    }
}

CorpusManifest CorpusManifest::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    CorpusManifest m;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        CorpusEntry e;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 9) throw std::runtime_error("bad manifest row: " + line);
        e.id = fields[0];
        e.F_mm = std::stod(fields[1]);
        e.aperture = fields[2];
        e.alpha_deg = std::stod(fields[3]);
        e.offset_um_x = std::stod(fields[4]);
        e.offset_um_y = std::stod(fields[5]);
        e.sigma_n = std::stod(fields[6]);
        e.img_path = fields[7];
        e.gt_path = fields[8];
        e.failed = e.img_path == "FAILED";
        m.entries.push_back(e);
    }
    return m;
}

CorpusManifest generate_corpus(const SweepSpec& sweep,
                               const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    {
        std::ofstream probe(fs::path(out_dir) / ".write_probe");
        if (!probe) throw std::runtime_error("corpus: out_dir not writable: " + out_dir);
    }
    fs::remove(fs::path(out_dir) / ".write_probe", ec);

    CorpusManifest manifest;
    int variant_counter = 0;
    for (double F : sweep.focal_lengths_mm) {
        for (ApertureLevel level : sweep.apertures) {
            for (int var = 0; var < sweep.variants; ++var) {
                CameraConfig config = sweep.base;
                config.main_focal_mm = F;
                config.aperture_distance_mm = F;

                // recorded random grid variant
                RandomStream rng(sweep.seed, 0x76617269ULL,
                                 static_cast<uint64_t>(variant_counter));
                config.grid_rotation_deg =
                    (2.0 * rng.next_double() - 1.0) * sweep.rotation_range_deg;
                const double half_d = config.ml_diameter_um / 2.0;
                config.grid_offset_um_x = (2.0 * rng.next_double() - 1.0) * half_d;
                config.grid_offset_um_y = (2.0 * rng.next_double() - 1.0) * half_d;
                config.rng_seed = RandomStream::mix(
                    sweep.seed, static_cast<uint64_t>(variant_counter));
                ++variant_counter;

                config.aperture_radius_mm = solve_aperture_radius_mm(config, level);

                SynthesisParams params;
                params.rays_per_pixel = sweep.rays_per_pixel;
                params.rng_seed = config.rng_seed;
                params.jobs = sweep.jobs;

                char stem[128];
                std::snprintf(stem, sizeof(stem), "wi_F%03d_%s_v%02d",
                              static_cast<int>(std::lround(F)),
                              aperture_level_name(level), var);

                RenderResult rendered;
                bool render_failed = false;
                try {
                    rendered = render_white_image(config, params);
                    const std::string gt_json =
                        (fs::path(out_dir) / (std::string(stem) + ".gt.json")).string();
                    const std::string gt_csv =
                        (fs::path(out_dir) / (std::string(stem) + ".gt.csv")).string();
                    save_ground_truth(rendered.truth, config, gt_json, gt_csv);
                } catch (const std::exception&) {
                    render_failed = true;
                }

                const WhiteImage mosaiced =
                    render_failed ? WhiteImage{}
                                  : mosaic_bayer(rendered.image,
                                                 config.bayer_pattern,
                                                 SynthesisParams().color_response);

                for (double sigma_n : sweep.noise_levels) {
                    CorpusEntry entry;
                    char id[160];
                    std::snprintf(id, sizeof(id), "%s_n%g", stem, sigma_n);
                    entry.id = id;
                    entry.F_mm = F;
                    entry.aperture = aperture_level_name(level);
                    entry.alpha_deg = config.grid_rotation_deg;
                    entry.offset_um_x = config.grid_offset_um_x;
                    entry.offset_um_y = config.grid_offset_um_y;
                    entry.sigma_n = sigma_n;
                    if (render_failed) {
                        entry.failed = true;
                        manifest.entries.push_back(entry);
                        continue;
                    }
                    try {
                        const WhiteImage noisy = add_image_noise(
                            mosaiced, sigma_n,
                            RandomStream::mix(config.rng_seed,
                                              static_cast<uint64_t>(
                                                  std::llround(sigma_n * 1e6))));
                        const Image<uint16_t> raw = encode_and_quantize(
                            noisy, config.gamma_encode, config.bit_depth);
                        const std::string img_path =
                            (fs::path(out_dir) / (entry.id + ".pgm")).string();
                        save_pgm16(img_path, raw, (1 << config.bit_depth) - 1);
                        entry.img_path = img_path;
                        entry.gt_path =
                            (fs::path(out_dir) / (std::string(stem) + ".gt.json"))
                                .string();
                        // per-entry config echo for the evaluator
                        CameraConfig echoed = config;
                        echoed.image_noise_sigma = sigma_n;
                        echoed.save((fs::path(out_dir) / (entry.id + ".config.json"))
                                        .string());
                    } catch (const std::exception&) {
                        entry.failed = true;
                    }
                    manifest.entries.push_back(entry);
                }
            }
        }
    }
    manifest.save_csv((fs::path(out_dir) / "manifest.csv").string());
    std::ofstream sweep_echo(fs::path(out_dir) / "sweep.json");
    sweep_echo << sweep.to_json() << "\n";
    return manifest;
}

}  // namespace mlaforge
