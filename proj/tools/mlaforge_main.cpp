#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "mlaforge/camera_config.hpp"
#include "mlaforge/camera_model.hpp"
#include "mlaforge/corpus.hpp"
#include "mlaforge/eval_metrics.hpp"
#include "mlaforge/grid_baseline.hpp"
#include "mlaforge/grid_offset.hpp"
#include "mlaforge/image_io.hpp"
#include "mlaforge/lf_decode.hpp"
#include "mlaforge/wi_synth.hpp"

namespace fs = std::filesystem;
using namespace mlaforge;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitEstimation = 4;
constexpr int kExitDecode = 5;

struct CommonArgs {
    std::string config_path;
    uint64_t seed = 0;
    int jobs = 0;
    std::string out;
};

CameraConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return CameraConfig::lytro_illum();
    return CameraConfig::load(path);
}

Image<float> normalize_raw(const Image<uint16_t>& raw, int maxval) {
    Image<float> out(raw.width(), raw.height());
    const float inv = 1.0f / static_cast<float>(maxval);
    for (int y = 0; y < raw.height(); ++y) {
        const uint16_t* src = raw.row(y);
        float* dst = out.row(y);
        for (int x = 0; x < raw.width(); ++x) dst[x] = src[x] * inv;
    }
    return out;
}

GridModel run_estimate(const Image<float>& wi, const std::string& method,
                       const CameraConfig& config, uint64_t seed, int jobs) {
    if (method == "baseline") {
        BaselineOptions opt;
        opt.expected_spacing_px = config.ml_diameter_um / config.pixel_pitch_um;
        opt.jobs = jobs;
        return estimate_grid_baseline(wi, opt);
    }
    ProposedOptions opt;
    opt.main_focal_mm = config.main_focal_mm;
    opt.ml_focal_um = config.ml_focal_um;
    const double d_px = config.ml_diameter_um / config.pixel_pitch_um;
    opt.fourier.expected_d_min_px = std::max(4.0, 0.7 * d_px);
    opt.fourier.expected_d_max_px = 1.5 * d_px;
    if (seed) opt.fourier.de_seed = seed;
    if (jobs) {
        opt.fourier.jobs = jobs;
        opt.fourier.fft_threads = jobs;
    }
    return estimate_grid_proposed(wi, opt);
}

int cmd_bounds(const CommonArgs& args) {
    const CameraConfig config = load_config_or_default(args.config_path);
    config.validate();
    const AccuracyBounds b = accuracy_bounds(config);
    std::printf("delta_f           = %.4g um\n", b.delta_f_um);
    std::printf("delta_delta       = %.4f deg\n", b.delta_delta_deg);
    std::printf("delta_d_max       = %.4f px (x %.4f, y %.4f)\n",
                std::max(b.delta_dx_max_px, b.delta_dy_max_px),
                b.delta_dx_max_px, b.delta_dy_max_px);
    std::printf("spacing_bound     = %.4f px\n", b.spacing_bound_px);
    std::printf("rotation_bound    = %.4f deg\n", b.rotation_bound_deg);
    std::printf("offset_bound      = %.1f px\n", b.offset_bound_px);
    std::printf("i_max/j_max/l_max = %d/%d/%d\n", b.i_max, b.j_max, b.l_max);
    if (!args.out.empty()) {
        std::ofstream out(args.out);
        if (!out) {
            std::fprintf(stderr, "cannot write %s\n", args.out.c_str());
            return kExitIo;
        }
        out << b.to_json() << "\n";
    }
    return kExitOk;
}

int cmd_synth(const std::string& sweep_path, const CommonArgs& args) {
    SweepSpec sweep = SweepSpec::load(sweep_path);
    if (args.seed) sweep.seed = args.seed;
    if (args.jobs) sweep.jobs = args.jobs;
    const CorpusManifest manifest = generate_corpus(sweep, args.out);
    size_t failed = 0;
    for (const auto& e : manifest.entries) failed += e.failed;
    std::printf("synthesized %zu images (%zu failed) into %s\n",
                manifest.entries.size(), failed, args.out.c_str());
    return failed == manifest.entries.size() && !manifest.entries.empty()
               ? kExitIo
               : kExitOk;
}

int cmd_estimate(const std::string& wi_path, const std::string& method,
                 const CommonArgs& args) {
    const CameraConfig config = load_config_or_default(args.config_path);
    Image<float> wi;
    try {
        int maxval = 0;
        const Image<uint16_t> raw = load_pgm16(wi_path, &maxval);
        wi = normalize_raw(raw, maxval);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "cannot read white image: %s\n", e.what());
        return kExitEstimation;
    }
    const GridModel grid = run_estimate(wi, method, config, args.seed, args.jobs);
    const std::string out_path =
        args.out.empty() ? wi_path + ".grid.json" : args.out;
    grid.save(out_path);
    std::printf("%s: d=%.6f px alpha=%.6f deg offset=(%.4f, %.4f) px "
                "runtime=%.1f s -> %s\n",
                grid.method.c_str(), grid.spacing_px, grid.rotation_deg,
                grid.offset_px.x, grid.offset_px.y, grid.runtime_s,
                out_path.c_str());
    return kExitOk;
}

int cmd_evaluate(const std::string& manifest_path,
                 const std::string& methods_csv, const CommonArgs& args) {
    const CorpusManifest manifest = CorpusManifest::load_csv(manifest_path);
    if (manifest.entries.empty()) {
        std::fprintf(stderr, "empty manifest\n");
        return kExitConfig;
    }
    std::vector<std::string> methods;
    {
        std::stringstream ss(methods_csv);
        std::string m;
        while (std::getline(ss, m, ',')) methods.push_back(m);
    }
    if (methods.empty()) methods = {"proposed", "baseline"};

    fs::create_directories(args.out);
    std::vector<QualityReport> reports;
    size_t attempted = 0, succeeded = 0;
    std::ofstream row_log(fs::path(args.out) / "rows.csv");
    row_log << "id,method,status,Qg,Qs,Qr,offset_err,runtime_s,spacing_ok,"
               "rotation_ok,offset_ok\n";

    for (const auto& entry : manifest.entries) {
        if (entry.failed) continue;
        const fs::path img_path = entry.img_path;
        const fs::path cfg_path =
            img_path.parent_path() / (entry.id + ".config.json");
        CameraConfig config;
        MlaGroundTruth truth;
        Image<float> wi;
        try {
            config = CameraConfig::load(cfg_path.string());
            truth = load_ground_truth(entry.gt_path);
            int maxval = 0;
            wi = normalize_raw(load_pgm16(entry.img_path, &maxval), maxval);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "%s: %s\n", entry.id.c_str(), e.what());
            continue;
        }
        const AccuracyBounds bounds = accuracy_bounds(config);
        for (const auto& method : methods) {
            ++attempted;
            try {
                const GridModel grid =
                    run_estimate(wi, method, config, args.seed, args.jobs);
                QualityReport rep =
                    evaluate_grid(grid, truth, bounds, config.sensor_px_x,
                                  config.sensor_px_y);
                rep.wi_id = entry.id;
                rep.F_mm = entry.F_mm;
                rep.sigma_g = config.grid_noise_sigma_px;
                rep.sigma_n = entry.sigma_n;
                rep.aperture = entry.aperture;
                reports.push_back(rep);
                ++succeeded;
                char line[512];
                std::snprintf(line, sizeof(line),
                              "%s,%s,ok,%.6g,%.6g,%.6g,%.6g,%.2f,%d,%d,%d\n",
                              entry.id.c_str(), method.c_str(), rep.q_g_px,
                              rep.q_s_px, rep.q_r_deg, rep.offset_err_px,
                              rep.runtime_s, rep.spacing_ok, rep.rotation_ok,
                              rep.offset_ok);
                row_log << line << std::flush;
            } catch (const std::exception& e) {
                row_log << entry.id << "," << method << ",failed(" << e.what()
                        << "),,,,,,,,\n";
                std::fprintf(stderr, "%s/%s: %s\n", entry.id.c_str(),
                             method.c_str(), e.what());
            }
        }
    }
    if (reports.size() >= 2) {
        const CorpusSummary summary = corpus_stats(reports);
        std::ofstream csv(fs::path(args.out) / "summary.csv");
        csv << summary.to_csv();
        std::ofstream md(fs::path(args.out) / "summary.md");
        md << summary.to_markdown();
        std::cout << summary.to_markdown();
    }
    if (attempted == 0) return kExitConfig;
    return succeeded >= 0.9 * attempted ? kExitOk : kExitEstimation;
}

int cmd_decode(const std::string& raw_path, const std::string& white_path,
               const std::string& grid_path, const CommonArgs& args) {
    const CameraConfig config = load_config_or_default(args.config_path);
    int raw_maxval = 0, white_maxval = 0;
    const Image<uint16_t> raw16 = load_pgm16(raw_path, &raw_maxval);
    const Image<uint16_t> white16 = load_pgm16(white_path, &white_maxval);
    if (raw16.width() != white16.width() || raw16.height() != white16.height()) {
        std::fprintf(stderr, "raw and white image sizes differ\n");
        return kExitDecode;
    }

    GridModel grid;
    if (!grid_path.empty()) {
        grid = GridModel::load(grid_path);
    } else {
        const Image<float> wi = normalize_raw(white16, white_maxval);
        grid = run_estimate(wi, "proposed", config, args.seed, args.jobs);
    }

    // linearize both images through the camera response
    const Image<float> raw_lin =
        decode_raw(raw16, config.gamma_encode, config.bit_depth);
    const Image<float> white_lin =
        decode_raw(white16, config.gamma_encode, config.bit_depth);

    DecodeOptions options;
    options.jobs = args.jobs;
    const DecodeResult result =
        decode(raw_lin, white_lin, config.bayer_pattern, grid, options);
    save_light_field(result.lf, args.out, result.provenance);
    std::printf("decoded %dx%dx%dx%d light field -> %s\n", result.lf.patch,
                result.lf.patch, result.lf.ns, result.lf.nt, args.out.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Microlens grid estimation and light field decoding"};
    app.require_subcommand(1);

    CommonArgs args;
    bool dump_defaults = false;
    app.add_flag("--dump-defaults", dump_defaults,
                 "print the default camera configuration and exit");

    std::string sweep_path, wi_path, method = "proposed", manifest_path;
    std::string methods_csv = "proposed,baseline";
    std::string raw_path, white_path, grid_path;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", args.config_path, "camera config JSON");
        cmd->add_option("--seed", args.seed, "random seed");
        cmd->add_option("--jobs", args.jobs, "worker threads");
        cmd->add_option("--out", args.out, "output path");
    };

    CLI::App* bounds = app.add_subcommand("bounds", "accuracy bound estimates");
    add_common(bounds);

    CLI::App* synth = app.add_subcommand("synth", "synthesize a white image corpus");
    synth->add_option("--sweep", sweep_path, "sweep spec JSON")->required();
    add_common(synth);

    CLI::App* estimate = app.add_subcommand("estimate", "estimate the microlens grid");
    estimate->add_option("--wi", wi_path, "white image (16-bit PGM)")->required();
    estimate->add_option("--method", method, "proposed | baseline");
    add_common(estimate);

    CLI::App* evaluate = app.add_subcommand("evaluate", "run methods over a corpus");
    evaluate->add_option("--manifest", manifest_path, "corpus manifest CSV")
        ->required();
    evaluate->add_option("--methods", methods_csv, "comma-separated methods");
    add_common(evaluate);

    CLI::App* decode_cmd = app.add_subcommand("decode", "decode a lenslet image");
    decode_cmd->add_option("--raw", raw_path, "raw lenslet image (PGM)")->required();
    decode_cmd->add_option("--white", white_path, "white image (PGM)")->required();
    decode_cmd->add_option("--grid", grid_path, "grid model JSON (else estimated)");
    add_common(decode_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    if (dump_defaults) {
        std::cout << CameraConfig::lytro_illum().to_json() << "\n";
        return kExitOk;
    }

    try {
        if (bounds->parsed()) return cmd_bounds(args);
        if (synth->parsed()) return cmd_synth(sweep_path, args);
        if (estimate->parsed()) return cmd_estimate(wi_path, method, args);
        if (evaluate->parsed())
            return cmd_evaluate(manifest_path, methods_csv, args);
        if (decode_cmd->parsed())
            return cmd_decode(raw_path, white_path, grid_path, args);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const EstimationError& e) {
        std::fprintf(stderr, "estimation error: %s\n", e.what());
        return kExitEstimation;
    } catch (const DecodeError& e) {
        std::fprintf(stderr, "decode error: %s\n", e.what());
        return kExitDecode;
    } catch (const ModelError& e) {
        std::fprintf(stderr, "model error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    }
    return kExitConfig;
}
