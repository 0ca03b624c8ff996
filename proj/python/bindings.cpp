#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mlaforge/camera_config.hpp"
#include "mlaforge/camera_model.hpp"
#include "mlaforge/eval_metrics.hpp"
#include "mlaforge/grid_baseline.hpp"
#include "mlaforge/grid_fourier.hpp"
#include "mlaforge/grid_offset.hpp"
#include "mlaforge/lf_decode.hpp"
#include "mlaforge/wi_synth.hpp"

namespace py = pybind11;
using namespace mlaforge;

namespace {

Image<float> image_from_array(const py::array_t<float, py::array::c_style |
                                                            py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("expected a 2D array");
    Image<float> img(static_cast<int>(arr.shape(1)),
                     static_cast<int>(arr.shape(0)));
    std::memcpy(img.data(), arr.data(), sizeof(float) * img.size());
    return img;
}

py::array_t<float> array_from_image(const Image<float>& img) {
    py::array_t<float> arr({img.height(), img.width()});
    std::memcpy(arr.mutable_data(), img.data(), sizeof(float) * img.size());
    return arr;
}

py::dict grid_to_dict(const GridModel& g) {
    py::dict d;
    d["spacing_px"] = g.spacing_px;
    d["rotation_deg"] = g.rotation_deg;
    d["offset_px"] = py::make_tuple(g.offset_px.x, g.offset_px.y);
    d["basis"] = py::make_tuple(py::make_tuple(g.basis1_px.x, g.basis1_px.y),
                                py::make_tuple(g.basis2_px.x, g.basis2_px.y));
    d["method"] = g.method;
    d["objective"] = g.objective;
    d["runtime_s"] = g.runtime_s;
    d["hyperparams"] = py::make_tuple(g.hp_window_sigma, g.hp_gamma,
                                      g.hp_stretch_low);
    return d;
}

}  // namespace

PYBIND11_MODULE(_mlaforge, m) {
    m.doc() = "Microlens array grid estimation and light field decoding";

    py::class_<CameraConfig>(m, "CameraConfig")
        .def(py::init<>())
        .def_static("lytro_illum", &CameraConfig::lytro_illum,
                    py::arg("main_focal_mm") = 30.0)
        .def_readwrite("sensor_px_x", &CameraConfig::sensor_px_x)
        .def_readwrite("sensor_px_y", &CameraConfig::sensor_px_y)
        .def_readwrite("pixel_pitch_um", &CameraConfig::pixel_pitch_um)
        .def_readwrite("bit_depth", &CameraConfig::bit_depth)
        .def_readwrite("gamma_encode", &CameraConfig::gamma_encode)
        .def_readwrite("ml_diameter_um", &CameraConfig::ml_diameter_um)
        .def_readwrite("ml_focal_um", &CameraConfig::ml_focal_um)
        .def_readwrite("main_focal_mm", &CameraConfig::main_focal_mm)
        .def_readwrite("grid_rotation_deg", &CameraConfig::grid_rotation_deg)
        .def_readwrite("tilt_beta_deg", &CameraConfig::tilt_beta_deg)
        .def_readwrite("tilt_gamma_deg", &CameraConfig::tilt_gamma_deg)
        .def_readwrite("grid_offset_um_x", &CameraConfig::grid_offset_um_x)
        .def_readwrite("grid_offset_um_y", &CameraConfig::grid_offset_um_y)
        .def_readwrite("grid_noise_sigma_px", &CameraConfig::grid_noise_sigma_px)
        .def_readwrite("aperture_distance_mm", &CameraConfig::aperture_distance_mm)
        .def_readwrite("aperture_radius_mm", &CameraConfig::aperture_radius_mm)
        .def_readwrite("image_noise_sigma", &CameraConfig::image_noise_sigma)
        .def_readwrite("rng_seed", &CameraConfig::rng_seed)
        .def("to_json", &CameraConfig::to_json)
        .def_static("from_json", &CameraConfig::from_json);

    m.def("accuracy_bounds", [](const CameraConfig& c) {
        const AccuracyBounds b = accuracy_bounds(c);
        py::dict d;
        d["delta_f_um"] = b.delta_f_um;
        d["delta_delta_deg"] = b.delta_delta_deg;
        d["delta_dx_max_px"] = b.delta_dx_max_px;
        d["delta_dy_max_px"] = b.delta_dy_max_px;
        d["spacing_bound_px"] = b.spacing_bound_px;
        d["rotation_bound_deg"] = b.rotation_bound_deg;
        d["offset_bound_px"] = b.offset_bound_px;
        d["i_max"] = b.i_max;
        d["j_max"] = b.j_max;
        d["l_max"] = b.l_max;
        return d;
    });

    m.def(
        "render_white_image",
        [](const CameraConfig& config, int rays_per_pixel, uint64_t seed) {
            SynthesisParams params;
            params.rays_per_pixel = rays_per_pixel;
            params.rng_seed = seed;
            const RenderResult res = render_white_image(config, params);
            py::list centers;
            for (const auto& l : res.truth.lenses)
                centers.append(py::make_tuple(l.index.i, l.index.j,
                                              l.perspective_px.x,
                                              l.perspective_px.y, l.lambda));
            py::dict truth;
            truth["projected_spacing_px"] = res.truth.projected.spacing_px;
            truth["rotation_deg"] = res.truth.projected.rotation_deg;
            truth["offset_px"] = py::make_tuple(res.truth.projected.offset_px.x,
                                                res.truth.projected.offset_px.y);
            truth["centers"] = centers;
            return py::make_tuple(array_from_image(res.image.samples), truth);
        },
        py::arg("config"), py::arg("rays_per_pixel") = 128, py::arg("seed") = 0);

    m.def(
        "mosaic_bayer",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& img,
           const std::string& pattern) {
            WhiteImage wi;
            wi.samples = image_from_array(img);
            const WhiteImage out = mosaic_bayer(
                wi, bayer_pattern_from_name(pattern),
                SynthesisParams().color_response);
            return array_from_image(out.samples);
        },
        py::arg("image"), py::arg("pattern") = "GRBG");

    m.def(
        "estimate_grid",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& img,
           const std::string& method, double main_focal_mm, double ml_focal_um,
           double expected_spacing_px, uint64_t seed, int jobs) {
            const Image<float> wi = image_from_array(img);
            GridModel grid;
            if (method == "baseline") {
                BaselineOptions opt;
                opt.expected_spacing_px = expected_spacing_px;
                opt.jobs = jobs;
                grid = estimate_grid_baseline(wi, opt);
            } else {
                ProposedOptions opt;
                opt.main_focal_mm = main_focal_mm;
                opt.ml_focal_um = ml_focal_um;
                opt.fourier.expected_d_min_px =
                    std::max(4.0, 0.7 * expected_spacing_px);
                opt.fourier.expected_d_max_px = 1.5 * expected_spacing_px;
                if (seed) opt.fourier.de_seed = seed;
                if (jobs) {
                    opt.fourier.jobs = jobs;
                    opt.fourier.fft_threads = jobs;
                }
                grid = estimate_grid_proposed(wi, opt);
            }
            return grid_to_dict(grid);
        },
        py::arg("white_image"), py::arg("method") = "proposed",
        py::arg("main_focal_mm") = 30.0, py::arg("ml_focal_um") = 40.0,
        py::arg("expected_spacing_px") = 14.2857, py::arg("seed") = 0,
        py::arg("jobs") = 0);

    m.def(
        "estimate_spacing_rotation",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& img,
           double d_min, double d_max, uint64_t seed) {
            FourierOptions opt;
            opt.expected_d_min_px = d_min;
            opt.expected_d_max_px = d_max;
            if (seed) opt.de_seed = seed;
            const SpacingRotation sr =
                estimate_spacing_rotation(image_from_array(img), opt);
            py::dict d;
            d["spacing_px"] = sr.spacing_px;
            d["rotation_deg"] = sr.rotation_deg;
            d["objective"] = sr.objective;
            d["hyperparams"] = py::make_tuple(sr.hp.window_sigma, sr.hp.gamma,
                                              sr.hp.stretch_low);
            return d;
        },
        py::arg("white_image"), py::arg("d_min") = 10.0, py::arg("d_max") = 30.0,
        py::arg("seed") = 0);

    m.def(
        "demosaic_malvar",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& img,
           const std::string& pattern) {
            const RgbImage rgb = demosaic_malvar(image_from_array(img),
                                                 bayer_pattern_from_name(pattern));
            py::array_t<float> out({rgb.height(), rgb.width(), 3});
            auto w = out.mutable_unchecked<3>();
            for (int y = 0; y < rgb.height(); ++y)
                for (int x = 0; x < rgb.width(); ++x) {
                    w(y, x, 0) = rgb.r.at(x, y);
                    w(y, x, 1) = rgb.g.at(x, y);
                    w(y, x, 2) = rgb.b.at(x, y);
                }
            return out;
        },
        py::arg("mosaic"), py::arg("pattern") = "GRBG");

    m.def(
        "decode",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& raw,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& white,
           const std::string& pattern, const py::dict& grid_dict, int jobs) {
            GridModel grid;
            grid.spacing_px = grid_dict["spacing_px"].cast<double>();
            grid.rotation_deg = grid_dict["rotation_deg"].cast<double>();
            const auto off = grid_dict["offset_px"].cast<std::pair<double, double>>();
            grid.offset_px = {off.first, off.second};
            grid.set_canonical_basis();
            DecodeOptions options;
            options.jobs = jobs;
            const DecodeResult res =
                decode(image_from_array(raw), image_from_array(white),
                       bayer_pattern_from_name(pattern), grid, options);
            const LightField& lf = res.lf;
            py::array_t<float> out(
                {lf.patch, lf.patch, lf.nt, lf.ns, lf.channels});
            auto w = out.mutable_unchecked<5>();
            for (int u = 0; u < lf.patch; ++u)
                for (int v = 0; v < lf.patch; ++v)
                    for (int t = 0; t < lf.nt; ++t)
                        for (int s = 0; s < lf.ns; ++s)
                            for (int ch = 0; ch < lf.channels; ++ch)
                                w(u, v, t, s, ch) = lf.at(u, v, s, t, ch);
            return out;
        },
        py::arg("raw"), py::arg("white"), py::arg("pattern"), py::arg("grid"),
        py::arg("jobs") = 0);

    m.def("q_g_ideal_expectation", &q_g_ideal_expectation, py::arg("sigma_g"),
          py::arg("M"));
}
