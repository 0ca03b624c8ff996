#include <doctest.h>

#include <cmath>

#include "mlaforge/grid_fourier.hpp"
#include "synthetic_lattice.hpp"

using namespace mlaforge;
using mlaforge::testing::hex_disc_image;

namespace {

// reduced search budget; binary lattices are insensitive to the
// hyperparameters, and the full budget belongs to the acceptance run
FourierOptions fast_options(uint64_t seed = 0x5eed) {
    FourierOptions opt;
    opt.de_population = 8;
    opt.de_max_generations = 10;
    opt.de_patience = 3;
    opt.de_seed = seed;
    return opt;
}

}  // namespace

TEST_CASE("preprocess stretches and compresses") {
    Image<float> img(3, 1);
    img.at(0, 0) = 0.99f;
    img.at(1, 0) = 0.2f;
    img.at(2, 0) = 0.595f;
    Hyperparams hp{100.0, 1.0, 0.2};
    SUBCASE("linear map endpoints and midpoint at gamma 1") {
        const auto out = preprocess(img, hp);
        CHECK(out.at(0, 0) == doctest::Approx(1.0));
        CHECK(out.at(1, 0) == doctest::Approx(0.0));
        CHECK(out.at(2, 0) == doctest::Approx(0.5).epsilon(1e-6));
    }
    SUBCASE("gamma compression of the midpoint") {
        hp.gamma = 0.05;
        const auto out = preprocess(img, hp);
        CHECK(out.at(2, 0) == doctest::Approx(std::pow(0.5, 0.05)).epsilon(1e-6));
        CHECK(out.at(2, 0) == doctest::Approx(0.9659).epsilon(1e-4));
    }
    SUBCASE("binary images are fixed points for small gamma") {
        Image<float> bin(4, 1);
        bin.at(0, 0) = 0.0f;
        bin.at(1, 0) = 1.0f;
        bin.at(2, 0) = 1.0f;
        bin.at(3, 0) = 0.0f;
        hp.gamma = 0.01;
        const auto out = preprocess(bin, hp);
        CHECK(out.at(0, 0) == 0.0f);
        CHECK(out.at(1, 0) == 1.0f);
    }
    SUBCASE("invalid stretch bound") {
        hp.stretch_low = 0.995;
        CHECK_THROWS_AS(preprocess(img, hp), EstimationError);
    }
}

TEST_CASE("windows leave the center untouched and zero the Hann edge") {
    const int n = 257;  // odd: integer center
    Image<float> img(n, n, 1.0f);
    const auto out = apply_windows(img, 100.0);
    REQUIRE(out.width() == n);
    CHECK(out.at(n / 2, n / 2) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(out.at(0, n / 2) == doctest::Approx(0.0).epsilon(1e-9));
    // Fourier-domain width of the Gaussian window: rho = 1/(2 pi sigma)
    CHECK(1.0 / (2.0 * kPi * 100.0) == doctest::Approx(0.0016).epsilon(0.01));
}

TEST_CASE("spectrum basics") {
    SUBCASE("constant image concentrates at DC") {
        Image<float> img(64, 64, 1.0f);
        const Spectrum spec = compute_spectrum(img, 1);
        const double dc = spec.mag_at(0, 0);
        double off_dc = 0.0;
        for (int by = 1; by < 32; ++by) off_dc = std::max(off_dc, spec.mag_at(3, by));
        CHECK(dc == doctest::Approx(64.0 * 64.0));
        CHECK(off_dc < 1e-3 * dc);
    }
    SUBCASE("pure cosine shows symmetric peaks at its frequency") {
        const int n = 60;
        Image<float> img(n, n);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                img.at(x, y) =
                    static_cast<float>(std::cos(2.0 * kPi * x / 15.0));
        const Spectrum spec = compute_spectrum(img, 2);
        // expected peak at (1/15, 0)
        int bx, by;
        spec.freq_to_bin({1.0 / 15.0, 0.0}, bx, by);
        const double peak = spec.mag_at(bx, by);
        CHECK(peak > 100.0 * spec.mag_at(bx, by + 20));
        CHECK(spec.mag_at(-bx, by) == doctest::Approx(peak));
    }
}

TEST_CASE("hex lattice fundamental spacing in the frequency domain") {
    const auto img = hex_disc_image(512, 512, 15.0, 0.0);
    const Image<float> windowed = apply_windows(img, 60.0);
    const Spectrum spec = compute_spectrum(windowed, 2);
    const FrequencyPeaks peaks = detect_peaks(spec, 10.0, 30.0, 5);
    // smallest distance between frequency basis vectors: 2/(sqrt(3) d)
    const double expected = 2.0 / (std::sqrt(3.0) * 15.0);
    CHECK(expected == doctest::Approx(0.0770).epsilon(2e-3));
    CHECK(peaks.harmonics[0][0].norm() == doctest::Approx(expected).epsilon(1e-3));
    CHECK(peaks.harmonics[1][0].norm() == doctest::Approx(expected).epsilon(1e-3));

    SUBCASE("harmonic ladder is tight on an ideal lattice") {
        CHECK(peaks.harmonics[0].size() >= 3);
        CHECK(peaks.spread[0] < 1e-4);
        CHECK(peaks.spread[1] < 1e-4);
    }
    SUBCASE("harmonic consistency") {
        for (int dir = 0; dir < 2; ++dir) {
            const Vec2 f1 = peaks.harmonics[dir][0];
            for (size_t n = 1; n < peaks.harmonics[dir].size(); ++n) {
                const Vec2 fn = peaks.harmonics[dir][n] /
                                static_cast<double>(n + 1);
                CHECK((fn - f1).norm() <
                      std::max(3.0 * peaks.spread[dir], 1e-4));
            }
        }
    }
}

TEST_CASE("freq_to_spatial inverts the basis relation") {
    SUBCASE("hexagonal example") {
        const Vec2 f1{-1.0 / (2.0 * std::sqrt(3.0)), 0.5};
        const Vec2 f2{1.0 / std::sqrt(3.0), 0.0};
        const auto [b1, b2] = freq_to_spatial(f1, f2);
        CHECK(b1.x == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(b1.y == doctest::Approx(2.0));
        CHECK(b2.x == doctest::Approx(std::sqrt(3.0)));
        CHECK(b2.y == doctest::Approx(1.0));
    }
    SUBCASE("identity") {
        const auto [b1, b2] = freq_to_spatial({1, 0}, {0, 1});
        CHECK(b1.x == doctest::Approx(1.0));
        CHECK(b1.y == doctest::Approx(0.0));
        CHECK(b2.x == doctest::Approx(0.0));
        CHECK(b2.y == doctest::Approx(1.0));
    }
    SUBCASE("round-trip to machine precision") {
        const Vec2 f1{0.0461, 0.0642}, f2{0.0785, -0.0133};
        const auto [b1, b2] = freq_to_spatial(f1, f2);
        CHECK(b1.x * f1.x + b1.y * f1.y == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(b1.x * f2.x + b1.y * f2.y ==
              doctest::Approx(0.0).epsilon(1e-12));
        CHECK(b2.x * f2.x + b2.y * f2.y == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(b2.x * f1.x + b2.y * f1.y ==
              doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("collinear inputs are rejected") {
        CHECK_THROWS_AS(freq_to_spatial({0.1, 0.2}, {0.2, 0.4}),
                        EstimationError);
    }
}

TEST_CASE("spread objective") {
    FrequencyPeaks peaks;
    SUBCASE("perfectly equispaced harmonics give zero") {
        for (int dir = 0; dir < 2; ++dir) {
            for (int n = 1; n <= 5; ++n)
                peaks.harmonics[dir].push_back({0.077 * n, 0.0});
            peaks.spread[dir] = 0.0;
        }
        // spreads are computed by detect_peaks; emulate its gap statistic
        CHECK(spread_objective(peaks) == doctest::Approx(0.0));
    }
    SUBCASE("documented gap set") {
        const double gaps[4] = {0.0770, 0.0772, 0.0770, 0.0772};
        for (int dir = 0; dir < 2; ++dir) {
            peaks.harmonics[dir].assign(5, Vec2{0, 0});
            double x = 0.0;
            for (int n = 0; n < 5; ++n) {
                peaks.harmonics[dir][n] = {x, 0.0};
                if (n < 4) x += gaps[n];
            }
            // sample standard deviation of the gaps
            double mean = 0.0;
            for (double g : gaps) mean += g / 4.0;
            double ss = 0.0;
            for (double g : gaps) ss += (g - mean) * (g - mean);
            peaks.spread[dir] = std::sqrt(ss / 3.0);
        }
        CHECK(peaks.spread[0] == doctest::Approx(0.0001155).epsilon(1e-3));
        CHECK(spread_objective(peaks) == doctest::Approx(0.000231).epsilon(1e-3));
    }
    SUBCASE("needs three harmonics") {
        peaks.harmonics[0].assign(2, Vec2{0.077, 0.0});
        peaks.harmonics[1].assign(5, Vec2{0.077, 0.0});
        CHECK_THROWS_AS(spread_objective(peaks), EstimationError);
    }
}

TEST_CASE("spacing and rotation recovery on ideal lattices") {
    SUBCASE("axis-aligned lattice, spacing 15") {
        const auto img = hex_disc_image(512, 512, 15.0, 0.0);
        const auto sr = estimate_spacing_rotation(img, fast_options());
        CHECK(sr.spacing_px == doctest::Approx(15.0).epsilon(1e-3 / 15.0));
        CHECK(std::abs(sr.rotation_deg) < 1e-3);
    }
    SUBCASE("one-degree rotation") {
        const auto img = hex_disc_image(512, 512, 15.0, 1.0);
        const auto sr = estimate_spacing_rotation(img, fast_options());
        CHECK(sr.spacing_px == doctest::Approx(15.0).epsilon(1e-3 / 15.0));
        CHECK(sr.rotation_deg == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("estimator equivariances on regenerated lattices") {
    const auto base = estimate_spacing_rotation(
        hex_disc_image(512, 512, 15.0, 0.5), fast_options());

    SUBCASE("rotation equivariance") {
        const auto rot = estimate_spacing_rotation(
            hex_disc_image(512, 512, 15.0, 1.5), fast_options());
        CHECK(rot.rotation_deg - base.rotation_deg ==
              doctest::Approx(1.0).epsilon(2e-3));
    }
    SUBCASE("scale equivariance") {
        const auto scaled = estimate_spacing_rotation(
            hex_disc_image(512, 512, 16.5, 0.5), fast_options());
        CHECK(scaled.spacing_px / base.spacing_px ==
              doctest::Approx(1.1).epsilon(1e-3));
    }
    SUBCASE("translation invariance") {
        const auto moved = estimate_spacing_rotation(
            hex_disc_image(512, 512, 15.0, 0.5, {3.7, -2.2}), fast_options());
        CHECK(std::abs(moved.spacing_px - base.spacing_px) < 1e-4 * 15.0);
        CHECK(std::abs(moved.rotation_deg - base.rotation_deg) < 1e-4);
    }
}

TEST_CASE("differential evolution contract") {
    const auto img = hex_disc_image(384, 384, 15.0, 0.3);
    SUBCASE("deterministic for a fixed seed") {
        const auto a = estimate_spacing_rotation(img, fast_options(42));
        const auto b = estimate_spacing_rotation(img, fast_options(42));
        CHECK(a.spacing_px == b.spacing_px);
        CHECK(a.rotation_deg == b.rotation_deg);
        CHECK(a.hp.window_sigma == b.hp.window_sigma);
        CHECK(a.hp.gamma == b.hp.gamma);
        CHECK(a.hp.stretch_low == b.hp.stretch_low);
        CHECK(a.objective == b.objective);
    }
    SUBCASE("degenerate search space returns the single point") {
        FourierOptions opt = fast_options();
        opt.sigma_min = opt.sigma_max = 120.0;
        opt.gamma_min = opt.gamma_max = 0.1;
        opt.q_min = opt.q_max = 0.3;
        const OptimizeResult res = optimize_hyperparams(img, opt);
        CHECK(res.hp.window_sigma == 120.0);
        CHECK(res.hp.gamma == 0.1);
        CHECK(res.hp.stretch_low == 0.3);
        CHECK(res.evaluations == 1);
    }
    SUBCASE("noiseless synthetic lattice reaches a tight objective") {
        const OptimizeResult res = optimize_hyperparams(img, fast_options());
        CHECK(res.objective < 1e-5);
    }
    SUBCASE("featureless image has no lattice") {
        Image<float> flat(256, 256, 0.5f);
        CHECK_THROWS_AS(optimize_hyperparams(flat, fast_options()),
                        EstimationError);
    }
}
