#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mlaforge/camera_model.hpp"

using namespace mlaforge;

namespace {

CameraConfig small_config() {
    CameraConfig c = CameraConfig::lytro_illum(30.0);
    c.sensor_px_x = 601;
    c.sensor_px_y = 401;
    return c;
}

}  // namespace

TEST_CASE("ideal lattice matches the hexagonal definition") {
    CameraConfig c = small_config();
    c.ml_diameter_um = 2.0;
    c.grid_noise_sigma_px = 0.0;
    c.pixel_pitch_um = 1.4;
    const auto centers = generate_ideal_centers(c);

    auto find = [&](int i, int j) -> Vec3 {
        for (const auto& l : centers)
            if (l.index.i == i && l.index.j == j) return l.center_um;
        FAIL("missing lens index");
        return {};
    };
    const Vec3 c00 = find(0, 0);
    CHECK(c00.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c00.y == doctest::Approx(0.0).epsilon(1e-12));
    const Vec3 c10 = find(1, 0);
    CHECK(c10.x == doctest::Approx(2.0));
    CHECK(c10.y == doctest::Approx(0.0));
    const Vec3 c01 = find(0, 1);
    CHECK(c01.x == doctest::Approx(1.0));
    CHECK(c01.y == doctest::Approx(1.7320508));
}

TEST_CASE("grid noise standard deviation converts pixels to micrometers") {
    CameraConfig c = CameraConfig::lytro_illum(30.0);
    c.grid_noise_sigma_px = 0.0143;
    const auto centers = generate_ideal_centers(c);
    REQUIRE(centers.size() > 100000);

    const double d = c.ml_diameter_um;
    const double dy = std::sqrt(3.0) * d / 2.0;
    double ss = 0.0;
    int64_t n = 0;
    for (const auto& l : centers) {
        const double shift = (std::abs(l.index.j) % 2 == 1) ? 0.5 : 0.0;
        const double ex = (l.index.i + shift) * d;
        const double ey = l.index.j * dy;
        ss += (l.center_um.x - ex) * (l.center_um.x - ex);
        ss += (l.center_um.y - ey) * (l.center_um.y - ey);
        n += 2;
    }
    const double sd = std::sqrt(ss / (n - 1));
    CHECK(sd == doctest::Approx(0.0143 * 1.4).epsilon(0.02));
}

TEST_CASE("Lytro lens count matches extent divided by pitch") {
    const CameraConfig c = CameraConfig::lytro_illum(30.0);
    const auto centers = generate_ideal_centers(c);
    const auto [w, h] = mla_extent(c);
    const double expect =
        (w / c.ml_diameter_um) * (h / (std::sqrt(3.0) * c.ml_diameter_um / 2.0));
    CHECK(std::abs(static_cast<double>(centers.size()) - expect) <
          0.02 * expect);
}

TEST_CASE("transform is a pure shift for zero rotation") {
    CameraConfig c = small_config();
    c.grid_noise_sigma_px = 0.0;
    const auto ideal = generate_ideal_centers(c);
    const auto moved = transform_centers(ideal, c);
    const double F_um = c.main_focal_um();
    for (size_t k = 0; k < ideal.size(); k += 97) {
        CHECK(moved[k].x == doctest::Approx(ideal[k].center_um.x));
        CHECK(moved[k].y == doctest::Approx(ideal[k].center_um.y));
        CHECK(moved[k].z == doctest::Approx(-F_um));
    }
}

TEST_CASE("quarter turn about z") {
    CameraConfig c = small_config();
    c.grid_rotation_deg = 90.0;
    const Mat3 R = mla_rotation(c);
    const Vec3 v = R * Vec3{1.0, 0.0, 0.0};
    CHECK(v.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(v.y == doctest::Approx(1.0));
    CHECK(v.z == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("tilt at the bound keeps corner z-displacement under p f / d") {
    CameraConfig c = CameraConfig::lytro_illum(30.0);
    const AccuracyBounds b = accuracy_bounds(c);
    const double bound = c.pixel_pitch_um * c.ml_focal_um / c.ml_diameter_um;

    // the tolerance angle solves its defining cubic exactly
    const double dd = deg_to_rad(b.delta_delta_deg);
    const double sx = c.sensor_width_um(), sy = c.sensor_height_um();
    CHECK(dd * (sx + sy) + dd * dd * dd * (5 * sx / 6 + sy / 3) ==
          doctest::Approx(bound).epsilon(1e-9));

    // rotating the MLA corner by the bound angle stays within the depth
    // tolerance for every tilt sign combination
    const auto [w, h] = mla_extent(CameraConfig::lytro_illum(30.0));
    for (int sb : {-1, 1})
        for (int sg : {-1, 1}) {
            c.tilt_beta_deg = sb * b.delta_delta_deg;
            c.tilt_gamma_deg = sg * b.delta_delta_deg;
            const Vec3 corner = mla_rotation(c) * Vec3{w / 2.0, h / 2.0, 0.0};
            CHECK(std::abs(corner.z) <= bound * 1.001);
        }
}

TEST_CASE("mla extent identity and rotation cases") {
    CameraConfig c = CameraConfig::lytro_illum(30.0);
    SUBCASE("identity covers the physical sensor") {
        const auto [w, h] = mla_extent(c);
        CHECK(w == doctest::Approx(10819.2));
        CHECK(h == doctest::Approx(7515.2));
    }
    SUBCASE("in-plane rotation round-trips through the forward map") {
        c.grid_rotation_deg = 5.0;
        const auto [w, h] = mla_extent(c);
        const Mat3 R = mla_rotation(c);
        const Vec3 s = R * Vec3{w, h, 0.0};
        CHECK(s.x == doctest::Approx(c.sensor_width_um()).epsilon(1e-9));
        CHECK(s.y == doctest::Approx(c.sensor_height_um()).epsilon(1e-9));
        CHECK(w >= c.sensor_width_um() - 1e-9);
    }
    SUBCASE("near-degenerate tilt is rejected") {
        c.tilt_gamma_deg = 89.999;
        CHECK_THROWS_AS(mla_extent(c), ModelError);
    }
}

TEST_CASE("perspective projection scaling") {
    CameraConfig c = CameraConfig::lytro_illum(30.0);
    SUBCASE("lambda is (F + f)/F at zero tilt") {
        const Vec3 center{1000.0, 500.0, -c.main_focal_um()};
        const auto proj = project_perspective(center, c);
        CHECK(proj.lambda ==
              doctest::Approx((30000.0 + 40.0) / 30000.0).epsilon(1e-12));
    }
    SUBCASE("axis point is a fixed point") {
        const Vec3 center{0.0, 0.0, -c.main_focal_um()};
        const auto proj = project_perspective(center, c);
        CHECK(proj.px.x == doctest::Approx(c.center_px_x()));
        CHECK(proj.px.y == doctest::Approx(c.center_px_y()));
    }
    SUBCASE("rejects non-negative z") {
        CHECK_THROWS_AS(project_perspective({0.0, 0.0, 1.0}, c), ModelError);
    }
    SUBCASE("restricted-region displacement at the outermost column lens") {
        const double d = c.ml_diameter_um;
        const int i = 271;
        const Vec3 center{i * d, 0.0, -c.main_focal_um()};
        const auto proj = project_perspective(center, c);
        const Vec2 ortho = project_orthogonal(center, c);
        const double diff = (proj.px - ortho).norm();
        CHECK(diff == doctest::Approx(5.16).epsilon(0.01));
    }
}

TEST_CASE("orthogonal projection is a pitch conversion") {
    const CameraConfig c = CameraConfig::lytro_illum(30.0);
    const Vec3 center{1.4, 0.0, -c.main_focal_um()};
    const Vec2 px = project_orthogonal(center, c);
    CHECK(px.x - c.center_px_x() == doctest::Approx(1.0));
    CHECK(px.y - c.center_px_y() == doctest::Approx(0.0));
}

TEST_CASE("accuracy bounds reproduce the Lytro values") {
    const AccuracyBounds b = accuracy_bounds(CameraConfig::lytro_illum(30.0));
    CHECK(b.delta_f_um == doctest::Approx(2.8).epsilon(1e-9));
    CHECK(b.delta_delta_deg == doctest::Approx(0.0088).epsilon(0.01));
    CHECK(std::max(b.delta_dx_max_px, b.delta_dy_max_px) ==
          doctest::Approx(0.0022).epsilon(0.05));
    CHECK(b.spacing_bound_px == doctest::Approx(0.0018).epsilon(0.03));
    CHECK(b.rotation_bound_deg == doctest::Approx(0.0074).epsilon(0.01));
    CHECK(b.offset_bound_px == 0.5);
    CHECK(b.i_max == 271);
    CHECK(b.j_max == 217);
    CHECK(b.l_max == 271);
}

TEST_CASE("bounds scale dimensionally") {
    CameraConfig c = CameraConfig::lytro_illum(30.0);
    const AccuracyBounds b0 = accuracy_bounds(c);
    SUBCASE("doubling the pitch doubles delta_f") {
        c.pixel_pitch_um *= 2.0;
        const AccuracyBounds b1 = accuracy_bounds(c);
        CHECK(b1.delta_f_um == doctest::Approx(2.0 * b0.delta_f_um));
    }
    SUBCASE("doubling the sensor roughly halves the spacing bound") {
        c.sensor_px_x *= 2;
        c.sensor_px_y *= 2;
        const AccuracyBounds b1 = accuracy_bounds(c);
        CHECK(b1.spacing_bound_px ==
              doctest::Approx(b0.spacing_bound_px / 2.0).epsilon(0.01));
    }
    SUBCASE("doubling the microlens diameter halves delta_f") {
        c.ml_diameter_um *= 2.0;
        const AccuracyBounds b1 = accuracy_bounds(c);
        CHECK(b1.delta_f_um == doctest::Approx(b0.delta_f_um / 2.0));
    }
}

TEST_CASE("ground truth geometry invariants") {
    CameraConfig c = small_config();
    c.grid_noise_sigma_px = 0.0;
    c.grid_rotation_deg = 0.7;
    const MlaGroundTruth gt = build_ground_truth(c);
    REQUIRE(gt.lenses.size() > 100);

    SUBCASE("constant lambda at zero tilt") {
        const double lambda0 = (30000.0 + 40.0) / 30000.0;
        for (const auto& l : gt.lenses)
            CHECK(l.lambda == doctest::Approx(lambda0).epsilon(1e-12));
    }
    SUBCASE("perspective is the orthogonal grid scaled about the axis") {
        const Vec2 axis{c.center_px_x(), c.center_px_y()};
        const double lambda0 = (30000.0 + 40.0) / 30000.0;
        double max_dev = 0.0;
        for (const auto& l : gt.lenses) {
            const Vec2 predicted = axis + (l.orthogonal_px - axis) * lambda0;
            max_dev = std::max(max_dev, (predicted - l.perspective_px).norm());
        }
        CHECK(max_dev < 1e-9);
    }
    SUBCASE("perspective centers stay within sensor plus one microlens") {
        const double margin = c.ml_diameter_um / c.pixel_pitch_um;
        for (const auto& l : gt.lenses) {
            CHECK(l.perspective_px.x >= -margin);
            CHECK(l.perspective_px.x <= c.sensor_px_x - 1 + margin);
            CHECK(l.perspective_px.y >= -margin);
            CHECK(l.perspective_px.y <= c.sensor_px_y - 1 + margin);
        }
    }
    SUBCASE("regular lattice recovery at zero noise") {
        const double d_px = c.ml_diameter_um / c.pixel_pitch_um;
        const double a = deg_to_rad(c.grid_rotation_deg);
        const Vec2 axis{c.center_px_x(), c.center_px_y()};
        double max_dev = 0.0;
        for (const auto& l : gt.lenses) {
            const double shift = (std::abs(l.index.j) % 2 == 1) ? 0.5 : 0.0;
            const Vec2 lattice{(l.index.i + shift) * d_px,
                               l.index.j * std::sqrt(3.0) * d_px / 2.0};
            const Vec2 predicted = axis + rotate(lattice, a);
            max_dev = std::max(max_dev, (predicted - l.orthogonal_px).norm());
        }
        CHECK(max_dev < 1e-9);
    }
}

TEST_CASE("lambda decreases toward 1 as F grows") {
    double prev = 1e9;
    for (double F : {30.0, 47.0, 117.0, 249.0}) {
        CameraConfig c = small_config();
        c.main_focal_mm = F;
        c.aperture_distance_mm = F;
        const MlaGroundTruth gt = build_ground_truth(c);
        const double lambda = gt.lenses.front().lambda;
        CHECK(lambda > 1.0);
        CHECK(lambda < prev);
        prev = lambda;
    }
}

TEST_CASE("ground truth round-trips through JSON + CSV") {
    namespace fs = std::filesystem;
    CameraConfig c = small_config();
    c.grid_rotation_deg = 0.2;
    c.grid_offset_um_x = 3.0;
    const MlaGroundTruth gt = build_ground_truth(c);
    const auto dir = fs::temp_directory_path() / "mlaforge_gt_test";
    fs::create_directories(dir);
    save_ground_truth(gt, c, (dir / "gt.json").string(),
                      (dir / "gt.csv").string());
    const MlaGroundTruth back = load_ground_truth((dir / "gt.json").string());
    REQUIRE(back.lenses.size() == gt.lenses.size());
    CHECK(back.projected.spacing_px ==
          doctest::Approx(gt.projected.spacing_px).epsilon(1e-9));
    CHECK(back.projected.offset_px.x ==
          doctest::Approx(gt.projected.offset_px.x).epsilon(1e-7));
    CHECK(back.lenses[42].perspective_px.x ==
          doctest::Approx(gt.lenses[42].perspective_px.x).epsilon(1e-8));
    fs::remove_all(dir);
}

TEST_CASE("no lens reaching the sensor is rejected") {
    CameraConfig c = small_config();
    c.grid_offset_um_x = 1e9;  // pushes the whole array off the sensor
    CHECK_THROWS_AS(build_ground_truth(c), ModelError);
}
