#include "peri/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace peri::geometry;

namespace {
constexpr double kTight = 1e-9;

RingGeometry random_valid_ring(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> rin(5.0, 40.0), wall(0.5, 4.0), gap(0.0, 10.0);
    std::uniform_int_distribution<int> count(2, 12);
    RingGeometry g;
    g.inner_radius_r = rin(rng);
    g.outer_radius_R = g.inner_radius_r + 5.0 + rin(rng) * 0.5;
    g.wall_thickness_t = wall(rng);
    g.chamber_count_N = count(rng);
    g.chamber_spacing_l = gap(rng);
    const double arc = M_PI * (g.outer_radius_R + g.inner_radius_r) / g.chamber_count_N;
    if (g.chamber_spacing_l >= arc) g.chamber_spacing_l = 0.5 * arc;
    g.chamber_length_s = solve_chamber_length(g.outer_radius_R, g.inner_radius_r, g.chamber_spacing_l, g.chamber_count_N);
    return g;
}
}  // namespace

TEST_CASE("default ring passes with 0.1% arc error") {
    const auto rep = validate_geometry(RingGeometry{});
    CHECK(rep.pass);
    CHECK(rep.violations.empty());
    CHECK(rep.arc_relative_error == doctest::Approx(0.000996664900103032).epsilon(1e-12));
}

TEST_CASE("validation names every broken rule") {
    RingGeometry g;
    g.outer_radius_R = 20.0;  // below r
    auto rep = validate_geometry(g);
    CHECK_FALSE(rep.pass);
    CHECK(rep.violates(rule::kOuterGreaterInner));

    g = RingGeometry{};
    g.chamber_count_N = 0;
    CHECK(validate_geometry(g).violates(rule::kChamberCount));

    g = RingGeometry{};
    g.wall_thickness_t = 0.0;
    CHECK(validate_geometry(g).violates(rule::kWallPositive));

    g = RingGeometry{};
    g.chamber_length_s = 40.0;
    CHECK(validate_geometry(g).violates(rule::kArcConstraint));

    g = RingGeometry{};
    g.inner_radius_r = std::nan("");
    CHECK(validate_geometry(g).violates(rule::kFinite));
}

TEST_CASE("solve_chamber_length closes the arc") {
    CHECK(solve_chamber_length(40, 25, 12, 5) == doctest::Approx(28.840704496667307).epsilon(kTight));
    CHECK(solve_chamber_length(40, 25, 12, 3) == doctest::Approx(56.06784082777885).epsilon(kTight));
    CHECK_THROWS_AS(solve_chamber_length(40, 25, 50, 5), GeometryError);
}

TEST_CASE("uniformity factor") {
    CHECK(uniformity_factor(1) == 0.0);
    CHECK(uniformity_factor(3) == doctest::Approx(1.0 - std::exp(-1.0)));
    for (int n = 1; n < 30; ++n) CHECK(uniformity_factor(n + 1) >= uniformity_factor(n));
}

TEST_CASE("default material hits 0.69 at 15 kPa") {
    const auto mat = default_material();
    CHECK(mat.calibration_kappa == doctest::Approx(8.135110864016251).epsilon(kTight));
    CHECK(surrogate_inflation(RingGeometry{}, mat, kDefaultPressure) == doctest::Approx(0.69).epsilon(kTight));
    CHECK(surrogate_inflation(RingGeometry{}, mat, 0.0) == 0.0);
}

TEST_CASE("surrogate rejects bad inputs") {
    RingGeometry bad;
    bad.outer_radius_R = 10.0;
    CHECK_THROWS_AS(surrogate_inflation(bad, default_material(), 15.0), GeometryError);
    CHECK_THROWS_AS(surrogate_inflation(RingGeometry{}, default_material(), -1.0), GeometryError);
    RingGeometry one;
    one.chamber_count_N = 1;
    one.chamber_length_s = solve_chamber_length(40, 25, 12, 1);
    CHECK_THROWS_WITH_AS(calibrate_kappa(one, 100.0, 0.69, 15.0), doctest::Contains("uncalibratable"), GeometryError);
}

TEST_CASE("property: inflation is linear and monotone in pressure") {
    std::mt19937_64 rng(7);
    const auto mat = default_material();
    for (int i = 0; i < 200; ++i) {
        const auto g = random_valid_ring(rng);
        REQUIRE(validate_geometry(g).pass);
        const double a = surrogate_inflation(g, mat, 5.0);
        const double b = surrogate_inflation(g, mat, 10.0);
        CHECK(a >= 0.0);
        CHECK(b >= a);
        CHECK(b == doctest::Approx(2.0 * a).epsilon(1e-12));
    }
}

TEST_CASE("property: calibrate_kappa inverts the surrogate") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> target(0.1, 0.9);
    for (int i = 0; i < 100; ++i) {
        const auto g = random_valid_ring(rng);
        const double want = target(rng);
        SurrogateMaterial mat;
        mat.calibration_kappa = calibrate_kappa(g, mat.youngs_modulus_E, want, 15.0);
        CHECK(surrogate_inflation(g, mat, 15.0) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("N sweep matches frozen values and peaks at N=3") {
    const std::vector<double> expected{0.0, 0.48641, 0.86496, 0.8526, 0.69098, 0.53671, 0.41903, 0.33009, 0.26088, 0.2055};
    std::vector<double> ns;
    for (int n = 1; n <= 10; ++n) ns.push_back(n);
    const auto res = sweep(RingGeometry{}, default_material(), 15.0, SweepParameter::N, ns);
    REQUIRE(res.samples.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
        REQUIRE(res.samples[i].inflation);
        CHECK(*res.samples[i].inflation == doctest::Approx(expected[i]).epsilon(2e-4));
    }
    REQUIRE(res.argmax());
    CHECK(res.samples[*res.argmax()].value == 3.0);
}

TEST_CASE("t and l sweeps decrease strictly") {
    std::vector<double> ts, ls;
    for (double t = 1.0; t <= 4.0 + 1e-9; t += 0.25) ts.push_back(t);
    for (double l = 6.0; l <= 20.0 + 1e-9; l += 1.0) ls.push_back(l);
    for (auto [param, values] : {std::pair{SweepParameter::t, ts}, std::pair{SweepParameter::l, ls}}) {
        const auto res = sweep(RingGeometry{}, default_material(), 15.0, param, values);
        for (std::size_t i = 1; i < res.samples.size(); ++i) {
            REQUIRE(res.samples[i].inflation);
            CHECK(*res.samples[i].inflation < *res.samples[i - 1].inflation);
        }
    }
}

TEST_CASE("sweep edge cases") {
    CHECK_THROWS_WITH_AS(sweep(RingGeometry{}, default_material(), 15.0, SweepParameter::N, {}),
                         doctest::Contains("empty sweep"), GeometryError);
    CHECK_THROWS_AS(sweep(RingGeometry{}, default_material(), 15.0, SweepParameter::t, {2.0, 1.0}), GeometryError);
    // l large enough that the chambers no longer fit
    const auto res = sweep(RingGeometry{}, default_material(), 15.0, SweepParameter::l, {12.0, 50.0});
    CHECK(res.samples[0].inflation);
    CHECK_FALSE(res.samples[1].inflation);
    CHECK_FALSE(res.samples[1].note.empty());
    CHECK(parse_sweep_parameter("N") == SweepParameter::N);
    CHECK_FALSE(parse_sweep_parameter("R"));
}
