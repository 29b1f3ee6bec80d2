#include "peri/control.hpp"

#include <doctest.h>

#include <map>

using namespace peri;
using namespace peri::control;

namespace {

plant::ObjectState object(double ratio, double z = 0.0, double length = 85.0) {
    plant::ObjectState o;
    o.spec.radius_r_o = ratio * 25.0;
    o.spec.length_L_o = length;
    o.z = z;
    return o;
}

hal::SimulatedBackend make_sim(std::optional<plant::ObjectState> obj, int modules = 5) {
    return hal::SimulatedBackend(
        plant::Plant(plant::StationLayout::uniform(modules), geometry::default_material(), {}, std::move(obj)));
}

ControllerConfig config(int modules = 5) {
    ControllerConfig c;
    for (int id = 1; id <= modules; id += 2) c.detection.baseline_rates[id] = 4.33;
    return c;
}

// Inflates module 5 around an object sitting in it and records the first 2.5 s.
PressureTrace probe_trace(double ratio) {
    auto b = make_sim(object(ratio, 70.0, 30.0));
    PressureTrace trace;
    b.set_valve({5, ValveMode::Inflate, 0.0});
    trace.samples.push_back(b.read_pressure(5));
    while (b.now() < 2.5 - 1e-9) {
        b.tick(0.001);
        trace.samples.push_back(b.read_pressure(5));
    }
    return trace;
}

}  // namespace

TEST_CASE("least squares slope of an exact line") {
    std::vector<hal::PressureSample> s;
    for (int i = 0; i < 50; ++i) s.push_back({3.0 + 2.5 * i * 0.01, i * 0.01});
    CHECK(least_squares_slope(s) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK_THROWS(least_squares_slope(std::span<const hal::PressureSample>(s.data(), 1)));
}

TEST_CASE("detection ratios follow the object radius") {
    DetectionConfig cfg;
    cfg.baseline_rates[5] = 4.33;
    const std::map<double, double> expected{{0.4, 1.0}, {0.5, 1.0}, {0.6, 1.31086}, {0.7, 1.958260}, {0.8, 2.27791}};
    double previous = 0.0;
    for (const auto& [ratio, want] : expected) {
        const auto r = detect_contact(5, probe_trace(ratio), cfg);
        CHECK(r.ratio == doctest::Approx(want).epsilon(1e-4));
        CHECK(r.contact == (want > cfg.threshold_ratio_theta));
        CHECK(r.ratio >= previous);
        previous = r.ratio;
    }
}

TEST_CASE("window stops at saturation") {
    DetectionConfig cfg;
    const auto w07 = window_samples(probe_trace(0.7), cfg);
    const auto w08 = window_samples(probe_trace(0.8), cfg);
    CHECK(w07.size() == 971);
    CHECK(w08.size() == 555);
    for (const auto& s : w08) CHECK(s.kPa < cfg.saturation_kPa);
    CHECK(window_samples(probe_trace(0.4), cfg).size() == 1001);
}

TEST_CASE("detection errors") {
    DetectionConfig cfg;
    CHECK_THROWS_WITH_AS(detect_contact(5, probe_trace(0.7), cfg), doctest::Contains("no baseline"), ControlError);
    cfg.baseline_rates[5] = 4.33;
    PressureTrace short_trace;
    short_trace.samples = {{0.0, 0.0}, {0.1, 0.1}};
    CHECK_THROWS_WITH_AS(detect_contact(5, short_trace, cfg), doctest::Contains("insufficient trace"), ControlError);
    cfg.threshold_ratio_theta = 0.0;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("baseline calibration") {
    auto b = make_sim(std::nullopt);
    ControllerConfig cfg;
    std::vector<Event> log;
    const double rate = calibrate_baseline(b, 3, cfg, 0.001, &log);
    CHECK(rate == doctest::Approx(4.33).epsilon(1e-4));
    CHECK(cfg.detection.baseline_rates.at(3) == rate);
    CHECK(b.read_pressure(3).kPa <= cfg.deflated_kPa);
    CHECK_FALSE(log.empty());

    auto contaminated = make_sim(object(0.7));
    CHECK_THROWS_WITH_AS(calibrate_baseline(contaminated, 1, cfg, 0.001), doctest::Contains("contaminated"),
                         ControlError);
}

TEST_CASE("controller needs baselines for probe modules") {
    ControllerConfig cfg;
    CHECK_THROWS_AS(Controller(plant::StationLayout::uniform(5), cfg), ControlError);
    cfg.enable_probing = false;
    CHECK_NOTHROW(Controller(plant::StationLayout::uniform(5), cfg));
}

TEST_CASE("grasp closes both compression modules of a level") {
    auto b = make_sim(object(0.7));
    const auto run = grasp(b, config(), 0, {});
    CHECK(run.outcome == Outcome::GraspComplete);
    CHECK(b.plant().object()->supporters == std::vector<int>{1, 3});
    CHECK(run.faults == 0);
}

TEST_CASE("transport cycles advance one stroke each") {
    auto b = make_sim(object(0.7));
    const auto run = transport_cycles(b, config(), 0, 3, {});
    CHECK(run.outcome == Outcome::CycleBudget);
    CHECK(run.cycles == 3);
    CHECK(run.final_object_z == doctest::Approx(18.0).epsilon(1e-9));
    CHECK(run.drops == 0);
    CHECK_THROWS(transport_cycles(b, config(), 0, 0, {}));
}

TEST_CASE("full run at 0.7 r is detected, promoted and exits") {
    auto b = make_sim(object(0.7));
    double last_z = 0.0;
    bool monotone = true;
    const auto run = run_station(b, config(), {}, [&](double, std::size_t) {
        const double z = b.plant().object()->z;
        if (z < last_z) monotone = false;
        last_z = z;
    });
    CHECK(run.outcome == Outcome::Exited);
    CHECK(run.detections == 2);
    CHECK(run.faults == 0);
    CHECK(run.drops == 0);
    CHECK(monotone);
    bool promoted = false;
    for (const auto& e : run.events) promoted = promoted || e.kind == EventKind::Promoted;
    CHECK(promoted);
}

TEST_CASE("property: valve commands are edge triggered") {
    auto b = make_sim(object(0.7));
    const auto run = run_station(b, config(), {});
    std::map<int, ValveMode> last;
    for (const auto& e : run.events) {
        if (e.kind != EventKind::Command) continue;
        REQUIRE(e.command);
        auto it = last.find(e.module_id);
        if (it != last.end()) CHECK(it->second != *e.command);
        last[e.module_id] = *e.command;
    }
}

TEST_CASE("thin object is carried without detection") {
    auto b = make_sim(object(0.4));
    const auto run = run_station(b, config(), {});
    CHECK(run.detections == 0);
    CHECK(run.drops == 0);
    CHECK(run.faults == 0);
    CHECK(run.final_object_z > run.initial_object_z);
}

TEST_CASE("undetectable object stops before the base unit runs out") {
    auto b = make_sim(object(0.7, 0.0, 60.0));
    const auto run = run_station(b, config(), {});
    CHECK(run.outcome == Outcome::Undetectable);
    CHECK(run.drops == 0);
    CHECK(run.final_object_z == doctest::Approx(18.0));
}

TEST_CASE("a single fundamental unit ends at end of travel") {
    auto b = make_sim(object(0.7, 0.0, 42.0), 3);  // reaches 2 mm into C3
    const auto run = run_station(b, config(3), {});
    CHECK(run.outcome == Outcome::EndOfTravel);
    CHECK(run.drops == 0);
}

TEST_CASE("per-level cycle limit is a fault") {
    auto b = make_sim(object(0.4));
    auto cfg = config();
    cfg.max_cycles_per_level = 2;
    const auto run = run_station(b, cfg, {});
    CHECK(run.outcome == Outcome::Fault);
    CHECK(run.faults == 1);
    bool named = false;
    for (const auto& e : run.events) named = named || e.text.find("never detected") != std::string::npos;
    CHECK(named);
}

TEST_CASE("stuck valve and blocked vent time out") {
    auto stuck = make_sim(object(0.7));
    stuck.inject_stuck_valve(3, ValveMode::Hold);
    auto run = run_station(stuck, config(), {});
    CHECK(run.outcome == Outcome::Fault);
    CHECK(run.events.back().time < 15.0);

    auto blocked = make_sim(object(0.7));
    blocked.inject_blocked_vent(1);
    run = run_station(blocked, config(), {});
    CHECK(run.outcome == Outcome::Fault);
    bool timeout = false;
    for (const auto& e : run.events) timeout = timeout || e.text.find("timeout") != std::string::npos;
    CHECK(timeout);
}

TEST_CASE("a reported drop is fatal") {
    Controller ctl(plant::StationLayout::uniform(5), config());
    ctl.notify({1.0, "drop: object dropped from z=6 to z=0"});
    CHECK(ctl.finished());
    CHECK(ctl.outcome() == Outcome::Fault);
    CHECK(ctl.faults() == 1);
}

TEST_CASE("duration limit") {
    auto b = make_sim(object(0.7));
    const auto run = run_station(b, config(), {0.001, 5.0});
    CHECK(run.outcome == Outcome::DurationElapsed);
    CHECK(b.now() == doctest::Approx(5.0));
}
