#include "peri/hal.hpp"

#include <doctest.h>

using namespace peri;
using namespace peri::hal;

namespace {

SimulatedBackend sim(std::optional<plant::ObjectState> obj = std::nullopt) {
    return SimulatedBackend(plant::Plant(plant::StationLayout::uniform(5), geometry::default_material(), {}, obj));
}

// Two modules, samples every ms up to 10 ms, one Inflate on module 1 at 2 ms.
Recording small_recording() {
    Recording r;
    r.module_ids = {1, 2};
    for (Micros t = 0; t <= 10000; t += 1000) {
        r.samples.push_back({t, 1, static_cast<double>(t) / 1000.0});
        r.samples.push_back({t, 2, 0.0});
    }
    r.commands.push_back({2000, 1, ValveMode::Inflate});
    r.plant_events.push_back({5000, "drop: test"});
    return r;
}

}  // namespace

TEST_CASE("simulated backend exposes one full endpoint per module") {
    auto b = sim();
    const auto eps = b.endpoints();
    REQUIRE(eps.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(eps[i].module_id == i + 1);
        CHECK(eps[i].capabilities.count(Capability::ReadPressure) == 1);
        CHECK(eps[i].capabilities.count(Capability::SetValve) == 1);
    }
}

TEST_CASE("unknown module is rejected") {
    auto b = sim();
    CHECK_THROWS_WITH_AS(b.read_pressure(99), "no such endpoint: module 99", NoSuchEndpoint);
    CHECK_THROWS_AS(b.set_valve({99, ValveMode::Inflate, 0.0}), NoSuchEndpoint);
}

TEST_CASE("simulated backend passes plant pressure through") {
    auto b = sim();
    const auto ack = b.set_valve({1, ValveMode::Inflate, 0.0});
    CHECK(ack.module_id == 1);
    CHECK(ack.mode == ValveMode::Inflate);
    for (int i = 0; i < 1500; ++i) b.tick(0.001);
    const auto s = b.read_pressure(1);
    CHECK(s.kPa == doctest::Approx(6.495).epsilon(1e-9));
    CHECK(s.time == doctest::Approx(1.5));
    CHECK(b.read_pressure(2).kPa == 0.0);
}

TEST_CASE("time is integral microseconds") {
    auto b = sim();
    for (int i = 0; i < 100000; ++i) b.tick(0.001);
    CHECK(b.now() == 100.0);
    CHECK(to_micros(0.0015) == 1500);
    CHECK_THROWS_AS(b.tick(0.0), std::invalid_argument);
    CHECK_THROWS_AS(b.tick(1e-9), std::invalid_argument);
}

TEST_CASE("decreasing command timestamps are rejected") {
    auto b = sim();
    for (int i = 0; i < 10; ++i) b.tick(0.001);
    b.set_valve({1, ValveMode::Inflate, 0.01});
    CHECK_THROWS_AS(b.set_valve({1, ValveMode::Hold, 0.005}), HalError);
    CHECK_NOTHROW(b.set_valve({2, ValveMode::Hold, 0.005}));
}

TEST_CASE("fault injection") {
    auto b = sim();
    b.inject_stuck_valve(1, ValveMode::Hold);
    b.set_valve({1, ValveMode::Inflate, 0.0});
    b.set_valve({3, ValveMode::Inflate, 0.0});
    for (int i = 0; i < 1000; ++i) b.tick(0.001);
    CHECK(b.read_pressure(1).kPa == 0.0);
    CHECK(b.read_pressure(3).kPa > 4.0);

    b.inject_blocked_vent(3);
    b.set_valve({3, ValveMode::Deflate, b.now()});
    const double held = b.read_pressure(3).kPa;
    for (int i = 0; i < 1000; ++i) b.tick(0.001);
    CHECK(b.read_pressure(3).kPa == held);
}

TEST_CASE("replay returns the latest sample at or before now") {
    ReplayBackend r(small_recording());
    CHECK(r.read_pressure(1).kPa == 0.0);
    r.tick(0.0015);
    const auto s = r.read_pressure(1);
    CHECK(s.kPa == 1.0);
    CHECK(s.time == doctest::Approx(0.001));
    CHECK_THROWS_AS(r.read_pressure(7), NoSuchEndpoint);
}

TEST_CASE("replay exhaustion") {
    ReplayBackend r(small_recording());
    r.tick(0.002);
    r.set_valve({1, ValveMode::Inflate, 0.002});
    r.tick(0.008);
    CHECK_NOTHROW(r.read_pressure(1));
    r.tick(0.001);
    CHECK(r.exhausted());
    CHECK_THROWS_WITH_AS(r.read_pressure(1), "end of recording", EndOfRecording);
}

TEST_CASE("replay accepts the recorded command stream") {
    ReplayBackend r(small_recording());
    r.tick(0.002);
    CHECK_NOTHROW(r.set_valve({1, ValveMode::Inflate, 0.002}));
    CHECK(r.mismatches() == 0);
    CHECK(r.commands_checked() == 1);
    CHECK(r.unconsumed_commands() == 0);
}

TEST_CASE("replay names both commands on divergence") {
    ReplayBackend r(small_recording());
    r.tick(0.002);
    try {
        r.set_valve({1, ValveMode::Deflate, 0.002});
        FAIL("expected a mismatch");
    } catch (const ReplayMismatch& e) {
        const std::string msg = e.what();
        CHECK(msg.find("command diverges from recording") != std::string::npos);
        CHECK(msg.find("Deflate") != std::string::npos);
        CHECK(msg.find("Inflate") != std::string::npos);
    }
    CHECK(r.mismatches() == 1);
}

TEST_CASE("replay flags commands the controller never issued") {
    ReplayBackend r(small_recording());
    r.tick(0.002);
    CHECK_THROWS_AS(r.tick(0.001), ReplayMismatch);
    CHECK(r.mismatches() == 1);
}

TEST_CASE("replay forwards recorded plant events once") {
    ReplayBackend r(small_recording());
    r.tick(0.002);
    r.set_valve({1, ValveMode::Inflate, 0.002});
    CHECK(r.drain_events().empty());
    r.tick(0.003);
    const auto ev = r.drain_events();
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].text == "drop: test");
    CHECK(r.drain_events().empty());
}
