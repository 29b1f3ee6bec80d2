#include "peri/commands.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace peri;
using namespace peri::cli;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "peristation_test_cli";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string run_csv(const RunConfig& cfg) {
    std::ostringstream out;
    execute_run(cfg, calibrate_station(cfg), &out);
    return out.str();
}

}  // namespace

TEST_CASE("parse_range") {
    CHECK(parse_range("1:10:1").size() == 10);
    CHECK(parse_range("1:4:0.5") == std::vector<double>{1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0});
    CHECK(parse_range("6,8, 20") == std::vector<double>{6.0, 8.0, 20.0});
    CHECK(parse_range("3") == std::vector<double>{3.0});
    CHECK_THROWS(parse_range(""));
    CHECK_THROWS(parse_range("1:2"));
    CHECK_THROWS(parse_range("1:2:0"));
    CHECK_THROWS(parse_range("5:1:1"));
    CHECK_THROWS(parse_range("a,b"));
}

TEST_CASE("csv helpers round trip") {
    CHECK(format_fixed(-0.0) == "0.000000");
    CHECK(format_fixed(4.33) == "4.330000");
    TelemetrySample s{1.5, 3, "Compression", 6.495, "Inflate", 7.47, 0.0, "L0:Grasp", "detect rate=1, ratio=2"};
    const auto back = parse_csv_row(to_csv_row(s));
    CHECK(back.time_s == 1.5);
    CHECK(back.module_id == 3);
    CHECK(back.pressure_kPa == 6.495);
    CHECK(back.event == "detect rate=1; ratio=2");
    CHECK_THROWS(parse_csv_row("1,2,3"));

    std::stringstream b;
    write_baselines(b, {{1, 4.33}, {3, 4.331}});
    const auto rates = read_baselines(b);
    CHECK(rates.at(3) == 4.331);
}

TEST_CASE("calibrate yields 4.33 on every compression module") {
    const auto path = scratch("baselines.csv");
    CommandOptions opt;
    opt.out_path = path.string();
    std::ostringstream out, err;
    REQUIRE(cmd_calibrate(opt, out, err) == 0);
    std::ifstream in(path);
    const auto rates = read_baselines(in);
    REQUIRE(rates.size() == 3);
    for (const auto& [id, r] : rates) CHECK(r == doctest::Approx(4.33).epsilon(1e-4));
}

TEST_CASE("calibrating with the object in place is refused") {
    RunConfig cfg;
    cfg.calibrate_with_object = true;
    CHECK_THROWS_WITH(calibrate_station(cfg), doctest::Contains("contaminated"));
}

TEST_CASE("validate reports per-module status") {
    CommandOptions opt;
    std::ostringstream out, err;
    CHECK(cmd_validate(opt, out, err) == 0);
    CHECK(out.str().find("module 1 (Compression): PASS") != std::string::npos);

    const auto bad = scratch("bad.yaml");
    std::ofstream(bad) << "geometry:\n  outer_radius_R: 40\n";
    opt.config_path = bad.string();
    std::ostringstream out2, err2;
    CHECK(cmd_validate(opt, out2, err2) != 0);
    CHECK(err2.str().find("missing field") != std::string::npos);
}

TEST_CASE("sweep command writes csv and names the argmax") {
    CommandOptions opt;
    opt.param = "N";
    opt.range = "1:10:1";
    std::ostringstream out, err;
    REQUIRE(cmd_sweep(opt, out, err) == 0);
    CHECK(out.str().rfind("value,d_c_over_r\n", 0) == 0);
    CHECK(err.str().find("argmax N=3.000000") != std::string::npos);

    opt.param = "l";
    opt.range = "12,50";
    std::ostringstream out2, err2;
    REQUIRE(cmd_sweep(opt, out2, err2) == 0);
    CHECK(out2.str().find("50.000000,infeasible") != std::string::npos);

    opt.param = "R";
    std::ostringstream out3, err3;
    CHECK(cmd_sweep(opt, out3, err3) != 0);
}

TEST_CASE("identical runs write identical telemetry") {
    RunConfig cfg;
    cfg.plant.noise_sigma = 0.02;
    cfg.plant.rng_seed = 9;
    const auto a = run_csv(cfg);
    const auto b = run_csv(cfg);
    CHECK(a == b);
    cfg.plant.rng_seed = 10;
    CHECK(run_csv(cfg) != a);
}

TEST_CASE("telemetry replays with zero mismatches") {
    RunConfig cfg;
    std::stringstream csv;
    const auto run = execute_run(cfg, calibrate_station(cfg), &csv);
    REQUIRE(run.outcome == control::Outcome::Exited);
    const auto rows = read_telemetry(csv);
    const auto rep = replay_telemetry(rows, cfg);
    CHECK(rep.mismatches == 0);
    CHECK(rep.unconsumed == 0);
    CHECK(rep.commands_checked > 10);
    CHECK(rep.outcome == control::Outcome::EndOfRecording);
}

TEST_CASE("tampered telemetry is caught on replay") {
    RunConfig cfg;
    std::stringstream csv;
    execute_run(cfg, calibrate_station(cfg), &csv);
    auto rows = read_telemetry(csv);
    for (auto& r : rows) {
        if (r.event == "cmd=Deflate") {
            r.event = "cmd=Hold";
            break;
        }
    }
    const auto rep = replay_telemetry(rows, cfg);
    CHECK(rep.mismatches >= 1);
    REQUIRE_FALSE(rep.messages.empty());
    CHECK(rep.messages.front().find("Hold") != std::string::npos);
}

TEST_CASE("run command writes telemetry and a summary") {
    const auto tele = scratch("telemetry.csv");
    CommandOptions opt;
    opt.out_path = tele.string();
    std::ostringstream out, err;
    REQUIRE(cmd_run(opt, out, err) == 0);
    CHECK(out.str().find("outcome: object exited") != std::string::npos);
    CHECK(out.str().find("drops: 0") != std::string::npos);
    CHECK(slurp(tele).rfind(kTelemetryHeader, 0) == 0);

    CommandOptions rp;
    rp.telemetry_path = tele.string();
    std::ostringstream rout, rerr;
    CHECK(cmd_replay(rp, rout, rerr) == 0);
    CHECK(rout.str().find("mismatches: 0") != std::string::npos);
}

TEST_CASE("run exits non-zero on a fault") {
    const auto cfgfile = scratch("fault.yaml");
    std::ofstream(cfgfile) << "object:\n  radius_ratio: 0.4\ncontrol:\n  max_cycles_per_level: 2\n";
    CommandOptions opt;
    opt.config_path = cfgfile.string();
    opt.out_path = scratch("fault.csv").string();
    std::ostringstream out, err;
    CHECK(cmd_run(opt, out, err) == 1);
    CHECK(out.str().find("never detected") != std::string::npos);
}
