#pragma once

#include "peri/config.hpp"
#include "peri/control.hpp"
#include "peri/telemetry.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace peri::cli {

/// "start:stop:step" (stop inclusive) or "a,b,c".
std::vector<double> parse_range(const std::string& spec);

/// Baseline slope of every compression module, measured one after another on a fresh simulated station.
std::map<int, double> calibrate_station(const RunConfig& cfg, std::vector<control::Event>* log = nullptr);

/// Builds the plant and simulated backend a run starts from.
hal::SimulatedBackend make_backend(const RunConfig& cfg, bool with_object = true);

/// Runs the scenario; telemetry (if given) receives the full CSV including header.
control::StationRun execute_run(const RunConfig& cfg, const std::map<int, double>& baselines,
                                std::ostream* telemetry = nullptr);

struct ReplayReport {
    control::Outcome outcome = control::Outcome::Running;
    std::size_t commands_checked = 0;
    std::size_t mismatches = 0;
    std::size_t unconsumed = 0;
    std::vector<std::string> messages;
};

/// Drives a fresh controller from a recorded telemetry file and checks its commands.
ReplayReport replay_telemetry(const std::vector<TelemetrySample>& rows, const RunConfig& cfg);

void print_summary(std::ostream& out, const control::StationRun& run);

struct CommandOptions {
    std::optional<std::string> config_path;
    std::optional<std::string> out_path;
    std::optional<std::string> baselines_path;
    std::optional<std::string> telemetry_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;
    std::string param;
    std::string range;
};

/// Each returns the process exit code: 0 iff no faults and no parse errors.
int cmd_validate(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_calibrate(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_run(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_sweep(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_replay(const CommandOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace peri::cli
