#include "peri/commands.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace peri::cli {

namespace {

double parse_number(const std::string& s, const std::string& whole) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && *b == ' ') ++b;
    while (e > b && e[-1] == ' ') --e;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (b == e || ec != std::errc{} || ptr != e || !std::isfinite(v)) {
        throw std::invalid_argument("bad range '" + whole + "': '" + s + "' is not a number");
    }
    return v;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) return out;
        start = pos + 1;
    }
}

RunConfig load(const CommandOptions& opt) {
    RunConfig cfg = opt.config_path ? load_config(*opt.config_path) : RunConfig{};
    if (opt.seed) cfg.plant.rng_seed = *opt.seed;
    if (opt.duration) {
        if (!(*opt.duration > 0.0)) throw ConfigError("--duration must be > 0");
        cfg.duration_s = *opt.duration;
    }
    cfg.validate();
    return cfg;
}

std::map<int, double> load_baselines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open baselines file '" + path + "'");
    return read_baselines(in);
}

// What the CSV would give back; keeps a run and its replay on identical baselines.
std::map<int, double> as_written(const std::map<int, double>& rates) {
    std::map<int, double> out;
    for (const auto& [id, r] : rates) out[id] = std::stod(format_fixed(r));
    return out;
}

control::ControllerConfig controller_config(const RunConfig& cfg, const std::map<int, double>& baselines) {
    auto c = cfg.control;
    c.detection.baseline_rates = baselines;
    return c;
}

}  // namespace

std::vector<double> parse_range(const std::string& spec) {
    if (spec.empty()) throw std::invalid_argument("empty range");
    std::vector<double> out;
    if (spec.find(':') != std::string::npos) {
        auto parts = split_on(spec, ':');
        if (parts.size() != 3) throw std::invalid_argument("bad range '" + spec + "': expected start:stop:step");
        const double start = parse_number(parts[0], spec);
        const double stop = parse_number(parts[1], spec);
        const double step = parse_number(parts[2], spec);
        if (!(step > 0.0)) throw std::invalid_argument("bad range '" + spec + "': step must be > 0");
        if (stop < start) throw std::invalid_argument("bad range '" + spec + "': stop < start");
        const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        if (n > 100000) throw std::invalid_argument("bad range '" + spec + "': too many values");
        for (std::size_t i = 0; i < n; ++i) out.push_back(start + static_cast<double>(i) * step);
        return out;
    }
    for (const auto& p : split_on(spec, ',')) out.push_back(parse_number(p, spec));
    return out;
}

hal::SimulatedBackend make_backend(const RunConfig& cfg, bool with_object) {
    std::optional<plant::ObjectState> obj;
    if (with_object) obj = cfg.initial_object();
    return hal::SimulatedBackend(plant::Plant(cfg.station, cfg.material, cfg.plant, obj));
}

std::map<int, double> calibrate_station(const RunConfig& cfg, std::vector<control::Event>* log) {
    auto sim = make_backend(cfg, cfg.calibrate_with_object);
    auto ccfg = cfg.control;
    for (const auto& m : cfg.station.modules) {
        if (m.kind != plant::ModuleKind::Compression) continue;
        control::calibrate_baseline(sim, m.id, ccfg, cfg.plant.dt, log);
    }
    return ccfg.detection.baseline_rates;
}

control::StationRun execute_run(const RunConfig& cfg, const std::map<int, double>& baselines,
                                std::ostream* telemetry) {
    auto sim = make_backend(cfg, true);
    control::Controller ctl(cfg.station, controller_config(cfg, baselines));
    const double z0 = sim.plant().object() ? sim.plant().object()->z : 0.0;

    std::optional<TelemetryWriter> writer;
    if (telemetry) writer.emplace(*telemetry);

    control::TickObserver observer;
    if (writer) {
        observer = [&](double t, std::size_t first_event) {
            const auto& p = sim.plant();
            const double oz = p.object() ? p.object()->z : 0.0;
            const std::string phase = ctl.phase_label();
            auto module_row = [&](int id) {
                TelemetrySample s;
                s.time_s = t;
                s.module_id = id;
                s.kind = plant::to_string(p.layout().module(id).kind);
                s.pressure_kPa = p.measured_pressure(id);
                s.valve = plant::to_string(p.module(id).chamber.valve);
                s.inflation_mm = p.module(id).chamber.inflation;
                s.object_z_mm = oz;
                s.phase = phase;
                return s;
            };
            for (const auto& m : p.layout().modules) writer->write(module_row(m.id));
            const auto& events = ctl.events();
            for (std::size_t i = first_event; i < events.size(); ++i) {
                const auto& e = events[i];
                TelemetrySample s;
                if (e.module_id > 0) {
                    s = module_row(e.module_id);
                } else {
                    s.time_s = t;
                    s.kind = "Station";
                    s.object_z_mm = oz;
                    s.phase = phase;
                }
                s.time_s = e.time;
                s.event = e.text;
                writer->write(s);
            }
        };
    }

    control::run_loop(sim, ctl, {cfg.plant.dt, cfg.duration_s}, [&sim] { return control::object_exited(sim.plant()); },
                      observer);
    return control::summarize(ctl, sim, z0);
}

ReplayReport replay_telemetry(const std::vector<TelemetrySample>& rows, const RunConfig& cfg) {
    ReplayReport report;
    const auto baselines = baselines_from_telemetry(rows);
    hal::ReplayBackend replay(recording_from_telemetry(rows));
    control::Controller ctl(cfg.station, controller_config(cfg, baselines));
    try {
        report.outcome = control::run_loop(replay, ctl, {cfg.plant.dt, cfg.duration_s}, {});
    } catch (const hal::ReplayMismatch& e) {
        report.messages.emplace_back(e.what());
        report.outcome = control::Outcome::Fault;
    }
    report.commands_checked = replay.commands_checked();
    report.mismatches = replay.mismatches();
    report.unconsumed = replay.unconsumed_commands();
    return report;
}

void print_summary(std::ostream& out, const control::StationRun& run) {
    out << "outcome: " << control::to_string(run.outcome) << '\n'
        << "cycles: " << run.cycles << '\n'
        << "detections: " << run.detections << '\n'
        << "initial_object_z_mm: " << format_fixed(run.initial_object_z) << '\n'
        << "final_object_z_mm: " << format_fixed(run.final_object_z) << '\n'
        << "faults: " << run.faults << '\n'
        << "drops: " << run.drops << '\n'
        << "conflicts: " << run.conflicts << '\n';
    for (const auto& e : run.events) {
        if (e.kind == control::EventKind::Fault) out << "fault at " << format_fixed(e.time) << " s: " << e.text << '\n';
    }
}

int cmd_validate(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    try {
        cfg = opt.config_path ? load_config(*opt.config_path) : RunConfig{};
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    bool ok = true;
    for (const auto& m : cfg.station.modules) {
        const auto rep = geometry::validate_geometry(m.geometry);
        out << "module " << m.id << " (" << plant::to_string(m.kind) << "): " << (rep.pass ? "PASS" : "FAIL")
            << " arc_error=" << format_fixed(rep.arc_relative_error);
        for (const auto& v : rep.violations) out << ' ' << v;
        out << '\n';
        ok = ok && rep.pass;
    }
    const auto layout = cfg.station.validate();
    out << "station: " << (layout.pass ? "PASS" : "FAIL") << '\n';
    for (const auto& v : layout.violations) out << "  " << v << '\n';
    ok = ok && layout.pass;
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        out << "config: FAIL " << e.what() << '\n';
        ok = false;
    }
    if (ok) out << "config: PASS\n";
    return ok ? 0 : 1;
}

int cmd_calibrate(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        const auto cfg = load(opt);
        const auto rates = calibrate_station(cfg);
        const std::string path = opt.out_path.value_or("baselines.csv");
        std::ofstream f(path);
        if (!f) throw std::runtime_error("cannot write '" + path + "'");
        write_baselines(f, rates);
        write_baselines(out, rates);
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_run(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        const auto cfg = load(opt);
        const auto baselines = opt.baselines_path ? load_baselines(*opt.baselines_path) : as_written(calibrate_station(cfg));
        const std::string path = opt.out_path.value_or(cfg.output_path);
        std::ofstream f(path);
        if (!f) throw std::runtime_error("cannot write '" + path + "'");
        const auto run = execute_run(cfg, baselines, &f);
        print_summary(out, run);
        out << "telemetry: " << path << '\n';
        return run.faults == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_sweep(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        const auto cfg = load(opt);
        const auto param = geometry::parse_sweep_parameter(opt.param);
        if (!param) throw std::invalid_argument("unknown sweep parameter '" + opt.param + "' (expected N, l or t)");
        const auto values = parse_range(opt.range);
        const auto result = geometry::sweep(cfg.ring, cfg.material, cfg.plant.P_max, *param, values);
        std::ostream* summary = &out;
        if (opt.out_path) {
            std::ofstream f(*opt.out_path);
            if (!f) throw std::runtime_error("cannot write '" + *opt.out_path + "'");
            write_sweep(f, result);
        } else {
            write_sweep(out, result);
            summary = &err;
        }
        if (auto i = result.argmax()) {
            const auto& s = result.samples[*i];
            *summary << "argmax " << geometry::to_string(*param) << '=' << format_fixed(s.value)
                     << " d_c_over_r=" << format_fixed(*s.inflation) << '\n';
        } else {
            *summary << "argmax: none (no feasible value)\n";
        }
        for (const auto& s : result.samples) {
            if (!s.inflation) *summary << "infeasible " << format_fixed(s.value) << ": " << s.note << '\n';
        }
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_replay(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        const auto cfg = load(opt);
        if (!opt.telemetry_path) throw std::invalid_argument("replay needs a telemetry file");
        std::ifstream in(*opt.telemetry_path);
        if (!in) throw std::runtime_error("cannot open '" + *opt.telemetry_path + "'");
        const auto rep = replay_telemetry(read_telemetry(in), cfg);
        out << "outcome: " << control::to_string(rep.outcome) << '\n'
            << "commands_checked: " << rep.commands_checked << '\n'
            << "mismatches: " << rep.mismatches << '\n'
            << "unconsumed: " << rep.unconsumed << '\n';
        for (const auto& m : rep.messages) out << m << '\n';
        return rep.mismatches == 0 && rep.unconsumed == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace peri::cli
