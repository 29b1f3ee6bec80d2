#include "peri/control.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace peri::control {

const char* to_string(Phase p) {
    switch (p) {
        case Phase::Grasp: return "Grasp";
        case Phase::AdvanceRelease: return "AdvanceRelease";
        case Phase::RegraspBottom: return "RegraspBottom";
        case Phase::ResetTop: return "ResetTop";
    }
    return "?";
}

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::Calibrated: return "calibrated";
        case EventKind::Command: return "cmd";
        case EventKind::Grasped: return "grasped";
        case EventKind::Detection: return "detect";
        case EventKind::Promoted: return "promoted";
        case EventKind::CycleComplete: return "cycle";
        case EventKind::Plant: return "plant";
        case EventKind::Fault: return "fault";
        case EventKind::Outcome: return "outcome";
    }
    return "?";
}

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::Running: return "running";
        case Outcome::Exited: return "object exited";
        case Outcome::CycleBudget: return "cycle budget reached";
        case Outcome::GraspComplete: return "grasped";
        case Outcome::Undetectable: return "undetectable object";
        case Outcome::EndOfTravel: return "end of travel";
        case Outcome::DurationElapsed: return "duration elapsed";
        case Outcome::EndOfRecording: return "end of recording";
        case Outcome::Fault: return "fault";
    }
    return "?";
}

namespace {

std::string fixed(double v, int digits = 6) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

}  // namespace

// -------------------------------------------------------------
// Detection
// -------------------------------------------------------------

void DetectionConfig::validate() const {
    if (!(window_start >= 0.0)) throw ControlError("detection window_start must be >= 0");
    if (!(window_len > 0.0)) throw ControlError("detection window_len must be > 0");
    if (!(threshold_ratio_theta > 1.0)) throw ControlError("detection threshold_ratio_theta must be > 1");
    if (consecutive_required < 1) throw ControlError("consecutive_required must be >= 1");
    if (min_samples < 2) throw ControlError("min_samples must be >= 2");
    for (const auto& [id, rate] : baseline_rates) {
        if (!(rate > 0.0)) throw ControlError("baseline for module " + std::to_string(id) + " must be > 0");
    }
}

double least_squares_slope(std::span<const hal::PressureSample> samples) {
    if (samples.size() < 2) throw ControlError("least squares slope needs at least two samples");
    double mean_t = 0.0;
    double mean_p = 0.0;
    for (const auto& s : samples) {
        mean_t += s.time;
        mean_p += s.kPa;
    }
    mean_t /= static_cast<double>(samples.size());
    mean_p /= static_cast<double>(samples.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (const auto& s : samples) {
        const double dt = s.time - mean_t;
        sxy += dt * (s.kPa - mean_p);
        sxx += dt * dt;
    }
    if (sxx == 0.0) throw ControlError("least squares slope: samples share one timestamp");
    return sxy / sxx;
}

std::vector<hal::PressureSample> window_samples(const PressureTrace& trace, const DetectionConfig& cfg) {
    const hal::Micros begin = hal::to_micros(trace.onset + cfg.window_start);
    const hal::Micros end = hal::to_micros(trace.onset + cfg.window_start + cfg.window_len);
    if (trace.samples.empty() || hal::to_micros(trace.samples.front().time) > begin ||
        hal::to_micros(trace.samples.back().time) < end) {
        throw ControlError("insufficient trace: detection window not covered");
    }
    std::vector<hal::PressureSample> out;
    for (const auto& s : trace.samples) {
        const hal::Micros t = hal::to_micros(s.time);
        if (t < begin) continue;
        if (t > end) break;
        if (s.kPa >= cfg.saturation_kPa) break;
        out.push_back(s);
    }
    if (out.size() < cfg.min_samples) {
        throw ControlError("insufficient trace: " + std::to_string(out.size()) + " samples before saturation");
    }
    return out;
}

DetectionResult detect_contact(int module_id, const PressureTrace& trace, const DetectionConfig& cfg) {
    auto it = cfg.baseline_rates.find(module_id);
    if (it == cfg.baseline_rates.end()) {
        throw ControlError("no baseline for module " + std::to_string(module_id));
    }
    const auto window = window_samples(trace, cfg);
    DetectionResult r;
    r.module_id = module_id;
    r.measured_rate = least_squares_slope(window);
    r.baseline = it->second;
    r.ratio = r.measured_rate / r.baseline;
    r.contact = r.ratio >= cfg.threshold_ratio_theta;
    return r;
}

// -------------------------------------------------------------
// Controller
// -------------------------------------------------------------

void ControllerConfig::validate() const {
    detection.validate();
    if (!(P_max > 0.0)) throw ControlError("P_max must be > 0");
    if (!(inflated_fraction > 0.0 && inflated_fraction <= 1.0)) throw ControlError("inflated_fraction must be in (0, 1]");
    if (!(deflated_kPa >= 0.0 && deflated_kPa < inflated_kPa())) throw ControlError("deflated_kPa out of range");
    if (!(phase_timeout > 0.0)) throw ControlError("phase_timeout must be > 0");
    if (max_cycles_per_level < 1) throw ControlError("max_cycles_per_level must be >= 1");
    if (max_cycles < 0) throw ControlError("max_cycles must be >= 0");
    if (start_level < 0) throw ControlError("start_level must be >= 0");
}

Controller::Controller(plant::StationLayout layout, ControllerConfig cfg)
    : layout_(std::move(layout)), cfg_(std::move(cfg)), level_(cfg_.start_level), dead_z_(cfg_.load_z) {
    cfg_.validate();
    auto report = layout_.validate();
    if (!report.pass) throw ControlError("invalid station layout: " + report.violations.front());
    if (level_ >= level_count()) {
        throw ControlError("station has no level " + std::to_string(level_));
    }
    if (cfg_.enable_probing) {
        for (int id = top_id() + 2; id <= static_cast<int>(layout_.size()); id += 2) {
            if (!cfg_.detection.baseline_rates.contains(id)) {
                throw ControlError("missing baseline for module " + std::to_string(id));
            }
        }
    }
}

int Controller::level_count() const { return (static_cast<int>(layout_.size()) - 1) / 2; }

std::optional<int> Controller::probe_id() const {
    if (!cfg_.enable_probing) return std::nullopt;
    const int id = top_id() + 2;
    if (id > static_cast<int>(layout_.size())) return std::nullopt;
    return id;
}

ControlPhase Controller::phase(double now) const {
    return {level_, phase_, now - hal::to_seconds(phase_started_us_)};
}

std::string Controller::phase_label() const {
    return "L" + std::to_string(level_) + ":" + to_string(phase_);
}

void Controller::emit(double time, EventKind kind, int module_id, std::string text) {
    Event e;
    e.time = time;
    e.kind = kind;
    e.module_id = module_id;
    e.text = std::move(text);
    events_.push_back(std::move(e));
}

void Controller::command(hal::Backend& hal, int id, ValveMode mode) {
    auto it = commanded_.find(id);
    if (it != commanded_.end() && it->second == mode) return;
    const bool top_starts_inflating = id == top_id() && mode == ValveMode::Inflate;
    hal.set_valve({id, mode, hal.now()});
    commanded_[id] = mode;
    Event e;
    e.time = hal.now();
    e.kind = EventKind::Command;
    e.module_id = id;
    e.text = std::string("cmd=") + plant::to_string(mode);
    e.command = mode;
    events_.push_back(std::move(e));
    if (top_starts_inflating) start_probe(hal, hal::to_micros(hal.now()));
}

bool Controller::inflated(int id) const { return readings_.at(id) >= cfg_.inflated_kPa(); }
bool Controller::deflated(int id) const { return readings_.at(id) <= cfg_.deflated_kPa; }

void Controller::enter(Phase p, hal::Micros now) {
    phase_ = p;
    step_ = 0;
    phase_started_us_ = now;
    step_started_us_ = now;
}

void Controller::next_step(hal::Micros now) {
    ++step_;
    step_started_us_ = now;
}

void Controller::fault(double time, int module_id, const std::string& why) {
    if (finished()) return;
    ++faults_;
    emit(time, EventKind::Fault, module_id, "fault: " + why);
    outcome_ = Outcome::Fault;
    emit(time, EventKind::Outcome, 0, std::string("outcome=") + to_string(outcome_));
}

void Controller::stop(Outcome outcome, double time, const std::string& why) {
    if (finished()) return;
    outcome_ = outcome;
    emit(time, EventKind::Outcome, 0, std::string("outcome=") + to_string(outcome) + (why.empty() ? "" : " (" + why + ")"));
}

void Controller::notify(const hal::BackendEvent& e) {
    emit(e.time, EventKind::Plant, 0, e.text);
    if (e.text.rfind("drop", 0) == 0) fault(e.time, 0, "object lost at phase " + phase_label());
}

bool Controller::check_timeout(hal::Micros now, int stalled_module) {
    if (now - step_started_us_ <= hal::to_micros(cfg_.phase_timeout)) return false;
    fault(hal::to_seconds(now), stalled_module,
          "timeout in " + phase_label() + " waiting for module " + std::to_string(stalled_module));
    return true;
}

void Controller::start_probe(hal::Backend& hal, hal::Micros now) {
    const auto pid = probe_id();
    if (!pid || probe_) return;
    if (!deflated(*pid)) return;  // still venting from the last probe; retry next cycle
    Probe p;
    p.module_id = *pid;
    p.onset_us = now;
    p.trace.onset = hal::to_seconds(now);
    p.trace.samples.push_back({readings_.at(*pid), hal::to_seconds(now)});
    probe_ = std::move(p);
    command(hal, *pid, ValveMode::Inflate);
}

void Controller::service_probe(hal::Backend& hal, hal::Micros now) {
    if (!probe_) return;
    const auto& det = cfg_.detection;
    if (now - probe_->onset_us < hal::to_micros(det.window_start + det.window_len)) return;
    const int id = probe_->module_id;
    DetectionResult r;
    try {
        r = detect_contact(id, probe_->trace, det);
    } catch (const ControlError& e) {
        probe_.reset();
        fault(hal::to_seconds(now), id, e.what());
        return;
    }
    probe_.reset();
    Event e;
    e.time = hal::to_seconds(now);
    e.kind = EventKind::Detection;
    e.module_id = id;
    e.text = "detect rate=" + fixed(r.measured_rate) + " ratio=" + fixed(r.ratio) + " contact=" + (r.contact ? "1" : "0");
    e.detection = r;
    events_.push_back(std::move(e));
    if (r.contact) {
        ++detections_;
        ++consecutive_;
    } else {
        consecutive_ = 0;
    }
    if (consecutive_ >= det.consecutive_required) {
        promote_pending_ = true;  // probe keeps inflating; it becomes the next level's top
    } else {
        command(hal, id, ValveMode::Deflate);
    }
}

void Controller::on_grasped(hal::Micros now) {
    const double t = hal::to_seconds(now);
    emit(t, EventKind::Grasped, 0, "grasped level=" + std::to_string(level_));
    if (cfg_.stop_after_grasp) {
        stop(Outcome::GraspComplete, t, "");
        return;
    }
    if (promote_pending_) {
        releasing_ = {bottom_id(), long_id()};
        ++level_;
        cycles_level_ = 0;
        consecutive_ = 0;
        promote_pending_ = false;
        emit(t, EventKind::Promoted, top_id(), "promoted level=" + std::to_string(level_));
        enter(Phase::Grasp, now);
        return;
    }
    releasing_.clear();
    if (cfg_.max_cycles > 0 && cycles_total_ >= cfg_.max_cycles) {
        stop(Outcome::CycleBudget, t, std::to_string(cycles_total_) + " cycles");
        return;
    }
    const double stroke = plant::kStrokePerHeight * layout_.module(long_id()).height_h;
    if (dead_z_ + stroke > layout_.module(bottom_id()).top() + 1e-9) {
        const bool upper_exists = probe_id().has_value();
        stop(upper_exists ? Outcome::Undetectable : Outcome::EndOfTravel, t,
             "level " + std::to_string(level_) + " reach exhausted");
        return;
    }
    if (probe_id() && cycles_level_ >= cfg_.max_cycles_per_level) {
        fault(t, *probe_id(), "object never detected at level " + std::to_string(level_ + 1));
        return;
    }
    enter(Phase::AdvanceRelease, now);
}

void Controller::update(hal::Backend& hal) {
    if (finished()) return;
    const double t = hal.now();
    const hal::Micros now = hal::to_micros(t);
    if (events_.empty()) {
        for (const auto& [id, rate] : cfg_.detection.baseline_rates) {
            emit(t, EventKind::Calibrated, id, "calibrated rate=" + fixed(rate));
        }
        enter(Phase::Grasp, now);
    }
    for (const auto& m : layout_.modules) readings_[m.id] = hal.read_pressure(m.id).kPa;
    if (probe_) probe_->trace.samples.push_back({readings_.at(probe_->module_id), t});

    service_probe(hal, now);

    // Each pass either waits or transitions; transitions re-run so the next
    // sub-phase's commands go out on the same tick.
    for (int pass = 0; pass < 8 && !finished(); ++pass) {
        const Phase before_phase = phase_;
        const int before_step = step_;
        const int before_level = level_;
        switch (phase_) {
            case Phase::Grasp: {
                command(hal, bottom_id(), ValveMode::Inflate);
                command(hal, top_id(), ValveMode::Inflate);
                for (int id : releasing_) command(hal, id, ValveMode::Deflate);
                std::optional<int> stalled;
                if (!inflated(bottom_id())) stalled = bottom_id();
                else if (!inflated(top_id())) stalled = top_id();
                for (int id : releasing_) {
                    if (!stalled && !deflated(id)) stalled = id;
                }
                if (stalled) {
                    check_timeout(now, *stalled);
                } else if (!probe_busy()) {
                    on_grasped(now);
                }
                break;
            }
            case Phase::AdvanceRelease:
                if (step_ == 0) {
                    command(hal, bottom_id(), ValveMode::Deflate);
                    if (deflated(bottom_id())) next_step(now);
                    else check_timeout(now, bottom_id());
                } else {
                    command(hal, long_id(), ValveMode::Inflate);
                    if (inflated(long_id())) enter(Phase::RegraspBottom, now);
                    else check_timeout(now, long_id());
                }
                break;
            case Phase::RegraspBottom:
                if (step_ == 0) {
                    command(hal, bottom_id(), ValveMode::Inflate);
                    if (inflated(bottom_id())) next_step(now);
                    else check_timeout(now, bottom_id());
                } else {
                    command(hal, top_id(), ValveMode::Deflate);
                    if (deflated(top_id())) enter(Phase::ResetTop, now);
                    else check_timeout(now, top_id());
                }
                break;
            case Phase::ResetTop:
                if (step_ == 0) {
                    command(hal, long_id(), ValveMode::Deflate);
                    if (deflated(long_id())) next_step(now);
                    else check_timeout(now, long_id());
                } else {
                    command(hal, top_id(), ValveMode::Inflate);
                    if (!inflated(top_id())) {
                        check_timeout(now, top_id());
                    } else if (!probe_busy()) {
                        ++cycles_total_;
                        ++cycles_level_;
                        dead_z_ += plant::kStrokePerHeight * layout_.module(long_id()).height_h;
                        emit(t, EventKind::CycleComplete, 0, "cycle=" + std::to_string(cycles_total_));
                        enter(Phase::Grasp, now);
                    }
                }
                break;
        }
        if (phase_ == before_phase && step_ == before_step && level_ == before_level) break;
    }
}

// -------------------------------------------------------------
// Calibration
// -------------------------------------------------------------

double calibrate_baseline(hal::Backend& hal, int module_id, ControllerConfig& cfg, double dt, std::vector<Event>* log) {
    const auto& det = cfg.detection;
    auto record = [&](EventKind kind, std::string text, std::optional<ValveMode> mode = std::nullopt) {
        if (!log) return;
        Event e;
        e.time = hal.now();
        e.kind = kind;
        e.module_id = module_id;
        e.text = std::move(text);
        e.command = mode;
        log->push_back(std::move(e));
    };
    auto command = [&](ValveMode mode) {
        hal.set_valve({module_id, mode, hal.now()});
        record(EventKind::Command, std::string("cmd=") + plant::to_string(mode), mode);
    };
    auto vent = [&] {
        command(ValveMode::Deflate);
        const double deadline = hal.now() + cfg.phase_timeout;
        while (hal.read_pressure(module_id).kPa > cfg.deflated_kPa) {
            if (hal.now() > deadline) {
                throw ControlError("calibration: module " + std::to_string(module_id) + " failed to vent");
            }
            hal.tick(dt);
        }
    };

    if (hal.read_pressure(module_id).kPa > cfg.deflated_kPa) vent();

    PressureTrace trace;
    trace.onset = hal.now();
    command(ValveMode::Inflate);
    trace.samples.push_back(hal.read_pressure(module_id));
    const hal::Micros end = hal::to_micros(trace.onset + det.window_start + det.window_len);
    while (hal::to_micros(hal.now()) < end) {
        hal.tick(dt);
        trace.samples.push_back(hal.read_pressure(module_id));
    }
    const auto window = window_samples(trace, det);
    const double slope = least_squares_slope(window);
    vent();

    if (slope > det.threshold_ratio_theta * det.nominal_free_rate) {
        throw ControlError("calibration contaminated: module " + std::to_string(module_id) + " slope " +
                           fixed(slope) + " kPa/s exceeds " + fixed(det.threshold_ratio_theta * det.nominal_free_rate));
    }
    cfg.detection.baseline_rates[module_id] = slope;
    record(EventKind::Calibrated, "calibrated rate=" + fixed(slope));
    return slope;
}

// -------------------------------------------------------------
// Run loops
// -------------------------------------------------------------

Outcome run_loop(hal::Backend& hal, Controller& ctl, const RunLimits& limits, const std::function<bool()>& exited,
                 const TickObserver& observer) {
    if (!(limits.dt > 0.0)) throw ControlError("run: dt must be > 0");
    if (!(limits.duration_s > 0.0)) throw ControlError("run: duration must be > 0");
    const hal::Micros duration = hal::to_micros(limits.duration_s);
    for (;;) {
        const std::size_t mark = ctl.events().size();
        for (const auto& e : hal.drain_events()) ctl.notify(e);
        if (!ctl.finished()) {
            try {
                ctl.update(hal);
            } catch (const hal::EndOfRecording&) {
                ctl.stop(Outcome::EndOfRecording, hal.now(), "");
                return ctl.outcome();
            }
        }
        if (!ctl.finished() && exited && exited()) ctl.stop(Outcome::Exited, hal.now(), "");
        if (!ctl.finished() && hal::to_micros(hal.now()) >= duration) {
            ctl.stop(Outcome::DurationElapsed, hal.now(), "");
        }
        if (observer) observer(hal.now(), mark);
        if (ctl.finished()) return ctl.outcome();
        hal.tick(limits.dt);
    }
}

bool object_exited(const plant::Plant& plant) {
    const auto& obj = plant.object();
    if (!obj) return false;
    const auto& top_state = plant.modules().back();
    const double top_face = top_state.z_origin + plant.layout().modules.back().height_h;
    return obj->top() > top_face;
}

StationRun summarize(const Controller& ctl, const hal::SimulatedBackend& sim, double z0) {
    StationRun run;
    run.outcome = ctl.outcome();
    run.events = ctl.events();
    run.initial_object_z = z0;
    run.final_object_z = sim.plant().object() ? sim.plant().object()->z : 0.0;
    run.cycles = ctl.cycles();
    run.detections = ctl.detections();
    run.faults = ctl.faults();
    for (const auto& e : run.events) {
        if (e.kind != EventKind::Plant) continue;
        if (e.text.rfind("drop", 0) == 0) ++run.drops;
        if (e.text.rfind("conflict", 0) == 0) ++run.conflicts;
    }
    return run;
}

namespace {

double object_z(const hal::SimulatedBackend& sim) {
    return sim.plant().object() ? sim.plant().object()->z : 0.0;
}

}  // namespace

StationRun run_station(hal::SimulatedBackend& sim, const ControllerConfig& cfg, const RunLimits& limits,
                       const TickObserver& observer) {
    Controller ctl(sim.plant().layout(), cfg);
    const double z0 = object_z(sim);
    run_loop(sim, ctl, limits, [&sim] { return object_exited(sim.plant()); }, observer);
    return summarize(ctl, sim, z0);
}

StationRun grasp(hal::SimulatedBackend& sim, ControllerConfig cfg, int level, const RunLimits& limits) {
    cfg.start_level = level;
    cfg.enable_probing = false;
    cfg.stop_after_grasp = true;
    Controller ctl(sim.plant().layout(), cfg);
    const double z0 = object_z(sim);
    run_loop(sim, ctl, limits, {});
    return summarize(ctl, sim, z0);
}

StationRun transport_cycles(hal::SimulatedBackend& sim, ControllerConfig cfg, int level, int cycles,
                            const RunLimits& limits) {
    if (cycles < 1) throw ControlError("transport_cycles: cycles must be >= 1");
    cfg.start_level = level;
    cfg.enable_probing = false;
    cfg.max_cycles = cycles;
    Controller ctl(sim.plant().layout(), cfg);
    const double z0 = object_z(sim);
    run_loop(sim, ctl, limits, {});
    return summarize(ctl, sim, z0);
}

}  // namespace peri::control
