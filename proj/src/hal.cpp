#include "peri/hal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace peri::hal {

Micros to_micros(double seconds) { return static_cast<Micros>(std::llround(seconds * 1e6)); }

namespace {

std::string describe(int id, ValveMode mode, Micros t) {
    std::ostringstream os;
    os << "module " << id << ' ' << plant::to_string(mode) << " @ " << to_seconds(t) << " s";
    return os.str();
}

Micros checked_step(double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("tick: dt must be > 0");
    const Micros step = to_micros(dt);
    if (step < 1) throw std::invalid_argument("tick: dt below the 1 us time resolution");
    return step;
}

}  // namespace

// -------------------------------------------------------------
// SimulatedBackend
// -------------------------------------------------------------

SimulatedBackend::SimulatedBackend(plant::Plant plant) : plant_(std::move(plant)) {}

std::vector<HalEndpoint> SimulatedBackend::endpoints() const {
    std::vector<HalEndpoint> out;
    for (const auto& m : plant_.layout().modules) {
        out.push_back({m.id, {Capability::ReadPressure, Capability::SetValve}});
    }
    return out;
}

void SimulatedBackend::require_endpoint(int module_id) const {
    if (module_id < 1 || module_id > static_cast<int>(plant_.layout().size())) throw NoSuchEndpoint(module_id);
}

PressureSample SimulatedBackend::read_pressure(int module_id) {
    require_endpoint(module_id);
    return {plant_.measured_pressure(module_id), now()};
}

Ack SimulatedBackend::set_valve(const ValveCommand& cmd) {
    require_endpoint(cmd.module_id);
    auto [it, inserted] = last_command_time_.try_emplace(cmd.module_id, cmd.timestamp);
    if (!inserted) {
        if (cmd.timestamp < it->second) {
            throw HalError("valve command timestamps must not decrease for module " + std::to_string(cmd.module_id));
        }
        it->second = cmd.timestamp;
    }
    if (!stuck_.contains(cmd.module_id)) plant_.set_valve(cmd.module_id, cmd.mode);
    return {cmd.module_id, cmd.mode, now()};
}

double SimulatedBackend::tick(double dt) {
    const Micros step = checked_step(dt);
    for (auto& e : plant_.step(dt)) {
        pending_.push_back({e.time, std::string(plant::to_string(e.kind)) + ": " + e.detail});
    }
    now_us_ += step;
    return now();
}

std::vector<BackendEvent> SimulatedBackend::drain_events() {
    std::vector<BackendEvent> out;
    out.swap(pending_);
    for (auto& e : out) e.time = now();
    return out;
}

void SimulatedBackend::inject_stuck_valve(int module_id, ValveMode stuck_at) {
    require_endpoint(module_id);
    stuck_[module_id] = stuck_at;
    plant_.set_valve(module_id, stuck_at);
}

void SimulatedBackend::inject_blocked_vent(int module_id) {
    require_endpoint(module_id);
    plant_.set_vent_blocked(module_id, true);
}

// -------------------------------------------------------------
// ReplayBackend
// -------------------------------------------------------------

ReplayBackend::ReplayBackend(Recording recording) {
    for (int id : recording.module_ids) series_[id];
    for (const auto& s : recording.samples) {
        series_[s.module_id].samples.push_back(s);
        last_sample_us_ = std::max(last_sample_us_, s.time_us);
    }
    for (const auto& c : recording.commands) series_[c.module_id].commands.push_back(c);
    plant_events_ = std::move(recording.plant_events);
}

std::vector<BackendEvent> ReplayBackend::drain_events() {
    std::vector<BackendEvent> out;
    while (next_event_ < plant_events_.size() && plant_events_[next_event_].time_us <= now_us_) {
        out.push_back({to_seconds(now_us_), plant_events_[next_event_].text});
        ++next_event_;
    }
    return out;
}

std::vector<HalEndpoint> ReplayBackend::endpoints() const {
    std::vector<HalEndpoint> out;
    for (const auto& [id, s] : series_) out.push_back({id, {Capability::ReadPressure, Capability::SetValve}});
    return out;
}

ReplayBackend::Series& ReplayBackend::series(int module_id) {
    auto it = series_.find(module_id);
    if (it == series_.end()) throw NoSuchEndpoint(module_id);
    return it->second;
}

PressureSample ReplayBackend::read_pressure(int module_id) {
    auto& s = series(module_id);
    if (now_us_ > last_sample_us_) throw EndOfRecording();
    // Latest sample at or before now.
    auto it = std::upper_bound(s.samples.begin(), s.samples.end(), now_us_,
                               [](Micros t, const RecordedSample& rs) { return t < rs.time_us; });
    if (it == s.samples.begin()) throw HalError("no recorded sample at or before query time");
    --it;
    return {it->kPa, to_seconds(it->time_us)};
}

Ack ReplayBackend::set_valve(const ValveCommand& cmd) {
    auto& s = series(cmd.module_id);
    const Micros t = to_micros(cmd.timestamp);
    ++checked_;
    if (s.next_command >= s.commands.size()) {
        ++mismatches_;
        throw ReplayMismatch("command diverges from recording: issued " + describe(cmd.module_id, cmd.mode, t) +
                             ", recorded <none>");
    }
    const auto& expected = s.commands[s.next_command];
    if (expected.mode != cmd.mode || expected.time_us != t) {
        ++mismatches_;
        throw ReplayMismatch("command diverges from recording: issued " + describe(cmd.module_id, cmd.mode, t) +
                             ", recorded " + describe(expected.module_id, expected.mode, expected.time_us));
    }
    ++s.next_command;
    return {cmd.module_id, cmd.mode, now()};
}

void ReplayBackend::check_missed_commands() {
    for (auto& [id, s] : series_) {
        if (s.next_command < s.commands.size() && s.commands[s.next_command].time_us <= now_us_) {
            const auto& c = s.commands[s.next_command];
            ++mismatches_;
            ++s.next_command;
            throw ReplayMismatch("command diverges from recording: issued <none>, recorded " +
                                 describe(c.module_id, c.mode, c.time_us));
        }
    }
}

double ReplayBackend::tick(double dt) {
    const Micros step = checked_step(dt);
    check_missed_commands();
    now_us_ += step;
    return now();
}

std::size_t ReplayBackend::unconsumed_commands() const {
    std::size_t n = 0;
    for (const auto& [id, s] : series_) n += s.commands.size() - s.next_command;
    return n;
}

}  // namespace peri::hal
