#pragma once

#include "peri/plant.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace peri::hal {

using plant::ValveMode;

class HalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NoSuchEndpoint : public HalError {
public:
    explicit NoSuchEndpoint(int id) : HalError("no such endpoint: module " + std::to_string(id)) {}
};

class EndOfRecording : public HalError {
public:
    EndOfRecording() : HalError("end of recording") {}
};

class ReplayMismatch : public HalError {
public:
    using HalError::HalError;
};

enum class Capability { ReadPressure, SetValve };

struct HalEndpoint {
    int module_id = 0;
    std::set<Capability> capabilities;
};

struct ValveCommand {
    int module_id = 0;
    ValveMode mode = ValveMode::Hold;
    double timestamp = 0.0;  // s
};

struct PressureSample {
    double kPa = 0.0;
    double time = 0.0;  // s
};

struct Ack {
    int module_id = 0;
    ValveMode mode = ValveMode::Hold;
    double time = 0.0;
};

/// Anomaly surfaced by the plant behind a backend (drop, conflict).
struct BackendEvent {
    double time = 0.0;
    std::string text;
};

/// Time is kept in integer microseconds so every backend agrees bit-for-bit.
using Micros = std::int64_t;
Micros to_micros(double seconds);
inline double to_seconds(Micros us) { return static_cast<double>(us) / 1e6; }

/// Contract between the controller and a plant. One owner; calls are not reentrant.
class Backend {
public:
    virtual ~Backend() = default;

    virtual std::vector<HalEndpoint> endpoints() const = 0;
    virtual PressureSample read_pressure(int module_id) = 0;
    virtual Ack set_valve(const ValveCommand& cmd) = 0;
    /// Advance time by dt (> 0); returns the new time.
    virtual double tick(double dt) = 0;
    virtual double now() const = 0;
    virtual std::vector<BackendEvent> drain_events() { return {}; }
};

/// Drives a plant::Plant; one tick is exactly one plant step.
class SimulatedBackend : public Backend {
public:
    explicit SimulatedBackend(plant::Plant plant);

    std::vector<HalEndpoint> endpoints() const override;
    PressureSample read_pressure(int module_id) override;
    Ack set_valve(const ValveCommand& cmd) override;
    double tick(double dt) override;
    double now() const override { return to_seconds(now_us_); }
    std::vector<BackendEvent> drain_events() override;

    const plant::Plant& plant() const { return plant_; }

    // Fault injection.
    void inject_stuck_valve(int module_id, ValveMode stuck_at);
    void inject_blocked_vent(int module_id);

private:
    void require_endpoint(int module_id) const;

    plant::Plant plant_;
    Micros now_us_ = 0;
    std::map<int, double> last_command_time_;
    std::map<int, ValveMode> stuck_;
    std::vector<BackendEvent> pending_;
};

struct RecordedSample {
    Micros time_us = 0;
    int module_id = 0;
    double kPa = 0.0;
};

struct RecordedCommand {
    Micros time_us = 0;
    int module_id = 0;
    ValveMode mode = ValveMode::Hold;
};

struct RecordedEvent {
    Micros time_us = 0;
    std::string text;
};

/// What a replay needs from a telemetry file: per-module pressure samples and the command stream.
struct Recording {
    std::vector<int> module_ids;
    std::vector<RecordedSample> samples;    // time-ordered
    std::vector<RecordedCommand> commands;  // time-ordered
    std::vector<RecordedEvent> plant_events;  // drop/conflict, time-ordered
};

/// Plays a recording back to the controller and checks its commands against it.
class ReplayBackend : public Backend {
public:
    explicit ReplayBackend(Recording recording);

    std::vector<HalEndpoint> endpoints() const override;
    PressureSample read_pressure(int module_id) override;
    Ack set_valve(const ValveCommand& cmd) override;
    double tick(double dt) override;
    double now() const override { return to_seconds(now_us_); }
    std::vector<BackendEvent> drain_events() override;

    std::size_t mismatches() const { return mismatches_; }
    std::size_t commands_checked() const { return checked_; }
    /// Recorded commands never matched by a set_valve call.
    std::size_t unconsumed_commands() const;
    bool exhausted() const { return now_us_ > last_sample_us_; }

private:
    struct Series {
        std::vector<RecordedSample> samples;
        std::vector<RecordedCommand> commands;
        std::size_t next_command = 0;
    };
    Series& series(int module_id);
    void check_missed_commands();

    std::map<int, Series> series_;
    std::vector<RecordedEvent> plant_events_;
    std::size_t next_event_ = 0;
    Micros now_us_ = 0;
    Micros last_sample_us_ = 0;
    std::size_t mismatches_ = 0;
    std::size_t checked_ = 0;
};

}  // namespace peri::hal
