#pragma once

#include "peri/hal.hpp"
#include "peri/plant.hpp"

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace peri::control {

using plant::ValveMode;

class ControlError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Phase { Grasp, AdvanceRelease, RegraspBottom, ResetTop };
const char* to_string(Phase p);

struct ControlPhase {
    int level = 0;  // 0 = base unit
    Phase phase = Phase::Grasp;
    double phase_elapsed = 0.0;
};

struct DetectionConfig {
    double window_start = 1.5;  // s after inflation onset
    double window_len = 1.0;    // s
    double threshold_ratio_theta = 1.5;
    std::map<int, double> baseline_rates;  // module id -> kPa/s
    double saturation_kPa = 0.98 * 15.0;    // samples at or above this end the window
    int consecutive_required = 2;
    double nominal_free_rate = 4.33;  // contamination reference for calibration
    std::size_t min_samples = 10;

    void validate() const;
};

struct PressureTrace {
    double onset = 0.0;  // s, inflation command time
    std::vector<hal::PressureSample> samples;
};

struct DetectionResult {
    int module_id = 0;
    double measured_rate = 0.0;
    double baseline = 0.0;
    double ratio = 0.0;
    bool contact = false;
};

/// Ordinary least-squares slope dP/dt.
double least_squares_slope(std::span<const hal::PressureSample> samples);

/// Slope over the detection window of `trace`, relative to the module's baseline.
DetectionResult detect_contact(int module_id, const PressureTrace& trace, const DetectionConfig& cfg);

/// Window samples used for a slope estimate; throws ControlError("insufficient trace ...").
std::vector<hal::PressureSample> window_samples(const PressureTrace& trace, const DetectionConfig& cfg);

enum class EventKind { Calibrated, Command, Grasped, Detection, Promoted, CycleComplete, Plant, Fault, Outcome };
const char* to_string(EventKind k);

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::Command;
    int module_id = 0;  // 0 for station-wide events
    std::string text;
    std::optional<DetectionResult> detection;
    std::optional<ValveMode> command;
};

enum class Outcome { Running, Exited, CycleBudget, GraspComplete, Undetectable, EndOfTravel, DurationElapsed,
                     EndOfRecording, Fault };
const char* to_string(Outcome o);

struct ControllerConfig {
    DetectionConfig detection;
    double P_max = 15.0;
    double inflated_fraction = 0.95;
    double deflated_kPa = 0.5;
    double phase_timeout = 10.0;  // s per sub-phase
    int max_cycles_per_level = 20;
    int max_cycles = 0;  // 0 = unlimited
    double load_z = 0.0;  // object bottom at loading, mm
    int start_level = 0;
    bool enable_probing = true;
    bool stop_after_grasp = false;

    double inflated_kPa() const { return inflated_fraction * P_max; }
    void validate() const;
};

/// Grasp/transport state machine for one station. One update per tick:
/// read sensors, advance the phase logic, emit edge-triggered valve commands.
class Controller {
public:
    Controller(plant::StationLayout layout, ControllerConfig cfg);

    void update(hal::Backend& hal);
    /// Plant anomaly reported by the backend; a drop is fatal.
    void notify(const hal::BackendEvent& e);
    /// External termination (object exited, duration elapsed, end of recording).
    void stop(Outcome outcome, double time, const std::string& why);

    bool finished() const { return outcome_ != Outcome::Running; }
    Outcome outcome() const { return outcome_; }
    ControlPhase phase(double now) const;
    std::string phase_label() const;
    const std::vector<Event>& events() const { return events_; }
    std::size_t events_since(std::size_t mark) const { return events_.size() - mark; }
    int cycles() const { return cycles_total_; }
    int level() const { return level_; }
    int detections() const { return detections_; }
    int faults() const { return faults_; }
    double dead_reckoned_z() const { return dead_z_; }
    int level_count() const;

private:
    struct Probe {
        int module_id = 0;
        hal::Micros onset_us = 0;
        PressureTrace trace;
    };

    int bottom_id() const { return 2 * level_ + 1; }
    int long_id() const { return 2 * level_ + 2; }
    int top_id() const { return 2 * level_ + 3; }
    std::optional<int> probe_id() const;

    void command(hal::Backend& hal, int id, ValveMode mode);
    bool inflated(int id) const;
    bool deflated(int id) const;
    void enter(Phase p, hal::Micros now);
    void next_step(hal::Micros now);
    void fault(double time, int module_id, const std::string& why);
    void emit(double time, EventKind kind, int module_id, std::string text);
    void start_probe(hal::Backend& hal, hal::Micros now);
    void service_probe(hal::Backend& hal, hal::Micros now);
    bool probe_busy() const { return probe_.has_value(); }
    void on_grasped(hal::Micros now);
    bool check_timeout(hal::Micros now, int stalled_module);

    plant::StationLayout layout_;
    ControllerConfig cfg_;
    int level_ = 0;
    Phase phase_ = Phase::Grasp;
    int step_ = 0;
    hal::Micros phase_started_us_ = 0;
    hal::Micros step_started_us_ = 0;
    std::map<int, ValveMode> commanded_;
    std::map<int, double> readings_;
    std::vector<int> releasing_;
    std::optional<Probe> probe_;
    bool top_inflate_pending_probe_ = false;
    int consecutive_ = 0;
    bool promote_pending_ = false;
    int cycles_total_ = 0;
    int cycles_level_ = 0;
    int detections_ = 0;
    int faults_ = 0;
    double dead_z_ = 0.0;
    Outcome outcome_ = Outcome::Running;
    std::vector<Event> events_;
};

/// Measures the no-object inflation slope of one module and stores it in cfg.detection.
/// Throws ControlError("calibration contaminated ...") when the slope betrays contact.
double calibrate_baseline(hal::Backend& hal, int module_id, ControllerConfig& cfg, double dt,
                          std::vector<Event>* log = nullptr);

struct RunLimits {
    double dt = 0.001;
    double duration_s = 600.0;
};

/// Called once per tick after the controller update; `first_event` indexes the
/// events produced during this tick.
using TickObserver = std::function<void(double time, std::size_t first_event)>;

/// Closed loop over any backend. `exited` is the scenario's ground-truth exit test
/// (may be empty). EndOfRecording from a replay backend ends the loop normally.
Outcome run_loop(hal::Backend& hal, Controller& ctl, const RunLimits& limits, const std::function<bool()>& exited,
                 const TickObserver& observer = {});

struct StationRun {
    Outcome outcome = Outcome::Running;
    std::vector<Event> events;
    double initial_object_z = 0.0;
    double final_object_z = 0.0;
    int cycles = 0;
    int detections = 0;
    int faults = 0;
    int drops = 0;
    int conflicts = 0;
};

/// Tallies a finished controller run against the simulated plant it drove.
StationRun summarize(const Controller& ctl, const hal::SimulatedBackend& sim, double initial_object_z);

/// True once the object's top is above the topmost module's current top face.
bool object_exited(const plant::Plant& plant);

/// Runs the full controller against a simulated backend until exit, budget, fault or duration.
StationRun run_station(hal::SimulatedBackend& sim, const ControllerConfig& cfg, const RunLimits& limits,
                       const TickObserver& observer = {});

/// Inflate both compression modules of `level` until grasped (no probing).
StationRun grasp(hal::SimulatedBackend& sim, ControllerConfig cfg, int level, const RunLimits& limits);

/// Grasp (if needed) then `cycles` transport cycles at `level` (no probing).
StationRun transport_cycles(hal::SimulatedBackend& sim, ControllerConfig cfg, int level, int cycles,
                            const RunLimits& limits);

}  // namespace peri::control
