#pragma once

#include "peri/geometry.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace peri::plant {

enum class ModuleKind { Compression, Longitudinal };
enum class ValveMode { Inflate, Hold, Deflate };

const char* to_string(ModuleKind k);
const char* to_string(ValveMode m);
std::optional<ModuleKind> parse_module_kind(const std::string& s);
std::optional<ValveMode> parse_valve_mode(const std::string& s);

struct ModuleSpec {
    int id = 1;  // 1-based stack index
    ModuleKind kind = ModuleKind::Compression;
    geometry::RingGeometry geometry;
    double height_h = 20.0;  // mm
    double z_origin = 0.0;   // bottom face at rest, mm

    double top() const { return z_origin + height_h; }
};

struct LayoutReport {
    bool pass = true;
    std::vector<std::string> violations;
};

/// Ordered stack of modules, bottom first.
struct StationLayout {
    std::vector<ModuleSpec> modules;

    /// Alternating C/L stack of `count` identical modules resting on each other.
    static StationLayout uniform(int count, double height_h = 20.0, const geometry::RingGeometry& g = {});

    LayoutReport validate() const;
    const ModuleSpec& module(int id) const;
    std::size_t size() const { return modules.size(); }
};

struct ChamberState {
    double pressure = 0.0;  // kPa gauge
    ValveMode valve = ValveMode::Hold;
    double inflation = 0.0;  // mm; radial for Compression, axial stroke for Longitudinal
    bool in_contact = false;
};

struct ObjectSpec {
    double radius_r_o = 17.5;  // mm
    double length_L_o = 85.0;  // mm
};

struct ObjectState {
    ObjectSpec spec;
    double z = 0.0;  // bottom face, mm
    std::vector<int> supporters;
    bool held = false;

    double top() const { return z + spec.length_L_o; }
};

struct PlantParams {
    double P_max = 15.0;            // kPa
    double k_free = 4.33;           // kPa/s, inflating with no contact
    double k_contact_at_0p7 = 8.48;  // kPa/s, inflating around an r_o = 0.7r object
    double k_vent = 12.0;           // kPa/s
    double dt = 0.001;              // s
    double noise_sigma = 0.0;       // kPa, sensor noise
    std::uint64_t rng_seed = 1;

    /// Throws std::invalid_argument on the first violated invariant.
    void validate() const;

    /// Relative rate increase per unit r_o/r above the 0.4 detectability floor.
    double contact_slope() const { return (k_contact_at_0p7 / k_free - 1.0) / 0.3; }
};

inline constexpr double kContactFloorRatio = 0.4;
inline constexpr double kStrokePerHeight = 0.3;
inline constexpr double kSensorResolution = 1e-6;  // kPa

double pressure_rate(const ChamberState& state, ModuleKind kind, bool contact, double ro_over_r,
                     const PlantParams& params);

/// Full-pressure displacement of a module (d_max).
double max_inflation(const ModuleSpec& module, const geometry::SurrogateMaterial& mat, const PlantParams& params);

double inflation_of(double pressure, const ModuleSpec& module, const geometry::SurrogateMaterial& mat,
                    const PlantParams& params);

/// `module` carries its current (possibly lifted) z_origin.
bool contact_check(const ModuleSpec& module, const ChamberState& chamber, const ObjectState& object);

/// Seconds from inflation onset (P = 0) until the membrane reaches an object of radius r_o.
double time_to_contact(double ro_over_r, const PlantParams& params, const geometry::RingGeometry& g,
                       const geometry::SurrogateMaterial& mat);

class PlantError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PlantEvent {
    enum class Kind { Drop, Conflict };
    Kind kind;
    double time = 0.0;
    std::string detail;
};

const char* to_string(PlantEvent::Kind k);

struct ModuleState {
    ChamberState chamber;
    double z_origin = 0.0;  // current bottom face, after lifts
};

/// Fixed-step plant of one station. Single owner; copies are independent snapshots.
class Plant {
public:
    Plant(StationLayout layout, geometry::SurrogateMaterial mat, PlantParams params,
          std::optional<ObjectState> object = std::nullopt);

    /// Advance one step with the stored valve modes.
    std::vector<PlantEvent> step(double dt);
    /// Store `commands[i]` for module i+1, then advance one step.
    std::vector<PlantEvent> step(std::span<const ValveMode> commands, double dt);

    void set_valve(int id, ValveMode mode);
    void set_vent_blocked(int id, bool blocked);

    double time() const { return time_; }
    const StationLayout& layout() const { return layout_; }
    const PlantParams& params() const { return params_; }
    const geometry::SurrogateMaterial& material() const { return mat_; }
    const ModuleState& module(int id) const;
    const std::vector<ModuleState>& modules() const { return state_; }
    const std::optional<ObjectState>& object() const { return object_; }
    /// Latest sensor reading (noisy, quantized) for a module.
    double measured_pressure(int id) const;
    double max_inflation(int id) const { return d_max_.at(index(id)); }

private:
    std::size_t index(int id) const;
    ModuleSpec placed(std::size_t i) const;
    void refresh_kinematics();
    std::vector<int> current_supporters() const;
    void sample_sensors();

    StationLayout layout_;
    geometry::SurrogateMaterial mat_;
    PlantParams params_;
    std::vector<double> d_max_;
    std::vector<ModuleState> state_;
    std::vector<bool> vent_blocked_;
    std::vector<double> measured_;
    std::optional<ObjectState> object_;
    bool in_conflict_ = false;
    double time_ = 0.0;
    std::mt19937_64 rng_;
    std::normal_distribution<double> noise_{0.0, 1.0};
};

}  // namespace peri::plant
