#pragma once

#include "peri/control.hpp"
#include "peri/geometry.hpp"
#include "peri/plant.hpp"

#include <stdexcept>
#include <string>

namespace peri::cli {

/// Parse or validation failure; the message carries "source:line: field: problem".
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ObjectConfig {
    bool present = true;
    plant::ObjectSpec spec;  // defaults: r_o = 0.7 r, L_o = 85 mm
    double z = 0.0;
};

/// Everything a scenario needs. Defaults reproduce the nominal five-module station
/// with default rings and an r_o = 0.7 r cylinder.
struct RunConfig {
    geometry::RingGeometry ring;  // default geometry for every module
    plant::StationLayout station = plant::StationLayout::uniform(5);
    geometry::SurrogateMaterial material = geometry::default_material();
    double calibration_target_ratio = geometry::kDefaultInflationTarget;
    ObjectConfig object;
    plant::PlantParams plant;
    control::ControllerConfig control;
    bool calibrate_with_object = false;
    double duration_s = 600.0;
    std::string output_path = "telemetry.csv";

    /// Throws ConfigError naming the first broken invariant.
    void validate() const;
    std::optional<plant::ObjectState> initial_object() const;
};

RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

}  // namespace peri::cli
