#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace peri::geometry {

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Cross-section of one donut-shaped actuation ring. Lengths in mm.
struct RingGeometry {
    double outer_radius_R = 40.0;
    double inner_radius_r = 25.0;
    double step_height_m = 4.0;
    double chamber_spacing_l = 12.0;
    double wall_thickness_t = 2.0;
    double chamber_length_s = 28.8;
    int chamber_count_N = 5;
};

/// Linear-elastic stand-in for the silicone. Only E and kappa enter the model.
struct SurrogateMaterial {
    double youngs_modulus_E = 100.0;  // kPa
    double poisson_ratio_nu = 0.45;
    double calibration_kappa = 1.0;
};

inline constexpr double kArcConstraintTolerance = 0.01;
inline constexpr double kDefaultPressure = 15.0;         // kPa
inline constexpr double kDefaultInflationTarget = 0.69;  // d_c/r at 15 kPa, default ring

// Rule names reported by validate_geometry.
namespace rule {
inline constexpr const char* kFinite = "finite_fields";
inline constexpr const char* kOuterGreaterInner = "R_gt_r";
inline constexpr const char* kInnerPositive = "r_gt_0";
inline constexpr const char* kWallPositive = "t_gt_0";
inline constexpr const char* kChamberLengthPositive = "s_gt_0";
inline constexpr const char* kSpacingNonNegative = "l_ge_0";
inline constexpr const char* kChamberCount = "N_ge_1";
inline constexpr const char* kArcConstraint = "arc_constraint";
}  // namespace rule

struct ValidationReport {
    bool pass = true;
    std::vector<std::string> violations;
    double arc_relative_error = 0.0;  // |(s+l)N - pi(R+r)| / pi(R+r)

    bool violates(const std::string& name) const;
};

ValidationReport validate_geometry(const RingGeometry& g);

/// Chamber length closing the arc constraint exactly: s = pi(R+r)/N - l.
double solve_chamber_length(double R, double r, double l, int N);

/// Uniformity penalty for few chambers; U(1) = 0, U(N) -> 1 as N grows.
double uniformity_factor(int N);

/// Normalized inflation d_c/r of a compression ring under pressure P (kPa).
double surrogate_inflation(const RingGeometry& g, const SurrogateMaterial& mat, double pressure_kPa);

/// kappa making surrogate_inflation(g, {E, kappa}, P) == target_ratio.
double calibrate_kappa(const RingGeometry& g, double youngs_modulus_E, double target_ratio,
                       double pressure_kPa);

/// Material with kappa closed against the default ring calibration point.
SurrogateMaterial default_material();

enum class SweepParameter { N, l, t };

const char* to_string(SweepParameter p);
std::optional<SweepParameter> parse_sweep_parameter(const std::string& name);

struct SweepSample {
    double value = 0.0;
    std::optional<double> inflation;  // empty when the geometry is infeasible
    std::string note;
};

struct SweepResult {
    SweepParameter parameter = SweepParameter::N;
    std::vector<SweepSample> samples;

    /// Index of the feasible sample with the largest d_c/r (first on ties).
    std::optional<std::size_t> argmax() const;
};

SweepResult sweep(const RingGeometry& base, const SurrogateMaterial& mat, double pressure_kPa,
                  SweepParameter parameter, const std::vector<double>& values);

}  // namespace peri::geometry
