#include "peri/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace peri::geometry {

namespace {

double half_perimeter(double R, double r) { return std::numbers::pi * (R + r); }

bool all_finite(const RingGeometry& g) {
    return std::isfinite(g.outer_radius_R) && std::isfinite(g.inner_radius_r) &&
           std::isfinite(g.step_height_m) && std::isfinite(g.chamber_spacing_l) &&
           std::isfinite(g.wall_thickness_t) && std::isfinite(g.chamber_length_s);
}

void require_valid(const RingGeometry& g) {
    auto report = validate_geometry(g);
    if (!report.pass) {
        std::ostringstream os;
        os << "invalid ring geometry:";
        for (const auto& v : report.violations) os << ' ' << v;
        throw GeometryError(os.str());
    }
}

}  // namespace

bool ValidationReport::violates(const std::string& name) const {
    return std::find(violations.begin(), violations.end(), name) != violations.end();
}

ValidationReport validate_geometry(const RingGeometry& g) {
    ValidationReport report;
    auto fail = [&](const char* name) {
        report.pass = false;
        report.violations.emplace_back(name);
    };

    if (!all_finite(g)) {
        fail(rule::kFinite);
        return report;
    }
    if (!(g.outer_radius_R > g.inner_radius_r)) fail(rule::kOuterGreaterInner);
    if (!(g.inner_radius_r > 0.0)) fail(rule::kInnerPositive);
    if (!(g.wall_thickness_t > 0.0)) fail(rule::kWallPositive);
    if (!(g.chamber_length_s > 0.0)) fail(rule::kChamberLengthPositive);
    if (!(g.chamber_spacing_l >= 0.0)) fail(rule::kSpacingNonNegative);
    if (g.chamber_count_N < 1) fail(rule::kChamberCount);

    const double arc = half_perimeter(g.outer_radius_R, g.inner_radius_r);
    if (arc > 0.0) {
        const double packed = (g.chamber_length_s + g.chamber_spacing_l) * g.chamber_count_N;
        report.arc_relative_error = std::abs(packed - arc) / arc;
        if (report.arc_relative_error > kArcConstraintTolerance) fail(rule::kArcConstraint);
    } else {
        report.arc_relative_error = std::numeric_limits<double>::infinity();
        fail(rule::kArcConstraint);
    }
    return report;
}

double solve_chamber_length(double R, double r, double l, int N) {
    if (N < 1) {
        throw GeometryError("chamber length infeasible: N must be >= 1 (N=" + std::to_string(N) + ")");
    }
    const double s = half_perimeter(R, r) / N - l;
    if (!(s > 0.0)) {
        std::ostringstream os;
        os << "chamber length infeasible for l=" << l << " N=" << N << " (pi(R+r)/N=" << half_perimeter(R, r) / N
           << ")";
        throw GeometryError(os.str());
    }
    return s;
}

double uniformity_factor(int N) {
    const double x = (N - 1) / 2.0;
    return 1.0 - std::exp(-x * x);
}

double surrogate_inflation(const RingGeometry& g, const SurrogateMaterial& mat, double pressure_kPa) {
    require_valid(g);
    if (!(pressure_kPa >= 0.0) || !std::isfinite(pressure_kPa)) {
        throw GeometryError("surrogate_inflation: pressure must be finite and >= 0");
    }
    if (!(mat.youngs_modulus_E > 0.0) || !(mat.calibration_kappa > 0.0)) {
        throw GeometryError("surrogate_inflation: E and kappa must be > 0");
    }
    const double membrane = (pressure_kPa * g.chamber_length_s) /
                            (mat.youngs_modulus_E * g.wall_thickness_t * g.inner_radius_r);
    return mat.calibration_kappa * membrane * uniformity_factor(g.chamber_count_N);
}

double calibrate_kappa(const RingGeometry& g, double youngs_modulus_E, double target_ratio, double pressure_kPa) {
    if (!(target_ratio > 0.0)) throw GeometryError("calibrate_kappa: target_ratio must be > 0");
    if (!(pressure_kPa > 0.0)) throw GeometryError("calibrate_kappa: pressure must be > 0");
    // Evaluate at kappa = 1 and invert the linear dependence.
    const double unit = surrogate_inflation(g, {youngs_modulus_E, 0.45, 1.0}, pressure_kPa);
    if (unit == 0.0) throw GeometryError("uncalibratable geometry: uniformity factor vanishes (N=1)");
    return target_ratio / unit;
}

SurrogateMaterial default_material() {
    SurrogateMaterial mat;
    mat.calibration_kappa =
        calibrate_kappa(RingGeometry{}, mat.youngs_modulus_E, kDefaultInflationTarget, kDefaultPressure);
    return mat;
}

const char* to_string(SweepParameter p) {
    switch (p) {
        case SweepParameter::N: return "N";
        case SweepParameter::l: return "l";
        case SweepParameter::t: return "t";
    }
    return "?";
}

std::optional<SweepParameter> parse_sweep_parameter(const std::string& name) {
    if (name == "N") return SweepParameter::N;
    if (name == "l") return SweepParameter::l;
    if (name == "t") return SweepParameter::t;
    return std::nullopt;
}

std::optional<std::size_t> SweepResult::argmax() const {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!samples[i].inflation) continue;
        if (!best || *samples[i].inflation > *samples[*best].inflation) best = i;
    }
    return best;
}

SweepResult sweep(const RingGeometry& base, const SurrogateMaterial& mat, double pressure_kPa,
                  SweepParameter parameter, const std::vector<double>& values) {
    if (values.empty()) throw GeometryError("empty sweep");
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (!(values[i] > values[i - 1])) throw GeometryError("sweep values must be strictly increasing");
    }

    SweepResult result;
    result.parameter = parameter;
    result.samples.reserve(values.size());
    for (double v : values) {
        SweepSample sample;
        sample.value = v;
        RingGeometry g = base;
        try {
            switch (parameter) {
                case SweepParameter::N:
                    if (v != std::floor(v) || v < 1.0) throw GeometryError("N must be a positive integer");
                    g.chamber_count_N = static_cast<int>(v);
                    g.chamber_length_s = solve_chamber_length(g.outer_radius_R, g.inner_radius_r,
                                                              g.chamber_spacing_l, g.chamber_count_N);
                    break;
                case SweepParameter::l:
                    g.chamber_spacing_l = v;
                    g.chamber_length_s = solve_chamber_length(g.outer_radius_R, g.inner_radius_r,
                                                              g.chamber_spacing_l, g.chamber_count_N);
                    break;
                case SweepParameter::t:
                    g.wall_thickness_t = v;
                    break;
            }
            sample.inflation = surrogate_inflation(g, mat, pressure_kPa);
        } catch (const GeometryError& e) {
            sample.note = e.what();
        }
        result.samples.push_back(std::move(sample));
    }
    return result;
}

}  // namespace peri::geometry
