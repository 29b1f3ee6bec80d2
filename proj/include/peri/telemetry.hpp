#pragma once

#include "peri/geometry.hpp"
#include "peri/hal.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace peri::cli {

inline constexpr const char* kTelemetryHeader =
    "time_s,module_id,kind,pressure_kPa,valve,inflation_mm,object_z_mm,phase,event";
inline constexpr const char* kBaselineHeader = "module_id,rate_kPa_per_s";
inline constexpr const char* kSweepHeader = "value,d_c_over_r";
inline constexpr const char* kInfeasible = "infeasible";

/// Fixed six-decimal rendering used by every CSV this tool writes.
std::string format_fixed(double v);

struct TelemetrySample {
    double time_s = 0.0;
    int module_id = 0;  // 0 for station-wide event rows
    std::string kind;   // Compression, Longitudinal or Station
    double pressure_kPa = 0.0;
    std::string valve;
    double inflation_mm = 0.0;
    double object_z_mm = 0.0;
    std::string phase;
    std::string event;  // empty on sample rows
};

std::string to_csv_row(const TelemetrySample& s);
TelemetrySample parse_csv_row(const std::string& line, std::size_t line_no = 0);

class TelemetryWriter {
public:
    explicit TelemetryWriter(std::ostream& out);
    void write(const TelemetrySample& s);
    std::size_t rows() const { return rows_; }

private:
    std::ostream& out_;
    std::size_t rows_ = 0;
};

/// Reads a telemetry CSV; throws std::runtime_error on a bad header or row.
std::vector<TelemetrySample> read_telemetry(std::istream& in);

/// Sample rows become pressure samples, "cmd=" rows the command stream,
/// drop/conflict rows the plant events.
hal::Recording recording_from_telemetry(const std::vector<TelemetrySample>& rows);

/// Baselines recorded as "calibrated rate=" event rows.
std::map<int, double> baselines_from_telemetry(const std::vector<TelemetrySample>& rows);

void write_baselines(std::ostream& out, const std::map<int, double>& rates);
std::map<int, double> read_baselines(std::istream& in);

void write_sweep(std::ostream& out, const geometry::SweepResult& result);

}  // namespace peri::cli
