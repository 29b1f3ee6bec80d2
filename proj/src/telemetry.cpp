#include "peri/telemetry.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace peri::cli {

std::string format_fixed(double v) {
    if (v == 0.0) v = 0.0;  // no "-0.000000"
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 6);
    if (ec != std::errc{}) throw std::runtime_error("format_fixed: value out of range");
    std::string s(buf, end);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

namespace {

std::string sanitize(std::string s) {
    for (auto& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

double to_double(const std::string& s, std::size_t line_no, const char* field) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": bad " + field + " '" + s + "'");
    }
    return v;
}

int to_int(const std::string& s, std::size_t line_no, const char* field) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": bad " + field + " '" + s + "'");
    }
    return v;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::string to_csv_row(const TelemetrySample& s) {
    std::string row;
    row.reserve(96);
    row += format_fixed(s.time_s);
    row += ',';
    row += std::to_string(s.module_id);
    row += ',';
    row += sanitize(s.kind);
    row += ',';
    row += format_fixed(s.pressure_kPa);
    row += ',';
    row += sanitize(s.valve);
    row += ',';
    row += format_fixed(s.inflation_mm);
    row += ',';
    row += format_fixed(s.object_z_mm);
    row += ',';
    row += sanitize(s.phase);
    row += ',';
    row += sanitize(s.event);
    return row;
}

TelemetrySample parse_csv_row(const std::string& line, std::size_t line_no) {
    auto f = split(line);
    if (f.size() != 9) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": expected 9 fields, got " +
                                 std::to_string(f.size()));
    }
    TelemetrySample s;
    s.time_s = to_double(f[0], line_no, "time_s");
    s.module_id = to_int(f[1], line_no, "module_id");
    s.kind = f[2];
    s.pressure_kPa = to_double(f[3], line_no, "pressure_kPa");
    s.valve = f[4];
    s.inflation_mm = to_double(f[5], line_no, "inflation_mm");
    s.object_z_mm = to_double(f[6], line_no, "object_z_mm");
    s.phase = f[7];
    s.event = f[8];
    return s;
}

TelemetryWriter::TelemetryWriter(std::ostream& out) : out_(out) { out_ << kTelemetryHeader << '\n'; }

void TelemetryWriter::write(const TelemetrySample& s) {
    out_ << to_csv_row(s) << '\n';
    ++rows_;
}

std::vector<TelemetrySample> read_telemetry(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("telemetry: empty file");
    strip_cr(line);
    if (line != kTelemetryHeader) throw std::runtime_error("telemetry: unexpected header '" + line + "'");
    std::vector<TelemetrySample> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        rows.push_back(parse_csv_row(line, line_no));
    }
    return rows;
}

hal::Recording recording_from_telemetry(const std::vector<TelemetrySample>& rows) {
    hal::Recording rec;
    for (const auto& r : rows) {
        const auto t = hal::to_micros(r.time_s);
        if (r.event.empty()) {
            if (std::find(rec.module_ids.begin(), rec.module_ids.end(), r.module_id) == rec.module_ids.end()) {
                rec.module_ids.push_back(r.module_id);
            }
            rec.samples.push_back({t, r.module_id, r.pressure_kPa});
        } else if (r.event.rfind("cmd=", 0) == 0) {
            auto mode = plant::parse_valve_mode(r.event.substr(4));
            if (!mode) throw std::runtime_error("telemetry: bad command event '" + r.event + "'");
            rec.commands.push_back({t, r.module_id, *mode});
        } else if (r.event.rfind("drop", 0) == 0 || r.event.rfind("conflict", 0) == 0) {
            rec.plant_events.push_back({t, r.event});
        }
    }
    return rec;
}

std::map<int, double> baselines_from_telemetry(const std::vector<TelemetrySample>& rows) {
    std::map<int, double> out;
    const std::string tag = "calibrated rate=";
    for (const auto& r : rows) {
        if (r.event.rfind(tag, 0) == 0) out[r.module_id] = to_double(r.event.substr(tag.size()), 0, "rate");
    }
    return out;
}

void write_baselines(std::ostream& out, const std::map<int, double>& rates) {
    out << kBaselineHeader << '\n';
    for (const auto& [id, rate] : rates) out << id << ',' << format_fixed(rate) << '\n';
}

std::map<int, double> read_baselines(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("baselines: empty file");
    strip_cr(line);
    if (line != kBaselineHeader) throw std::runtime_error("baselines: unexpected header '" + line + "'");
    std::map<int, double> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        auto f = split(line);
        if (f.size() != 2) throw std::runtime_error("baselines: line " + std::to_string(line_no) + ": expected 2 fields");
        out[to_int(f[0], line_no, "module_id")] = to_double(f[1], line_no, "rate_kPa_per_s");
    }
    return out;
}

void write_sweep(std::ostream& out, const geometry::SweepResult& result) {
    out << kSweepHeader << '\n';
    for (const auto& s : result.samples) {
        out << format_fixed(s.value) << ',' << (s.inflation ? format_fixed(*s.inflation) : kInfeasible) << '\n';
    }
}

}  // namespace peri::cli
