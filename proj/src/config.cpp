#include "peri/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

namespace peri::cli {

void RunConfig::validate() const {
    auto layout = station.validate();
    if (!layout.pass) throw ConfigError("station: " + layout.violations.front());
    if (!(duration_s > 0.0)) throw ConfigError("run: duration_s must be > 0");
    try {
        plant.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("plant: ") + e.what());
    }
    try {
        control.validate();
    } catch (const control::ControlError& e) {
        throw ConfigError(std::string("control: ") + e.what());
    }
    for (const auto& [id, rate] : control.detection.baseline_rates) {
        if (id < 1 || id > static_cast<int>(station.size())) {
            throw ConfigError("control: baseline references unknown module " + std::to_string(id));
        }
        if (station.module(id).kind != plant::ModuleKind::Compression) {
            throw ConfigError("control: baseline module " + std::to_string(id) + " is not a Compression module");
        }
    }
    if (object.present) {
        if (!(object.spec.length_L_o > 0.0)) throw ConfigError("object: length_L_o must be > 0");
        if (!(object.z >= 0.0)) throw ConfigError("object: z must be >= 0");
        for (const auto& m : station.modules) {
            if (!(object.spec.radius_r_o > 0.0 && object.spec.radius_r_o < m.geometry.inner_radius_r)) {
                throw ConfigError("object: radius_r_o must lie in (0, r) for module " + std::to_string(m.id));
            }
        }
    }
}

std::optional<plant::ObjectState> RunConfig::initial_object() const {
    if (!object.present) return std::nullopt;
    plant::ObjectState s;
    s.spec = object.spec;
    s.z = object.z;
    return s;
}

namespace {

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& node, const std::string& path, const std::string& msg) const {
        std::ostringstream os;
        os << source_;
        if (node.IsDefined() && node.Mark().line >= 0) os << ':' << node.Mark().line + 1;
        os << ": " << path << ": " << msg;
        throw ConfigError(os.str());
    }

    void require_map(const YAML::Node& node, const std::string& path) const {
        if (!node.IsMap()) fail(node, path, "expected a mapping");
    }

    void check_keys(const YAML::Node& map, const std::string& path,
                    std::initializer_list<std::string_view> allowed) const {
        for (const auto& kv : map) {
            const auto key = kv.first.as<std::string>();
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                fail(kv.first, path, "unknown field '" + key + "'");
            }
        }
    }

    template <typename T>
    bool read(const YAML::Node& map, const char* key, const std::string& path, T& out) const {
        const YAML::Node node = map[key];
        if (!node.IsDefined() || node.IsNull()) return false;
        try {
            out = node.as<T>();
        } catch (const YAML::Exception&) {
            fail(node, path + "." + key, "cannot parse value '" + node.Scalar() + "'");
        }
        return true;
    }

    template <typename T>
    void require(const YAML::Node& map, const char* key, const std::string& path, T& out) const {
        if (!read(map, key, path, out)) fail(map, path, std::string("missing field '") + key + "'");
    }

private:
    std::string source_;
};

geometry::RingGeometry parse_ring(const Reader& rd, const YAML::Node& node, const std::string& path) {
    rd.require_map(node, path);
    rd.check_keys(node, path,
                  {"outer_radius_R", "inner_radius_r", "step_height_m", "chamber_spacing_l", "wall_thickness_t",
                   "chamber_length_s", "chamber_count_N"});
    geometry::RingGeometry g;
    rd.require(node, "outer_radius_R", path, g.outer_radius_R);
    rd.require(node, "inner_radius_r", path, g.inner_radius_r);
    rd.require(node, "step_height_m", path, g.step_height_m);
    rd.require(node, "chamber_spacing_l", path, g.chamber_spacing_l);
    rd.require(node, "wall_thickness_t", path, g.wall_thickness_t);
    rd.require(node, "chamber_length_s", path, g.chamber_length_s);
    rd.require(node, "chamber_count_N", path, g.chamber_count_N);
    return g;
}

plant::StationLayout parse_station(const Reader& rd, const YAML::Node& node, const geometry::RingGeometry& ring) {
    const std::string path = "station";
    rd.require_map(node, path);
    rd.check_keys(node, path,
                  {"module_count", "module_height_h", "compression_height_h", "longitudinal_height_h", "modules"});

    plant::StationLayout layout;
    const YAML::Node list = node["modules"];
    if (list.IsDefined() && !list.IsNull()) {
        if (!list.IsSequence()) rd.fail(list, "station.modules", "expected a list");
        double next_z = 0.0;
        int id = 1;
        for (const auto& item : list) {
            const std::string ipath = "station.modules[" + std::to_string(id) + "]";
            rd.require_map(item, ipath);
            rd.check_keys(item, ipath, {"kind", "height_h", "z_origin", "geometry"});
            plant::ModuleSpec m;
            m.id = id;
            std::string kind;
            rd.require(item, "kind", ipath, kind);
            auto parsed = plant::parse_module_kind(kind);
            if (!parsed) rd.fail(item["kind"], ipath + ".kind", "expected Compression or Longitudinal");
            m.kind = *parsed;
            rd.read(item, "height_h", ipath, m.height_h);
            m.z_origin = next_z;
            rd.read(item, "z_origin", ipath, m.z_origin);
            m.geometry = ring;
            if (item["geometry"].IsDefined()) m.geometry = parse_ring(rd, item["geometry"], ipath + ".geometry");
            next_z = m.z_origin + m.height_h;
            layout.modules.push_back(m);
            ++id;
        }
        if (node["module_count"].IsDefined()) {
            rd.fail(node["module_count"], path, "module_count conflicts with an explicit modules list");
        }
        return layout;
    }

    int count = 5;
    double h = 20.0;
    rd.read(node, "module_count", path, count);
    rd.read(node, "module_height_h", path, h);
    double hc = h;
    double hl = h;
    rd.read(node, "compression_height_h", path, hc);
    rd.read(node, "longitudinal_height_h", path, hl);
    if (count < 1) rd.fail(node["module_count"], path, "module_count must be >= 1");
    double z = 0.0;
    for (int i = 0; i < count; ++i) {
        plant::ModuleSpec m;
        m.id = i + 1;
        m.kind = (i % 2 == 0) ? plant::ModuleKind::Compression : plant::ModuleKind::Longitudinal;
        m.geometry = ring;
        m.height_h = (m.kind == plant::ModuleKind::Compression) ? hc : hl;
        m.z_origin = z;
        z += m.height_h;
        layout.modules.push_back(m);
    }
    return layout;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
    Reader rd(source);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        std::ostringstream os;
        os << source << ':' << e.mark.line + 1 << ": syntax error: " << e.msg;
        throw ConfigError(os.str());
    }

    RunConfig cfg;
    if (root.IsNull()) {
        cfg.control.detection.nominal_free_rate = cfg.plant.k_free;
        cfg.validate();
        return cfg;
    }
    rd.require_map(root, "<root>");
    rd.check_keys(root, "<root>",
                  {"geometry", "material", "station", "object", "plant", "control", "calibration", "run"});

    if (root["geometry"].IsDefined()) cfg.ring = parse_ring(rd, root["geometry"], "geometry");

    if (const auto n = root["plant"]; n.IsDefined()) {
        rd.require_map(n, "plant");
        rd.check_keys(n, "plant", {"P_max", "k_free", "k_contact_at_0p7", "k_vent", "dt", "noise_sigma", "rng_seed"});
        rd.read(n, "P_max", "plant", cfg.plant.P_max);
        rd.read(n, "k_free", "plant", cfg.plant.k_free);
        rd.read(n, "k_contact_at_0p7", "plant", cfg.plant.k_contact_at_0p7);
        rd.read(n, "k_vent", "plant", cfg.plant.k_vent);
        rd.read(n, "dt", "plant", cfg.plant.dt);
        rd.read(n, "noise_sigma", "plant", cfg.plant.noise_sigma);
        rd.read(n, "rng_seed", "plant", cfg.plant.rng_seed);
    }

    bool explicit_kappa = false;
    if (const auto n = root["material"]; n.IsDefined()) {
        rd.require_map(n, "material");
        rd.check_keys(n, "material",
                      {"youngs_modulus_E", "poisson_ratio_nu", "calibration_kappa", "calibration_target_ratio"});
        rd.read(n, "youngs_modulus_E", "material", cfg.material.youngs_modulus_E);
        rd.read(n, "poisson_ratio_nu", "material", cfg.material.poisson_ratio_nu);
        explicit_kappa = rd.read(n, "calibration_kappa", "material", cfg.material.calibration_kappa);
        rd.read(n, "calibration_target_ratio", "material", cfg.calibration_target_ratio);
        if (!(cfg.material.poisson_ratio_nu > 0.0 && cfg.material.poisson_ratio_nu < 0.5)) {
            rd.fail(n["poisson_ratio_nu"], "material.poisson_ratio_nu", "must lie in (0, 0.5)");
        }
    }
    if (!explicit_kappa) {
        try {
            cfg.material.calibration_kappa = geometry::calibrate_kappa(
                cfg.ring, cfg.material.youngs_modulus_E, cfg.calibration_target_ratio, cfg.plant.P_max);
        } catch (const geometry::GeometryError& e) {
            throw ConfigError(source + ": material: " + e.what());
        }
    }

    if (root["station"].IsDefined()) {
        cfg.station = parse_station(rd, root["station"], cfg.ring);
    } else {
        cfg.station = plant::StationLayout::uniform(5, 20.0, cfg.ring);
    }

    cfg.object.spec.radius_r_o = 0.7 * cfg.ring.inner_radius_r;
    if (const auto n = root["object"]; n.IsDefined()) {
        rd.require_map(n, "object");
        rd.check_keys(n, "object", {"present", "radius_r_o", "radius_ratio", "length_L_o", "z"});
        rd.read(n, "present", "object", cfg.object.present);
        const bool has_abs = rd.read(n, "radius_r_o", "object", cfg.object.spec.radius_r_o);
        double ratio = 0.0;
        if (rd.read(n, "radius_ratio", "object", ratio)) {
            if (has_abs) rd.fail(n, "object", "give radius_r_o or radius_ratio, not both");
            cfg.object.spec.radius_r_o = ratio * cfg.ring.inner_radius_r;
        }
        rd.read(n, "length_L_o", "object", cfg.object.spec.length_L_o);
        rd.read(n, "z", "object", cfg.object.z);
    }

    auto& ctl = cfg.control;
    double saturation_fraction = 0.98;
    if (const auto n = root["control"]; n.IsDefined()) {
        const std::string path = "control";
        rd.require_map(n, path);
        rd.check_keys(n, path,
                      {"window_start", "window_len", "threshold_ratio_theta", "consecutive_detections",
                       "saturation_fraction", "inflated_fraction", "deflated_kPa", "phase_timeout",
                       "max_cycles_per_level", "max_cycles", "baseline_rates"});
        rd.read(n, "window_start", path, ctl.detection.window_start);
        rd.read(n, "window_len", path, ctl.detection.window_len);
        rd.read(n, "threshold_ratio_theta", path, ctl.detection.threshold_ratio_theta);
        rd.read(n, "consecutive_detections", path, ctl.detection.consecutive_required);
        rd.read(n, "saturation_fraction", path, saturation_fraction);
        rd.read(n, "inflated_fraction", path, ctl.inflated_fraction);
        rd.read(n, "deflated_kPa", path, ctl.deflated_kPa);
        rd.read(n, "phase_timeout", path, ctl.phase_timeout);
        rd.read(n, "max_cycles_per_level", path, ctl.max_cycles_per_level);
        rd.read(n, "max_cycles", path, ctl.max_cycles);
        if (const auto b = n["baseline_rates"]; b.IsDefined()) {
            rd.require_map(b, "control.baseline_rates");
            for (const auto& kv : b) {
                try {
                    ctl.detection.baseline_rates[kv.first.as<int>()] = kv.second.as<double>();
                } catch (const YAML::Exception&) {
                    rd.fail(kv.first, "control.baseline_rates", "expected <module id>: <kPa/s>");
                }
            }
        }
    }
    ctl.P_max = cfg.plant.P_max;
    ctl.detection.saturation_kPa = saturation_fraction * cfg.plant.P_max;
    ctl.detection.nominal_free_rate = cfg.plant.k_free;
    ctl.load_z = cfg.object.z;

    if (const auto n = root["calibration"]; n.IsDefined()) {
        rd.require_map(n, "calibration");
        rd.check_keys(n, "calibration", {"with_object"});
        rd.read(n, "with_object", "calibration", cfg.calibrate_with_object);
    }

    if (const auto n = root["run"]; n.IsDefined()) {
        rd.require_map(n, "run");
        rd.check_keys(n, "run", {"duration_s", "output_path"});
        rd.read(n, "duration_s", "run", cfg.duration_s);
        rd.read(n, "output_path", "run", cfg.output_path);
    }

    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

}  // namespace peri::cli
