#include "peri/plant.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace peri::plant {

const char* to_string(ModuleKind k) {
    return k == ModuleKind::Compression ? "Compression" : "Longitudinal";
}

const char* to_string(ValveMode m) {
    switch (m) {
        case ValveMode::Inflate: return "Inflate";
        case ValveMode::Hold: return "Hold";
        case ValveMode::Deflate: return "Deflate";
    }
    return "?";
}

std::optional<ModuleKind> parse_module_kind(const std::string& s) {
    if (s == "Compression" || s == "C") return ModuleKind::Compression;
    if (s == "Longitudinal" || s == "L") return ModuleKind::Longitudinal;
    return std::nullopt;
}

std::optional<ValveMode> parse_valve_mode(const std::string& s) {
    if (s == "Inflate") return ValveMode::Inflate;
    if (s == "Hold") return ValveMode::Hold;
    if (s == "Deflate") return ValveMode::Deflate;
    return std::nullopt;
}

const char* to_string(PlantEvent::Kind k) { return k == PlantEvent::Kind::Drop ? "drop" : "conflict"; }

// -------------------------------------------------------------
// Layout
// -------------------------------------------------------------

StationLayout StationLayout::uniform(int count, double height_h, const geometry::RingGeometry& g) {
    StationLayout layout;
    for (int i = 0; i < count; ++i) {
        ModuleSpec m;
        m.id = i + 1;
        m.kind = (i % 2 == 0) ? ModuleKind::Compression : ModuleKind::Longitudinal;
        m.geometry = g;
        m.height_h = height_h;
        m.z_origin = i * height_h;
        layout.modules.push_back(m);
    }
    return layout;
}

LayoutReport StationLayout::validate() const {
    LayoutReport report;
    auto fail = [&](std::string msg) {
        report.pass = false;
        report.violations.push_back(std::move(msg));
    };
    if (modules.empty()) {
        fail("station has no modules");
        return report;
    }
    for (std::size_t i = 0; i < modules.size(); ++i) {
        const auto& m = modules[i];
        const std::string tag = "module " + std::to_string(m.id) + ": ";
        if (m.id != static_cast<int>(i) + 1) fail(tag + "ids must be contiguous from 1");
        if (!(m.height_h > 0.0)) fail(tag + "height_h must be > 0");
        const auto expected = (i % 2 == 0) ? ModuleKind::Compression : ModuleKind::Longitudinal;
        if (m.kind != expected) {
            fail(tag + "kind alternation violated (odd ids Compression, even ids Longitudinal, expected " +
                 to_string(expected) + ")");
        }
        if (i > 0) {
            const auto& below = modules[i - 1];
            if (!(m.z_origin > below.z_origin)) fail(tag + "z_origin must increase with id");
            else if (m.z_origin < below.top()) fail(tag + "overlaps the module below");
        }
        auto g = geometry::validate_geometry(m.geometry);
        for (const auto& v : g.violations) fail(tag + "geometry " + v);
    }
    if (modules.front().kind != ModuleKind::Compression) fail("first module must be Compression");
    if (modules.back().kind != ModuleKind::Compression) fail("last module must be Compression");
    return report;
}

const ModuleSpec& StationLayout::module(int id) const {
    if (id < 1 || id > static_cast<int>(modules.size())) {
        throw std::out_of_range("no module with id " + std::to_string(id));
    }
    return modules[static_cast<std::size_t>(id - 1)];
}

void PlantParams::validate() const {
    auto need = [](bool ok, const char* msg) {
        if (!ok) throw std::invalid_argument(msg);
    };
    need(P_max > 0.0, "P_max must be > 0");
    need(k_free > 0.0, "k_free must be > 0");
    need(k_contact_at_0p7 > 0.0, "k_contact_at_0p7 must be > 0");
    need(k_vent > 0.0, "k_vent must be > 0");
    need(dt > 0.0, "dt must be > 0");
    need(noise_sigma >= 0.0, "noise_sigma must be >= 0");
}

// -------------------------------------------------------------
// Rate and displacement laws
// -------------------------------------------------------------

double pressure_rate(const ChamberState& state, ModuleKind kind, bool contact, double ro_over_r,
                     const PlantParams& params) {
    switch (state.valve) {
        case ValveMode::Hold: return 0.0;
        case ValveMode::Deflate: return state.pressure > 0.0 ? -params.k_vent : 0.0;
        case ValveMode::Inflate: {
            if (state.pressure >= params.P_max) return 0.0;
            if (!contact || kind != ModuleKind::Compression) return params.k_free;
            const double excess = std::max(0.0, ro_over_r - kContactFloorRatio);
            return params.k_free * (1.0 + params.contact_slope() * excess);
        }
    }
    return 0.0;
}

double max_inflation(const ModuleSpec& module, const geometry::SurrogateMaterial& mat, const PlantParams& params) {
    if (module.kind == ModuleKind::Longitudinal) return kStrokePerHeight * module.height_h;
    const double ratio = geometry::surrogate_inflation(module.geometry, mat, params.P_max);
    return ratio * module.geometry.inner_radius_r;
}

double inflation_of(double pressure, const ModuleSpec& module, const geometry::SurrogateMaterial& mat,
                    const PlantParams& params) {
    const double p = std::clamp(pressure, 0.0, params.P_max);
    return p / params.P_max * max_inflation(module, mat, params);
}

bool contact_check(const ModuleSpec& module, const ChamberState& chamber, const ObjectState& object) {
    if (module.kind != ModuleKind::Compression) return false;
    const double gap = module.geometry.inner_radius_r - object.spec.radius_r_o;
    if (chamber.inflation < gap) return false;
    const double lo = std::max(module.z_origin, object.z);
    const double hi = std::min(module.top(), object.top());
    return lo < hi;
}

double time_to_contact(double ro_over_r, const PlantParams& params, const geometry::RingGeometry& g,
                       const geometry::SurrogateMaterial& mat) {
    const double d_max = geometry::surrogate_inflation(g, mat, params.P_max) * g.inner_radius_r;
    const double gap = g.inner_radius_r * (1.0 - ro_over_r);
    if (gap > d_max) {
        std::ostringstream os;
        os << "object too thin for contact: gap " << gap << " mm exceeds max inflation " << d_max << " mm";
        throw PlantError(os.str());
    }
    return std::max(0.0, gap) / d_max * params.P_max / params.k_free;
}

// -------------------------------------------------------------
// Plant
// -------------------------------------------------------------

Plant::Plant(StationLayout layout, geometry::SurrogateMaterial mat, PlantParams params,
             std::optional<ObjectState> object)
    : layout_(std::move(layout)), mat_(mat), params_(params), object_(std::move(object)), rng_(params.rng_seed) {
    params_.validate();
    auto report = layout_.validate();
    if (!report.pass) throw PlantError("invalid station layout: " + report.violations.front());
    if (object_) {
        for (const auto& m : layout_.modules) {
            if (!(object_->spec.radius_r_o > 0.0 && object_->spec.radius_r_o < m.geometry.inner_radius_r)) {
                throw PlantError("object radius must lie in (0, r) for every module");
            }
        }
        if (!(object_->spec.length_L_o > 0.0)) throw PlantError("object length must be > 0");
        if (object_->z < 0.0) throw PlantError("object z must be >= 0");
    }
    for (const auto& m : layout_.modules) d_max_.push_back(plant::max_inflation(m, mat_, params_));
    state_.resize(layout_.size());
    vent_blocked_.assign(layout_.size(), false);
    measured_.assign(layout_.size(), 0.0);
    refresh_kinematics();
    if (object_) {
        for (std::size_t i = 0; i < state_.size(); ++i) {
            state_[i].chamber.in_contact = contact_check(placed(i), state_[i].chamber, *object_);
        }
        object_->supporters = current_supporters();
        object_->held = !object_->supporters.empty();
    }
    sample_sensors();
}

std::size_t Plant::index(int id) const {
    if (id < 1 || id > static_cast<int>(state_.size())) {
        throw std::out_of_range("no module with id " + std::to_string(id));
    }
    return static_cast<std::size_t>(id - 1);
}

const ModuleState& Plant::module(int id) const { return state_[index(id)]; }

double Plant::measured_pressure(int id) const { return measured_[index(id)]; }

void Plant::set_valve(int id, ValveMode mode) { state_[index(id)].chamber.valve = mode; }

void Plant::set_vent_blocked(int id, bool blocked) { vent_blocked_[index(id)] = blocked; }

ModuleSpec Plant::placed(std::size_t i) const {
    ModuleSpec m = layout_.modules[i];
    m.z_origin = state_[i].z_origin;
    return m;
}

void Plant::refresh_kinematics() {
    double lift = 0.0;
    for (std::size_t i = 0; i < state_.size(); ++i) {
        const auto& spec = layout_.modules[i];
        auto& s = state_[i];
        s.chamber.inflation = s.chamber.pressure / params_.P_max * d_max_[i];
        s.z_origin = spec.z_origin + lift;
        if (spec.kind == ModuleKind::Longitudinal) lift += s.chamber.inflation;
    }
}

std::vector<int> Plant::current_supporters() const {
    std::vector<int> ids;
    if (!object_) return ids;
    for (std::size_t i = 0; i < state_.size(); ++i) {
        if (contact_check(placed(i), state_[i].chamber, *object_)) ids.push_back(layout_.modules[i].id);
    }
    return ids;
}

void Plant::sample_sensors() {
    for (std::size_t i = 0; i < state_.size(); ++i) {
        double reading = state_[i].chamber.pressure;
        if (params_.noise_sigma > 0.0) reading += params_.noise_sigma * noise_(rng_);
        measured_[i] = std::round(reading / kSensorResolution) * kSensorResolution;
    }
}

std::vector<PlantEvent> Plant::step(std::span<const ValveMode> commands, double dt) {
    if (commands.size() != state_.size()) throw PlantError("one valve command per module required");
    for (std::size_t i = 0; i < commands.size(); ++i) state_[i].chamber.valve = commands[i];
    return step(dt);
}

std::vector<PlantEvent> Plant::step(double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    std::vector<PlantEvent> events;

    std::vector<double> z_before(state_.size());
    for (std::size_t i = 0; i < state_.size(); ++i) z_before[i] = state_[i].z_origin;

    for (std::size_t i = 0; i < state_.size(); ++i) {
        auto& c = state_[i].chamber;
        const auto& spec = layout_.modules[i];
        const double ro_over_r = object_ ? object_->spec.radius_r_o / spec.geometry.inner_radius_r : 0.0;
        double rate = pressure_rate(c, spec.kind, c.in_contact, ro_over_r, params_);
        if (rate < 0.0 && vent_blocked_[i]) rate = 0.0;
        c.pressure = std::clamp(c.pressure + rate * dt, 0.0, params_.P_max);
    }
    refresh_kinematics();
    time_ += dt;

    if (object_) {
        auto& obj = *object_;
        const auto previous = obj.supporters;
        if (!previous.empty()) {
            // previous is ordered bottom-up, so front() is the lowest supporter.
            const double lowest_delta = state_[index(previous.front())].z_origin - z_before[index(previous.front())];
            bool consistent = true;
            for (int id : previous) {
                const double delta = state_[index(id)].z_origin - z_before[index(id)];
                if (std::abs(delta - lowest_delta) > 1e-12) consistent = false;
            }
            if (!consistent && !in_conflict_) {
                std::ostringstream os;
                os << "supporters move inconsistently; following module " << previous.front();
                events.push_back({PlantEvent::Kind::Conflict, time_, os.str()});
            }
            in_conflict_ = !consistent;
            obj.z = std::max(0.0, obj.z + lowest_delta);  // the floor stops a descending grasp
        } else {
            in_conflict_ = false;
        }

        for (std::size_t i = 0; i < state_.size(); ++i) {
            state_[i].chamber.in_contact = contact_check(placed(i), state_[i].chamber, obj);
        }
        obj.supporters = current_supporters();

        if (obj.supporters.empty() && obj.held) {
            double floor = 0.0;
            const double gap_tol = 1e-9;
            for (std::size_t i = 0; i < state_.size(); ++i) {
                const auto m = placed(i);
                if (m.kind != ModuleKind::Compression) continue;
                const double gap = m.geometry.inner_radius_r - obj.spec.radius_r_o;
                if (state_[i].chamber.inflation >= gap && m.top() <= obj.z + gap_tol) floor = std::max(floor, m.top());
            }
            std::ostringstream os;
            os << "object dropped from z=" << obj.z << " to z=" << floor;
            obj.z = floor;
            events.push_back({PlantEvent::Kind::Drop, time_, os.str()});
            for (std::size_t i = 0; i < state_.size(); ++i) {
                state_[i].chamber.in_contact = contact_check(placed(i), state_[i].chamber, obj);
            }
            obj.supporters = current_supporters();
        }
        obj.held = !obj.supporters.empty();
    } else {
        for (auto& s : state_) s.chamber.in_contact = false;
    }

    sample_sensors();
    return events;
}

}  // namespace peri::plant
