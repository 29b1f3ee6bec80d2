#include "peri/commands.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

namespace py = pybind11;
using namespace peri;

namespace {

struct StationSummary {
    std::string outcome;
    int cycles = 0;
    int detections = 0;
    int faults = 0;
    int drops = 0;
    int conflicts = 0;
    double initial_object_z = 0.0;
    double final_object_z = 0.0;
};

struct ReplaySummary {
    std::string outcome;
    std::size_t commands_checked = 0;
    std::size_t mismatches = 0;
    std::size_t unconsumed = 0;
    std::vector<std::string> messages;
};

cli::RunConfig config_from(const std::string& yaml, std::optional<std::uint64_t> seed) {
    auto cfg = cli::parse_config(yaml, "<python>");
    if (seed) cfg.plant.rng_seed = *seed;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Bindings for the peristation core library";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const cli::ConfigError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const geometry::GeometryError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const plant::PlantError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    py::class_<geometry::RingGeometry>(m, "RingGeometry")
        .def(py::init<>())
        .def(py::init([](double R, double r, double m_, double l, double t, double s, int N) {
                 return geometry::RingGeometry{R, r, m_, l, t, s, N};
             }),
             py::arg("R"), py::arg("r"), py::arg("m"), py::arg("l"), py::arg("t"), py::arg("s"), py::arg("N"))
        .def_readwrite("R", &geometry::RingGeometry::outer_radius_R)
        .def_readwrite("r", &geometry::RingGeometry::inner_radius_r)
        .def_readwrite("m", &geometry::RingGeometry::step_height_m)
        .def_readwrite("l", &geometry::RingGeometry::chamber_spacing_l)
        .def_readwrite("t", &geometry::RingGeometry::wall_thickness_t)
        .def_readwrite("s", &geometry::RingGeometry::chamber_length_s)
        .def_readwrite("N", &geometry::RingGeometry::chamber_count_N)
        .def("__repr__", [](const geometry::RingGeometry& g) {
            std::ostringstream os;
            os << "RingGeometry(R=" << g.outer_radius_R << ", r=" << g.inner_radius_r << ", m=" << g.step_height_m
               << ", l=" << g.chamber_spacing_l << ", t=" << g.wall_thickness_t << ", s=" << g.chamber_length_s
               << ", N=" << g.chamber_count_N << ")";
            return os.str();
        });

    py::class_<geometry::ValidationReport>(m, "ValidationReport")
        .def_readonly("passed", &geometry::ValidationReport::pass)
        .def_readonly("violations", &geometry::ValidationReport::violations)
        .def_readonly("arc_relative_error", &geometry::ValidationReport::arc_relative_error);

    py::class_<StationSummary>(m, "StationSummary")
        .def_readonly("outcome", &StationSummary::outcome)
        .def_readonly("cycles", &StationSummary::cycles)
        .def_readonly("detections", &StationSummary::detections)
        .def_readonly("faults", &StationSummary::faults)
        .def_readonly("drops", &StationSummary::drops)
        .def_readonly("conflicts", &StationSummary::conflicts)
        .def_readonly("initial_object_z", &StationSummary::initial_object_z)
        .def_readonly("final_object_z", &StationSummary::final_object_z);

    py::class_<ReplaySummary>(m, "ReplaySummary")
        .def_readonly("outcome", &ReplaySummary::outcome)
        .def_readonly("commands_checked", &ReplaySummary::commands_checked)
        .def_readonly("mismatches", &ReplaySummary::mismatches)
        .def_readonly("unconsumed", &ReplaySummary::unconsumed)
        .def_readonly("messages", &ReplaySummary::messages);

    m.def("validate_geometry", &geometry::validate_geometry, py::arg("geometry") = geometry::RingGeometry{});
    m.def("solve_chamber_length", &geometry::solve_chamber_length, py::arg("R"), py::arg("r"), py::arg("l"),
          py::arg("N"));
    m.def(
        "surrogate_inflation",
        [](const geometry::RingGeometry& g, double pressure) {
            return geometry::surrogate_inflation(g, geometry::default_material(), pressure);
        },
        py::arg("geometry") = geometry::RingGeometry{}, py::arg("pressure_kPa") = geometry::kDefaultPressure,
        "Normalized inflation d_c/r with the default calibrated material.");
    m.def(
        "sweep",
        [](const std::string& param, const std::vector<double>& values, const geometry::RingGeometry& g) {
            const auto p = geometry::parse_sweep_parameter(param);
            if (!p) throw py::value_error("unknown sweep parameter '" + param + "'");
            const auto res = geometry::sweep(g, geometry::default_material(), geometry::kDefaultPressure, *p, values);
            std::vector<std::pair<double, std::optional<double>>> out;
            for (const auto& s : res.samples) out.emplace_back(s.value, s.inflation);
            return out;
        },
        py::arg("param"), py::arg("values"), py::arg("geometry") = geometry::RingGeometry{},
        "List of (value, d_c/r or None when infeasible).");
    m.def(
        "time_to_contact",
        [](double ratio) {
            const cli::RunConfig cfg;
            return plant::time_to_contact(ratio, cfg.plant, cfg.ring, cfg.material);
        },
        py::arg("ro_over_r"));

    m.def(
        "calibrate",
        [](const std::string& yaml, std::optional<std::uint64_t> seed) {
            return cli::calibrate_station(config_from(yaml, seed));
        },
        py::arg("config_yaml") = "", py::arg("seed") = py::none(),
        "Baseline inflation slope (kPa/s) per compression module.");

    m.def(
        "run",
        [](const std::string& yaml, std::optional<std::string> telemetry_path, std::optional<std::uint64_t> seed) {
            const auto cfg = config_from(yaml, seed);
            std::map<int, double> baselines;
            {
                std::stringstream buf;
                cli::write_baselines(buf, cli::calibrate_station(cfg));
                baselines = cli::read_baselines(buf);
            }
            control::StationRun run;
            {
                py::gil_scoped_release release;
                if (telemetry_path) {
                    std::ofstream f(*telemetry_path);
                    if (!f) throw std::runtime_error("cannot write '" + *telemetry_path + "'");
                    run = cli::execute_run(cfg, baselines, &f);
                } else {
                    run = cli::execute_run(cfg, baselines);
                }
            }
            return StationSummary{control::to_string(run.outcome), run.cycles, run.detections, run.faults,
                                  run.drops, run.conflicts, run.initial_object_z, run.final_object_z};
        },
        py::arg("config_yaml") = "", py::arg("telemetry_path") = py::none(), py::arg("seed") = py::none());

    m.def(
        "replay",
        [](const std::string& telemetry_path, const std::string& yaml, std::optional<std::uint64_t> seed) {
            const auto cfg = config_from(yaml, seed);
            std::ifstream in(telemetry_path);
            if (!in) throw std::runtime_error("cannot open '" + telemetry_path + "'");
            const auto rep = cli::replay_telemetry(cli::read_telemetry(in), cfg);
            return ReplaySummary{control::to_string(rep.outcome), rep.commands_checked, rep.mismatches,
                                 rep.unconsumed, rep.messages};
        },
        py::arg("telemetry_path"), py::arg("config_yaml") = "", py::arg("seed") = py::none());
}
