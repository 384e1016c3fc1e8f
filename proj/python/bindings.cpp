#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>
#include <optional>

#include "ppde/control_bench.hpp"
#include "ppde/errors.hpp"
#include "ppde/functional.hpp"
#include "ppde/nonlinear_expectation.hpp"
#include "ppde/path_space.hpp"
#include "ppde/regularization.hpp"
#include "ppde/suites.hpp"

namespace py = pybind11;
using namespace ppde;

namespace {

py::dict report_dict(const SuiteReport& r) {
    py::dict d;
    d["suite"] = r.suite;
    d["criterion"] = r.criterion;
    d["pass"] = r.pass();
    d["partial"] = r.partial;
    d["seconds"] = r.seconds;
    py::list checks;
    for (const auto& c : r.checks) {
        py::dict k;
        k["name"] = c.name;
        k["property"] = c.property;
        k["pass"] = c.pass;
        k["hard"] = c.hard;
        k["measured"] = c.measured;
        k["threshold"] = c.threshold;
        k["detail"] = c.detail;
        checks.append(k);
    }
    d["checks"] = checks;
    d["constants"] = r.constants;
    py::dict tables;
    for (const auto& t : r.tables) tables[py::str(t.file)] = t.csv;
    d["tables"] = tables;
    d["warnings"] = r.warnings;
    return d;
}

ExperimentConfig config_from(const std::string& text) {
    std::vector<Diagnostic> diags;
    ExperimentConfig cfg = parse_config(text, diags);
    if (!diags.empty()) {
        std::string msg;
        for (const auto& d : diags) msg += "line " + std::to_string(d.line) + ": " + d.message + "\n";
        throw ConfigurationError(msg);
    }
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Path-dependent viscosity solution experiments";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ConfigurationError>(m, "ConfigurationError", PyExc_ValueError);
    py::register_exception<PrecisionError>(m, "PrecisionError", PyExc_ValueError);

    py::class_<Grid>(m, "Grid")
        .def(py::init<double, int>(), py::arg("horizon"), py::arg("cells"))
        .def_property_readonly("horizon", &Grid::horizon)
        .def_property_readonly("cells", &Grid::cells)
        .def_property_readonly("step", &Grid::step)
        .def("time", &Grid::time);

    py::class_<DiscretePath>(m, "DiscretePath")
        .def(py::init([](const Grid& g, std::vector<double> values, int dim, int stop) {
                 return DiscretePath(g, dim, std::move(values), stop);
             }),
             py::arg("grid"), py::arg("values"), py::arg("dim") = 1, py::arg("stop") = -1)
        .def_property_readonly("values", &DiscretePath::values)
        .def_property_readonly("stop", &DiscretePath::stop)
        .def("stopped", &DiscretePath::stopped);

    py::class_<PointInTheta>(m, "PointInTheta")
        .def(py::init<double, const DiscretePath&>(), py::arg("t"), py::arg("path"))
        .def_readonly("t", &PointInTheta::t)
        .def_readonly("path", &PointInTheta::path);

    m.def("origin_point", &origin_point, py::arg("grid"), py::arg("dim") = 1);
    m.def(
        "distance",
        [](const PointInTheta& a, const PointInTheta& b, std::optional<double> p) {
            return distance(a, b, p ? DistanceMode::order(*p) : DistanceMode::sup());
        },
        py::arg("a"), py::arg("b"), py::arg("p") = py::none(), "order-p distance, or the sup distance when p is None");

    py::class_<Functional>(m, "Functional")
        .def_readonly("name", &Functional::name)
        .def_readonly("bound", &Functional::bound)
        .def("__call__", [](const Functional& u, const PointInTheta& th) { return u(th); });
    m.def(
        "catalog_functional",
        [](const std::string& name, double horizon, int p) {
            CatalogOptions o;
            o.horizon = horizon;
            o.p = p;
            return catalog_functional(name, o);
        },
        py::arg("name"), py::arg("horizon") = 1.0, py::arg("p") = 3);
    m.def("catalog_names", &catalog_names);

    m.def(
        "regularize",
        [](const Functional& u, double n, const PointInTheta& th, bool sub, int p, int restarts, std::uint64_t seed) {
            SearchConfig sc;
            sc.restarts = restarts;
            sc.seed = seed;
            auto r = regularize(u, n, th.t, th.path, sub ? Direction::Sub : Direction::Super, p, sc);
            py::dict d;
            d["value"] = r.value;
            d["gap"] = r.gap;
            d["certified"] = r.certified;
            d["t_hat"] = r.t_hat;
            d["penalty"] = r.penalty;
            return d;
        },
        py::arg("u"), py::arg("n"), py::arg("theta"), py::arg("sub") = true, py::arg("p") = 3, py::arg("restarts") = 5,
        py::arg("seed") = 1);

    m.def(
        "sup_expectation",
        [](double L, double T, int N, const std::string& payoff, bool sup) {
            return sup_expectation(build_lattice(L, T, N, 1), tree_payoff(payoff), sup ? Mode::Sup : Mode::Inf);
        },
        py::arg("L"), py::arg("T"), py::arg("N"), py::arg("payoff"), py::arg("sup") = true);

    m.def(
        "control_value",
        [](const std::string& problem, int cells, int control_points, bool monte_carlo, long paths,
           std::uint64_t seed) {
            ControlOptions co;
            co.cells = cells;
            co.control_points = control_points;
            ControlProblem P = control_problem(problem, co);
            ValueOptions vo;
            vo.engine = monte_carlo ? Engine::MonteCarlo : Engine::Lattice;
            vo.paths = paths;
            vo.seed = seed;
            ValueResult r = value(P, origin_point(P.grid), vo);
            return py::make_tuple(r.value, r.std_error);
        },
        py::arg("problem"), py::arg("cells") = 64, py::arg("control_points") = 5, py::arg("monte_carlo") = false,
        py::arg("paths") = 20000, py::arg("seed") = 1, "value at the origin and its standard error");

    m.def("suite_names", &suite_names);
    m.def("default_config_text", &default_config_text);
    m.def(
        "validate_config",
        [](const std::string& text) {
            std::vector<Diagnostic> diags;
            parse_config(text, diags);
            py::list out;
            for (const auto& d : diags) out.append(py::make_tuple(d.line, d.key, d.message));
            return out;
        },
        py::arg("text"), "list of (line, key, message) diagnostics");
    m.def(
        "run_suite",
        [](const std::string& name, const std::string& config_text) {
            ExperimentConfig cfg = config_from(config_text);
            SuiteReport r;
            {
                py::gil_scoped_release release;
                r = run_suite(name, cfg);
            }
            return report_dict(r);
        },
        py::arg("name"), py::arg("config") = "");
}
