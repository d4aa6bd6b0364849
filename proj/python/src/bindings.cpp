#include "spi/cli.hpp"
#include "spi/harness.hpp"
#include "spi/model_config.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace spi;

namespace {

std::shared_ptr<const Model> model_from(const std::string& name, const std::optional<std::vector<double>>& sigma) {
    ModelConfig c = ModelConfig::preset(name);
    if (sigma) {
        if (sigma->size() != c.sigma.size()) throw ContractError("sigma has the wrong length for model " + name);
        c.sigma = *sigma;
    }
    return make_model(c);
}

FlowPartId part_from(const std::string& kind, int index) {
    if (kind == "det") return FlowPartId::det(index);
    if (kind == "sto") return FlowPartId::sto(index);
    throw ContractError("part kind must be 'det' or 'sto'");
}

py::dict as_dict(const NamedValues& v) {
    py::dict d;
    for (const auto& [name, value] : v) d[py::str(name)] = value;
    return d;
}

py::dict report_dict(const ErrorReport& r) {
    py::dict d;
    d["model"] = r.model;
    d["scheme"] = r.scheme;
    d["mode"] = to_string(r.mode);
    d["samples"] = r.samples;
    d["failures"] = r.failures;
    std::vector<double> h, e, se;
    for (const auto& p : r.points) {
        h.push_back(p.h);
        e.push_back(p.error);
        se.push_back(p.std_error);
    }
    d["h"] = h;
    d["error"] = e;
    d["std_error"] = se;
    d["slope"] = r.fit ? py::cast(r.fit->slope) : py::none();
    d["fitted_h"] = r.fitted_h;
    std::ostringstream csv;
    write_convergence_csv(csv, r);
    d["csv"] = csv.str();
    return d;
}

}  // namespace

PYBIND11_MODULE(_spi, m) {
    m.doc() = "Explicit splitting integrators for stochastic Lie-Poisson systems";

    py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

    py::class_<Model, std::shared_ptr<Model>>(m, "Model")
        .def_property_readonly("name", &Model::name)
        .def_property_readonly("dim", &Model::dim)
        .def_property_readonly("noise_count", &Model::noise_count)
        .def_property_readonly("deterministic_parts", &Model::deterministic_parts)
        .def_property_readonly("sigmas", &Model::sigmas)
        .def("hamiltonian", &Model::hamiltonian, py::arg("y"))
        .def("invariants", [](const Model& self, const State& y) { return as_dict(self.invariants(y)); },
             py::arg("y"))
        .def("flow",
             [](const Model& self, const std::string& kind, int index, double t, const State& y) {
                 return self.flow(part_from(kind, index), t, y);
             },
             py::arg("kind"), py::arg("index"), py::arg("t"), py::arg("y"))
        .def("structure", &Model::structure_at, py::arg("y"))
        .def("drift_stratonovich", &Model::drift_stratonovich, py::arg("y"))
        .def("drift_ito", &Model::drift_ito, py::arg("y"))
        .def("default_initial_state", &Model::default_initial_state);

    m.def(
        "model",
        [](const std::string& name, std::optional<std::vector<double>> sigma) {
            return std::const_pointer_cast<Model>(model_from(name, sigma));
        },
        py::arg("name"), py::arg("sigma") = py::none(), "Preset model 'mb', 'rb' or 'se', optionally with new sigmas.");
    m.def(
        "model_from_json",
        [](const std::string& text) {
            const auto c = ModelConfig::from_json_text(text);
            return std::make_pair(std::shared_ptr<Model>(make_model(c)), c.y0);
        },
        py::arg("text"), "Model and initial state from a JSON config string.");

    m.def(
        "step",
        [](const std::string& scheme, const Model& model, double h, std::vector<double> dw, const State& y, int gamma) {
            return step(parse_scheme(scheme), model, StepInputs{h, dw, gamma}, y);
        },
        py::arg("scheme"), py::arg("model"), py::arg("h"), py::arg("dw"), py::arg("y"), py::arg("gamma") = 1);

    m.def(
        "integrate",
        [](const std::string& scheme, const Model& model, const State& y0, double T, double h, std::uint64_t seed) {
            const auto n = static_cast<std::int64_t>(std::llround(T / h));
            if (n < 1 || std::abs(static_cast<double>(n) * h - T) > 1e-9 * T) throw ContractError("h must divide T");
            const auto traj = integrate(parse_scheme(scheme), model, y0, sample_path(seed, model.noise_count(), n, h));
            Matrix states(static_cast<Eigen::Index>(traj.states.size()), model.dim());
            for (std::size_t i = 0; i < traj.states.size(); ++i) {
                states.row(static_cast<Eigen::Index>(i)) = traj.states[i].transpose();
            }
            return std::make_pair(traj.times, states);
        },
        py::arg("scheme"), py::arg("model"), py::arg("y0"), py::arg("T"), py::arg("h"), py::arg("seed") = 1,
        "Returns (times, states) with one state per row.");

    m.def("ou_update",
          [](double xi, double h, double eps, double dw, const std::string& variant) {
              if (variant != "implicit" && variant != "midpoint") {
                  throw ContractError("variant must be 'implicit' or 'midpoint'");
              }
              return ou_update(xi, h, eps, dw, variant == "midpoint" ? OuVariant::midpoint : OuVariant::implicit_euler);
          },
          py::arg("xi"), py::arg("h"), py::arg("eps"), py::arg("dw"), py::arg("variant") = "implicit");

    m.def("fit_rate",
          [](const std::vector<double>& h, const std::vector<double>& e) {
              const auto f = fit_rate(h, e);
              return py::make_tuple(f.slope, f.intercept, f.r2);
          },
          py::arg("h"), py::arg("errors"), "Returns (slope, intercept, r2) of the log-log fit.");

    m.def(
        "convergence",
        [](const Model& model, const std::string& scheme, const std::string& mode, std::vector<double> h_list,
           double h_ref, std::int64_t samples, std::uint64_t seed, double T, bool coupled, int workers) {
            ConvergenceConfig c;
            c.model = model.clone();
            c.scheme = parse_scheme(scheme);
            c.y0 = model.default_initial_state();
            c.T = T;
            c.h_list = std::move(h_list);
            c.h_ref = h_ref;
            c.samples = samples;
            c.seed = seed;
            c.mode = parse_error_mode(mode);
            c.coupled = coupled;
            c.workers = workers;
            ErrorReport r;
            {
                py::gil_scoped_release release;
                r = convergence_experiment(c);
            }
            return report_dict(r);
        },
        py::arg("model"), py::arg("scheme") = "splitting", py::arg("mode") = "strong", py::arg("h_list"),
        py::arg("h_ref"), py::arg("samples") = 200, py::arg("seed") = 1, py::arg("T") = 1.0, py::arg("coupled") = false,
        py::arg("workers") = 1);

    m.def(
        "ap_sweep",
        [](const Model& model, std::vector<double> eps_list, double h, double T, std::int64_t samples,
           std::uint64_t seed) {
            ApSweepConfig c;
            c.model = model.clone();
            c.y0 = model.default_initial_state();
            c.eps_list = std::move(eps_list);
            c.h = h;
            c.T = T;
            c.samples = samples;
            c.seed = seed;
            const auto r = ap_sweep(c);
            std::vector<double> err;
            for (const auto& row : r.pathwise) err.push_back(row.error);
            return err;
        },
        py::arg("model"), py::arg("eps_list"), py::arg("h") = 1e-2, py::arg("T") = 1.0, py::arg("samples") = 100,
        py::arg("seed") = 1, "RMS path-wise discrepancy to the eps = 0 limit scheme, one entry per eps.");

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "spi");
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the spi command line in-process; returns (exit_code, stdout, stderr).");
}
