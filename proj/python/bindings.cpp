#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "conclab/cli.hpp"
#include "conclab/diagnostics.hpp"

namespace py = pybind11;
using namespace conclab;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::dict pair_to_dict(const EigenPair& p) {
  py::dict d;
  d["lambda"] = p.lambda;
  d["u"] = to_array(p.u);
  d["residual"] = p.residual;
  d["iterations"] = p.iterations;
  d["certified"] = p.certified;
  return d;
}

Scenario lookup(const std::string& name, std::optional<std::string> c, double gap) {
  return builtin_scenario(name, {.c = std::move(c), .gap = gap});
}

}  // namespace

PYBIND11_MODULE(_conclab, m) {
  m.doc() = "Principal eigenpairs and limit measures of advection-diffusion operators on tori";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);
  py::register_exception<AssemblyError>(m, "AssemblyError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<PredictorError>(m, "PredictorError", PyExc_RuntimeError);

  py::class_<TrigExpr>(m, "TrigExpr")
      .def(py::init(&parse_expr), py::arg("text"))
      .def("__call__", [](const TrigExpr& e, std::vector<double> x) { return e.eval(x); })
      .def("derivative", &TrigExpr::derivative)
      .def("__str__", &TrigExpr::str)
      .def("__repr__", [](const TrigExpr& e) { return "TrigExpr('" + e.str() + "')"; });

  py::class_<Scenario>(m, "Scenario")
      .def(py::init([](std::string name, int dim, const std::vector<std::string>& b,
                       const std::string& c, const std::string& L) {
             std::vector<TrigExpr> drift;
             for (const auto& s : b) drift.push_back(parse_expr(s));
             return Scenario(std::move(name), dim, std::move(drift), parse_expr(c), parse_expr(L));
           }),
           py::arg("name"), py::arg("dim"), py::arg("b"), py::arg("c"), py::arg("L") = "0")
      .def_property_readonly("name", &Scenario::name)
      .def_property_readonly("dim", &Scenario::dim)
      .def_property_readonly("c", [](const Scenario& s) { return s.c().str(); })
      .def_property_readonly("component_ids",
                             [](const Scenario& s) {
                               std::vector<std::string> ids;
                               for (std::size_t i = 0; i < s.components().size(); ++i)
                                 ids.push_back(component_id(s.components()[i], i));
                               return ids;
                             })
      .def("with_potential",
           [](const Scenario& s, const std::string& c) { return s.with_potential(parse_expr(c)); })
      .def("to_json", [](const Scenario& s) { return cli::scenario_to_json(s).dump(); });

  m.def("builtin_names", &builtin_names);
  m.def("builtin_scenario", &lookup, py::arg("name"), py::arg("c") = py::none(),
        py::arg("gap") = 0.5);
  m.def("scenario_from_json", [](const std::string& text) {
    return cli::scenario_from_json(nlohmann::json::parse(text));
  });

  m.def(
      "validate",
      [](const Scenario& s, int resolution, double tol) {
        auto rep = validate_scenario(s, {.resolution = resolution, .tol = tol});
        py::list checks;
        for (const auto& c : rep.checks) {
          py::dict d;
          d["name"] = c.name;
          d["component"] = c.component;
          d["passed"] = c.passed;
          d["residual"] = c.residual;
          d["detail"] = c.detail;
          checks.append(d);
        }
        return py::make_tuple(rep.valid(), checks);
      },
      py::arg("scenario"), py::arg("resolution") = 64, py::arg("tol") = 1e-8);

  m.def(
      "assemble",
      [](const Scenario& s, int n, double eps, const std::string& scheme, bool gauged) {
        Grid g(s.dim(), n);
        AssemblyOptions o{.scheme = scheme_from_string(scheme)};
        auto op = gauged ? assemble_gauged(s, g, eps, o) : assemble(s, g, eps, o);
        return py::make_tuple(py::array_t<std::int64_t>(py::cast(op.row_ptr())),
                              py::array_t<std::int64_t>(py::cast(op.cols())),
                              to_array(op.values()));
      },
      py::arg("scenario"), py::arg("n"), py::arg("epsilon"), py::arg("scheme") = "upwind",
      py::arg("gauged") = false,
      "CSR arrays (indptr, indices, data) of the discrete operator.");

  m.def(
      "dense_operator",
      [](const Scenario& s, int n, double eps) {
        return assemble(s, Grid(s.dim(), n), eps).to_dense();
      },
      py::arg("scenario"), py::arg("n"), py::arg("epsilon"));

  m.def(
      "principal_eigenpair",
      [](const Scenario& s, int n, double eps, double tol, const std::string& method) {
        auto op = assemble(s, Grid(s.dim(), n), eps);
        SolverOptions o{.tol = tol, .method = solver_method_from_string(method)};
        EigenPair p;
        {
          py::gil_scoped_release release;
          p = solve_principal(op, o);
        }
        return pair_to_dict(p);
      },
      py::arg("scenario"), py::arg("n"), py::arg("epsilon"), py::arg("tol") = 1e-8,
      py::arg("method") = "shift-invert");

  m.def(
      "eigen_sweep",
      [](const Scenario& s, int n, std::vector<double> eps) {
        auto entries = eigen_sweep(s, n, eps);
        py::list out;
        for (const auto& e : entries) {
          py::dict d = pair_to_dict(e.pair);
          d["epsilon"] = e.epsilon;
          d["error"] = e.error;
          out.append(d);
        }
        return out;
      },
      py::arg("scenario"), py::arg("n"), py::arg("epsilons"));

  m.def("extrapolate", [](std::vector<double> eps, std::vector<double> lam) {
    auto ex = extrapolate_limit(eps, lam);
    return py::make_tuple(ex.lambda0, ex.error, ex.order);
  });

  m.def("pressures", [](const Scenario& s) {
    py::dict out;
    for (std::size_t i = 0; i < s.components().size(); ++i) {
      auto p = pressure(s, i);
      out[py::str(p.id)] = p.value;
    }
    return out;
  });

  m.def(
      "predict",
      [](const Scenario& s, int torus_samples) {
        auto lm = predict_support(s, {.torus_samples = torus_samples});
        py::dict d;
        d["max_pressure"] = lm.max_pressure;
        d["tie"] = lm.tie;
        d["non_normative"] = lm.non_normative;
        d["mu2"] = lm.mu2 ? py::cast(*lm.mu2) : py::none();
        py::list support;
        for (const auto& e : lm.support) {
          py::dict sd;
          sd["id"] = e.id;
          sd["type"] = e.type;
          sd["coefficient"] = e.coefficient;
          sd["mass"] = e.mass;
          support.append(sd);
        }
        d["support"] = support;
        return d;
      },
      py::arg("scenario"), py::arg("torus_samples") = 64);

  m.def(
      "cycle_density",
      [](const Scenario& s, std::size_t index, int m) {
        const auto* cyc = std::get_if<CycleComponent>(&s.components().at(index));
        if (!cyc) throw py::value_error("component is not a cycle");
        auto d = cycle_density(s, *cyc, m);
        return py::make_tuple(to_array(d.theta), to_array(d.samples), d.mean_c);
      },
      py::arg("scenario"), py::arg("component"), py::arg("m") = 256);

  m.def(
      "torus_density",
      [](const Scenario& s, std::size_t index, int M, int n) {
        const auto* tor = std::get_if<TorusComponent>(&s.components().at(index));
        if (!tor) throw py::value_error("component is not a torus");
        auto d = torus_density(s, *tor, M, n);
        py::array_t<double> f({d.n, d.n});
        std::copy(d.samples.begin(), d.samples.end(), f.mutable_data());
        return py::make_tuple(f, d.mu2, d.residual);
      },
      py::arg("scenario"), py::arg("component"), py::arg("M") = 64, py::arg("n") = 128);

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "conclab");
        std::ostringstream out, err;
        int code = cli::run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in process; returns (code, stdout, stderr).");

  m.attr("__version__") = cli::version();
}
