#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "torusforge/cohomology.hpp"
#include "torusforge/errors.hpp"
#include "torusforge/fourier.hpp"
#include "torusforge/newton.hpp"
#include "torusforge/serialize.hpp"
#include "torusforge/spinorbit.hpp"
#include "torusforge/verify.hpp"

namespace py = pybind11;
namespace tf = torusforge;

namespace {

// Structured results cross the boundary as JSON text; the Python package decodes them.
std::string dump(const tf::json& j) { return j.dump(); }

tf::json elimination_json(const tf::NuElimination& r) {
  const auto& res = r.torus.result;
  return {{"nu_star", r.nu_star},
          {"b_residual", r.b_residual},
          {"evaluations", r.evaluations},
          {"newton_iters", res.iterations},
          {"residuals", res.residuals},
          {"certificate_exponent", res.certificate ? tf::json(res.certificate->exponent) : tf::json(nullptr)}};
}

tf::Trajectory trajectory_from(std::vector<double> t, std::vector<double> theta) {
  if (t.size() != theta.size()) throw std::invalid_argument("t and theta differ in length");
  tf::Trajectory traj;
  traj.t = std::move(t);
  traj.theta = std::move(theta);
  traj.theta_dot.assign(traj.t.size(), 0.0);
  return traj;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Normal forms of quasi-periodic tori for dissipative vector fields";

  py::register_exception<tf::NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  py::class_<tf::FourierSeries>(m, "FourierSeries")
      .def(py::init<int, int>(), py::arg("dim"), py::arg("order"))
      .def_static("from_modes", &tf::FourierSeries::from_modes, py::arg("dim"), py::arg("order"), py::arg("entries"))
      .def_static("from_json", [](const std::string& s) { return tf::series_from_json(tf::json::parse(s)); })
      .def_property_readonly("dim", &tf::FourierSeries::dim)
      .def_property_readonly("order", &tf::FourierSeries::order)
      .def_property_readonly("average", &tf::FourierSeries::average)
      .def("coeff", [](const tf::FourierSeries& f, std::vector<int> k) { return f.coeff(k); })
      .def("set_coeff", [](tf::FourierSeries& f, std::vector<int> k, tf::cplx c) { f.set_coeff(k, c); })
      .def("evaluate", [](const tf::FourierSeries& f, std::vector<double> theta) { return f.evaluate(theta); })
      .def("weighted_norm", &tf::FourierSeries::weighted_norm, py::arg("s"))
      .def("to_json", [](const tf::FourierSeries& f) { return dump(tf::to_json(f)); });

  py::class_<tf::SpinOrbitProblem>(m, "SpinOrbitProblem")
      .def(py::init<>())
      .def_readwrite("alpha", &tf::SpinOrbitProblem::alpha)
      .def_readwrite("eta", &tf::SpinOrbitProblem::eta)
      .def_readwrite("nu", &tf::SpinOrbitProblem::nu)
      .def_readwrite("epsilon", &tf::SpinOrbitProblem::epsilon)
      .def_readwrite("order", &tf::SpinOrbitProblem::order)
      .def_readwrite("potential", &tf::SpinOrbitProblem::potential)
      .def_static("default_potential", &tf::SpinOrbitProblem::default_potential, py::arg("order"));

  m.def(
      "check_diophantine",
      [](std::vector<double> alpha, double gamma, double tau, int kmax, std::vector<tf::cplx> eigs) {
        tf::DiophantineParams p{gamma, tau, std::move(alpha), std::move(eigs)};
        return dump(tf::to_json(tf::check_diophantine(p, kmax)));
      },
      py::arg("alpha"), py::arg("gamma") = 1e-2, py::arg("tau") = 2.0, py::arg("kmax") = 200,
      py::arg("eigs") = std::vector<tf::cplx>{});

  m.def(
      "translated_torus",
      [](const tf::SpinOrbitProblem& p) {
        py::gil_scoped_release release;
        auto t = tf::translated_torus_normal_form(p);
        return dump({{"b", t.b},
                     {"b_time", t.b_time},
                     {"iterations", t.result.iterations},
                     {"residuals", t.result.residuals}});
      },
      py::arg("problem"));

  m.def(
      "eliminate_nu",
      [](const tf::SpinOrbitProblem& p, double b_tol) {
        py::gil_scoped_release release;
        return dump(elimination_json(tf::eliminate_nu(p, b_tol)));
      },
      py::arg("problem"), py::arg("b_tol") = 1e-11);

  m.def(
      "sweep",
      [](const tf::SpinOrbitProblem& p, std::vector<double> epsilon_grid, std::vector<double> eta_grid, int jobs) {
        std::vector<tf::AttractorCurvePoint> pts;
        {
          py::gil_scoped_release release;
          pts = tf::sweep_surface(p, epsilon_grid, eta_grid, jobs);
        }
        tf::json out = tf::json::array();
        for (const auto& pt : pts) {
          auto num = [](double x) { return std::isfinite(x) ? tf::json(x) : tf::json(nullptr); };
          tf::json row{{"eta", pt.eta},
                       {"epsilon", pt.epsilon},
                       {"nu_star", num(pt.nu_star)},
                       {"b_residual", num(pt.b_residual)},
                       {"newton_iters", pt.newton_iters},
                       {"certificate_exponent", num(pt.certificate_exponent)}};
          if (pt.error) row["error"] = std::string(tf::to_string(*pt.error));
          out.push_back(std::move(row));
        }
        return dump(out);
      },
      py::arg("problem"), py::arg("epsilon_grid"), py::arg("eta_grid"), py::arg("jobs") = 1);

  m.def(
      "integrate_spin_orbit",
      [](const tf::SpinOrbitProblem& p, double theta0, double theta_dot0, double T, double dt, int stride) {
        tf::Trajectory traj;
        {
          py::gil_scoped_release release;
          traj = tf::integrate_spin_orbit(p, theta0, theta_dot0, T, dt, 0.0, stride);
        }
        py::dict out;
        out["t"] = traj.t;
        out["theta"] = traj.theta;
        out["theta_dot"] = traj.theta_dot;
        return out;
      },
      py::arg("problem"), py::arg("theta0"), py::arg("theta_dot0"), py::arg("T"), py::arg("dt") = 1e-2,
      py::arg("stride") = 1);

  m.def(
      "rotation_number",
      [](std::vector<double> t, std::vector<double> theta, double transient_fraction) {
        auto r = tf::rotation_number(trajectory_from(std::move(t), std::move(theta)), transient_fraction);
        return py::make_tuple(r.value, r.error);
      },
      py::arg("t"), py::arg("theta"), py::arg("transient_fraction") = 0.5);

  m.def(
      "newton_solve",
      [](const std::string& variant, const std::string& v_json, const std::string& u0_json, int max_iters) {
        const auto var = tf::variant_from_string(variant);
        const auto v = tf::field_from_json(tf::json::parse(v_json));
        const auto u0 = tf::field_from_json(tf::json::parse(u0_json));
        const auto flavor = var == tf::Variant::moser                ? tf::Flavor::general
                            : var == tf::Variant::herman_dissipative ? tf::Flavor::exact_symplectic
                                                                     : tf::Flavor::symplectic;
        tf::NewtonConfig cfg;
        cfg.max_iters = max_iters;
        tf::NewtonResult r;
        double residual = 0.0;
        {
          py::gil_scoped_release release;
          r = tf::newton_solve(var, v, tf::NewtonState::initial(u0, flavor), cfg);
          residual = tf::conjugacy_residual(r.x.g, r.x.u, r.x.lambda, v);
        }
        tf::json out = tf::to_json(r);
        out["conjugacy_residual"] = residual;
        return dump(out);
      },
      py::arg("variant"), py::arg("v"), py::arg("u0"), py::arg("max_iters") = 30);

  m.def(
      "spin_orbit_field",
      [](const tf::SpinOrbitProblem& p) { return dump(tf::to_json(tf::build_extended_field(p))); },
      py::arg("problem"));
}
