#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "msbound/config.hpp"
#include "msbound/report.hpp"
#include "msbound/sim.hpp"

namespace py = pybind11;
using namespace msbound;

namespace {

ExperimentConfig config_from(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kInvalidConfig, e.what());
  }
  return parse_config(j);
}

py::dict series_dict(const MomentSeries& s) {
  py::dict d;
  d["summary"] = to_json(s).dump();
  d["mean_sq"] = s.mean_sq;
  d["stderr_sq"] = s.stderr_sq;
  d["mean_norm"] = s.mean_norm;
  d["max_u_norm"] = s.max_u_norm;
  d["count"] = s.count;
  return d;
}

}  // namespace

PYBIND11_MODULE(_msbound, m) {
  m.doc() = "Bounded-control stabilization of linear systems under stochastic noise";

  static py::exception<Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(error.ptr())(e.what());
      inst.attr("kind") = to_string(e.kind());
      inst.attr("exit_code") = cli::exit_code_for(e.kind());
      PyErr_SetObject(error.ptr(), inst.ptr());
    }
  });

  m.def("saturate", [](const Vector& v, double r) { return saturate(v, r); });
  m.def("rotation", &rotation);
  m.def("min_singular_value", [](const Matrix& a) { return min_singular_value(a); });
  m.def("pseudoinverse", [](const Matrix& a) { return pseudoinverse(a); });
  m.def("reachability_index",
        [](const Matrix& a, const Matrix& b) { return reachability_index(a, b); });
  m.def("classify_stability",
        [](const Matrix& a) { return std::string(to_string(classify_stability(a).tag)); });

  py::class_<PolicyState>(m, "PolicyState").def_readonly("phase", &PolicyState::phase);

  py::class_<Policy>(m, "Policy")
      .def_property_readonly("variant", [](const Policy& p) { return to_string(p.variant()); })
      .def_property_readonly("radius", &Policy::radius)
      .def_property_readonly("control_bound", &Policy::control_bound)
      .def_property_readonly("cycle_length", &Policy::cycle_length)
      .def_property_readonly("sigma_d", &Policy::sigma_d)
      .def("initial_state", &Policy::initial_state)
      .def("step", [](const Policy& p, PolicyState& s, const Vector& x, long t) {
        return Vector(p.step(s, x, t));
      });

  m.def("synth_zero", &synth_zero);
  m.def("synth_random_walk", &synth_random_walk);
  m.def("synth_orthogonal_stationary",
        [](const Matrix& a, const Matrix& b, double r, double c1) {
          return synth_orthogonal_stationary(a, b, r, c1);
        });
  m.def("synth_subsampled", [](const Matrix& a, const Matrix& b, double r, double c1) {
    return synth_subsampled(a, b, r, c1);
  });
  m.def("synth_general", [](const Matrix& a, const Matrix& b, double r, double c1) {
    return synth_general(LinearSystem(a, b), r, c1);
  });

  m.def("zero_control_moment_oracle",
        [](const Matrix& a, const Matrix& q, const Vector& x0, long t) {
          return zero_control_moment_oracle(a, q, x0, t);
        });

  m.def("paper_example_config", [] { return to_json(paper_example_config()).dump(); });
  m.def("normalize_config", [](const std::string& text) {
    const ExperimentConfig c = config_from(text);
    validate(c);
    return to_json(c).dump();
  });

  m.def(
      "synthesize",
      [](const std::string& text, double scale) {
        const ExperimentConfig c = config_from(text);
        validate(c);
        const Synthesis s = synthesize(c, scale);
        return py::make_tuple(s.policy, to_json(s.report).dump());
      },
      py::arg("config"), py::arg("authority_scale") = 1.0);

  m.def(
      "monte_carlo",
      [](const std::string& text, double scale, unsigned threads) {
        ExperimentConfig c = config_from(text);
        validate(c);
        const Synthesis s = synthesize(c, scale);
        MonteCarloOptions opt;
        opt.threads = threads;
        MomentSeries series;
        {
          py::gil_scoped_release release;
          series = monte_carlo_moments(LinearSystem(c.A, c.B), s.policy, make_noise(c.noise,
                                       static_cast<int>(c.A.rows())), c.x0, c.horizon, c.runs,
                                       c.master_seed, opt);
        }
        py::dict d = series_dict(series);
        d["boundedness"] = to_json(boundedness_verdict(series)).dump();
        return d;
      },
      py::arg("config"), py::arg("authority_scale") = 1.0, py::arg("threads") = 0);

  m.def(
      "noiseless_convergence",
      [](const std::string& text) {
        const ExperimentConfig c = config_from(text);
        validate(c);
        const Synthesis s = synthesize(c);
        const ConvergenceReport rep =
            noiseless_convergence_check(LinearSystem(c.A, c.B), s.policy, c.x0);
        py::dict d;
        d["steps"] = rep.steps;
        d["step_limit"] = rep.step_limit;
        d["decay_steps"] = rep.decay_steps;
        d["max_control_after"] = rep.max_control_after;
        return d;
      });

  // Runs the command-line front end in-process; returns (exit code, stdout, stderr).
  m.def("run_cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "msbound");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  });
}
