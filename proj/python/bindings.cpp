/*
 Copyright 2026 The koopctl Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/


#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "koopctl/cli.hpp"
#include "koopctl/config.hpp"
#include "koopctl/control_sim.hpp"
#include "koopctl/error.hpp"
#include "koopctl/hjb_fd.hpp"
#include "koopctl/koopman.hpp"
#include "koopctl/path_integral.hpp"

namespace py = pybind11;
using namespace koopctl;

namespace {

ConfigOverrides to_overrides(const std::map<std::string, std::string>& set) {
  return {set.begin(), set.end()};
}

struct KoopmanSolution {
  CoeffTensor coeffs;
  ControlProblem problem;
  KoopmanField field;

  KoopmanSolution(CoeffTensor c, ControlProblem p)
      : coeffs(std::move(c)),
        problem(std::move(p)),
        field(coeffs, problem.terminal_cost(), problem.lambda()) {}

  py::array_t<double> coefficients() const {
    std::vector<py::ssize_t> shape(coeffs.extents().begin(), coeffs.extents().end());
    py::array_t<double> out(shape);
    double* data = out.mutable_data();
    std::fill(data, data + coeffs.lattice_size(), 0.0);
    coeffs.for_each_nonzero([&](std::size_t flat, double v) { data[flat] = v; });
    return out;
  }
};

struct HjbSolution {
  PsiField field;
  ControlProblem problem;

  py::array_t<double> values() const {
    std::vector<py::ssize_t> shape;
    for (std::size_t k = 0; k < field.grid.dim(); ++k) shape.push_back(field.grid.axis(k).count);
    py::array_t<double> out(shape);
    std::copy(field.values.begin(), field.values.end(), out.mutable_data());
    return out;
  }

  std::vector<Eigen::VectorXd> axes() const {
    std::vector<Eigen::VectorXd> out;
    for (std::size_t k = 0; k < field.grid.dim(); ++k) {
      const GridAxis& a = field.grid.axis(k);
      Eigen::VectorXd c(a.count);
      for (int i = 0; i < a.count; ++i) c[i] = a.coordinate(i);
      out.push_back(std::move(c));
    }
    return out;
  }
};

KoopmanSolution koopman_solution(const RunConfig& cfg) {
  ControlProblem problem = cfg.problem();
  std::vector<int> extents = cfg.koopman_cutoffs;
  extents.push_back(2);
  CoeffTensor coeffs = solve_koopman(problem, extents, cfg.koopman_dt);
  return {std::move(coeffs), std::move(problem)};
}

HjbSolution hjb_solution(const RunConfig& cfg) {
  ControlProblem problem = cfg.problem();
  PsiField field = solve_hjb(problem, cfg.hjb_grid(), cfg.hjb_dt, cfg.hjb_options);
  return {std::move(field), std::move(problem)};
}

py::dict simulate(const RunConfig& cfg, const std::string& controller_name,
                  std::optional<std::uint64_t> seed) {
  const ControlProblem problem = cfg.problem();
  std::optional<Controller> controller;
  if (controller_name == "koopman") {
    controller = Controller::koopman(koopman_solution(cfg).coeffs, problem, cfg.sim_clamp);
  } else if (controller_name == "hjb") {
    controller = Controller::finite_difference(hjb_solution(cfg).field, problem, cfg.sim_clamp);
  } else if (controller_name == "zero") {
    controller = Controller::zero(problem, cfg.sim_clamp);
  } else {
    throw Error(ErrorCode::ValidationError, "unknown controller '" + controller_name + "'");
  }
  const Trajectory tr = closed_loop_run(cfg.plant(), *controller, cfg.sim_x0, cfg.sim_duration,
                                        cfg.sim_dt, seed.value_or(cfg.seed));
  const auto steps = static_cast<py::ssize_t>(tr.states.size());
  const auto n = static_cast<py::ssize_t>(cfg.dim());
  py::array_t<double> t(steps), x({steps, n}), u({steps - 1, n});
  auto tv = t.mutable_unchecked<1>();
  auto xv = x.mutable_unchecked<2>();
  auto uv = u.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < steps; ++i) {
    tv(i) = tr.times[i];
    for (py::ssize_t k = 0; k < n; ++k) xv(i, k) = tr.states[i][k];
    if (i + 1 < steps) {
      for (py::ssize_t k = 0; k < n; ++k) uv(i, k) = tr.controls[i][k];
    }
  }
  py::dict out;
  out["t"] = t;
  out["x"] = x;
  out["u"] = u;
  out["underflow_steps"] = tr.underflow_steps;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Koopman, finite-difference and path-integral solvers for linearly solvable control";

  static PyObject* error_type = py::exception<Error>(m, "KoopctlError", PyExc_RuntimeError).ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string code(error_name(e.code()));
      py::object exc = py::handle(error_type)(code + ": " + e.what());
      exc.attr("code") = code;
      PyErr_SetObject(error_type, exc.ptr());
    }
  });

  py::class_<RunConfig>(m, "Config")
      .def_static(
          "from_preset",
          [](const std::string& name, const std::map<std::string, std::string>& set) {
            return load_config("preset = " + name, to_overrides(set));
          },
          py::arg("name") = "vdp", py::arg("set") = std::map<std::string, std::string>{})
      .def_static(
          "from_text",
          [](const std::string& text, const std::map<std::string, std::string>& set) {
            return load_config(text, to_overrides(set));
          },
          py::arg("text"), py::arg("set") = std::map<std::string, std::string>{})
      .def_property_readonly("dim", &RunConfig::dim)
      .def_property_readonly("lam", [](const RunConfig& c) { return c.problem().lambda(); })
      .def_property_readonly("gain", [](const RunConfig& c) { return c.problem().feedback_gain(); })
      .def_readonly("seed", &RunConfig::seed)
      .def_readonly("fk_probes", &RunConfig::fk_probes)
      .def("to_text", &RunConfig::to_text);

  py::class_<KoopmanSolution>(m, "KoopmanSolution")
      .def_property_readonly("coefficients", &KoopmanSolution::coefficients)
      .def_property_readonly("time", [](const KoopmanSolution& s) { return s.coeffs.time(); })
      .def("psi", [](const KoopmanSolution& s, const std::vector<double>& x) { return s.field.psi(x); })
      .def("control", [](const KoopmanSolution& s, const std::vector<double>& x) {
        const KoopmanField::Value v = s.field.evaluate(x);
        return control_from_gradient(s.problem, v.psi, v.gradient, x);
      });

  py::class_<HjbSolution>(m, "HjbSolution")
      .def_property_readonly("values", &HjbSolution::values)
      .def_property_readonly("axes", &HjbSolution::axes)
      .def_property_readonly("time", [](const HjbSolution& s) { return s.field.time; })
      .def("psi", [](const HjbSolution& s, const std::vector<double>& x) { return s.field.interpolate(x); })
      .def("control", [](const HjbSolution& s, const std::vector<double>& x) {
        return fd_control(s.field, x, s.problem);
      });

  m.def("solve_koopman", &koopman_solution, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("solve_hjb", &hjb_solution, py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def(
      "feynman_kac",
      [](const RunConfig& cfg, const std::vector<double>& x, std::size_t n_paths,
         std::optional<std::uint64_t> seed, unsigned threads) {
        FkOptions opt;
        opt.dt = cfg.fk_dt;
        opt.threads = threads;
        py::gil_scoped_release release;
        const FkEstimate e = feynman_kac_psi(cfg.problem(), x, cfg.fk_time, n_paths,
                                             RngStream(seed.value_or(cfg.seed)), opt);
        return std::make_pair(e.mean, e.std_error);
      },
      py::arg("config"), py::arg("x"), py::arg("n_paths"), py::arg("seed") = py::none(),
      py::arg("threads") = 0u);
  m.def("simulate", &simulate, py::arg("config"), py::arg("controller") = "koopman",
        py::arg("seed") = py::none());
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int status = run_cli(args, out, err);
        return py::make_tuple(status, out.str(), err.str());
      },
      py::arg("args"));
}
