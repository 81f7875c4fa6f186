#include "afem/config.hpp"
#include "afem/telemetry.hpp"
#include "afem/verify.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <sstream>

namespace py = pybind11;
using namespace afem;

namespace {

py::dict run_to_dict(const AdaptiveRun& run) {
  const auto& cols = run_csv_columns();
  py::dict levels;
  for (const auto& name : cols) levels[py::str(name)] = py::list();
  std::stringstream csv;
  write_run_csv(csv, run);
  std::string line;
  std::getline(csv, line);
  while (std::getline(csv, line)) {
    std::stringstream row(line);
    std::string cell;
    for (const auto& name : cols) {
      std::getline(row, cell, ',');
      levels[py::str(name)].cast<py::list>().append(std::stod(cell));
    }
  }
  py::dict out;
  out["levels"] = levels;
  out["stop_reason"] = run.stop_reason;
  out["initial_elements"] = run.initial_elements;
  out["total_time"] = run.total_time;
  out["summary"] = py::module_::import("json").attr("loads")(run_summary_json(run));
  return out;
}

AdaptiveConfig make_config(const std::string& problem, double theta, const std::string& estimator,
                           const std::string& marking, std::size_t max_elements, bool uniform,
                           const std::string& solver, double vartheta, std::uint64_t seed) {
  AdaptiveConfig c;
  c.problem = problem;
  c.theta = theta;
  c.estimator = estimator_kind_from_string(estimator);
  c.marking = marking_strategy_from_string(marking);
  c.stop.max_elements = max_elements;
  c.uniform = uniform;
  c.solver.mode = solve_mode_from_string(solver);
  c.solver.vartheta = vartheta;
  c.seed = seed;
  c.keep_history = false;
  return c;
}

std::vector<std::size_t> indices(const MarkedSet& m) { return m.indices; }

}  // namespace

PYBIND11_MODULE(_afem, m) {
  m.doc() = "Adaptive P1 finite elements with newest-vertex bisection";

  py::register_exception<MeshError>(m, "MeshError");
  py::register_exception<SolverError>(m, "SolverError");
  py::register_exception<AssemblyError>(m, "AssemblyError");
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("problem_names", &problem_names);

  m.def(
      "run",
      [](const std::string& problem, double theta, const std::string& estimator, const std::string& marking,
         std::size_t max_elements, bool uniform, const std::string& solver, double vartheta, std::uint64_t seed) {
        const auto c = make_config(problem, theta, estimator, marking, max_elements, uniform, solver, vartheta, seed);
        AdaptiveRun run;
        {
          py::gil_scoped_release release;
          run = run_adaptive(c);
        }
        return run_to_dict(run);
      },
      py::arg("problem") = "lshape_singular", py::arg("theta") = 0.5, py::arg("estimator") = "residual",
      py::arg("marking") = "greedy", py::arg("max_elements") = 20000, py::arg("uniform") = false,
      py::arg("solver") = "exact", py::arg("vartheta") = 0.1, py::arg("seed") = 1,
      "Runs the adaptive loop and returns per-level telemetry.");

  m.def(
      "run_config",
      [](const std::string& path) {
        auto c = load_config(path).adaptive;
        c.keep_history = false;
        AdaptiveRun run;
        {
          py::gil_scoped_release release;
          run = run_adaptive(c);
        }
        return run_to_dict(run);
      },
      py::arg("path"));

  m.def(
      "verify",
      [](const std::string& problem, std::size_t max_elements, std::uint64_t seed) {
        AdaptiveConfig c;
        c.problem = problem;
        c.stop.max_elements = max_elements;
        c.companions = true;
        c.seed = seed;
        VerifyOptions opt;
        opt.seed = seed;
        std::string json;
        {
          py::gil_scoped_release release;
          json = verify_run(run_adaptive(c), make_problem(problem), opt).to_json();
        }
        return py::module_::import("json").attr("loads")(json);
      },
      py::arg("problem") = "lshape_singular", py::arg("max_elements") = 5000, py::arg("seed") = 1);

  m.def(
      "fit_rate",
      [](const std::vector<std::size_t>& elements, std::size_t initial, const std::vector<double>& values) {
        const auto f = fit_rate(elements, initial, values);
        py::dict d;
        d["slope"] = f.slope;
        d["ci_low"] = f.ci_low;
        d["ci_high"] = f.ci_high;
        d["std_error"] = f.std_error;
        d["points"] = f.points;
        return d;
      },
      py::arg("elements"), py::arg("initial_elements"), py::arg("values"));

  m.def(
      "mark_greedy", [](const std::vector<double>& v, double theta) { return indices(mark_greedy(v, theta)); },
      py::arg("values"), py::arg("theta"));
  m.def(
      "mark_binning", [](const std::vector<double>& v, double theta) { return indices(mark_binning(v, theta)); },
      py::arg("values"), py::arg("theta"));
  m.def(
      "brute_force_doerfler", [](const std::vector<double>& v, double theta) { return brute_force_doerfler(v, theta); },
      py::arg("values"), py::arg("theta"));

  py::class_<Mesh>(m, "Mesh")
      .def_static("lshape", &shapes::lshape_crisscross)
      .def_static(
          "unit_square", [] { return shapes::unit_square_crisscross(); })
      .def_property_readonly("num_elements", &Mesh::num_elements)
      .def_property_readonly("num_vertices", &Mesh::num_vertices)
      .def_property_readonly("vertices",
                             [](const Mesh& mesh) {
                               Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> v(mesh.num_vertices(), 2);
                               for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
                                 v.row(static_cast<Eigen::Index>(i)) = mesh.vertex(static_cast<VertexId>(i)).transpose();
                               }
                               return v;
                             })
      .def_property_readonly("triangles",
                             [](const Mesh& mesh) {
                               Eigen::Matrix<std::int32_t, Eigen::Dynamic, 3, Eigen::RowMajor> t(mesh.num_elements(), 3);
                               for (std::size_t i = 0; i < mesh.num_elements(); ++i) {
                                 for (int k = 0; k < 3; ++k) {
                                   t(static_cast<Eigen::Index>(i), k) = mesh.triangle(static_cast<ElementId>(i)).v[k];
                                 }
                               }
                               return t;
                             })
      .def("area", &Mesh::area)
      .def("refine",
           [](const Mesh& mesh, std::vector<ElementId> marked) {
             std::sort(marked.begin(), marked.end());
             marked.erase(std::unique(marked.begin(), marked.end()), marked.end());
             return refine(mesh, marked);
           })
      .def("uniform_refine", &uniform_refine)
      .def("overlay", &overlay);
}
