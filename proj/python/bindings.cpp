#include "kgap/collision.hpp"
#include "kgap/domain.hpp"
#include "kgap/runner.hpp"
#include "kgap/spectral.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <iostream>
#include <sstream>

namespace py = pybind11;
using namespace kgap;

namespace {

CollisionKernel kernel(double gamma, bool hard_control) {
  CollisionKernel k;
  k.gamma = gamma;
  k.hard_control = hard_control;
  k.validate();
  return k;
}

SpatialDomain domain(const std::string& mode, int n_cells, double side) {
  SpatialDomain d;
  if (mode == "torus")
    d.mode = DomainMode::Torus3;
  else if (mode == "box")
    d.mode = DomainMode::InflowBox3;
  else
    throw py::value_error("mode must be 'torus' or 'box'");
  d.n_cells = n_cells;
  d.side = side;
  d.validate();
  return d;
}

Matrix nodes(const VelocityGrid& g) {
  Matrix out(g.size(), 3);
  for (int j = 0; j < g.size(); ++j) out.row(j) = g.node(j).transpose();
  return out;
}

}  // namespace

PYBIND11_MODULE(_kgap, m) {
  m.doc() = "Discrete-velocity linearized collision operators, spectra and weights";

  py::class_<VelocityGrid>(m, "VelocityGrid")
      .def(py::init<int, double>(), py::arg("n_per_axis"), py::arg("v_max"))
      .def_property_readonly("n_per_axis", &VelocityGrid::n_per_axis)
      .def_property_readonly("v_max", &VelocityGrid::v_max)
      .def_property_readonly("dv", &VelocityGrid::dv)
      .def_property_readonly("size", &VelocityGrid::size)
      .def_property_readonly("tol_q", &VelocityGrid::tol_q)
      .def_property_readonly("nodes", &nodes)
      .def_property_readonly("weights", &VelocityGrid::quad_weights)
      .def_property_readonly("mu_half", &VelocityGrid::mu_half)
      .def("integrate", [](const VelocityGrid& g, const Vector& f) { return integrate(g, f); })
      .def("__repr__", [](const VelocityGrid& g) {
        std::ostringstream s;
        s << "VelocityGrid(n_per_axis=" << g.n_per_axis() << ", v_max=" << g.v_max() << ")";
        return s.str();
      });

  py::class_<CollisionOperator>(m, "CollisionOperator")
      .def_readonly("nu", &CollisionOperator::nu)
      .def_readonly("K", &CollisionOperator::K)
      .def_readonly("L", &CollisionOperator::L);

  m.def(
      "collision_operator",
      [](const VelocityGrid& g, double gamma, bool hard_control, std::optional<std::filesystem::path> cache_dir) {
        const CollisionKernel k = kernel(gamma, hard_control);
        py::gil_scoped_release release;
        return cache_dir ? cached_collision_operator(g, k, *cache_dir) : build_collision_operator(g, k);
      },
      py::arg("grid"), py::arg("gamma") = -1.0, py::arg("hard_control") = false, py::arg("cache_dir") = py::none());

  m.def(
      "coercivity_constant",
      [](CollisionOperator op, const VelocityGrid& g) { return coercivity_constant(op, g); }, py::arg("op"),
      py::arg("grid"));
  m.def("plain_gap", &plain_gap, py::arg("op"), py::arg("grid"));

  m.def(
      "rightmost_eigenvalues",
      [](const VelocityGrid& g, const CollisionOperator& op, const std::string& mode, int n_cells, int k) {
        const FullOperator A = assemble_full_operator(domain(mode, n_cells, 1.0), g, op);
        py::gil_scoped_release release;
        const SpectralReport r = rightmost_eigenvalues(A, k);
        return std::make_tuple(r.eigenvalues, r.zero_modes, r.method);
      },
      py::arg("grid"), py::arg("op"), py::arg("mode") = "box", py::arg("n_cells") = 4, py::arg("k") = 6,
      "Rightmost eigenvalues of -v.grad_x + L; returns (eigenvalues, zero_modes, method).");

  m.def(
      "weight_W",
      [](const Eigen::Vector3d& x, const Eigen::Vector3d& v, double q, double rho, double beta) {
        return weight_W(WeightSpec{q, rho, beta}, x, v);
      },
      py::arg("x"), py::arg("v"), py::arg("q") = 1.0, py::arg("rho") = 1.0, py::arg("beta") = 1.5);

  m.def(
      "exit_time",
      [](const Eigen::Vector3d& x, const Eigen::Vector3d& v, double side) -> py::object {
        const ExitTime e = exit_time(domain("box", 2, side), x, v);
        if (!e.x_b) return py::make_tuple(e.t_b, py::none());
        return py::make_tuple(e.t_b, Eigen::Vector3d(*e.x_b));
      },
      py::arg("x"), py::arg("v"), py::arg("side") = 1.0,
      "Backward exit time from the box [0, side]^3 and the exit point.");

  m.def("subcommands", &subcommands);
  m.def(
      "run",
      [](const std::string& name, std::optional<std::filesystem::path> config,
         std::optional<std::filesystem::path> out, std::optional<std::uint64_t> seed, std::optional<int> threads) {
        RunOptions o;
        if (config) o.config = *config;
        o.out_dir = out;
        o.seed = seed;
        o.threads = threads;
        std::ostringstream log;
        int code;
        {
          py::gil_scoped_release release;
          code = run_subcommand(name, o, log);
        }
        return std::make_pair(code, log.str());
      },
      py::arg("subcommand"), py::arg("config") = py::none(), py::arg("out") = py::none(), py::arg("seed") = py::none(),
      py::arg("threads") = py::none(), "Run a CLI pipeline; returns (exit_code, log).");
}
