// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
//
// Python bindings for the main operations: module construction, fixed-point
// solvers, gradient oracles, and the dense diagnostics.

#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include "eqgrad/config.hpp"
#include "eqgrad/diagnostics.hpp"
#include "eqgrad/experiments.hpp"
#include "eqgrad/training.hpp"

namespace py = pybind11;
using namespace eqgrad;

namespace {

Vec to_vec(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw DimensionError("expected a 1-D float64 array");
  Vec v(static_cast<std::size_t>(a.shape(0)));
  std::copy(a.data(), a.data() + a.shape(0), v.data.begin());
  return v;
}

py::array_t<double> from_vec(const Vec& v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::array_t<double> from_mat(const Mat& m) {
  py::array_t<double> a({static_cast<py::ssize_t>(m.rows),
                         static_cast<py::ssize_t>(m.cols)});
  std::copy(m.data.begin(), m.data.end(), a.mutable_data());
  return a;
}

Mat to_mat(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-D float64 array");
  Mat m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data.begin());
  return m;
}

using NpArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

SolverSpec make_solver_spec(const std::string& method, double tol,
                            int max_iters, double lambda_fwd,
                            int broyden_memory, bool store_trajectory) {
  SolverSpec s;
  if (method == "picard") {
    s.method = SolveMethod::Picard;
  } else if (method == "damped_picard") {
    s.method = SolveMethod::DampedPicard;
  } else if (method == "broyden") {
    s.method = SolveMethod::Broyden;
  } else {
    throw ParameterError("solver method must be picard | damped_picard | broyden");
  }
  s.tol = tol;
  s.max_iters = max_iters;
  s.lambda_fwd = lambda_fwd;
  s.broyden_memory = broyden_memory;
  s.store_trajectory = store_trajectory;
  return s;
}

GradOracleSpec make_adjoint_spec(const std::string& solver, double tol,
                                 int max_iters) {
  GradOracleSpec spec;
  if (solver == "picard") {
    spec.adjoint_solver = AdjointSolver::PicardAdjoint;
  } else if (solver == "broyden") {
    spec.adjoint_solver = AdjointSolver::BroydenAdjoint;
  } else {
    throw ParameterError("adjoint solver must be picard | broyden");
  }
  spec.adjoint_tol = tol;
  spec.adjoint_max_iters = max_iters;
  return spec;
}

py::dict record_to_dict(const DiagnosticsRecord& r) {
  py::dict d;
  d["cosine_vs_exact"] = r.cosine_vs_exact;
  d["eps_error"] = r.eps_error;
  d["lhs_ascent"] = r.lhs_ascent;
  d["lhs_ascent_fro"] = r.lhs_ascent_fro;
  d["rhs_ascent"] = r.rhs_ascent;
  d["lhs_reduced"] = r.lhs_reduced;
  d["rhs_reduced"] = r.rhs_reduced;
  d["inner_product"] = r.inner_product;
  d["rho_F"] = r.rho_F;
  d["rho_F_lambda"] = r.rho_F_lambda;
  d["l1_exact"] = r.l1_exact;
  d["l1_phantom"] = r.l1_phantom;
  d["sigma_min_zero"] = r.sigma_min_zero;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "equilibrium-layer solvers and gradient oracles (C++ core)";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<SingularMatrixError>(m, "SingularMatrixError",
                                              PyExc_ArithmeticError);
  py::register_exception<ZeroVectorError>(m, "ZeroVectorError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError",
                                          PyExc_ArithmeticError);
  py::register_exception<ScaleGuardError>(m, "ScaleGuardError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<EqModule>(m, "EqModule")
      .def_property_readonly("dim", &EqModule::dim)
      .def_property_readonly("theta_dim", &EqModule::theta_dim)
      .def_property_readonly("kind",
                             [](const EqModule& mod) { return to_string(mod.kind); })
      .def_property_readonly("W", [](const EqModule& mod) { return from_mat(mod.W); })
      .def_property_readonly("b", [](const EqModule& mod) { return from_vec(mod.b); })
      .def_readonly("target_lipschitz", &EqModule::target_lipschitz)
      .def_readonly("sigma_cache", &EqModule::sigma_cache)
      .def("forward",
           [](const EqModule& mod, const NpArray& h, const NpArray& u) {
             return from_vec(forward(mod, to_vec(h), to_vec(u)));
           })
      .def("vjp_h",
           [](const EqModule& mod, const NpArray& h, const NpArray& u,
              const NpArray& v) {
             return from_vec(vjp_h(mod, to_vec(h), to_vec(u), to_vec(v)));
           })
      .def("vjp_u",
           [](const EqModule& mod, const NpArray& h, const NpArray& u,
              const NpArray& v) {
             return from_vec(vjp_u(mod, to_vec(h), to_vec(u), to_vec(v)));
           })
      .def("vjp_theta",
           [](const EqModule& mod, const NpArray& h, const NpArray& u,
              const NpArray& v) {
             return from_vec(vjp_theta(mod, to_vec(h), to_vec(u), to_vec(v)));
           })
      .def("jacobians",
           [](const EqModule& mod, const NpArray& h, const NpArray& u) {
             const auto [jh, jt] = materialize_jacobians(mod, to_vec(h), to_vec(u));
             return py::make_tuple(from_mat(jh), from_mat(jt));
           })
      .def("theta",
           [](const EqModule& mod) { return from_vec(get_theta(mod)); })
      .def("save", [](const EqModule& mod, const std::string& path) {
        save_module_file(mod, path);
      });

  m.def(
      "make_synthetic",
      [](std::size_t d, double target_L, std::uint64_t seed,
         const std::string& kind) {
        return make_synthetic(d, target_L, seed, module_kind_from_string(kind));
      },
      py::arg("d"), py::arg("target_L"), py::arg("seed"),
      py::arg("kind") = "affine_tanh");
  m.def(
      "make_module",
      [](const std::string& kind, const NpArray& W, const NpArray& b,
         double target_L) {
        return make_module(module_kind_from_string(kind), to_mat(W), to_vec(b),
                           target_L);
      },
      py::arg("kind"), py::arg("W"), py::arg("b"), py::arg("target_L") = 0.9);
  m.def("load_module", &load_module_file, py::arg("path"));

  py::class_<FixedPointSolution>(m, "FixedPointSolution")
      .def_property_readonly(
          "h_star", [](const FixedPointSolution& s) { return from_vec(s.h_star); })
      .def_readonly("rel_residual", &FixedPointSolution::rel_residual)
      .def_readonly("iterations", &FixedPointSolution::iterations)
      .def_readonly("converged", &FixedPointSolution::converged)
      .def_property_readonly("trajectory", [](const FixedPointSolution& s) {
        py::list out;
        if (s.trajectory) {
          for (const Vec& h : *s.trajectory) out.append(from_vec(h));
        }
        return out;
      });

  m.def(
      "solve",
      [](const EqModule& mod, const NpArray& u, const std::string& method,
         double tol, int max_iters, double lambda_fwd, int broyden_memory,
         bool store_trajectory) {
        return solve(mod, to_vec(u),
                     make_solver_spec(method, tol, max_iters, lambda_fwd,
                                      broyden_memory, store_trajectory));
      },
      py::arg("module"), py::arg("u"), py::arg("method") = "picard",
      py::arg("tol") = 1e-8, py::arg("max_iters") = 100,
      py::arg("lambda_fwd") = 1.0, py::arg("broyden_memory") = 30,
      py::arg("store_trajectory") = false);

  m.def(
      "relative_residual",
      [](const EqModule& mod, const NpArray& h, const NpArray& u) {
        return relative_residual(mod, to_vec(h), to_vec(u));
      },
      py::arg("module"), py::arg("h"), py::arg("u"));

  py::class_<PhantomGradient>(m, "PhantomGradient")
      .def_property_readonly(
          "grad_theta",
          [](const PhantomGradient& g) { return from_vec(g.grad_theta); })
      .def_property_readonly(
          "grad_u", [](const PhantomGradient& g) { return from_vec(g.grad_u); })
      .def_property_readonly("k",
                             [](const PhantomGradient& g) { return g.spec.k; })
      .def_property_readonly(
          "lambda_", [](const PhantomGradient& g) { return g.spec.lambda; })
      .def_property_readonly("forward_residual",
                             [](const PhantomGradient& g) {
                               return g.aux.forward_residual;
                             })
      .def_property_readonly("adjoint_iterations",
                             [](const PhantomGradient& g) {
                               return g.aux.adjoint_iterations;
                             });

  m.def(
      "ift_exact",
      [](const EqModule& mod, const NpArray& h_star, const NpArray& u,
         const NpArray& v, const std::string& adjoint_solver, double adjoint_tol,
         int adjoint_max_iters) {
        return ift_exact(mod, to_vec(h_star), to_vec(u), to_vec(v),
                         make_adjoint_spec(adjoint_solver, adjoint_tol,
                                           adjoint_max_iters));
      },
      py::arg("module"), py::arg("h_star"), py::arg("u"), py::arg("v"),
      py::arg("adjoint_solver") = "picard", py::arg("adjoint_tol") = 1e-10,
      py::arg("adjoint_max_iters") = 500);
  m.def(
      "bptt_exact",
      [](const EqModule& mod, const FixedPointSolution& sol, const NpArray& u,
         const NpArray& v, double lambda_fwd) {
        return bptt_exact(mod, sol, to_vec(u), to_vec(v), lambda_fwd);
      },
      py::arg("module"), py::arg("solution"), py::arg("u"), py::arg("v"),
      py::arg("lambda_fwd") = 1.0);
  m.def(
      "upg",
      [](const EqModule& mod, const NpArray& h_star, const NpArray& u,
         const NpArray& v, int k, double lambda) {
        return upg(mod, to_vec(h_star), to_vec(u), to_vec(v), k, lambda);
      },
      py::arg("module"), py::arg("h_star"), py::arg("u"), py::arg("v"),
      py::arg("k"), py::arg("lambda_") = 1.0);
  m.def(
      "npg",
      [](const EqModule& mod, const NpArray& h_star, const NpArray& u,
         const NpArray& v, int k, double lambda) {
        return npg(mod, to_vec(h_star), to_vec(u), to_vec(v), k, lambda);
      },
      py::arg("module"), py::arg("h_star"), py::arg("u"), py::arg("v"),
      py::arg("k"), py::arg("lambda_") = 1.0);
  m.def(
      "one_step",
      [](const EqModule& mod, const NpArray& h_star, const NpArray& u,
         const NpArray& v) {
        return one_step(mod, to_vec(h_star), to_vec(u), to_vec(v));
      },
      py::arg("module"), py::arg("h_star"), py::arg("u"), py::arg("v"));

  m.def(
      "compare_gradients",
      [](const PhantomGradient& exact, const PhantomGradient& candidate) {
        return record_to_dict(compare_gradients(exact, candidate));
      },
      py::arg("exact"), py::arg("candidate"));
  m.def(
      "descent_condition_check",
      [](const EqModule& mod, const NpArray& h_star, const NpArray& u, int k,
         double lambda, std::uint64_t seed) {
        return record_to_dict(
            descent_condition_check(mod, to_vec(h_star), to_vec(u), k, lambda,
                                    nullptr, seed));
      },
      py::arg("module"), py::arg("h_star"), py::arg("u"), py::arg("k"),
      py::arg("lambda_"), py::arg("seed") = 7);
  m.def(
      "neumann_truncation_error",
      [](const EqModule& mod, const NpArray& h_star, const NpArray& u, int k,
         double lambda) {
        return neumann_truncation_error(mod, to_vec(h_star), to_vec(u), k, lambda);
      },
      py::arg("module"), py::arg("h_star"), py::arg("u"), py::arg("k"),
      py::arg("lambda_"));
  m.def(
      "spectral_radius_report",
      [](const EqModule& mod, const NpArray& h_star, const NpArray& u,
         double lambda, std::uint64_t seed) {
        const auto rep = spectral_radius_report(mod, to_vec(h_star), to_vec(u),
                                                lambda, seed);
        return py::make_tuple(rep.rho_F, rep.rho_F_lambda);
      },
      py::arg("module"), py::arg("h_star"), py::arg("u"), py::arg("lambda_"),
      py::arg("seed") = 7);

  // Dense kernels useful from the Python side.
  m.def("dense_inverse",
        [](const NpArray& a) { return from_mat(dense_inverse(to_mat(a))); });
  m.def("svd_extremes", [](const NpArray& a) {
    const auto sv = svd_extremes(to_mat(a));
    return py::make_tuple(sv.sigma_max, sv.sigma_min, sv.kappa);
  });
  m.def(
      "power_iteration_sigma",
      [](const NpArray& a, int max_iters, double tol, std::uint64_t seed) {
        const auto r = power_iteration_sigma(to_mat(a), max_iters, tol, seed);
        return py::make_tuple(r.value, r.iterations, r.converged);
      },
      py::arg("m"), py::arg("max_iters") = 1000, py::arg("tol") = 1e-12,
      py::arg("seed") = 7);
  m.def(
      "power_iteration_rho",
      [](const NpArray& a, int max_iters, double tol, std::uint64_t seed) {
        const auto r = power_iteration_rho(to_mat(a), max_iters, tol, seed);
        return py::make_tuple(r.value, r.iterations, r.converged);
      },
      py::arg("m"), py::arg("max_iters") = 1000, py::arg("tol") = 1e-12,
      py::arg("seed") = 7);
  m.def("cosine_similarity", [](const NpArray& a, const NpArray& b) {
    return cosine_similarity(to_vec(a), to_vec(b));
  });

  m.def(
      "make_dataset",
      [](std::size_t d, int n_pairs, std::uint64_t seed) {
        py::list out;
        for (const auto& [u, y] : make_dataset(d, n_pairs, seed)) {
          out.append(py::make_tuple(from_vec(u), from_vec(y)));
        }
        return out;
      },
      py::arg("d"), py::arg("n_pairs"), py::arg("seed"));

  m.def(
      "finite_difference_check",
      [](const EqModule& mod, const NpArray& u, const NpArray& y,
         const std::string& oracle, int k, double lambda, double eps_fd,
         double forward_tol, int forward_iters) {
        GradOracleSpec spec;
        if (oracle == "ift") {
          spec.method = OracleMethod::IFTExact;
        } else if (oracle == "upg") {
          spec.method = OracleMethod::UPG;
        } else if (oracle == "npg") {
          spec.method = OracleMethod::NPG;
        } else if (oracle == "one_step") {
          spec.method = OracleMethod::OneStep;
        } else if (oracle == "bptt") {
          spec.method = OracleMethod::BPTT;
        } else {
          throw ParameterError("oracle must be ift | bptt | upg | npg | one_step");
        }
        spec.k = k;
        spec.lambda = lambda;
        spec.adjoint_tol = 1e-12;
        spec.adjoint_max_iters = 2000;
        SolverSpec fwd;
        fwd.tol = forward_tol;
        fwd.max_iters = forward_iters;
        return finite_difference_check(mod, to_vec(u), to_vec(y), spec, eps_fd, fwd);
      },
      py::arg("module"), py::arg("u"), py::arg("y"), py::arg("oracle") = "ift",
      py::arg("k") = 1, py::arg("lambda_") = 1.0, py::arg("eps_fd") = 1e-5,
      py::arg("forward_tol") = 1e-13, py::arg("forward_iters") = 5000);
}
