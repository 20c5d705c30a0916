// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#include "eqgrad/eqmodule.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "eqgrad/csv.hpp"
#include "eqgrad/rng.hpp"

namespace eqgrad {
namespace {

// Construction-time spectral estimation: tolerance-driven rather than a
// fixed iteration budget, so the normalized |W| lands within 1e-6 of
// target_lipschitz even for clustered spectra.
constexpr int kSigmaMaxIters = 5000;
constexpr double kSigmaTol = 1e-14;
constexpr std::uint64_t kSigmaSeed = 0x5157ULL;

void require_dim(const EqModule& m, const Vec& h, const Vec& u, const char* op) {
  if (h.size() != m.dim() || u.size() != m.dim()) {
    throw DimensionError(std::string(op) + ": module dim " +
                         std::to_string(m.dim()) + " against h length " +
                         std::to_string(h.size()) + ", u length " +
                         std::to_string(u.size()));
  }
}

Vec preactivation(const EqModule& m, const Vec& h, const Vec& u) {
  Vec s = add(h, u);
  Vec p = matvec(m.W, s);
  axpy(1.0, m.b, p);
  return p;
}

// 1 - tanh^2 at the preactivation.
Vec tanh_derivative(const Vec& pre) {
  Vec d(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) {
    const double t = std::tanh(pre[i]);
    d[i] = 1.0 - t * t;
  }
  return d;
}

}  // namespace

EqModule make_synthetic(std::size_t d, double target_L, std::uint64_t seed,
                        ModuleKind kind) {
  if (d < 1) throw ParameterError("make_synthetic: d must be >= 1");
  if (!(target_L > 0.0 && target_L < 1.0)) {
    throw ParameterError("make_synthetic: target_L must lie in (0, 1)");
  }
  RngStream wrng = rng_stream(seed, "module/W");
  Mat r(d, d);
  for (double& x : r.data) x = wrng.uniform(-1.0, 1.0);
  Mat s(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) s(i, j) = 0.5 * (r(i, j) + r(j, i));

  const auto pi = power_iteration_sigma(s, kSigmaMaxIters, kSigmaTol, kSigmaSeed);
  EqModule m;
  m.kind = kind;
  m.target_lipschitz = target_L;
  m.seed = seed;
  m.sigma_cache = pi.value;
  m.W = scale(pi.value > 0.0 ? target_L / pi.value : 0.0, s);

  RngStream brng = rng_stream(seed, "module/b");
  m.b = Vec(d);
  for (double& x : m.b) x = brng.uniform(-0.1, 0.1);
  return m;
}

EqModule make_module(ModuleKind kind, Mat W, Vec b, double target_L) {
  if (W.rows != W.cols || W.rows != b.size()) {
    throw DimensionError("make_module: W is " + std::to_string(W.rows) + "x" +
                         std::to_string(W.cols) + " against b of length " +
                         std::to_string(b.size()));
  }
  EqModule m;
  m.kind = kind;
  m.W = std::move(W);
  m.b = std::move(b);
  m.target_lipschitz = target_L;
  return m;
}

void renormalize(EqModule& m) {
  const auto pi = power_iteration_sigma(m.W, kSigmaMaxIters, kSigmaTol, kSigmaSeed);
  m.sigma_cache = pi.value;
  if (pi.value > m.target_lipschitz) {
    const double f = m.target_lipschitz / pi.value;
    for (double& w : m.W.data) w *= f;
  }
}

Vec forward(const EqModule& m, const Vec& h, const Vec& u) {
  require_dim(m, h, u, "forward");
  Vec p = preactivation(m, h, u);
  if (m.kind == ModuleKind::AffineTanh) {
    for (double& x : p) x = std::tanh(x);
  }
  return p;
}

Vec vjp_h(const EqModule& m, const Vec& h, const Vec& u, const Vec& v) {
  require_dim(m, h, u, "vjp_h");
  if (v.size() != m.dim()) {
    throw DimensionError("vjp_h: v length " + std::to_string(v.size()) +
                         " against module dim " + std::to_string(m.dim()));
  }
  if (m.kind == ModuleKind::LinearContraction) {
    return matvec_t(m.W, v);
  }
  const Vec phi = tanh_derivative(preactivation(m, h, u));
  Vec w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = phi[i] * v[i];
  return matvec_t(m.W, w);
}

Vec vjp_u(const EqModule& m, const Vec& h, const Vec& u, const Vec& v) {
  return vjp_h(m, h, u, v);
}

Vec vjp_theta(const EqModule& m, const Vec& h, const Vec& u, const Vec& v) {
  require_dim(m, h, u, "vjp_theta");
  if (v.size() != m.dim()) {
    throw DimensionError("vjp_theta: v length " + std::to_string(v.size()) +
                         " against module dim " + std::to_string(m.dim()));
  }
  const std::size_t d = m.dim();
  Vec w = v;
  if (m.kind == ModuleKind::AffineTanh) {
    const Vec phi = tanh_derivative(preactivation(m, h, u));
    for (std::size_t i = 0; i < d; ++i) w[i] = phi[i] * v[i];
  }
  const Vec s = add(h, u);
  Vec g(m.theta_dim());
  // grad_W = w (h+u)^T, row-major; grad_b = w.
  for (std::size_t i = 0; i < d; ++i) {
    const double wi = w[i];
    for (std::size_t j = 0; j < d; ++j) g[i * d + j] = wi * s[j];
  }
  for (std::size_t i = 0; i < d; ++i) g[d * d + i] = w[i];
  return g;
}

std::pair<Mat, Mat> materialize_jacobians(const EqModule& m, const Vec& h,
                                          const Vec& u) {
  const std::size_t d = m.dim();
  if (d > 256) {
    throw ScaleGuardError(
        "materialize_jacobians: dim " + std::to_string(d) +
        " exceeds the dense-diagnostics limit of 256");
  }
  Mat jh(d, d);
  Mat jt(m.theta_dim(), d);
  Vec e(d);
  for (std::size_t j = 0; j < d; ++j) {
    e[j] = 1.0;
    const Vec ch = vjp_h(m, h, u, e);
    for (std::size_t i = 0; i < d; ++i) jh(i, j) = ch[i];
    const Vec ct = vjp_theta(m, h, u, e);
    for (std::size_t i = 0; i < ct.size(); ++i) jt(i, j) = ct[i];
    e[j] = 0.0;
  }
  return {std::move(jh), std::move(jt)};
}

Vec get_theta(const EqModule& m) {
  Vec t(m.theta_dim());
  std::copy(m.W.data.begin(), m.W.data.end(), t.begin());
  std::copy(m.b.begin(), m.b.end(),
            t.begin() + static_cast<std::ptrdiff_t>(m.W.data.size()));
  return t;
}

void set_theta(EqModule& m, const Vec& theta) {
  if (theta.size() != m.theta_dim()) {
    throw DimensionError("set_theta: length " + std::to_string(theta.size()) +
                         " against theta dim " + std::to_string(m.theta_dim()));
  }
  std::copy(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(m.W.data.size()),
            m.W.data.begin());
  std::copy(theta.begin() + static_cast<std::ptrdiff_t>(m.W.data.size()),
            theta.end(), m.b.data.begin());
}

std::string to_string(ModuleKind kind) {
  return kind == ModuleKind::LinearContraction ? "linear_contraction"
                                               : "affine_tanh";
}

ModuleKind module_kind_from_string(const std::string& s) {
  if (s == "linear_contraction") return ModuleKind::LinearContraction;
  if (s == "affine_tanh") return ModuleKind::AffineTanh;
  throw ParameterError("unknown module kind '" + s +
                       "' (expected linear_contraction | affine_tanh)");
}

void save_module(const EqModule& m, std::ostream& os) {
  os << "eqmodule v1\n";
  os << "kind=" << to_string(m.kind) << "\n";
  os << "d=" << m.dim() << "\n";
  os << "target_lipschitz=" << format_double(m.target_lipschitz) << "\n";
  os << "seed=" << m.seed << "\n";
  os << "sigma_cache=" << format_double(m.sigma_cache) << "\n";
  os << "W=";
  for (std::size_t i = 0; i < m.W.data.size(); ++i) {
    os << (i ? " " : "") << format_double(m.W.data[i]);
  }
  os << "\nb=";
  for (std::size_t i = 0; i < m.b.size(); ++i) {
    os << (i ? " " : "") << format_double(m.b[i]);
  }
  os << "\n";
}

namespace {

std::string expect_line(std::istream& is, const std::string& key) {
  std::string line;
  if (!std::getline(is, line)) {
    throw ConfigError("module file: unexpected end of file before '" + key + "'");
  }
  if (line.rfind(key + "=", 0) != 0) {
    throw ConfigError("module file: expected '" + key + "=...', got '" + line + "'");
  }
  return line.substr(key.size() + 1);
}

}  // namespace

EqModule load_module(std::istream& is) {
  std::string header;
  std::getline(is, header);
  if (header != "eqmodule v1") {
    throw ConfigError("module file: bad header '" + header + "'");
  }
  const ModuleKind kind = module_kind_from_string(expect_line(is, "kind"));
  const std::size_t d = std::stoul(expect_line(is, "d"));
  const double target_L = std::stod(expect_line(is, "target_lipschitz"));
  const std::uint64_t seed = std::stoull(expect_line(is, "seed"));
  const double sigma_cache = std::stod(expect_line(is, "sigma_cache"));

  Mat w(d, d);
  std::istringstream ws(expect_line(is, "W"));
  for (double& x : w.data) {
    if (!(ws >> x)) throw ConfigError("module file: W has too few entries");
  }
  Vec b(d);
  std::istringstream bs(expect_line(is, "b"));
  for (double& x : b.data) {
    if (!(bs >> x)) throw ConfigError("module file: b has too few entries");
  }
  EqModule m = make_module(kind, std::move(w), std::move(b), target_L);
  m.seed = seed;
  m.sigma_cache = sigma_cache;
  return m;
}

void save_module_file(const EqModule& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  save_module(m, os);
}

EqModule load_module_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "' for reading");
  return load_module(is);
}

}  // namespace eqgrad
