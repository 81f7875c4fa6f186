#include "afem/solve.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace afem {

std::string_view to_string(SolveMode mode) { return mode == SolveMode::Exact ? "exact" : "inexact"; }

SolveMode solve_mode_from_string(std::string_view name) {
  if (name == "exact") return SolveMode::Exact;
  if (name == "inexact") return SolveMode::Inexact;
  throw ConfigError("unknown solver mode '" + std::string(name) + "'");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

SparseMatrix symmetric_part(const SparseMatrix& a) {
  SparseMatrix at = a.transpose();
  SparseMatrix s = 0.5 * (a + at);
  s.makeCompressed();
  return s;
}

Eigen::VectorXd inverse_diagonal(const SparseMatrix& a) {
  Eigen::VectorXd d = a.diagonal();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0)) throw SolverError("Jacobi preconditioner needs a positive diagonal");
    d[i] = 1.0 / d[i];
  }
  return d;
}

// Smallest and largest eigenvalue of a symmetric tridiagonal matrix.
std::pair<double, double> tridiagonal_extremes(const std::vector<double>& diag, const std::vector<double>& off) {
  const auto m = static_cast<Eigen::Index>(diag.size());
  if (m == 0) return {0.0, 0.0};
  if (m == 1) return {diag[0], diag[0]};
  Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(diag.data(), m);
  Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(off.data(), m - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  return {es.eigenvalues()[0], es.eigenvalues()[m - 1]};
}

int iteration_cap(const SolverConfig& config, Eigen::Index n) {
  if (config.max_iterations > 0) return config.max_iterations;
  return static_cast<int>(std::max<Eigen::Index>(3 * n, 1000));
}

// Shared state of the stopping logic.
struct Stopper {
  const LinearSystem& system;
  const EstimatorCallback* estimator;  // null in exact mode
  double vartheta;
  double tolerance;
  double rhs_norm;
  double safety;
  double lambda_lanczos;
  bool exact_only = false;
  double eta_last = std::numeric_limits<double>::infinity();
  int last_call = -10;
  double eta_at_stop = 0.0;
  bool fell_back = false;

  double bound(double rz, double lambda) const {
    return lambda > 0.0 ? safety * std::sqrt(std::max(rz, 0.0) / lambda) : std::numeric_limits<double>::infinity();
  }

  bool exact_done(double rnorm) const { return rnorm <= tolerance * rhs_norm; }

  // Inexact test; may call the estimator on the current iterate.
  bool inexact_done(int k, double certified, const Eigen::VectorXd& x) {
    if (!estimator || exact_only) return false;
    if (!(certified <= vartheta * eta_last) && k - last_call < 25) return false;
    if (k - last_call < 2 && std::isfinite(eta_last)) return false;
    last_call = k;
    const double eta = (*estimator)(system.expand(x));
    eta_last = eta;
    if (eta <= 0.0) {
      if (certified > 0.0) {
        exact_only = true;
        fell_back = true;
        return false;
      }
      eta_at_stop = eta;
      return true;
    }
    if (certified <= vartheta * eta) {
      eta_at_stop = eta;
      return true;
    }
    return false;
  }
};

SolveResult run_cg(const LinearSystem& system, const SolverConfig& config, const Eigen::VectorXd& x0,
                   Stopper& stop) {
  const auto& a = system.matrix;
  const Eigen::VectorXd dinv = inverse_diagonal(a);
  const Eigen::VectorXd& b = system.rhs;
  const int cap = iteration_cap(config, b.size());

  SolveResult out;
  auto& rep = out.report;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd r = b - a * x;
  Eigen::VectorXd z = dinv.cwiseProduct(r);
  Eigen::VectorXd p = z;
  Eigen::VectorXd ap(b.size());
  double rz = r.dot(z);
  std::vector<double> tdiag, toff;
  double alpha_prev = 0.0, beta_prev = 0.0;
  int k = 0;
  int restarts = 0;

  auto lambda_now = [&] {
    double lam = stop.lambda_lanczos;
    if (!tdiag.empty()) lam = std::min(lam, tridiagonal_extremes(tdiag, toff).first);
    return lam;
  };

  rep.residual_history.push_back(r.norm());
  bool done = false;
  while (!done) {
    const double rnorm = r.norm();
    if (stop.exact_done(rnorm) || rz <= 0.0) {
      // Confirm with the true residual before accepting.
      Eigen::VectorXd rt = b - a * x;
      if (stop.exact_done(rt.norm()) || restarts >= 5 || rt.norm() == 0.0) {
        r = rt;
        done = true;
        break;
      }
      ++restarts;
      r = rt;
      z = dinv.cwiseProduct(r);
      p = z;
      rz = r.dot(z);
      tdiag.clear();
      toff.clear();
      alpha_prev = beta_prev = 0.0;
      continue;
    }
    if (stop.estimator) {
      const double certified = stop.bound(rz, lambda_now());
      if (stop.inexact_done(k, certified, x)) break;
    }
    if (k >= cap) {
      throw SolverError("CG reached " + std::to_string(cap) + " iterations with relative residual " +
                        std::to_string(rnorm / stop.rhs_norm));
    }
    ap.noalias() = a * p;
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) throw SolverError("CG breakdown: matrix is not positive definite");
    const double alpha = rz / pap;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    z = dinv.cwiseProduct(r);
    const double rz_new = r.dot(z);
    const double beta = rz_new / rz;
    tdiag.push_back(1.0 / alpha + (alpha_prev > 0.0 ? beta_prev / alpha_prev : 0.0));
    if (tdiag.size() > 1) toff.push_back(std::sqrt(beta_prev) / alpha_prev);
    alpha_prev = alpha;
    beta_prev = beta;
    p = z + beta * p;
    rz = rz_new;
    ++k;
    rep.residual_history.push_back(r.norm());
  }
  rep.iterations = k;
  rep.residual_norm = r.norm();
  rep.relative_residual = rep.residual_norm / stop.rhs_norm;
  rep.lambda_min = lambda_now();
  rep.certified_bound = stop.bound(r.dot(dinv.cwiseProduct(r)), rep.lambda_min);
  rep.converged = true;
  out.u = system.expand(x);
  return out;
}

SolveResult run_bicgstab(const LinearSystem& system, const SolverConfig& config, const Eigen::VectorXd& x0,
                         Stopper& stop) {
  const auto& a = system.matrix;
  const Eigen::VectorXd dinv = inverse_diagonal(a);
  const Eigen::VectorXd& b = system.rhs;
  const int cap = iteration_cap(config, b.size());
  const auto n = b.size();

  SolveResult out;
  auto& rep = out.report;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd r = b - a * x;
  Eigen::VectorXd rhat = r;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n), p = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y(n), s(n), zz(n), t(n);
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  int k = 0;
  int restarts = 0;
  rep.residual_history.push_back(r.norm());
  while (true) {
    const double rnorm = r.norm();
    if (stop.exact_done(rnorm)) {
      Eigen::VectorXd rt = b - a * x;
      if (stop.exact_done(rt.norm()) || restarts >= 5 || rt.norm() == 0.0) {
        r = rt;
        break;
      }
      ++restarts;
      r = rt;
      rhat = r;
      rho = alpha = omega = 1.0;
      v.setZero();
      p.setZero();
      continue;
    }
    if (stop.estimator) {
      const double certified = stop.bound(r.dot(dinv.cwiseProduct(r)), stop.lambda_lanczos);
      if (stop.inexact_done(k, certified, x)) break;
    }
    if (k >= cap) {
      throw SolverError("BiCGStab reached " + std::to_string(cap) + " iterations with relative residual " +
                        std::to_string(rnorm / stop.rhs_norm));
    }
    const double rho_new = rhat.dot(r);
    if (std::abs(rho_new) < 1e-300 || std::abs(rho_new) < 1e-14 * rhat.norm() * rnorm) {
      rhat = r;
      rho = alpha = omega = 1.0;
      v.setZero();
      p.setZero();
      ++restarts;
      if (restarts > 50) throw SolverError("BiCGStab breakdown");
      continue;
    }
    const double beta = (rho_new / rho) * (alpha / omega);
    p = r + beta * (p - omega * v);
    y = dinv.cwiseProduct(p);
    v.noalias() = a * y;
    alpha = rho_new / rhat.dot(v);
    s = r - alpha * v;
    zz = dinv.cwiseProduct(s);
    t.noalias() = a * zz;
    const double tt = t.dot(t);
    omega = tt > 0.0 ? t.dot(s) / tt : 0.0;
    x.noalias() += alpha * y + omega * zz;
    r = s - omega * t;
    rho = rho_new;
    ++k;
    rep.residual_history.push_back(r.norm());
    if (omega == 0.0 && !stop.exact_done(r.norm())) {
      rhat = r;
      rho = alpha = omega = 1.0;
      v.setZero();
      p.setZero();
    }
  }
  rep.iterations = k;
  rep.residual_norm = r.norm();
  rep.relative_residual = rep.residual_norm / stop.rhs_norm;
  rep.lambda_min = stop.lambda_lanczos;
  rep.certified_bound = stop.bound(r.dot(dinv.cwiseProduct(r)), rep.lambda_min);
  rep.converged = true;
  out.u = system.expand(x);
  return out;
}

Eigen::VectorXd nodal_from_free(const LinearSystem& system, const Eigen::VectorXd& free_values) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(system.lifting.size());
  for (std::size_t i = 0; i < system.free_nodes.size(); ++i) out[system.free_nodes[i]] = free_values[static_cast<Eigen::Index>(i)];
  return out;
}

SolveResult solve_impl(const LinearSystem& system, const EstimatorCallback* estimator, double vartheta,
                       const SolverConfig& config, const DiscreteFunction* initial, const Eigen::VectorXd* mode_hint) {
  const auto start = Clock::now();
  const auto n = system.size();
  if (n == 0) {
    SolveResult out;
    out.u = system.expand(Eigen::VectorXd());
    out.report.converged = true;
    out.lowest_mode = Eigen::VectorXd::Zero(system.lifting.size());
    return out;
  }
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  if (initial) x0 = system.restrict_to_free(*initial);

  Stopper stop{system, estimator, vartheta, config.tolerance, 1.0, config.safety,
               std::numeric_limits<double>::infinity()};
  const double bnorm = system.rhs.norm();
  stop.rhs_norm = bnorm > 0.0 ? bnorm : 1.0;

  Eigen::VectorXd lowest;
  const bool need_lanczos = estimator != nullptr || !system.symmetric;
  if (need_lanczos) {
    Eigen::VectorXd hint;
    if (mode_hint && mode_hint->size() == system.lifting.size()) {
      hint.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) hint[i] = (*mode_hint)[system.free_nodes[i]];
    }
    const auto lz = lanczos_extremes(system.matrix, config.lanczos_steps, config.seed, hint.size() ? &hint : nullptr, true);
    stop.lambda_lanczos = lz.lambda_min;
    lowest = nodal_from_free(system, lz.vector);
  }

  SolveResult out = system.symmetric ? run_cg(system, config, x0, stop) : run_bicgstab(system, config, x0, stop);
  out.report.eta_at_stop = stop.eta_at_stop;
  out.report.fell_back_to_exact = stop.fell_back;
  out.report.wall_time = seconds_since(start);
  out.lowest_mode = lowest.size() ? lowest : Eigen::VectorXd::Zero(system.lifting.size());
  return out;
}

}  // namespace

LanczosResult lanczos_extremes(const SparseMatrix& matrix, int steps, std::uint64_t seed, const Eigen::VectorXd* start,
                               bool want_vector) {
  const auto n = matrix.rows();
  LanczosResult res;
  if (n == 0) return res;
  const SparseMatrix sym = symmetric_part(matrix);
  Eigen::VectorXd dsqrt_inv = sym.diagonal();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(dsqrt_inv[i] > 0.0)) throw SolverError("Lanczos needs a positive diagonal");
    dsqrt_inv[i] = 1.0 / std::sqrt(dsqrt_inv[i]);
  }
  auto apply = [&](const Eigen::VectorXd& q) -> Eigen::VectorXd {
    return dsqrt_inv.cwiseProduct(sym * dsqrt_inv.cwiseProduct(q));
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd q0(n);
  for (Eigen::Index i = 0; i < n; ++i) q0[i] = normal(rng);
  q0.normalize();
  if (start && start->size() == n && start->norm() > 0.0) {
    // Scaled variables: y = D^{1/2} x.
    Eigen::VectorXd y = start->cwiseQuotient(dsqrt_inv);
    q0 = y.normalized() + 0.05 * q0;
    q0.normalize();
  }

  const int m = static_cast<int>(std::min<Eigen::Index>(std::max(steps, 1), n));
  std::vector<double> alpha, beta;
  auto run = [&](const std::function<void(int, const Eigen::VectorXd&)>& visit) {
    Eigen::VectorXd q = q0, q_prev = Eigen::VectorXd::Zero(n);
    double b_prev = 0.0;
    const bool record = alpha.empty();
    for (int j = 0; j < m; ++j) {
      if (visit) visit(j, q);
      Eigen::VectorXd w = apply(q) - b_prev * q_prev;
      const double a = q.dot(w);
      w -= a * q;
      const double b = w.norm();
      if (record) {
        alpha.push_back(a);
        if (j + 1 < m) beta.push_back(b);
      }
      if (b <= 1e-14 * std::abs(a) || j + 1 == m) {
        if (record) beta.resize(alpha.size() - 1);
        break;
      }
      q_prev = q;
      q = w / b;
      b_prev = b;
    }
  };
  run({});
  const auto k = static_cast<Eigen::Index>(alpha.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  Eigen::VectorXd d = Eigen::Map<Eigen::VectorXd>(alpha.data(), k);
  Eigen::VectorXd e = k > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), k - 1)) : Eigen::VectorXd();
  if (k == 1) {
    res.lambda_min = res.lambda_max = alpha[0];
    if (want_vector) res.vector = dsqrt_inv.cwiseProduct(q0);
    return res;
  }
  es.computeFromTridiagonal(d, e, want_vector ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  res.lambda_min = es.eigenvalues()[0];
  res.lambda_max = es.eigenvalues()[k - 1];
  if (want_vector) {
    const Eigen::VectorXd s = es.eigenvectors().col(0);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    run([&](int j, const Eigen::VectorXd& q) {
      if (j < k) y += s[j] * q;
    });
    res.vector = dsqrt_inv.cwiseProduct(y);
  }
  return res;
}

SolveResult solve_exact(const LinearSystem& system, const SolverConfig& config, const DiscreteFunction* initial,
                        const Eigen::VectorXd* mode_hint) {
  return solve_impl(system, nullptr, 0.0, config, initial, mode_hint);
}

SolveResult solve_inexact(const LinearSystem& system, const EstimatorCallback& estimator, double vartheta,
                          const SolverConfig& config, const DiscreteFunction* initial, const Eigen::VectorXd* mode_hint) {
  if (!(vartheta > 0.0 && vartheta < 1.0)) throw ConfigError("vartheta must lie in (0,1)");
  if (!estimator) throw ConfigError("inexact solve needs an estimator callback");
  return solve_impl(system, &estimator, vartheta, config, initial, mode_hint);
}

SolveResult solve_linear(const LinearSystem& system, const EstimatorCallback& estimator, const SolverConfig& config,
                         const DiscreteFunction* initial, const Eigen::VectorXd* mode_hint) {
  if (config.mode == SolveMode::Inexact) {
    return solve_inexact(system, estimator, config.vartheta, config, initial, mode_hint);
  }
  return solve_exact(system, config, initial, mode_hint);
}

SolveResult solve_nonlinear(const Mesh& mesh, const ProblemSpec& problem, const DiscreteFunction& initial,
                            const SolverConfig& config, const EstimatorCallback& estimator) {
  const auto start = Clock::now();
  initial.require(mesh);
  const bool inexact = config.mode == SolveMode::Inexact;
  if (inexact && !estimator) throw ConfigError("inexact nonlinear solve needs an estimator callback");

  SolverConfig inner = config;
  inner.mode = SolveMode::Exact;

  DiscreteFunction u = initial;
  LinearSystem sys = assemble(mesh, problem, &u);
  // Dirichlet values come from the lifting, whatever the initial guess held.
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    if (sys.free_index[v] < 0) u.values[static_cast<Eigen::Index>(v)] = sys.lifting[static_cast<Eigen::Index>(v)];
  }
  sys = assemble(mesh, problem, &u);

  SolveResult out;
  auto& rep = out.report;
  double damping = 1.0;
  double prev_residual = std::numeric_limits<double>::infinity();
  int growth = 0;
  Eigen::VectorXd mode_hint;
  for (int j = 1; j <= config.picard_max_iterations; ++j) {
    auto step = solve_exact(sys, inner, &u, mode_hint.size() ? &mode_hint : nullptr);
    rep.iterations += step.report.iterations;
    rep.outer_iterations = j;
    DiscreteFunction next{mesh.id(), u.values + damping * (step.u.values - u.values)};
    u = std::move(next);
    sys = assemble(mesh, problem, &u);

    // Residual of the frozen system at the new iterate: it drives the next increment.
    const Eigen::VectorXd x = sys.restrict_to_free(u);
    const Eigen::VectorXd r = sys.rhs - sys.matrix * x;
    const double rnorm = r.norm();
    const double bnorm = std::max(sys.rhs.norm(), 1e-300);
    rep.residual_history.push_back(rnorm);
    rep.residual_norm = rnorm;
    rep.relative_residual = rnorm / bnorm;

    const Eigen::VectorXd dinv = inverse_diagonal(sys.matrix);
    const double rz = r.dot(dinv.cwiseProduct(r));
    const double lam = sys.size() > 0 ? lanczos_extremes(sys.matrix, config.lanczos_steps, config.seed, nullptr, false).lambda_min
                                      : 1.0;
    rep.lambda_min = lam;
    rep.certified_bound = lam > 0.0 ? config.safety * std::sqrt(std::max(rz, 0.0) / lam) : 0.0;

    bool done = false;
    if (inexact) {
      const double eta = estimator(u);
      rep.eta_at_stop = eta;
      done = rep.certified_bound <= config.vartheta * eta || rnorm <= config.tolerance * bnorm;
    } else {
      done = rnorm <= config.picard_tolerance * bnorm;
    }
    if (done) {
      rep.converged = true;
      break;
    }
    if (rnorm > prev_residual) {
      ++growth;
      damping = std::max(damping * 0.5, 1.0 / 64.0);
      if (growth >= 5) throw SolverError("Picard iteration is not contracting");
    } else {
      growth = 0;
    }
    prev_residual = rnorm;
  }
  if (!rep.converged) {
    throw SolverError("Picard iteration did not converge in " + std::to_string(config.picard_max_iterations) + " steps");
  }
  out.u = std::move(u);
  out.report.wall_time = seconds_since(start);
  out.lowest_mode = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  return out;
}

}  // namespace afem
