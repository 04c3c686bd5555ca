#include "hhj/solver.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <chrono>
#include <cstdio>
#include <cmath>
#include <functional>

namespace hhj {

namespace {

using Eigen::VectorXd;
using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using Preconditioner = std::function<VectorXd(const VectorXd&)>;

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string format_residual(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", r);
  return buf;
}

void check_tolerance(double tol) {
  require(tol >= 1e-14 && tol <= 1e-6, "solve: tol must lie in [1e-14, 1e-6]");
}

SolveReport direct(const SparseMatrix& m, const VectorXd& b, const SolveOptions& opt) {
  SolveReport rep;
  rep.method = SolverMethod::Direct;
  if (m.rows() == 0) {
    rep.solution = VectorXd::Zero(0);
    return rep;
  }
  // Symmetric equilibration: the stress block scales like 1/nu while the
  // coupling blocks do not.
  VectorXd scale = VectorXd::Ones(m.rows());
  for (int k = 0; k < m.outerSize(); ++k) {
    double mx = 0.0;
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) mx = std::max(mx, std::abs(it.value()));
    if (mx > 0.0) scale(k) = 1.0 / std::sqrt(mx);
  }
  const ColMatrix cm(scale.asDiagonal() * m * scale.asDiagonal());
  Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(cm);
  lu.factorize(cm);
  if (lu.info() != Eigen::Success)
    throw SolveError("solve: sparse LU factorization failed (" + lu.lastErrorMessage() + ")",
                     std::numeric_limits<double>::infinity());
  auto apply_inverse = [&](const VectorXd& r) -> VectorXd {
    return scale.cwiseProduct(lu.solve(VectorXd(scale.cwiseProduct(r))));
  };
  VectorXd x = apply_inverse(b);
  double res = relative_residual(m, x, b);
  int steps = 0;
  // Iterative refinement against the assembled matrix, continued past the
  // tolerance until it stagnates so that nearby right-hand sides give
  // solutions that agree to the rounding floor.
  while (res > 0.0 && steps < opt.max_refinements) {
    const VectorXd candidate = x + apply_inverse(b - m * x);
    const double next = relative_residual(m, candidate, b);
    ++steps;
    if (!(next < res)) break;
    x = candidate;
    const bool stagnating = next > 0.5 * res;
    res = next;
    if (stagnating) break;
  }
  rep.solution = std::move(x);
  rep.residual = res;
  rep.iterations = steps;
  if (!(res <= opt.tol))
    throw SolveError("solve: direct solve reached relative residual " + format_residual(res) +
                         " above the tolerance",
                     res);
  return rep;
}

/// Preconditioned MINRES (Elman, Silvester and Wathen, Algorithm 2.4).
SolveReport minres(const SparseMatrix& m, const VectorXd& b, const Preconditioner& prec,
                   const SolveOptions& opt) {
  SolveReport rep;
  rep.method = SolverMethod::Iterative;
  const auto n = m.rows();
  VectorXd x = VectorXd::Zero(n);
  if (b.norm() == 0.0) {
    rep.solution = x;
    return rep;
  }
  double best = std::numeric_limits<double>::infinity();
  VectorXd best_x = x;
  int total = 0;
  // Restart from the current iterate if the recurrence estimate drifts from
  // the true residual.
  for (int cycle = 0; cycle < 5 && total < opt.max_iterations; ++cycle) {
    VectorXd v_old = VectorXd::Zero(n);
    VectorXd v = b - m * x;
    VectorXd z = prec(v);
    double gamma = std::sqrt(std::max(0.0, z.dot(v)));
    if (gamma == 0.0) break;
    double gamma_old = 1.0;
    const double eta0 = gamma;
    double eta = gamma;
    double s_old = 0.0;
    double s = 0.0;
    double c_old = 1.0;
    double c = 1.0;
    VectorXd w_old = VectorXd::Zero(n);
    VectorXd w = VectorXd::Zero(n);
    const double target = 0.1 * opt.tol * b.norm() / std::max(1e-300, (b - m * x).norm());
    while (total < opt.max_iterations) {
      ++total;
      z /= gamma;
      const VectorXd az = m * z;
      const double delta = az.dot(z);
      VectorXd v_new = az - (delta / gamma) * v - (gamma / gamma_old) * v_old;
      VectorXd z_new = prec(v_new);
      const double gamma_new = std::sqrt(std::max(0.0, z_new.dot(v_new)));
      const double a0 = c * delta - c_old * s * gamma;
      const double a1 = std::sqrt(a0 * a0 + gamma_new * gamma_new);
      const double a2 = s * delta + c_old * c * gamma;
      const double a3 = s_old * gamma;
      if (a1 == 0.0) break;
      const double c_new = a0 / a1;
      const double s_new = gamma_new / a1;
      VectorXd w_new = (z - a3 * w_old - a2 * w) / a1;
      x += c_new * eta * w_new;
      eta = -s_new * eta;
      w_old = std::move(w);
      w = std::move(w_new);
      v_old = std::move(v);
      v = std::move(v_new);
      z = std::move(z_new);
      gamma_old = gamma;
      gamma = gamma_new;
      c_old = c;
      c = c_new;
      s_old = s;
      s = s_new;
      if (std::abs(eta) <= target * eta0 || gamma == 0.0) break;
    }
    const double res = relative_residual(m, x, b);
    if (res < best) {
      best = res;
      best_x = x;
    }
    if (res <= opt.tol) break;
  }
  rep.solution = best_x;
  rep.residual = best;
  rep.iterations = total;
  if (!(best <= opt.tol))
    throw SolveError("solve: MINRES stopped at relative residual " + format_residual(best) +
                         " after " + std::to_string(total) + " iterations",
                     best);
  return rep;
}

std::shared_ptr<Eigen::SimplicialLDLT<ColMatrix>> factor_spd(const ColMatrix& m, const std::string& name) {
  auto f = std::make_shared<Eigen::SimplicialLDLT<ColMatrix>>();
  f->compute(m);
  if (f->info() != Eigen::Success)
    throw SolveError("solve: preconditioner block " + name + " is singular",
                     std::numeric_limits<double>::infinity());
  return f;
}

}  // namespace

std::string to_string(SolverMethod method) {
  return method == SolverMethod::Direct ? "direct" : "iterative";
}

SolverMethod solver_method_from_string(const std::string& name) {
  if (name == "direct") return SolverMethod::Direct;
  if (name == "iterative") return SolverMethod::Iterative;
  throw Error("unknown solver method '" + name + "' (expected direct or iterative)");
}

double relative_residual(const SparseMatrix& m, const VectorXd& x, const VectorXd& b) {
  const double r = (m * x - b).norm();
  const double bn = b.norm();
  if (bn > 0.0) return r / bn;
  const double scale = m.norm() * x.norm();
  return scale > 0.0 ? r / scale : r;
}

SolveReport solve(const SparseMatrix& m, const VectorXd& rhs, const SolveOptions& options) {
  check_tolerance(options.tol);
  require(m.rows() == m.cols() && m.rows() == rhs.size(), "solve: dimension mismatch");
  const auto start = std::chrono::steady_clock::now();
  SolveReport rep;
  if (options.method == SolverMethod::Direct) {
    rep = direct(m, rhs, options);
    rep.unscaled_residual = rep.residual;
  } else {
    VectorXd d = m.diagonal().cwiseAbs();
    for (Eigen::Index i = 0; i < d.size(); ++i)
      if (d(i) == 0.0) d(i) = 1.0;
    const VectorXd inv = d.cwiseInverse();
    rep = minres(m, rhs, [inv](const VectorXd& r) -> VectorXd { return inv.cwiseProduct(r); }, options);
    rep.unscaled_residual = rep.residual;
  }
  rep.wall_time_s = elapsed(start);
  return rep;
}

SolveReport solve(const LinearSystem& sys, const SolveOptions& options) {
  check_tolerance(options.tol);
  const auto start = std::chrono::steady_clock::now();
  const VectorXd d = sys.scaling();
  const SparseMatrix m = d.asDiagonal() * sys.matrix * d.asDiagonal();
  const VectorXd rhs = d.cwiseProduct(sys.rhs);
  SolveReport rep;
  if (options.method == SolverMethod::Direct) {
    rep = solve(m, rhs, options);
  } else {
    // Block-diagonal preconditioner diag(A, S, K / gamma) on the scaled
    // blocks with S = B diag(A)^-1 B^T (+ gamma M_W on the 3D stream block,
    // which controls the gradient fields in the kernel of B).
    const ColMatrix a(sys.a * (sys.sigma_scale * sys.sigma_scale));
    const ColMatrix b(sys.b * (sys.stream_scale * sys.sigma_scale));
    const VectorXd dinv = a.diagonal().cwiseInverse();
    ColMatrix s = b * dinv.asDiagonal() * b.transpose();
    double gamma = 1.0;
    const bool gauged = sys.num_multiplier() > 0;
    if (gauged) {
      require(sys.stream_mass.rows() == sys.num_stream() &&
                  sys.multiplier_stiffness.rows() == sys.num_multiplier(),
              "solve: 3D system lacks preconditioner blocks");
      const ColMatrix mass(sys.stream_mass);
      gamma = s.diagonal().mean() / mass.diagonal().mean();
      s = s + gamma * mass;
    }
    const auto fa = factor_spd(a, "A");
    const auto fs = factor_spd(s, "S");
    std::shared_ptr<Eigen::SimplicialLDLT<ColMatrix>> fk;
    if (gauged) {
      const double gs = sys.stream_scale * sys.multiplier_scale;
      fk = factor_spd(ColMatrix(sys.multiplier_stiffness * (gs * gs / gamma)), "K");
    }
    const int o1 = sys.offset_stream;
    const int o2 = sys.offset_multiplier;
    const Preconditioner prec = [&](const VectorXd& r) -> VectorXd {
      VectorXd z(r.size());
      z.head(o1) = fa->solve(r.head(o1));
      z.segment(o1, o2 - o1) = fs->solve(r.segment(o1, o2 - o1));
      if (fk) z.tail(r.size() - o2) = fk->solve(r.tail(r.size() - o2));
      return z;
    };
    rep = minres(m, rhs, prec, options);
  }
  rep.solution = d.cwiseProduct(rep.solution);
  rep.unscaled_residual = relative_residual(sys.matrix, rep.solution, sys.rhs);
  rep.wall_time_s = elapsed(start);
  return rep;
}

}  // namespace hhj
