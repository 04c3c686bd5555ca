#pragma once

#include "hhj/assembly.hpp"

#include <string>

namespace hhj {

enum class SolverMethod { Direct, Iterative };

std::string to_string(SolverMethod method);
SolverMethod solver_method_from_string(const std::string& name);

struct SolveOptions {
  SolverMethod method = SolverMethod::Direct;
  double tol = 1e-10;
  int max_iterations = 20000;  ///< MINRES iterations
  int max_refinements = 8;     ///< iterative refinement steps after the LU solve
};

struct SolveReport {
  Eigen::VectorXd solution;
  /// ||M x - b|| / ||b||, or ||M x - b|| / (||M||_F ||x||) when b = 0. For
  /// block systems this is measured on the scaled system D M D y = D b.
  double residual = 0.0;
  /// Same measure on the unscaled system.
  double unscaled_residual = 0.0;
  int iterations = 0;
  double wall_time_s = 0.0;
  SolverMethod method = SolverMethod::Direct;
};

/// Raised when the residual bound cannot be met; carries the best residual.
class SolveError : public Error {
 public:
  SolveError(const std::string& what, double best_residual)
      : Error(what), best_residual_(best_residual) {}
  [[nodiscard]] double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

double relative_residual(const SparseMatrix& m, const Eigen::VectorXd& x, const Eigen::VectorXd& b);

/// Solves a general sparse system. The iterative path uses MINRES with a
/// diagonal preconditioner and therefore expects a symmetric matrix.
SolveReport solve(const SparseMatrix& m, const Eigen::VectorXd& rhs, const SolveOptions& options);

/// Solves a block system through its nu-independent scaling; the iterative path uses MINRES with a
/// block-diagonal preconditioner built from the system blocks.
SolveReport solve(const LinearSystem& system, const SolveOptions& options);

}  // namespace hhj
