#pragma once

#include "hhj/assembly.hpp"
#include "hhj/solver.hpp"

namespace hhj {

/// u_h = curl psi_h on one element: values(q, i) = u_i and
/// gradients(q, i * dim + k) = d_k u_i at the given reference points.
struct VelocitySample {
  Eigen::MatrixXd values;
  Eigen::MatrixXd gradients;
};
VelocitySample velocity_eval(const FEFunction& psi_h, int e, const std::vector<Vec>& points);

/// (w, v)_{1,h} = sum_T int grad w : grad v + (1/h) sum_F int [[w_t]] . [[v_t]],
/// where on boundary facets the jump is the trace itself.
SparseMatrix assemble_broken_h1(const FESpace& space, int threads = 1);

/// b(sigma_h, v_j) for every basis function v_j of a BDM space (primal form).
Eigen::VectorXd apply_b(const FEFunction& sigma_h, const FESpace& velocity, int threads = 1);

struct PressureRecovery {
  FEFunction pressure;  ///< in Q^{k-2}, zero mean
  FEFunction w;         ///< auxiliary velocity, zero up to solver accuracy
  double w_norm_1h = 0.0;
  double p_norm = 0.0;     ///< ||p_h||_{L2}
  double load_norm = 0.0;  ///< ||f||_{L2}
  /// ||w_h||_{1,h} / (||p_h|| + ||f||); p_h alone can vanish by symmetry.
  [[nodiscard]] double relative_w() const {
    const double scale = p_norm + load_norm;
    return scale > 0.0 ? w_norm_1h / scale : w_norm_1h;
  }
};

/// Solves for (w_h, p_h) in V^{k-1} x Q^{k-2}:
///   (w, v)_{1,h} + (div v, p) = -int f . v - b(sigma_h, v)
///   (div w, q) = 0.
/// The constant on element 0 is pinned to fix p_h, and the mean is removed
/// afterwards. Always uses the direct solver.
PressureRecovery recover_pressure(const FEFunction& sigma_h, const ManufacturedCase& mcase,
                                  const SolveOptions& options = {}, int threads = 1);

struct ErrorReport {
  int num_elements = 0;
  int ndof_sigma = 0;
  int ndof_stream = 0;
  int ndof_multiplier = 0;
  double h = 0.0;
  double err_h1semi_u = 0.0;  ///< broken ||grad u - grad u_h||
  double err_l2_u = 0.0;
  double err_l2_sigma = 0.0;  ///< (1/nu) ||sigma - sigma_h||, the scale of grad u
  double err_l2_p = 0.0;
  double err_1h_u = 0.0;      ///< ||u - u_h||_{1,h} including tangential jumps
  double max_div_u = 0.0;     ///< max |div u_h| over the error quadrature points
};

/// Error norms of one discrete solution; integrals use the degree-18 rule.
ErrorReport error_norms(const ManufacturedCase& mcase, const FEFunction& sigma_h,
                        const FEFunction& psi_h, const FEFunction& p_h, int threads = 1);

/// ||grad lambda_h||_{L2}.
double gradient_norm(const FEFunction& lambda_h);
/// ||f||_{L2} over the unit square/cube.
double load_norm(const ManufacturedCase& mcase, const Mesh& mesh);

/// log2(previous / current).
double eoc(double previous, double current);

}  // namespace hhj
