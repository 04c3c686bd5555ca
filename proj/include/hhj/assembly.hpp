#pragma once

#include "hhj/fespace.hpp"
#include "hhj/manufactured.hpp"

#include <memory>
#include <string>

namespace hhj {

/// The two equivalent forms of b(sigma, v) for v = curl phi:
/// primal: -sum_T int_T sigma : grad v + sum_T int_dT sigma_nt . v_t
/// dual:    sum_T int_T div sigma . v  - sum_T int_dT sigma_nn v_n
enum class Representation { Primal, Dual };

/// curl of stream-space shape functions and its gradient at the points of a
/// tabulation. velocity[i](q, j) is component i of curl phi_j and
/// gradient[i * dim + k](q, j) = d_k of that component.
struct CurlTabulation {
  int dim = 0;
  std::vector<Eigen::MatrixXd> velocity;
  std::vector<Eigen::MatrixXd> gradient;
};

/// Requires first derivatives in `tab` (second ones for `with_gradient`).
CurlTabulation curl_of(const Tabulation& tab, bool with_gradient);

/// Quadrature degree used for the bilinear forms of stream order k.
int form_degree(int k);
/// Quadrature degree for load vectors and error integrals.
constexpr int kLoadDegree = 18;

/// A_ij = (1/nu) int sigma_j : sigma_i.
SparseMatrix assemble_a(const FESpace& sigma, double nu, int threads = 1);
/// B_ij = b(sigma_j, curl phi_i): rows are stream DOFs, columns stress DOFs.
SparseMatrix assemble_b(const FESpace& sigma, const FESpace& stream, Representation rep,
                        int threads = 1);
/// G_ij = int phi_i . grad lambda_j: rows stream DOFs, columns multiplier DOFs.
SparseMatrix assemble_gauge(const FESpace& stream, const FESpace& multiplier, int threads = 1);
/// M_ij = int phi_j . phi_i over all components.
SparseMatrix assemble_mass(const FESpace& space, int threads = 1);
/// K_ij = int grad phi_j : grad phi_i.
SparseMatrix assemble_stiffness(const FESpace& space, int threads = 1);
/// l_i = -int f . curl phi_i.
Eigen::VectorXd assemble_load(const ManufacturedCase& mcase, const FESpace& stream,
                              int threads = 1);

/// Spaces of the method for stream order k on a mesh: stress Sigma^{k-1},
/// stream S^k (2D) or W^k (3D), multiplier S^{k+1} (3D only).
struct Discretization {
  std::shared_ptr<const Mesh> mesh;
  int order = 0;
  std::shared_ptr<const FESpace> sigma;
  std::shared_ptr<const FESpace> stream;
  std::shared_ptr<const FESpace> multiplier;

  Discretization(std::shared_ptr<const Mesh> m, int k);
  [[nodiscard]] int dim() const { return mesh->dim(); }
};

/// Supported stream orders: 2..4 in 2D, 2..3 in 3D.
bool supported_order(int dim, int k);

/// Block system [[A, B^T, 0], [B, 0, G], [0, G^T, 0]] (the last row and
/// column only in 3D), unknowns ordered sigma, psi, lambda.
struct LinearSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  SparseMatrix a;
  SparseMatrix b;
  SparseMatrix g;
  int offset_sigma = 0;
  int offset_stream = 0;
  int offset_multiplier = 0;
  int size = 0;
  /// Symmetric block scaling D = diag(sigma_scale, stream_scale,
  /// multiplier_scale) under which D M D no longer depends on nu.
  double sigma_scale = 1.0;
  double stream_scale = 1.0;
  double multiplier_scale = 1.0;
  /// Diagonal of D as a vector.
  [[nodiscard]] Eigen::VectorXd scaling() const;
  /// 3D only, used to precondition the stream and multiplier blocks.
  SparseMatrix stream_mass;
  SparseMatrix multiplier_stiffness;

  [[nodiscard]] int num_sigma() const { return offset_stream; }
  [[nodiscard]] int num_stream() const { return offset_multiplier - offset_stream; }
  [[nodiscard]] int num_multiplier() const { return size - offset_multiplier; }
  /// max |M - M^T| / max |M|.
  [[nodiscard]] double symmetry_defect() const;
};

LinearSystem assemble_system(const ManufacturedCase& mcase, const Discretization& disc,
                             Representation rep = Representation::Primal, int threads = 1);

/// Stacks the blocks of a system with the given load vector on the stream rows.
LinearSystem build_system(const SparseMatrix& a, const SparseMatrix& b, const SparseMatrix& g,
                          const Eigen::VectorXd& load);

/// Residual of the discrete equations with the exact sigma and curl psi
/// inserted: max over the stress rows of |a(sigma, tau) + b(tau, u)| and over
/// the stream rows of |b(sigma, curl phi) + int f . curl phi|.
struct ConsistencyResidual {
  double stress_rows = 0.0;
  double stream_rows = 0.0;
};
ConsistencyResidual consistency_residual(const ManufacturedCase& mcase, const Discretization& disc);

/// Relative max-norm difference of two sparse matrices.
double relative_difference(const SparseMatrix& x, const SparseMatrix& y);

}  // namespace hhj
