#pragma once

#include "hhj/types.hpp"

#include <array>
#include <vector>

namespace hhj {

/// Monomials x^a y^b (z^c) of total degree <= degree, graded by total degree.
class MonomialSet {
 public:
  MonomialSet() = default;
  MonomialSet(int dim, int degree);

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] int size() const { return static_cast<int>(exponents_.size()); }
  [[nodiscard]] const std::array<int, 3>& exponent(int i) const { return exponents_[i]; }
  /// Number of monomials of total degree < d (prefix length in graded order).
  [[nodiscard]] int count_below(int d) const;

  /// Values at the given points: (npoints x size).
  [[nodiscard]] Eigen::MatrixXd values(const std::vector<Vec>& points) const;
  /// Partial derivative d/dx_i: (npoints x size).
  [[nodiscard]] Eigen::MatrixXd derivative(const std::vector<Vec>& points, int i) const;
  /// Second derivative d^2/dx_i dx_j: (npoints x size).
  [[nodiscard]] Eigen::MatrixXd second_derivative(const std::vector<Vec>& points, int i,
                                                  int j) const;

 private:
  [[nodiscard]] Eigen::MatrixXd eval(const std::vector<Vec>& points,
                                     const std::array<int, 3>& order) const;
  int dim_ = 0;
  int degree_ = 0;
  std::vector<std::array<int, 3>> exponents_;
};

/// Polynomials on the reference simplex that are orthonormal with respect to
/// the averaged inner product (1/|T|) int_T p q. Obtained by Gram-Schmidt on
/// the graded monomials, so the first count_below(d) members span P^{d-1}.
struct OrthonormalBasis {
  MonomialSet monomials;
  /// q_j = sum_i coefficients(i, j) * monomial_i
  Eigen::MatrixXd coefficients;
  [[nodiscard]] Eigen::MatrixXd values(const std::vector<Vec>& points) const {
    return monomials.values(points) * coefficients;
  }
};

const OrthonormalBasis& orthonormal_basis(int dim, int degree);

/// Number of monomials of total degree <= degree in dim variables.
int polynomial_dimension(int dim, int degree);

}  // namespace hhj
