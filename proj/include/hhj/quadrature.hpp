#pragma once

#include "hhj/types.hpp"

#include <vector>

namespace hhj {

/// Quadrature rule on the unit reference simplex {x_i >= 0, sum x_i <= 1}.
///
/// Points are stored in reference Cartesian coordinates; weights sum to the
/// simplex measure 1/dim!.
struct QuadratureRule {
  int dim = 0;
  int degree = 0;
  std::vector<Vec> points;
  std::vector<double> weights;
  /// The same rule before rounding to double.
  std::vector<LongVec> extended_points;
  std::vector<long double> extended_weights;

  [[nodiscard]] std::size_t size() const { return weights.size(); }
  /// Barycentric coordinates (dim + 1 entries, lambda_0 = 1 - sum x_i).
  [[nodiscard]] Eigen::VectorXd barycentric(std::size_t q) const;
  [[nodiscard]] Eigen::Matrix<long double, Eigen::Dynamic, 1> extended_barycentric(std::size_t q) const;
};

constexpr int kMaxQuadratureDegree = 20;

/// Collapsed Gauss-Legendre (Duffy) rule exact for total degree <= `degree`.
/// `dim` in {1, 2, 3}; throws for degrees outside [0, 20].
const QuadratureRule& simplex_rule(int dim, int degree);

/// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre01(int npoints, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace hhj
