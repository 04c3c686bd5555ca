#pragma once

// Quadrature and scatter helpers shared by the assembly and postprocessing
// translation units.

#include "hhj/fespace.hpp"
#include "hhj/quadrature.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace hhj::detail {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

inline VectorXd volume_weights(const QuadratureRule& rule, const ElementGeometry& g) {
  VectorXd w(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) w(q) = rule.weights[q] * std::abs(g.determinant);
  return w;
}

inline VectorXd facet_weights(const QuadratureRule& rule, double measure) {
  const double scale = measure * factorial(rule.dim);
  VectorXd w(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) w(q) = rule.weights[q] * scale;
  return w;
}

/// Reference tables of a space on every local facet of an element.
inline std::vector<ReferenceTable> facet_tables(const FESpace& space, const QuadratureRule& rule,
                                         int derivatives) {
  std::vector<ReferenceTable> out;
  const Mesh& mesh = space.mesh();
  for (int lf = 0; lf <= mesh.dim(); ++lf)
    out.push_back(space.reference_table(entity_points(mesh, mesh.facet_mask(lf), rule), derivatives));
  return out;
}

inline void scatter(std::vector<Triplet>& triplets, std::span<const int> rows, std::span<const int> cols,
             const MatrixXd& local) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0) continue;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (cols[j] < 0) continue;
      const double v = local(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (v != 0.0) triplets.emplace_back(rows[i], cols[j], v);
    }
  }
}

inline SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& triplets) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

}  // namespace hhj::detail
