#pragma once

#include "hhj/mesh.hpp"
#include "hhj/polynomial.hpp"
#include "hhj/quadrature.hpp"
#include "hhj/types.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hhj {

enum class Family {
  LagrangeH1,    ///< continuous scalar P^k, zero boundary values
  NedelecHCurl,  ///< second-kind Nedelec P^k vectors, zero tangential trace (3D)
  BdmHDiv,       ///< Brezzi-Douglas-Marini P^k vectors, zero normal trace
  StressNT,      ///< trace-free P^k matrices, nt-trace single valued and in P^{k-1}(F)
  DgL2ZeroMean,  ///< discontinuous P^k scalars, zero global mean
};

std::string to_string(Family family);

/// Number of DOF functionals attached to each entity type (before boundary
/// elimination).
struct DofLayout {
  int per_vertex = 0;
  int per_edge = 0;
  int per_face = 0;
  int per_cell = 0;
};

/// Shape functions of one element at a set of points. Derivatives are with
/// respect to physical coordinates. Matrix-valued fields are stored row-major:
/// component r * dim + c holds entry (r, c).
struct Tabulation {
  int num_points = 0;
  int num_local = 0;
  int num_components = 0;
  int dim = 0;
  std::vector<Eigen::MatrixXd> values;     ///< [c](q, j)
  std::vector<Eigen::MatrixXd> gradients;  ///< [c * dim + i](q, j) = d_i of component c
  std::vector<Eigen::MatrixXd> hessians;   ///< [(c * dim + i) * dim + k](q, j)

  [[nodiscard]] const Eigen::MatrixXd& value(int c) const { return values[c]; }
  [[nodiscard]] const Eigen::MatrixXd& gradient(int c, int i) const {
    return gradients[c * dim + i];
  }
  [[nodiscard]] const Eigen::MatrixXd& hessian(int c, int i, int k) const {
    return hessians[(c * dim + i) * dim + k];
  }
};

/// Raw basis values and reference derivatives at fixed reference points,
/// shared by all elements.
struct ReferenceTable {
  std::vector<Vec> points;
  int derivatives = 0;
  Eigen::MatrixXd values;
  std::vector<Eigen::MatrixXd> first;   ///< [i]
  std::vector<Eigen::MatrixXd> second;  ///< [i * dim + j]
};

/// Extended-precision raw basis values and first reference derivatives.
struct ExtendedReferenceTable {
  std::vector<LongVec> points;
  LongMatrix values;
  std::vector<LongMatrix> first;  ///< [i]
};

/// Shape function values and physical first derivatives in extended
/// precision, laid out as in Tabulation.
struct ExtendedTabulation {
  int num_points = 0;
  int num_local = 0;
  int num_components = 0;
  int dim = 0;
  std::vector<LongMatrix> values;
  std::vector<LongMatrix> gradients;
};

/// An analytic field evaluated at a physical point; returns num_components values.
using Field = std::function<Eigen::VectorXd(const Vec&)>;

class FESpace {
 public:
  FESpace(std::shared_ptr<const Mesh> mesh, Family family, int order);

  [[nodiscard]] Family family() const { return family_; }
  [[nodiscard]] int order() const { return order_; }
  [[nodiscard]] const Mesh& mesh() const { return *mesh_; }
  [[nodiscard]] const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  [[nodiscard]] int dim() const { return mesh_->dim(); }

  /// Number of unconstrained global DOFs.
  [[nodiscard]] int num_dofs() const { return num_dofs_; }
  /// Number of DOFs removed by essential boundary conditions.
  [[nodiscard]] int num_constrained() const { return num_constrained_; }
  [[nodiscard]] int num_local() const { return num_local_; }
  [[nodiscard]] int num_components() const { return num_components_; }
  [[nodiscard]] const DofLayout& layout() const { return layout_; }
  [[nodiscard]] bool zero_mean() const { return family_ == Family::DgL2ZeroMean; }

  /// Global DOF index of each local shape function; -1 for constrained ones.
  [[nodiscard]] std::span<const int> element_dofs(int e) const {
    return {element_dofs_.data() + static_cast<std::size_t>(e) * num_local_,
            static_cast<std::size_t>(num_local_)};
  }

  /// Coefficients of the local shape functions in the raw basis
  /// (raw component b, raw polynomial m) -> row b * num_monomials + m. The raw
  /// polynomials are orthonormal on the reference simplex (monomials for DG).
  [[nodiscard]] const Eigen::MatrixXd& coefficients(int e) const { return coefficients_[e]; }

  [[nodiscard]] ReferenceTable reference_table(std::vector<Vec> points, int derivatives) const;
  [[nodiscard]] Tabulation tabulate(int e, const ReferenceTable& table) const;
  [[nodiscard]] Tabulation tabulate(int e, const std::vector<Vec>& points, int derivatives) const;

  /// The local basis is solved for in extended precision; these evaluate that
  /// unrounded basis. Used where the double basis loses small loads to
  /// cancellation.
  [[nodiscard]] ExtendedReferenceTable extended_reference_table(std::vector<LongVec> points) const;
  [[nodiscard]] ExtendedTabulation tabulate_extended(int e, const ExtendedReferenceTable& table) const;

  /// DOF functionals of element e applied to an analytic field (one value per
  /// local shape function).
  [[nodiscard]] Eigen::VectorXd apply_functionals(int e, const Field& field) const;

 private:
  struct Functionals;
  [[nodiscard]] Functionals element_functionals(int e) const;
  [[nodiscard]] LongMatrix raw_values(const std::vector<LongVec>& points) const;
  void build_face_fields();

  std::shared_ptr<const Mesh> mesh_;
  Family family_;
  int order_;
  MonomialSet monomials_;
  Eigen::MatrixXd raw_basis_;  ///< raw polynomial j = sum_i raw_basis_(i, j) monomial_i
  int num_raw_components_ = 0;
  int num_components_ = 0;
  Eigen::MatrixXd embedding_;  ///< out component x raw component
  int num_local_ = 0;
  int num_dofs_ = 0;
  int num_constrained_ = 0;
  DofLayout layout_;
  std::vector<int> element_dofs_;
  std::vector<Eigen::MatrixXd> coefficients_;
  std::vector<LongMatrix> extended_coefficients_;
  /// Nedelec only: per global face, kernel tangential fields at face quadrature
  /// points, rows q * 3 + c.
  std::vector<Eigen::MatrixXd> face_fields_;
};

/// A discrete function: a space plus its unconstrained coefficient vector.
struct FEFunction {
  std::shared_ptr<const FESpace> space;
  Eigen::VectorXd coefficients;

  FEFunction() = default;
  explicit FEFunction(std::shared_ptr<const FESpace> s)
      : space(std::move(s)), coefficients(Eigen::VectorXd::Zero(space->num_dofs())) {}
  FEFunction(std::shared_ptr<const FESpace> s, Eigen::VectorXd c)
      : space(std::move(s)), coefficients(std::move(c)) {}

  /// Local coefficients of element e (constrained entries are zero).
  [[nodiscard]] Eigen::VectorXd local(int e) const;
  /// Value (all components) at physical point x, using element e's polynomial.
  [[nodiscard]] Eigen::VectorXd value(int e, const Vec& x) const;
};

/// Interpolation used by tests: DOF functionals for conforming families;
/// element-wise L2 projection followed by mean removal for the pressure space.
FEFunction interpolate(const std::shared_ptr<const FESpace>& space, const Field& field);

/// Element reference coordinates of the rule points placed on the sub-simplex
/// spanned by the local vertices in `mask`.
std::vector<Vec> entity_points(const Mesh& mesh, unsigned mask, const QuadratureRule& rule);

/// Largest supported order for a family in the given dimension.
int max_order(Family family, int dim);
int min_order(Family family);

}  // namespace hhj
