#pragma once

#include "hhj/types.hpp"

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

namespace hhj {

/// One element adjacent to a facet. `sign` is +1 when the canonical facet
/// normal points out of this element and -1 otherwise.
struct FacetOwner {
  int element = -1;
  int local_facet = -1;
  int sign = 0;
};

/// Canonical facet frame derived from the ascending global vertex order.
/// 2D: tangent = (p1 - p0)/|p1 - p0| and normal is the tangent rotated
/// clockwise, so tangent is the normal rotated counter-clockwise.
/// 3D: normal = (p1 - p0) x (p2 - p0) normalized, tangents[0] along p1 - p0,
/// tangents[1] = normal x tangents[0].
struct FacetFrame {
  Vec normal;
  std::vector<Vec> tangents;
  double measure = 0.0;
};

/// Affine map x = A xhat + origin from the unit reference simplex.
struct ElementGeometry {
  Vec origin;
  Mat jacobian;
  Mat inverse_jacobian;
  double determinant = 0.0;
  double volume = 0.0;
  double diameter = 0.0;

  [[nodiscard]] Vec map(const Vec& xhat) const { return jacobian * xhat + origin; }
  [[nodiscard]] Vec to_reference(const Vec& x) const { return inverse_jacobian * (x - origin); }
};

/// Conforming simplicial mesh of the unit square or cube.
///
/// Every element stores its vertices in ascending global order; a sub-entity
/// (vertex, edge, face) of an element is addressed by the bitmask of the local
/// vertices it contains. Local facet f is the facet opposite local vertex f.
class Mesh {
 public:
  /// Unit square split into n x n squares of two triangles each (diagonal
  /// through (0,0)-(1,1) of each square), or unit cube split into n^3 cubes of
  /// six Kuhn tetrahedra each.
  static Mesh structured(int dim, int n);

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] int subdivisions() const { return n_; }
  [[nodiscard]] double h() const { return h_; }

  [[nodiscard]] int num_vertices() const { return static_cast<int>(vertices_.size()); }
  [[nodiscard]] int num_elements() const { return static_cast<int>(elements_.size()); }
  [[nodiscard]] int num_entities(int entity_dim) const {
    return static_cast<int>(entities_[entity_dim].size());
  }
  [[nodiscard]] int num_facets() const { return num_entities(dim_ - 1); }

  [[nodiscard]] const Vec& vertex(int v) const { return vertices_[v]; }
  [[nodiscard]] std::span<const int> element_vertices(int e) const {
    return {elements_[e].data(), static_cast<std::size_t>(dim_ + 1)};
  }
  /// Sorted global vertices of an entity.
  [[nodiscard]] std::span<const int> entity_vertices(int entity_dim, int id) const {
    return {entities_[entity_dim][id].data(), static_cast<std::size_t>(entity_dim + 1)};
  }
  /// Global id of the sub-entity of element e spanned by the local vertices in `mask`.
  [[nodiscard]] int entity_of(int e, unsigned mask) const {
    return element_entities_[static_cast<std::size_t>(e) * 16 + mask];
  }
  [[nodiscard]] int facet_of(int e, int local_facet) const {
    return entity_of(e, facet_mask(local_facet));
  }
  [[nodiscard]] unsigned facet_mask(int local_facet) const {
    return ((1u << (dim_ + 1)) - 1u) & ~(1u << local_facet);
  }
  [[nodiscard]] bool on_boundary(int entity_dim, int id) const {
    return boundary_[entity_dim][id] != 0;
  }

  [[nodiscard]] std::span<const FacetOwner> facet_owners(int facet) const {
    return {facet_owners_[facet].data(), static_cast<std::size_t>(facet_owner_count_[facet])};
  }

  [[nodiscard]] FacetFrame facet_frame(int facet) const;
  [[nodiscard]] const ElementGeometry& element_geometry(int e) const { return geometry_[e]; }

  /// Reference coordinates of the local vertices in `mask`, in
  /// ascending global order.
  [[nodiscard]] std::vector<Vec> reference_vertices(unsigned mask) const;

  /// Plain-text listing of vertices and elements.
  void write_text(std::ostream& out) const;

 private:
  void build_topology();

  int dim_ = 0;
  int n_ = 0;
  double h_ = 0.0;
  std::vector<Vec> vertices_;
  std::vector<std::array<int, 4>> elements_;
  std::array<std::vector<std::array<int, 4>>, 4> entities_;
  std::array<std::vector<char>, 4> boundary_;
  std::vector<int> element_entities_;
  std::vector<std::array<FacetOwner, 2>> facet_owners_;
  std::vector<int> facet_owner_count_;
  std::vector<ElementGeometry> geometry_;
};

}  // namespace hhj
