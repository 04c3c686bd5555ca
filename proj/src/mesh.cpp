#include "hhj/mesh.hpp"

#include <Eigen/Geometry>

#include <Eigen/LU>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <ostream>

namespace hhj {

Mesh Mesh::structured(int dim, int n) {
  require(dim == 2 || dim == 3, "Mesh::structured: dimension must be 2 or 3");
  require(n >= 1, "Mesh::structured: n must be positive");
  Mesh mesh;
  mesh.dim_ = dim;
  mesh.n_ = n;
  const int np = n + 1;
  if (dim == 2) {
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i) {
        Vec x(2);
        x << static_cast<double>(i) / n, static_cast<double>(j) / n;
        mesh.vertices_.push_back(x);
      }
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int v00 = j * np + i;
        const int v10 = v00 + 1;
        const int v01 = v00 + np;
        const int v11 = v01 + 1;
        mesh.elements_.push_back({v00, v10, v11, -1});
        mesh.elements_.push_back({v00, v01, v11, -1});
      }
  } else {
    for (int k = 0; k <= n; ++k)
      for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) {
          Vec x(3);
          x << static_cast<double>(i) / n, static_cast<double>(j) / n, static_cast<double>(k) / n;
          mesh.vertices_.push_back(x);
        }
    const std::array<int, 3> stride{1, np, np * np};
    constexpr std::array<std::array<int, 3>, 6> perms{
        {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const int corner = (k * np + j) * np + i;
          for (const auto& p : perms) {
            std::array<int, 4> tet{corner, 0, 0, 0};
            int v = corner;
            for (int s = 0; s < 3; ++s) {
              v += stride[p[s]];
              tet[s + 1] = v;
            }
            mesh.elements_.push_back(tet);
          }
        }
  }
  for (auto& e : mesh.elements_) std::sort(e.begin(), e.begin() + dim + 1);
  mesh.build_topology();
  return mesh;
}

void Mesh::build_topology() {
  const int nv = dim_ + 1;
  const unsigned full = (1u << nv) - 1u;
  std::array<std::map<std::array<int, 4>, int>, 4> lookup;
  element_entities_.assign(elements_.size() * 16, -1);
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    for (unsigned mask = 1; mask <= full; ++mask) {
      std::array<int, 4> key{-1, -1, -1, -1};
      int count = 0;
      for (int i = 0; i < nv; ++i)
        if (mask & (1u << i)) key[count++] = elements_[e][i];
      const int d = count - 1;
      auto [it, inserted] = lookup[d].try_emplace(key, static_cast<int>(entities_[d].size()));
      if (inserted) entities_[d].push_back(key);
      element_entities_[e * 16 + mask] = it->second;
    }
  }
  for (int d = 0; d <= dim_; ++d) boundary_[d].assign(entities_[d].size(), 0);

  const int nf = num_facets();
  facet_owners_.assign(nf, {});
  facet_owner_count_.assign(nf, 0);
  geometry_.resize(elements_.size());
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    ElementGeometry& g = geometry_[e];
    g.origin = vertices_[elements_[e][0]];
    g.jacobian.resize(dim_, dim_);
    for (int i = 0; i < dim_; ++i) g.jacobian.col(i) = vertices_[elements_[e][i + 1]] - g.origin;
    g.determinant = g.jacobian.determinant();
    require(std::abs(g.determinant) > 0.0, "Mesh: degenerate element " + std::to_string(e));
    g.inverse_jacobian = g.jacobian.inverse();
    double fact = 1.0;
    for (int i = 2; i <= dim_; ++i) fact *= i;
    g.volume = std::abs(g.determinant) / fact;
    g.diameter = 0.0;
    for (int a = 0; a < nv; ++a)
      for (int b = a + 1; b < nv; ++b)
        g.diameter =
            std::max(g.diameter, (vertices_[elements_[e][a]] - vertices_[elements_[e][b]]).norm());
    h_ = std::max(h_, g.diameter);

    Vec centroid = Vec::Zero(dim_);
    for (int a = 0; a < nv; ++a) centroid += vertices_[elements_[e][a]];
    centroid /= nv;
    for (int f = 0; f < nv; ++f) {
      const int facet = facet_of(static_cast<int>(e), f);
      const FacetFrame frame = facet_frame(facet);
      Vec fc = Vec::Zero(dim_);
      for (int v : entity_vertices(dim_ - 1, facet)) fc += vertices_[v];
      fc /= dim_;
      const int sign = frame.normal.dot(fc - centroid) > 0.0 ? 1 : -1;
      const int slot = facet_owner_count_[facet]++;
      require(slot < 2, "Mesh: facet with more than two owners");
      facet_owners_[facet][slot] = FacetOwner{static_cast<int>(e), f, sign};
    }
  }
  for (int f = 0; f < nf; ++f) {
    if (facet_owner_count_[f] != 1) continue;
    // Mark the facet and every sub-entity of it.
    const FacetOwner& o = facet_owners_[f][0];
    const unsigned fmask = facet_mask(o.local_facet);
    for (unsigned sub = fmask; sub != 0; sub = (sub - 1) & fmask) {
      const int d = std::popcount(sub) - 1;
      boundary_[d][entity_of(o.element, sub)] = 1;
    }
  }
}

FacetFrame Mesh::facet_frame(int facet) const {
  const auto v = entity_vertices(dim_ - 1, facet);
  FacetFrame frame;
  if (dim_ == 2) {
    const Vec edge = vertices_[v[1]] - vertices_[v[0]];
    frame.measure = edge.norm();
    Vec t = edge / frame.measure;
    Vec n(2);
    n << t(1), -t(0);
    frame.normal = n;
    frame.tangents = {t};
  } else {
    const Eigen::Vector3d a = vertices_[v[1]] - vertices_[v[0]];
    const Eigen::Vector3d b = vertices_[v[2]] - vertices_[v[0]];
    const Eigen::Vector3d c = a.cross(b);
    frame.measure = 0.5 * c.norm();
    const Eigen::Vector3d n = c.normalized();
    const Eigen::Vector3d t1 = a.normalized();
    const Eigen::Vector3d t2 = n.cross(t1);
    frame.normal = n;
    frame.tangents = {Vec(t1), Vec(t2)};
  }
  return frame;
}

std::vector<Vec> Mesh::reference_vertices(unsigned mask) const {
  std::vector<Vec> out;
  for (int i = 0; i <= dim_; ++i) {
    if (!(mask & (1u << i))) continue;
    Vec x = Vec::Zero(dim_);
    if (i > 0) x(i - 1) = 1.0;
    out.push_back(x);
  }
  return out;
}

void Mesh::write_text(std::ostream& out) const {
  out << "dim " << dim_ << "\nvertices " << vertices_.size() << "\n";
  for (const auto& x : vertices_) {
    for (int i = 0; i < dim_; ++i) out << (i ? " " : "") << x(i);
    out << "\n";
  }
  out << "elements " << elements_.size() << "\n";
  for (const auto& e : elements_) {
    for (int i = 0; i <= dim_; ++i) out << (i ? " " : "") << e[i];
    out << "\n";
  }
}

}  // namespace hhj
