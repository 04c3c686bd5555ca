#include "hhj/fespace.hpp"

#include "hhj/quadrature.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <bit>
#include <map>
#include <set>

namespace hhj {

std::string to_string(Family family) {
  switch (family) {
    case Family::LagrangeH1: return "lagrange_h1";
    case Family::NedelecHCurl: return "nedelec_hcurl";
    case Family::BdmHDiv: return "bdm_hdiv";
    case Family::StressNT: return "stress_nt";
    case Family::DgL2ZeroMean: return "dg_l2_zeromean";
  }
  return "unknown";
}

int min_order(Family family) {
  switch (family) {
    case Family::DgL2ZeroMean: return 0;
    default: return 1;
  }
}

int max_order(Family family, int dim) {
  switch (family) {
    case Family::LagrangeH1: return 5;
    case Family::NedelecHCurl: return dim == 3 ? 3 : -1;
    case Family::BdmHDiv: return dim == 2 ? 4 : 3;
    case Family::StressNT: return dim == 2 ? 3 : 2;
    case Family::DgL2ZeroMean: return dim == 2 ? 3 : 2;
  }
  return -1;
}

namespace {

struct DofKey {
  int entity_dim = 0;
  int entity_id = 0;
  int index = 0;
  auto operator<=>(const DofKey&) const = default;
};

/// A block of DOF functionals that share quadrature points. Functional i acts
/// on a field F as sum_{q,c} weights(i, q * ncomp + c) F_c(x_q).
struct Group {
  std::vector<LongVec> points;
  Eigen::MatrixXd weights;
  std::vector<DofKey> keys;
  std::vector<char> is_dof;    ///< 0: constraint that must vanish (not a DOF)
  std::vector<char> boundary;  ///< DOF eliminated by the essential condition
};

std::vector<double> normalized_weights(const QuadratureRule& rule) {
  double total = 0.0;
  for (double w : rule.weights) total += w;
  std::vector<double> out(rule.weights);
  for (double& w : out) w /= total;
  return out;
}

/// Orthonormal basis of the complement of range(rows^T): the kernel of `rows`.
Eigen::MatrixXd kernel_basis(const Eigen::MatrixXd& rows, const std::string& what) {
  const auto n = rows.cols();
  const auto r = rows.rows();
  if (r == 0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(rows.transpose());
  qr.setThreshold(1e-10);
  require(qr.rank() == r, what + ": entity functionals are linearly dependent");
  const Eigen::MatrixXd q = qr.householderQ();
  return q.rightCols(n - r);
}

void multi_indices(int parts, int total, std::vector<int>& current,
                   std::vector<std::vector<int>>& out) {
  if (static_cast<int>(current.size()) == parts - 1) {
    current.push_back(total);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (int a = total; a >= 0; --a) {
    current.push_back(a);
    multi_indices(parts, total - a, current, out);
    current.pop_back();
  }
}

/// Raw basis polynomials sum_i basis(i, j) m_i (or a partial derivative of
/// them) at the points, evaluated in extended precision.
LongMatrix raw_table(const MonomialSet& monomials, const Eigen::MatrixXd& basis,
                     const std::vector<LongVec>& points, const std::array<int, 3>& order) {
  LongMatrix m(static_cast<Eigen::Index>(points.size()), monomials.size());
  for (std::size_t q = 0; q < points.size(); ++q)
    for (int k = 0; k < monomials.size(); ++k) {
      long double value = 1.0L;
      for (int i = 0; i < monomials.dim() && value != 0.0L; ++i) {
        const int e = monomials.exponent(k)[i];
        const int o = order[i];
        if (o > e) {
          value = 0.0L;
          break;
        }
        for (int r = 0; r < o; ++r) value *= e - r;
        for (int r = 0; r < e - o; ++r) value *= points[q](i);
      }
      m(static_cast<Eigen::Index>(q), k) = value;
    }
  return m * basis.cast<long double>();
}

Eigen::MatrixXd raw_table(const MonomialSet& monomials, const Eigen::MatrixXd& basis,
                          const std::vector<Vec>& points, const std::array<int, 3>& order) {
  std::vector<LongVec> extended;
  extended.reserve(points.size());
  for (const Vec& x : points) extended.push_back(x.cast<long double>());
  return raw_table(monomials, basis, extended, order).cast<double>();
}

int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  int r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

std::vector<LongVec> extended_entity_points(const Mesh& mesh, unsigned mask,
                                            const QuadratureRule& rule) {
  const std::vector<Vec> corners = mesh.reference_vertices(mask);
  std::vector<LongVec> out;
  out.reserve(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const auto lambda = rule.extended_barycentric(q);
    LongVec x = LongVec::Zero(mesh.dim());
    for (std::size_t i = 0; i < corners.size(); ++i) x += lambda(i) * corners[i].cast<long double>();
    out.push_back(x);
  }
  return out;
}

std::vector<Vec> entity_points(const Mesh& mesh, unsigned mask, const QuadratureRule& rule) {
  std::vector<Vec> out;
  for (const LongVec& x : extended_entity_points(mesh, mask, rule)) out.push_back(x.cast<double>());
  return out;
}

struct FESpace::Functionals {
  std::vector<Group> groups;
};

FESpace::FESpace(std::shared_ptr<const Mesh> mesh, Family family, int order)
    : mesh_(std::move(mesh)), family_(family), order_(order) {
  require(mesh_ != nullptr, "FESpace: null mesh");
  const int d = mesh_->dim();
  const int hi = max_order(family, d);
  require(hi >= 0, "FESpace: family " + to_string(family) + " is not available in " +
                       std::to_string(d) + "D");
  require(order >= min_order(family) && order <= hi,
          "FESpace: unsupported order " + std::to_string(order) + " for " + to_string(family));
  monomials_ = MonomialSet(d, order);
  // Orthonormal raw polynomials keep kernel complements well scaled and the
  // local coefficients of order one, so traces that vanish in exact
  // arithmetic stay at rounding level.
  raw_basis_ = family == Family::DgL2ZeroMean
                   ? Eigen::MatrixXd::Identity(monomials_.size(), monomials_.size())
                   : orthonormal_basis(d, order).coefficients;

  switch (family) {
    case Family::LagrangeH1:
    case Family::DgL2ZeroMean:
      num_raw_components_ = num_components_ = 1;
      embedding_ = Eigen::MatrixXd::Identity(1, 1);
      break;
    case Family::NedelecHCurl:
    case Family::BdmHDiv:
      num_raw_components_ = num_components_ = d;
      embedding_ = Eigen::MatrixXd::Identity(d, d);
      break;
    case Family::StressNT: {
      num_components_ = d * d;
      num_raw_components_ = d * d - 1;
      embedding_ = Eigen::MatrixXd::Zero(num_components_, num_raw_components_);
      // Diagonal part: e_ii - e_dd for i < d - 1 ... expressed as (i,i) - (last,last).
      int b = 0;
      for (int i = 0; i + 1 < d; ++i, ++b) {
        embedding_(i * d + i, b) = 1.0;
        embedding_((d - 1) * d + (d - 1), b) = -1.0;
      }
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c)
          if (r != c) embedding_(r * d + c, b++) = 1.0;
      break;
    }
  }

  const int nraw = num_raw_components_ * monomials_.size();
  const int ne = mesh_->num_elements();
  coefficients_.resize(ne);
  extended_coefficients_.resize(ne);

  if (family == Family::DgL2ZeroMean) {
    num_local_ = nraw;
    element_dofs_.resize(static_cast<std::size_t>(ne) * num_local_);
    for (int e = 0; e < ne; ++e) {
      coefficients_[e] = Eigen::MatrixXd::Identity(nraw, nraw);
      extended_coefficients_[e] = LongMatrix::Identity(nraw, nraw);
      for (int j = 0; j < num_local_; ++j) element_dofs_[e * num_local_ + j] = e * num_local_ + j;
    }
    num_dofs_ = ne * num_local_;
    layout_.per_cell = num_local_;
    return;
  }

  if (family == Family::NedelecHCurl) build_face_fields();

  std::map<DofKey, int> numbering;
  std::set<DofKey> constrained;
  for (int e = 0; e < ne; ++e) {
    const Functionals f = element_functionals(e);
    std::vector<LongMatrix> blocks;
    Eigen::Index total_rows = 0;
    for (const auto& g : f.groups) {
      blocks.push_back(g.weights.cast<long double>() * raw_values(g.points));
      total_rows += blocks.back().rows();
    }
    require(total_rows == nraw, "FESpace: element " + std::to_string(e) + " has " +
                                    std::to_string(total_rows) + " functionals for " +
                                    std::to_string(nraw) + " raw functions");
    LongMatrix vandermonde(nraw, nraw);
    Eigen::Index row = 0;
    for (const auto& b : blocks) {
      vandermonde.middleRows(row, b.rows()) = b;
      row += b.rows();
    }
    Eigen::FullPivLU<LongMatrix> lu(vandermonde);
    require(lu.isInvertible(), "FESpace(" + to_string(family) +
                                   "): singular local DOF system on element " +
                                   std::to_string(e));
    const LongMatrix inverse = lu.inverse();

    std::vector<int> keep;
    std::vector<int> dofs;
    int col = 0;
    for (const auto& g : f.groups) {
      for (std::size_t i = 0; i < g.keys.size(); ++i, ++col) {
        if (!g.is_dof[i]) continue;
        keep.push_back(col);
        if (g.boundary[i]) {
          constrained.insert(g.keys[i]);
          dofs.push_back(-1);
          continue;
        }
        auto [it, inserted] = numbering.try_emplace(g.keys[i], static_cast<int>(numbering.size()));
        dofs.push_back(it->second);
      }
    }
    if (e == 0) {
      num_local_ = static_cast<int>(keep.size());
      element_dofs_.reserve(static_cast<std::size_t>(ne) * num_local_);
      std::array<int, 4> per_dim{0, 0, 0, 0};
      for (const auto& g : f.groups)
        for (std::size_t i = 0; i < g.keys.size(); ++i)
          if (g.is_dof[i]) ++per_dim[g.keys[i].entity_dim];
      std::array<int, 4> counts{};
      for (int k = 0; k <= d; ++k) counts[k] = per_dim[k] / binomial(d + 1, k + 1);
      layout_.per_vertex = counts[0];
      layout_.per_edge = counts[1];
      if (d == 2) {
        layout_.per_cell = counts[2];
      } else {
        layout_.per_face = counts[2];
        layout_.per_cell = counts[3];
      }
    }
    require(static_cast<int>(keep.size()) == num_local_, "FESpace: inconsistent local dimension");
    LongMatrix c(nraw, num_local_);
    for (int j = 0; j < num_local_; ++j) c.col(j) = inverse.col(keep[j]);
    coefficients_[e] = c.cast<double>();
    extended_coefficients_[e] = std::move(c);
    element_dofs_.insert(element_dofs_.end(), dofs.begin(), dofs.end());
  }
  num_dofs_ = static_cast<int>(numbering.size());
  num_constrained_ = static_cast<int>(constrained.size());
}

LongMatrix FESpace::raw_values(const std::vector<LongVec>& points) const {
  const LongMatrix m = raw_table(monomials_, raw_basis_, points, {0, 0, 0});
  const int nm = monomials_.size();
  const int nc = num_components_;
  LongMatrix r = LongMatrix::Zero(static_cast<Eigen::Index>(points.size()) * nc,
                                  num_raw_components_ * nm);
  for (std::size_t q = 0; q < points.size(); ++q)
    for (int c = 0; c < nc; ++c)
      for (int b = 0; b < num_raw_components_; ++b) {
        const double e = embedding_(c, b);
        if (e == 0.0) continue;
        r.row(q * nc + c).segment(b * nm, nm) = static_cast<long double>(e) * m.row(q);
      }
  return r;
}

void FESpace::build_face_fields() {
  const Mesh& mesh = *mesh_;
  const int p = order_;
  const OrthonormalBasis& face_basis = orthonormal_basis(2, p);
  const int nmf = static_cast<int>(face_basis.coefficients.cols());
  const QuadratureRule& edge_rule = simplex_rule(1, 2 * p + 2);
  const QuadratureRule& face_rule = simplex_rule(2, 2 * p + 2);
  const std::vector<double> edge_w = normalized_weights(edge_rule);
  const Eigen::MatrixXd edge_q = orthonormal_basis(1, p).values(edge_rule.points);
  const Eigen::MatrixXd face_m = face_basis.values(face_rule.points);
  const std::array<Vec, 3> corners{Vec::Zero(2), Vec::Unit(2, 0), Vec::Unit(2, 1)};
  constexpr std::array<std::array<int, 2>, 3> edges{{{0, 1}, {0, 2}, {1, 2}}};

  face_fields_.resize(mesh.num_entities(2));
  for (int face = 0; face < mesh.num_entities(2); ++face) {
    const auto v = mesh.entity_vertices(2, face);
    const FacetFrame frame = mesh.facet_frame(face);
    Eigen::MatrixXd rows(3 * (p + 1), 2 * nmf);
    for (int k = 0; k < 3; ++k) {
      const auto [a, b] = edges[k];
      const Vec tangent = (mesh.vertex(v[b]) - mesh.vertex(v[a])).normalized();
      std::vector<Vec> pts;
      for (const auto& s : edge_rule.points) pts.push_back((1.0 - s(0)) * corners[a] + s(0) * corners[b]);
      const Eigen::MatrixXd m = face_basis.values(pts);
      for (int j = 0; j <= p; ++j)
        for (int c = 0; c < 2; ++c) {
          const double tc = frame.tangents[c].dot(tangent);
          for (int mi = 0; mi < nmf; ++mi) {
            double acc = 0.0;
            for (std::size_t q = 0; q < pts.size(); ++q) acc += edge_w[q] * edge_q(q, j) * m(q, mi);
            rows(k * (p + 1) + j, c * nmf + mi) = acc * tc;
          }
        }
    }
    const Eigen::MatrixXd kernel = kernel_basis(rows, "Nedelec face");
    Eigen::MatrixXd values(face_rule.size() * 3, kernel.cols());
    for (std::size_t q = 0; q < face_rule.size(); ++q)
      for (int comp = 0; comp < 3; ++comp)
        for (Eigen::Index j = 0; j < kernel.cols(); ++j) {
          double acc = 0.0;
          for (int c = 0; c < 2; ++c)
            for (int mi = 0; mi < nmf; ++mi)
              acc += kernel(c * nmf + mi, j) * face_m(q, mi) * frame.tangents[c](comp);
          values(q * 3 + comp, j) = acc;
        }
    face_fields_[face] = std::move(values);
  }
}

FESpace::Functionals FESpace::element_functionals(int e) const {
  const Mesh& mesh = *mesh_;
  const int d = mesh.dim();
  const int nc = num_components_;
  Functionals out;

  auto facet_group = [&](int local_facet, int poly_degree, auto&& covectors, auto&& classify) {
    // covectors: list of out-component covectors; classify(i_cov, j_poly) -> (index, is_dof)
    const int facet = mesh.facet_of(e, local_facet);
    const QuadratureRule& rule = simplex_rule(d - 1, 2 * order_ + 2);
    const std::vector<double> w = normalized_weights(rule);
    const Eigen::MatrixXd q = orthonormal_basis(d - 1, poly_degree).values(rule.points);
    Group g;
    g.points = extended_entity_points(mesh, mesh.facet_mask(local_facet), rule);
    const auto np = static_cast<Eigen::Index>(rule.size());
    const auto nq = q.cols();
    g.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(covectors.size()) * nq, np * nc);
    const bool on_boundary = mesh.on_boundary(d - 1, facet);
    for (std::size_t i = 0; i < covectors.size(); ++i)
      for (Eigen::Index j = 0; j < nq; ++j) {
        const auto row = static_cast<Eigen::Index>(i) * nq + j;
        for (Eigen::Index k = 0; k < np; ++k)
          for (int c = 0; c < nc; ++c) g.weights(row, k * nc + c) = w[k] * q(k, j) * covectors[i](c);
        const auto [index, is_dof, essential] = classify(static_cast<int>(i), static_cast<int>(j));
        g.keys.push_back({d - 1, facet, index});
        g.is_dof.push_back(is_dof);
        g.boundary.push_back(essential && on_boundary);
      }
    out.groups.push_back(std::move(g));
  };

  switch (family_) {
    case Family::LagrangeH1: {
      std::vector<std::vector<int>> alphas;
      std::vector<int> current;
      multi_indices(d + 1, order_, current, alphas);
      Group g;
      g.weights = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(alphas.size()),
                                            static_cast<Eigen::Index>(alphas.size()));
      for (const auto& alpha : alphas) {
        LongVec x(d);
        for (int i = 0; i < d; ++i) x(i) = static_cast<long double>(alpha[i + 1]) / order_;
        g.points.push_back(x);
        unsigned mask = 0;
        int index = 0;
        for (int i = 0; i <= d; ++i)
          if (alpha[i] > 0) {
            mask |= 1u << i;
            index = index * (order_ + 1) + alpha[i];
          }
        const int edim = std::popcount(mask) - 1;
        const int id = mesh.entity_of(e, mask);
        g.keys.push_back({edim, id, index});
        g.is_dof.push_back(1);
        g.boundary.push_back(edim < d && mesh.on_boundary(edim, id));
      }
      out.groups.push_back(std::move(g));
      return out;  // nodal functionals are complete
    }
    case Family::BdmHDiv: {
      for (int f = 0; f <= d; ++f) {
        const FacetFrame frame = mesh.facet_frame(mesh.facet_of(e, f));
        std::vector<Vec> cov{frame.normal};
        facet_group(f, order_, cov, [](int, int j) { return std::tuple{j, true, true}; });
      }
      break;
    }
    case Family::StressNT: {
      const int low = polynomial_dimension(d - 1, order_ - 1);
      for (int f = 0; f <= d; ++f) {
        const FacetFrame frame = mesh.facet_frame(mesh.facet_of(e, f));
        std::vector<Eigen::VectorXd> cov;
        for (const auto& t : frame.tangents) {
          Eigen::VectorXd tn(d * d);
          for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) tn(r * d + c) = t(r) * frame.normal(c);
          cov.push_back(tn);
        }
        facet_group(f, order_, cov, [low](int i, int j) {
          // Moments against P^{m-1}(F) are shared DOFs; the orthogonal
          // top-degree moments must vanish.
          return std::tuple{i * low + j, j < low, false};
        });
      }
      break;
    }
    case Family::NedelecHCurl: {
      const QuadratureRule& rule = simplex_rule(1, 2 * order_ + 2);
      const std::vector<double> w = normalized_weights(rule);
      const Eigen::MatrixXd q = orthonormal_basis(1, order_).values(rule.points);
      for (int a = 0; a <= d; ++a)
        for (int b = a + 1; b <= d; ++b) {
          const unsigned mask = (1u << a) | (1u << b);
          const int edge = mesh.entity_of(e, mask);
          const auto ev = mesh.entity_vertices(1, edge);
          const Vec t = (mesh.vertex(ev[1]) - mesh.vertex(ev[0])).normalized();
          Group g;
          g.points = extended_entity_points(mesh, mask, rule);
          const auto np = static_cast<Eigen::Index>(rule.size());
          g.weights = Eigen::MatrixXd::Zero(order_ + 1, np * nc);
          for (int j = 0; j <= order_; ++j) {
            for (Eigen::Index k = 0; k < np; ++k)
              for (int c = 0; c < nc; ++c) g.weights(j, k * nc + c) = w[k] * q(k, j) * t(c);
            g.keys.push_back({1, edge, j});
            g.is_dof.push_back(1);
            g.boundary.push_back(mesh.on_boundary(1, edge));
          }
          out.groups.push_back(std::move(g));
        }
      const QuadratureRule& face_rule = simplex_rule(2, 2 * order_ + 2);
      const std::vector<double> fw = normalized_weights(face_rule);
      for (int f = 0; f <= d; ++f) {
        const int face = mesh.facet_of(e, f);
        const Eigen::MatrixXd& fields = face_fields_[face];
        if (fields.cols() == 0) continue;
        Group g;
        g.points = extended_entity_points(mesh, mesh.facet_mask(f), face_rule);
        const auto np = static_cast<Eigen::Index>(face_rule.size());
        g.weights = Eigen::MatrixXd::Zero(fields.cols(), np * nc);
        for (Eigen::Index j = 0; j < fields.cols(); ++j) {
          for (Eigen::Index k = 0; k < np; ++k)
            for (int c = 0; c < nc; ++c) g.weights(j, k * nc + c) = fw[k] * fields(k * nc + c, j);
          g.keys.push_back({2, face, static_cast<int>(j)});
          g.is_dof.push_back(1);
          g.boundary.push_back(mesh.on_boundary(2, face));
        }
        out.groups.push_back(std::move(g));
      }
      break;
    }
    case Family::DgL2ZeroMean:
      break;
  }

  // Interior moments against the kernel of all entity functionals.
  Eigen::Index nrows = 0;
  for (const auto& g : out.groups) nrows += g.weights.rows();
  const int nraw = num_raw_components_ * monomials_.size();
  Eigen::MatrixXd entity_rows(nrows, nraw);
  Eigen::Index row = 0;
  for (const auto& g : out.groups) {
    entity_rows.middleRows(row, g.weights.rows()) =
        (g.weights.cast<long double>() * raw_values(g.points)).cast<double>();
    row += g.weights.rows();
  }
  const Eigen::MatrixXd kernel =
      kernel_basis(entity_rows, to_string(family_) + " element " + std::to_string(e));
  if (kernel.cols() > 0) {
    const QuadratureRule& rule = simplex_rule(d, 2 * order_);
    Group g;
    g.points = rule.extended_points;
    const Eigen::MatrixXd r = raw_values(rule.extended_points).cast<double>();
    Eigen::VectorXd w(r.rows());
    for (std::size_t k = 0; k < rule.size(); ++k)
      for (int c = 0; c < nc; ++c) w(k * nc + c) = rule.weights[k];
    g.weights = kernel.transpose() * r.transpose() * w.asDiagonal();
    for (Eigen::Index j = 0; j < kernel.cols(); ++j) {
      g.keys.push_back({d, e, static_cast<int>(j)});
      g.is_dof.push_back(1);
      g.boundary.push_back(0);
    }
    out.groups.push_back(std::move(g));
  }
  return out;
}

ReferenceTable FESpace::reference_table(std::vector<Vec> points, int derivatives) const {
  ReferenceTable t;
  t.points = std::move(points);
  t.derivatives = derivatives;
  const int d = dim();
  t.values = raw_table(monomials_, raw_basis_, t.points, {0, 0, 0});
  if (derivatives >= 1)
    for (int i = 0; i < d; ++i) {
      std::array<int, 3> o{0, 0, 0};
      o[i] = 1;
      t.first.push_back(raw_table(monomials_, raw_basis_, t.points, o));
    }
  if (derivatives >= 2)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        std::array<int, 3> o{0, 0, 0};
        ++o[i];
        ++o[j];
        t.second.push_back(raw_table(monomials_, raw_basis_, t.points, o));
      }
  return t;
}

Tabulation FESpace::tabulate(int e, const std::vector<Vec>& points, int derivatives) const {
  return tabulate(e, reference_table(points, derivatives));
}

Tabulation FESpace::tabulate(int e, const ReferenceTable& table) const {
  const int d = dim();
  const int nc = num_components_;
  const int nm = monomials_.size();
  const Mat& ainv = mesh_->element_geometry(e).inverse_jacobian;
  const Eigen::MatrixXd& coeff = coefficients_[e];
  Tabulation tab;
  tab.num_points = static_cast<int>(table.points.size());
  tab.num_local = num_local_;
  tab.num_components = nc;
  tab.dim = d;
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(tab.num_points, num_local_);
  tab.values.assign(nc, zero);
  if (table.derivatives >= 1) tab.gradients.assign(static_cast<std::size_t>(nc) * d, zero);
  if (table.derivatives >= 2) tab.hessians.assign(static_cast<std::size_t>(nc) * d * d, zero);

  for (int b = 0; b < num_raw_components_; ++b) {
    const auto cb = coeff.middleRows(b * nm, nm);
    const Eigen::MatrixXd val = table.values * cb;
    std::vector<Eigen::MatrixXd> grad;
    std::vector<Eigen::MatrixXd> hess;
    if (table.derivatives >= 1) {
      std::vector<Eigen::MatrixXd> ref;
      for (int j = 0; j < d; ++j) ref.push_back(table.first[j] * cb);
      for (int i = 0; i < d; ++i) {
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(tab.num_points, num_local_);
        for (int j = 0; j < d; ++j) g += ainv(j, i) * ref[j];
        grad.push_back(std::move(g));
      }
    }
    if (table.derivatives >= 2) {
      std::vector<Eigen::MatrixXd> ref;
      for (int j = 0; j < d * d; ++j) ref.push_back(table.second[j] * cb);
      for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) {
          Eigen::MatrixXd h = Eigen::MatrixXd::Zero(tab.num_points, num_local_);
          for (int j = 0; j < d; ++j)
            for (int l = 0; l < d; ++l) h += ainv(j, i) * ainv(l, k) * ref[j * d + l];
          hess.push_back(std::move(h));
        }
    }
    for (int c = 0; c < nc; ++c) {
      const double s = embedding_(c, b);
      if (s == 0.0) continue;
      tab.values[c] += s * val;
      if (table.derivatives >= 1)
        for (int i = 0; i < d; ++i) tab.gradients[c * d + i] += s * grad[i];
      if (table.derivatives >= 2)
        for (int i = 0; i < d * d; ++i) tab.hessians[c * d * d + i] += s * hess[i];
    }
  }
  return tab;
}

ExtendedReferenceTable FESpace::extended_reference_table(std::vector<LongVec> points) const {
  ExtendedReferenceTable t;
  t.points = std::move(points);
  t.values = raw_table(monomials_, raw_basis_, t.points, {0, 0, 0});
  for (int i = 0; i < dim(); ++i) {
    std::array<int, 3> o{0, 0, 0};
    o[i] = 1;
    t.first.push_back(raw_table(monomials_, raw_basis_, t.points, o));
  }
  return t;
}

ExtendedTabulation FESpace::tabulate_extended(int e, const ExtendedReferenceTable& table) const {
  const int d = dim();
  const int nc = num_components_;
  const int nm = monomials_.size();
  const LongMatrix jac = mesh_->element_geometry(e).jacobian.cast<long double>();
  const LongMatrix ainv = jac.inverse();
  const LongMatrix& coeff = extended_coefficients_[e];
  ExtendedTabulation tab;
  tab.num_points = static_cast<int>(table.points.size());
  tab.num_local = num_local_;
  tab.num_components = nc;
  tab.dim = d;
  const LongMatrix zero = LongMatrix::Zero(tab.num_points, num_local_);
  tab.values.assign(nc, zero);
  tab.gradients.assign(static_cast<std::size_t>(nc) * d, zero);
  for (int b = 0; b < num_raw_components_; ++b) {
    const auto cb = coeff.middleRows(b * nm, nm);
    const LongMatrix val = table.values * cb;
    std::vector<LongMatrix> ref;
    for (int j = 0; j < d; ++j) ref.push_back(table.first[j] * cb);
    for (int c = 0; c < nc; ++c) {
      const auto s = static_cast<long double>(embedding_(c, b));
      if (s == 0.0L) continue;
      tab.values[c] += s * val;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) tab.gradients[c * d + i] += (s * ainv(j, i)) * ref[j];
    }
  }
  return tab;
}

Eigen::VectorXd FESpace::apply_functionals(int e, const Field& field) const {
  require(family_ != Family::DgL2ZeroMean, "apply_functionals: not defined for the DG family");
  const Functionals f = element_functionals(e);
  const ElementGeometry& geo = mesh_->element_geometry(e);
  const int nc = num_components_;
  Eigen::VectorXd out(num_local_);
  int j = 0;
  for (const auto& g : f.groups) {
    Eigen::VectorXd values(static_cast<Eigen::Index>(g.points.size()) * nc);
    for (std::size_t q = 0; q < g.points.size(); ++q)
      values.segment(static_cast<Eigen::Index>(q) * nc, nc) =
          field(geo.map(g.points[q].cast<double>()));
    const Eigen::VectorXd moments = g.weights * values;
    for (std::size_t i = 0; i < g.keys.size(); ++i)
      if (g.is_dof[i]) out(j++) = moments(static_cast<Eigen::Index>(i));
  }
  return out;
}

Eigen::VectorXd FEFunction::local(int e) const {
  const auto dofs = space->element_dofs(e);
  Eigen::VectorXd out(dofs.size());
  for (std::size_t j = 0; j < dofs.size(); ++j) out(j) = dofs[j] >= 0 ? coefficients(dofs[j]) : 0.0;
  return out;
}

Eigen::VectorXd FEFunction::value(int e, const Vec& x) const {
  const Vec xhat = space->mesh().element_geometry(e).to_reference(x);
  const Tabulation tab = space->tabulate(e, std::vector<Vec>{xhat}, 0);
  const Eigen::VectorXd c = local(e);
  Eigen::VectorXd out(tab.num_components);
  for (int k = 0; k < tab.num_components; ++k) out(k) = tab.value(k).row(0).dot(c);
  return out;
}

FEFunction interpolate(const std::shared_ptr<const FESpace>& space, const Field& field) {
  FEFunction u(space);
  const Mesh& mesh = space->mesh();
  if (space->family() != Family::DgL2ZeroMean) {
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const Eigen::VectorXd values = space->apply_functionals(e, field);
      const auto dofs = space->element_dofs(e);
      for (std::size_t j = 0; j < dofs.size(); ++j)
        if (dofs[j] >= 0) u.coefficients(dofs[j]) = values(static_cast<Eigen::Index>(j));
    }
    return u;
  }
  const int p = space->order();
  const QuadratureRule& rule = simplex_rule(mesh.dim(), std::min(2 * p + 8, kMaxQuadratureDegree));
  const ReferenceTable table = space->reference_table(rule.points, 0);
  double mean = 0.0;
  double measure = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry& geo = mesh.element_geometry(e);
    const Tabulation tab = space->tabulate(e, table);
    const Eigen::MatrixXd& v = tab.value(0);
    Eigen::VectorXd w(rule.size());
    Eigen::VectorXd f(rule.size());
    for (std::size_t q = 0; q < rule.size(); ++q) {
      w(q) = rule.weights[q] * std::abs(geo.determinant);
      f(q) = field(geo.map(rule.points[q]))(0);
    }
    const Eigen::MatrixXd gram = v.transpose() * w.asDiagonal() * v;
    const Eigen::VectorXd c = gram.ldlt().solve(v.transpose() * w.asDiagonal() * f);
    const auto dofs = space->element_dofs(e);
    for (std::size_t j = 0; j < dofs.size(); ++j) u.coefficients(dofs[j]) = c(j);
    mean += w.dot(v * c);
    measure += w.sum();
  }
  mean /= measure;
  // The first monomial is the constant, so shifting it removes the mean.
  for (int e = 0; e < mesh.num_elements(); ++e) u.coefficients(space->element_dofs(e)[0]) -= mean;
  return u;
}

}  // namespace hhj
