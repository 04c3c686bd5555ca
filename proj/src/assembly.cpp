#include "hhj/assembly.hpp"

#include "hhj/parallel.hpp"
#include "hhj/quadrature.hpp"
#include "integration.hpp"

#include <Eigen/LU>

#include <cmath>

namespace hhj {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace detail;

/// Facet contribution of one owner to b(tau, v): sum over facet points of
/// tau_nt . v_t (primal) or -tau_nn v_n (dual), with n the owner's outward normal.
MatrixXd facet_b(const Tabulation& sig, const CurlTabulation& curl, const Vec& n,
                 const VectorXd& w, Representation rep) {
  const int d = sig.dim;
  const auto np = sig.num_points;
  std::vector<MatrixXd> tn(d, MatrixXd::Zero(np, sig.num_local));
  MatrixXd nn = MatrixXd::Zero(np, sig.num_local);
  for (int r = 0; r < d; ++r) {
    for (int s = 0; s < d; ++s) tn[r] += n(s) * sig.value(r * d + s);
    nn += n(r) * tn[r];
  }
  MatrixXd vn = MatrixXd::Zero(np, curl.velocity[0].cols());
  for (int r = 0; r < d; ++r) vn += n(r) * curl.velocity[r];
  MatrixXd out = -(vn.transpose() * w.asDiagonal() * nn);
  if (rep == Representation::Primal)
    for (int r = 0; r < d; ++r) out += curl.velocity[r].transpose() * w.asDiagonal() * tn[r];
  return out;
}

}  // namespace

int form_degree(int k) { return 2 * k + 2; }

bool supported_order(int dim, int k) {
  if (dim == 2) return k >= 2 && k <= 4;
  if (dim == 3) return k >= 2 && k <= 3;
  return false;
}

CurlTabulation curl_of(const Tabulation& tab, bool with_gradient) {
  require(!tab.gradients.empty(), "curl_of: tabulation lacks first derivatives");
  require(!with_gradient || !tab.hessians.empty(), "curl_of: tabulation lacks second derivatives");
  const int d = tab.dim;
  CurlTabulation out;
  out.dim = d;
  if (d == 2) {
    require(tab.num_components == 1, "curl_of: 2D stream functions are scalar");
    out.velocity = {-tab.gradient(0, 1), tab.gradient(0, 0)};
    if (with_gradient)
      for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k)
          out.gradient.push_back(i == 0 ? MatrixXd(-tab.hessian(0, 1, k))
                                        : MatrixXd(tab.hessian(0, 0, k)));
    return out;
  }
  require(tab.num_components == 3, "curl_of: 3D stream functions are vector valued");
  // (curl phi)_i = d_j phi_k - d_k phi_j for (i, j, k) cyclic
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const int k = (i + 2) % 3;
    out.velocity.push_back(tab.gradient(k, j) - tab.gradient(j, k));
  }
  if (with_gradient)
    for (int i = 0; i < 3; ++i) {
      const int j = (i + 1) % 3;
      const int k = (i + 2) % 3;
      for (int l = 0; l < 3; ++l) out.gradient.push_back(tab.hessian(k, j, l) - tab.hessian(j, k, l));
    }
  return out;
}

SparseMatrix assemble_a(const FESpace& sigma, double nu, int threads) {
  require(sigma.family() == Family::StressNT, "assemble_a: expects the stress space");
  require(nu > 0.0, "assemble_a: nu must be positive");
  const Mesh& mesh = sigma.mesh();
  const QuadratureRule& rule = simplex_rule(mesh.dim(), form_degree(sigma.order() + 1));
  const ReferenceTable table = sigma.reference_table(rule.points, 0);
  std::vector<MatrixXd> local(mesh.num_elements());
  parallel_for(mesh.num_elements(), threads, [&](int e) {
    const Tabulation tab = sigma.tabulate(e, table);
    const VectorXd w = volume_weights(rule, mesh.element_geometry(e)) / nu;
    MatrixXd m = MatrixXd::Zero(tab.num_local, tab.num_local);
    for (int c = 0; c < tab.num_components; ++c) m += tab.value(c).transpose() * w.asDiagonal() * tab.value(c);
    local[e] = std::move(m);
  });
  std::vector<Triplet> triplets;
  for (int e = 0; e < mesh.num_elements(); ++e)
    scatter(triplets, sigma.element_dofs(e), sigma.element_dofs(e), local[e]);
  return from_triplets(sigma.num_dofs(), sigma.num_dofs(), triplets);
}

SparseMatrix assemble_b(const FESpace& sigma, const FESpace& stream, Representation rep,
                        int threads) {
  require(sigma.family() == Family::StressNT, "assemble_b: first space must be the stress space");
  const int d = sigma.dim();
  require(stream.family() == (d == 2 ? Family::LagrangeH1 : Family::NedelecHCurl),
          "assemble_b: stream space has the wrong family");
  require(&sigma.mesh() == &stream.mesh(), "assemble_b: spaces live on different meshes");
  require(sigma.order() == stream.order() - 1,
          "assemble_b: stress order must be one less than the stream order");
  const Mesh& mesh = sigma.mesh();
  const int deg = form_degree(stream.order());
  const QuadratureRule& rule = simplex_rule(d, deg);
  const bool primal = rep == Representation::Primal;
  const ReferenceTable sig_table = sigma.reference_table(rule.points, primal ? 0 : 1);
  const ReferenceTable str_table = stream.reference_table(rule.points, primal ? 2 : 1);

  std::vector<MatrixXd> local(mesh.num_elements());
  parallel_for(mesh.num_elements(), threads, [&](int e) {
    const Tabulation sig = sigma.tabulate(e, sig_table);
    const CurlTabulation curl = curl_of(stream.tabulate(e, str_table), primal);
    const VectorXd w = volume_weights(rule, mesh.element_geometry(e));
    MatrixXd m = MatrixXd::Zero(stream.num_local(), sigma.num_local());
    if (primal) {
      for (int c = 0; c < d * d; ++c) m -= curl.gradient[c].transpose() * w.asDiagonal() * sig.value(c);
    } else {
      for (int r = 0; r < d; ++r) {
        MatrixXd div = MatrixXd::Zero(sig.num_points, sig.num_local);
        for (int s = 0; s < d; ++s) div += sig.gradient(r * d + s, s);
        m += curl.velocity[r].transpose() * w.asDiagonal() * div;
      }
    }
    local[e] = std::move(m);
  });

  const QuadratureRule& frule = simplex_rule(d - 1, deg);
  const auto sig_facet = facet_tables(sigma, frule, 0);
  const auto str_facet = facet_tables(stream, frule, 1);
  std::vector<std::array<MatrixXd, 2>> facet_local(mesh.num_facets());
  parallel_for(mesh.num_facets(), threads, [&](int f) {
    const FacetFrame frame = mesh.facet_frame(f);
    const VectorXd w = facet_weights(frule, frame.measure);
    const auto owners = mesh.facet_owners(f);
    for (std::size_t o = 0; o < owners.size(); ++o) {
      const FacetOwner& own = owners[o];
      const Tabulation sig = sigma.tabulate(own.element, sig_facet[own.local_facet]);
      const CurlTabulation curl = curl_of(stream.tabulate(own.element, str_facet[own.local_facet]), false);
      const Vec n = static_cast<double>(own.sign) * frame.normal;
      facet_local[f][o] = facet_b(sig, curl, n, w, rep);
    }
  });

  std::vector<Triplet> triplets;
  for (int e = 0; e < mesh.num_elements(); ++e)
    scatter(triplets, stream.element_dofs(e), sigma.element_dofs(e), local[e]);
  for (int f = 0; f < mesh.num_facets(); ++f) {
    const auto owners = mesh.facet_owners(f);
    for (std::size_t o = 0; o < owners.size(); ++o)
      scatter(triplets, stream.element_dofs(owners[o].element), sigma.element_dofs(owners[o].element),
              facet_local[f][o]);
  }
  return from_triplets(stream.num_dofs(), sigma.num_dofs(), triplets);
}

SparseMatrix assemble_gauge(const FESpace& stream, const FESpace& multiplier, int threads) {
  require(stream.dim() == 3 && stream.family() == Family::NedelecHCurl,
          "assemble_gauge: stream space must be the 3D Nedelec space");
  require(multiplier.family() == Family::LagrangeH1 && multiplier.order() == stream.order() + 1,
          "assemble_gauge: multiplier must be Lagrange of order k + 1");
  require(&stream.mesh() == &multiplier.mesh(), "assemble_gauge: spaces live on different meshes");
  const Mesh& mesh = stream.mesh();
  const QuadratureRule& rule = simplex_rule(3, form_degree(stream.order()));
  const ReferenceTable st = stream.reference_table(rule.points, 0);
  const ReferenceTable mt = multiplier.reference_table(rule.points, 1);
  std::vector<MatrixXd> local(mesh.num_elements());
  parallel_for(mesh.num_elements(), threads, [&](int e) {
    const Tabulation phi = stream.tabulate(e, st);
    const Tabulation lam = multiplier.tabulate(e, mt);
    const VectorXd w = volume_weights(rule, mesh.element_geometry(e));
    MatrixXd m = MatrixXd::Zero(phi.num_local, lam.num_local);
    for (int c = 0; c < 3; ++c) m += phi.value(c).transpose() * w.asDiagonal() * lam.gradient(0, c);
    local[e] = std::move(m);
  });
  std::vector<Triplet> triplets;
  for (int e = 0; e < mesh.num_elements(); ++e)
    scatter(triplets, stream.element_dofs(e), multiplier.element_dofs(e), local[e]);
  return from_triplets(stream.num_dofs(), multiplier.num_dofs(), triplets);
}

namespace {

SparseMatrix assemble_gram(const FESpace& space, int derivatives, int threads) {
  const Mesh& mesh = space.mesh();
  const QuadratureRule& rule = simplex_rule(mesh.dim(), 2 * space.order());
  const ReferenceTable table = space.reference_table(rule.points, derivatives);
  std::vector<MatrixXd> local(mesh.num_elements());
  parallel_for(mesh.num_elements(), threads, [&](int e) {
    const Tabulation tab = space.tabulate(e, table);
    const VectorXd w = volume_weights(rule, mesh.element_geometry(e));
    MatrixXd m = MatrixXd::Zero(tab.num_local, tab.num_local);
    const auto& blocks = derivatives == 0 ? tab.values : tab.gradients;
    for (const auto& v : blocks) m += v.transpose() * w.asDiagonal() * v;
    local[e] = std::move(m);
  });
  std::vector<Triplet> triplets;
  for (int e = 0; e < mesh.num_elements(); ++e)
    scatter(triplets, space.element_dofs(e), space.element_dofs(e), local[e]);
  return from_triplets(space.num_dofs(), space.num_dofs(), triplets);
}

}  // namespace

SparseMatrix assemble_mass(const FESpace& space, int threads) { return assemble_gram(space, 0, threads); }

SparseMatrix assemble_stiffness(const FESpace& space, int threads) {
  return assemble_gram(space, 1, threads);
}

VectorXd assemble_load(const ManufacturedCase& mcase, const FESpace& stream, int threads) {
  const Mesh& mesh = stream.mesh();
  const int d = mesh.dim();
  require(mcase.dim == d, "assemble_load: case and mesh dimensions differ");
  // At small nu the load is dominated by gradient fields whose contribution
  // cancels exactly; the integrals are formed in extended precision so that
  // the viscous remainder keeps its relative accuracy.
  const QuadratureRule& rule = simplex_rule(d, kLoadDegree);
  const ExtendedReferenceTable table = stream.extended_reference_table(rule.extended_points);
  std::vector<VectorXd> local(mesh.num_elements());
  parallel_for(mesh.num_elements(), threads, [&](int e) {
    const ElementGeometry& g = mesh.element_geometry(e);
    const LongMatrix jac = g.jacobian.cast<long double>();
    const long double det = std::abs(jac.determinant());
    const LongVec origin = g.origin.cast<long double>();
    const ExtendedTabulation tab = stream.tabulate_extended(e, table);
    // Same conventions as curl_of.
    auto curl = [&](int r) -> LongMatrix {
      if (d == 2) return r == 0 ? LongMatrix(-tab.gradients[1]) : tab.gradients[0];
      const int i = (r + 1) % 3;
      const int k = (r + 2) % 3;
      return tab.gradients[k * 3 + i] - tab.gradients[i * 3 + k];
    };
    LongMatrix wf(rule.size(), d);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const LongVec x = origin + jac * rule.extended_points[q];
      wf.row(static_cast<Eigen::Index>(q)) =
          (rule.extended_weights[q] * det) * mcase.load(x).transpose();
    }
    Eigen::Matrix<long double, Eigen::Dynamic, 1> l =
        Eigen::Matrix<long double, Eigen::Dynamic, 1>::Zero(stream.num_local());
    for (int r = 0; r < d; ++r) l -= curl(r).transpose() * wf.col(r);
    local[e] = l.cast<double>();
  });
  VectorXd out = VectorXd::Zero(stream.num_dofs());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto dofs = stream.element_dofs(e);
    for (std::size_t j = 0; j < dofs.size(); ++j)
      if (dofs[j] >= 0) out(dofs[j]) += local[e](static_cast<Eigen::Index>(j));
  }
  return out;
}

Discretization::Discretization(std::shared_ptr<const Mesh> m, int k) : mesh(std::move(m)), order(k) {
  require(mesh != nullptr, "Discretization: null mesh");
  const int d = mesh->dim();
  require(supported_order(d, k), "Discretization: unsupported order k = " + std::to_string(k) +
                                     " in " + std::to_string(d) + "D");
  sigma = std::make_shared<const FESpace>(mesh, Family::StressNT, k - 1);
  if (d == 2) {
    stream = std::make_shared<const FESpace>(mesh, Family::LagrangeH1, k);
  } else {
    stream = std::make_shared<const FESpace>(mesh, Family::NedelecHCurl, k);
    multiplier = std::make_shared<const FESpace>(mesh, Family::LagrangeH1, k + 1);
  }
}

double LinearSystem::symmetry_defect() const {
  const SparseMatrix t = SparseMatrix(matrix.transpose());
  return relative_difference(matrix, t);
}

Eigen::VectorXd LinearSystem::scaling() const {
  Eigen::VectorXd d(size);
  d.head(offset_stream).setConstant(sigma_scale);
  d.segment(offset_stream, num_stream()).setConstant(stream_scale);
  d.tail(num_multiplier()).setConstant(multiplier_scale);
  return d;
}

double relative_difference(const SparseMatrix& x, const SparseMatrix& y) {
  require(x.rows() == y.rows() && x.cols() == y.cols(), "relative_difference: shape mismatch");
  const SparseMatrix diff = x - y;
  double num = 0.0;
  double den = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) num = std::max(num, std::abs(it.value()));
  for (int k = 0; k < x.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(x, k); it; ++it) den = std::max(den, std::abs(it.value()));
  return den > 0.0 ? num / den : num;
}

LinearSystem build_system(const SparseMatrix& a, const SparseMatrix& b, const SparseMatrix& g,
                          const VectorXd& load) {
  LinearSystem sys;
  sys.a = a;
  sys.b = b;
  sys.g = g;
  sys.offset_sigma = 0;
  sys.offset_stream = static_cast<int>(a.rows());
  sys.offset_multiplier = sys.offset_stream + static_cast<int>(b.rows());
  sys.size = sys.offset_multiplier + static_cast<int>(g.cols());
  require(b.cols() == a.rows(), "build_system: B has the wrong number of columns");
  require(g.cols() == 0 || g.rows() == b.rows(), "build_system: G has the wrong number of rows");
  require(load.size() == b.rows(), "build_system: load has the wrong length");
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(a.nonZeros() + 2 * b.nonZeros() + 2 * g.nonZeros()));
  auto add = [&](const SparseMatrix& m, int r0, int c0, bool transpose) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
        const int r = static_cast<int>(it.row());
        const int c = static_cast<int>(it.col());
        if (transpose)
          t.emplace_back(c0 + c, r0 + r, it.value());
        else
          t.emplace_back(r0 + r, c0 + c, it.value());
      }
  };
  add(a, sys.offset_sigma, sys.offset_sigma, false);
  add(b, sys.offset_stream, sys.offset_sigma, false);
  add(b, sys.offset_stream, sys.offset_sigma, true);
  if (g.cols() > 0) {
    add(g, sys.offset_stream, sys.offset_multiplier, false);
    add(g, sys.offset_stream, sys.offset_multiplier, true);
  }
  sys.matrix = from_triplets(sys.size, sys.size, t);
  sys.rhs = VectorXd::Zero(sys.size);
  sys.rhs.segment(sys.offset_stream, load.size()) = load;
  return sys;
}

LinearSystem assemble_system(const ManufacturedCase& mcase, const Discretization& disc,
                             Representation rep, int threads) {
  require(mcase.dim == disc.dim(), "assemble_system: case and mesh dimensions differ");
  const SparseMatrix a = assemble_a(*disc.sigma, mcase.nu, threads);
  const SparseMatrix b = assemble_b(*disc.sigma, *disc.stream, rep, threads);
  const SparseMatrix g = disc.multiplier ? assemble_gauge(*disc.stream, *disc.multiplier, threads)
                                         : SparseMatrix(b.rows(), 0);
  LinearSystem sys = build_system(a, b, g, assemble_load(mcase, *disc.stream, threads));
  sys.sigma_scale = std::sqrt(mcase.nu);
  sys.stream_scale = 1.0 / std::sqrt(mcase.nu);
  sys.multiplier_scale = std::sqrt(mcase.nu);
  if (disc.multiplier) {
    sys.stream_mass = assemble_mass(*disc.stream, threads);
    sys.multiplier_stiffness = assemble_stiffness(*disc.multiplier, threads);
  }
  return sys;
}

ConsistencyResidual consistency_residual(const ManufacturedCase& mcase, const Discretization& disc) {
  const FESpace& sigma = *disc.sigma;
  const FESpace& stream = *disc.stream;
  const Mesh& mesh = *disc.mesh;
  const int d = mesh.dim();
  const int deg = form_degree(disc.order);
  const QuadratureRule& rule = simplex_rule(d, deg);
  const ReferenceTable sig_table = sigma.reference_table(rule.points, 0);
  const ReferenceTable str_table = stream.reference_table(rule.points, 2);
  VectorXd r_sigma = VectorXd::Zero(sigma.num_dofs());
  VectorXd r_stream = VectorXd::Zero(stream.num_dofs());
  auto add = [](VectorXd& r, std::span<const int> dofs, const VectorXd& local) {
    for (std::size_t j = 0; j < dofs.size(); ++j)
      if (dofs[j] >= 0) r(dofs[j]) += local(static_cast<Eigen::Index>(j));
  };
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry& g = mesh.element_geometry(e);
    const Tabulation sig = sigma.tabulate(e, sig_table);
    const CurlTabulation curl = curl_of(stream.tabulate(e, str_table), true);
    const VectorXd w = volume_weights(rule, g);
    VectorXd ls = VectorXd::Zero(sigma.num_local());
    VectorXd lp = VectorXd::Zero(stream.num_local());
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec x = g.map(rule.points[q]);
      const Mat s = mcase.stress(x);
      const Mat gu = mcase.velocity_gradient(x);
      const Vec f = mcase.load(x);
      const auto qi = static_cast<Eigen::Index>(q);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
          const double coeff = s(r, c) / mcase.nu - gu(r, c);
          ls += w(qi) * coeff * sig.value(r * d + c).row(qi).transpose();
          lp -= w(qi) * s(r, c) * curl.gradient[r * d + c].row(qi).transpose();
        }
      for (int r = 0; r < d; ++r) lp += w(qi) * f(r) * curl.velocity[r].row(qi).transpose();
    }
    add(r_sigma, sigma.element_dofs(e), ls);
    add(r_stream, stream.element_dofs(e), lp);
  }
  // Facet terms: the exact velocity has no tangential jump, so only the
  // stream rows receive sigma_nt . (curl phi)_t from each owner.
  const QuadratureRule& frule = simplex_rule(d - 1, deg);
  const auto str_facet = facet_tables(stream, frule, 1);
  for (int f = 0; f < mesh.num_facets(); ++f) {
    const FacetFrame frame = mesh.facet_frame(f);
    const VectorXd w = facet_weights(frule, frame.measure);
    for (const FacetOwner& own : mesh.facet_owners(f)) {
      const ElementGeometry& g = mesh.element_geometry(own.element);
      const auto& table = str_facet[own.local_facet];
      const CurlTabulation curl = curl_of(stream.tabulate(own.element, table), false);
      const Vec n = static_cast<double>(own.sign) * frame.normal;
      VectorXd lp = VectorXd::Zero(stream.num_local());
      for (std::size_t q = 0; q < frule.size(); ++q) {
        const auto qi = static_cast<Eigen::Index>(q);
        const Mat s = mcase.stress(g.map(table.points[q]));
        const Vec sn = s * n;
        const Vec snt = sn - n.dot(sn) * n;
        for (int r = 0; r < d; ++r) lp += w(qi) * snt(r) * curl.velocity[r].row(qi).transpose();
      }
      add(r_stream, stream.element_dofs(own.element), lp);
    }
  }
  return {r_sigma.size() ? r_sigma.cwiseAbs().maxCoeff() : 0.0,
          r_stream.size() ? r_stream.cwiseAbs().maxCoeff() : 0.0};
}

}  // namespace hhj
