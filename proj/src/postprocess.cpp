#include "hhj/postprocess.hpp"

#include "hhj/parallel.hpp"
#include "integration.hpp"

#include <cmath>

namespace hhj {

using namespace detail;

namespace {

/// Sum over components of value(c) * coefficients, one column per component.
MatrixXd evaluate(const Tabulation& tab, const VectorXd& coeff) {
  MatrixXd out(tab.num_points, tab.num_components);
  for (int c = 0; c < tab.num_components; ++c) out.col(c) = tab.value(c) * coeff;
  return out;
}

}  // namespace

VelocitySample velocity_eval(const FEFunction& psi_h, int e, const std::vector<Vec>& points) {
  const FESpace& space = *psi_h.space;
  const CurlTabulation curl = curl_of(space.tabulate(e, points, 2), true);
  const VectorXd c = psi_h.local(e);
  const int d = space.dim();
  VelocitySample out;
  out.values.resize(static_cast<Eigen::Index>(points.size()), d);
  out.gradients.resize(static_cast<Eigen::Index>(points.size()), d * d);
  for (int i = 0; i < d; ++i) out.values.col(i) = curl.velocity[i] * c;
  for (int i = 0; i < d * d; ++i) out.gradients.col(i) = curl.gradient[i] * c;
  return out;
}

SparseMatrix assemble_broken_h1(const FESpace& space, int threads) {
  const Mesh& mesh = space.mesh();
  const int d = mesh.dim();
  const SparseMatrix volume = assemble_stiffness(space, threads);
  const QuadratureRule& rule = simplex_rule(d - 1, 2 * space.order());
  const auto tables = facet_tables(space, rule, 0);
  const double inv_h = 1.0 / mesh.h();
  std::vector<MatrixXd> local(mesh.num_facets());
  parallel_for(mesh.num_facets(), threads, [&](int f) {
    const FacetFrame frame = mesh.facet_frame(f);
    const VectorXd w = facet_weights(rule, frame.measure) * inv_h;
    const auto owners = mesh.facet_owners(f);
    const int nl = space.num_local();
    MatrixXd m = MatrixXd::Zero(nl * static_cast<Eigen::Index>(owners.size()),
                                nl * static_cast<Eigen::Index>(owners.size()));
    std::vector<Tabulation> tabs;
    for (const FacetOwner& own : owners) tabs.push_back(space.tabulate(own.element, tables[own.local_facet]));
    for (const Vec& t : frame.tangents) {
      MatrixXd jump(rule.size(), m.cols());
      for (std::size_t o = 0; o < owners.size(); ++o) {
        MatrixXd tr = MatrixXd::Zero(rule.size(), nl);
        for (int c = 0; c < d; ++c) tr += t(c) * tabs[o].value(c);
        jump.middleCols(static_cast<Eigen::Index>(o) * nl, nl) = o == 0 ? tr : MatrixXd(-tr);
      }
      m += jump.transpose() * w.asDiagonal() * jump;
    }
    local[f] = std::move(m);
  });
  std::vector<Triplet> triplets;
  for (int k = 0; k < volume.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(volume, k); it; ++it)
      triplets.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int f = 0; f < mesh.num_facets(); ++f) {
    std::vector<int> dofs;
    for (const FacetOwner& own : mesh.facet_owners(f)) {
      const auto ed = space.element_dofs(own.element);
      dofs.insert(dofs.end(), ed.begin(), ed.end());
    }
    scatter(triplets, dofs, dofs, local[f]);
  }
  return from_triplets(space.num_dofs(), space.num_dofs(), triplets);
}

VectorXd apply_b(const FEFunction& sigma_h, const FESpace& velocity, int threads) {
  const FESpace& sigma = *sigma_h.space;
  const Mesh& mesh = sigma.mesh();
  const int d = mesh.dim();
  require(velocity.family() == Family::BdmHDiv, "apply_b: test space must be BDM");
  require(&velocity.mesh() == &mesh, "apply_b: spaces live on different meshes");
  const int deg = 2 * std::max(sigma.order(), velocity.order()) + 2;
  const QuadratureRule& rule = simplex_rule(d, deg);
  const ReferenceTable st = sigma.reference_table(rule.points, 0);
  const ReferenceTable vt = velocity.reference_table(rule.points, 1);
  std::vector<VectorXd> local(mesh.num_elements());
  parallel_for(mesh.num_elements(), threads, [&](int e) {
    const MatrixXd s = evaluate(sigma.tabulate(e, st), sigma_h.local(e));
    const Tabulation v = velocity.tabulate(e, vt);
    const VectorXd w = volume_weights(rule, mesh.element_geometry(e));
    VectorXd l = VectorXd::Zero(velocity.num_local());
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) l -= v.gradient(i, k).transpose() * w.cwiseProduct(s.col(i * d + k));
    local[e] = std::move(l);
  });
  const QuadratureRule& frule = simplex_rule(d - 1, deg);
  const auto sf = facet_tables(sigma, frule, 0);
  const auto vf = facet_tables(velocity, frule, 0);
  std::vector<std::array<VectorXd, 2>> facet_local(mesh.num_facets());
  parallel_for(mesh.num_facets(), threads, [&](int f) {
    const FacetFrame frame = mesh.facet_frame(f);
    const VectorXd w = facet_weights(frule, frame.measure);
    const auto owners = mesh.facet_owners(f);
    for (std::size_t o = 0; o < owners.size(); ++o) {
      const FacetOwner& own = owners[o];
      const MatrixXd s = evaluate(sigma.tabulate(own.element, sf[own.local_facet]), sigma_h.local(own.element));
      const Tabulation v = velocity.tabulate(own.element, vf[own.local_facet]);
      const Vec n = static_cast<double>(own.sign) * frame.normal;
      // sigma_nt . v_t = v . (sigma n) - (n . sigma n)(n . v)
      VectorXd nn = VectorXd::Zero(frule.size());
      MatrixXd sn = MatrixXd::Zero(frule.size(), d);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) sn.col(r) += n(c) * s.col(r * d + c);
      for (int r = 0; r < d; ++r) nn += n(r) * sn.col(r);
      VectorXd l = VectorXd::Zero(velocity.num_local());
      for (int r = 0; r < d; ++r)
        l += v.value(r).transpose() * w.cwiseProduct(sn.col(r) - n(r) * nn);
      facet_local[f][o] = std::move(l);
    }
  });
  VectorXd out = VectorXd::Zero(velocity.num_dofs());
  auto add = [&](int e, const VectorXd& l) {
    const auto dofs = velocity.element_dofs(e);
    for (std::size_t j = 0; j < dofs.size(); ++j)
      if (dofs[j] >= 0) out(dofs[j]) += l(static_cast<Eigen::Index>(j));
  };
  for (int e = 0; e < mesh.num_elements(); ++e) add(e, local[e]);
  for (int f = 0; f < mesh.num_facets(); ++f) {
    const auto owners = mesh.facet_owners(f);
    for (std::size_t o = 0; o < owners.size(); ++o) add(owners[o].element, facet_local[f][o]);
  }
  return out;
}

PressureRecovery recover_pressure(const FEFunction& sigma_h, const ManufacturedCase& mcase,
                                  const SolveOptions& options, int threads) {
  const FESpace& sigma = *sigma_h.space;
  require(sigma.family() == Family::StressNT, "recover_pressure: expects a stress function");
  const auto mesh = sigma.mesh_ptr();
  const int d = mesh->dim();
  const int k = sigma.order() + 1;
  auto vspace = std::make_shared<const FESpace>(mesh, Family::BdmHDiv, k - 1);
  auto qspace = std::make_shared<const FESpace>(mesh, Family::DgL2ZeroMean, k - 2);
  const FESpace& V = *vspace;
  const FESpace& Q = *qspace;

  const SparseMatrix m = assemble_broken_h1(V, threads);

  // D_ij = int q_i div v_j, mean_i = int q_i, load_j = -int f . v_j
  const QuadratureRule& rule = simplex_rule(d, 2 * (k - 1));
  const ReferenceTable vt = V.reference_table(rule.points, 1);
  const ReferenceTable qt = Q.reference_table(rule.points, 0);
  const QuadratureRule& lrule = simplex_rule(d, kLoadDegree);
  const ReferenceTable lt = V.reference_table(lrule.points, 0);
  std::vector<MatrixXd> dloc(mesh->num_elements());
  std::vector<VectorXd> mloc(mesh->num_elements());
  std::vector<VectorXd> floc(mesh->num_elements());
  parallel_for(mesh->num_elements(), threads, [&](int e) {
    const ElementGeometry& g = mesh->element_geometry(e);
    const Tabulation v = V.tabulate(e, vt);
    const Tabulation q = Q.tabulate(e, qt);
    const VectorXd w = volume_weights(rule, g);
    MatrixXd div = MatrixXd::Zero(v.num_points, v.num_local);
    for (int i = 0; i < d; ++i) div += v.gradient(i, i);
    dloc[e] = q.value(0).transpose() * w.asDiagonal() * div;
    mloc[e] = q.value(0).transpose() * w;
    const Tabulation vl = V.tabulate(e, lt);
    const VectorXd lw = volume_weights(lrule, g);
    VectorXd fl = VectorXd::Zero(v.num_local);
    for (std::size_t p = 0; p < lrule.size(); ++p) {
      const Vec f = mcase.load(g.map(lrule.points[p]));
      for (int i = 0; i < d; ++i)
        fl -= lw(static_cast<Eigen::Index>(p)) * f(i) * vl.value(i).row(static_cast<Eigen::Index>(p)).transpose();
    }
    floc[e] = std::move(fl);
  });

  // The constant pressure is in the kernel of (div v, q); it is removed by
  // pinning the first pressure DOF (the constant on element 0) and shifting
  // to zero mean afterwards, which keeps the system sparse.
  const int nv = V.num_dofs();
  const int nq = Q.num_dofs();
  const int n = nv + nq - 1;
  auto pindex = [&](int q) { return q == 0 ? -1 : nv + q - 1; };
  std::vector<Triplet> t;
  for (int kk = 0; kk < m.outerSize(); ++kk)
    for (SparseMatrix::InnerIterator it(m, kk); it; ++it)
      t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  VectorXd rhs = VectorXd::Zero(n);
  const VectorXd bsig = apply_b(sigma_h, V, threads);
  rhs.head(nv) -= bsig;
  VectorXd mean_weights = VectorXd::Zero(nq);
  for (int e = 0; e < mesh->num_elements(); ++e) {
    const auto vd = V.element_dofs(e);
    const auto qd = Q.element_dofs(e);
    for (std::size_t i = 0; i < qd.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      mean_weights(qd[i]) += mloc[e](ii);
      const int row = pindex(qd[i]);
      if (row < 0) continue;
      for (std::size_t j = 0; j < vd.size(); ++j) {
        if (vd[j] < 0) continue;
        const double val = dloc[e](ii, static_cast<Eigen::Index>(j));
        if (val == 0.0) continue;
        t.emplace_back(row, vd[j], val);
        t.emplace_back(vd[j], row, val);
      }
    }
    for (std::size_t j = 0; j < vd.size(); ++j)
      if (vd[j] >= 0) rhs(vd[j]) += floc[e](static_cast<Eigen::Index>(j));
  }
  SparseMatrix sys = from_triplets(n, n, t);
  SolveOptions opt = options;
  opt.method = SolverMethod::Direct;
  const SolveReport rep = solve(sys, rhs, opt);

  PressureRecovery out;
  out.w = FEFunction(vspace, rep.solution.head(nv));
  out.w_norm_1h = std::sqrt(std::max(0.0, out.w.coefficients.dot(m * out.w.coefficients)));
  VectorXd p = VectorXd::Zero(nq);
  p.tail(nq - 1) = rep.solution.tail(nq - 1);
  // The first DG basis function on each element is the constant 1.
  double measure = 0.0;
  for (int e = 0; e < mesh->num_elements(); ++e) measure += mesh->element_geometry(e).volume;
  const double mean = mean_weights.dot(p) / measure;
  for (int e = 0; e < mesh->num_elements(); ++e) p(Q.element_dofs(e)[0]) -= mean;
  out.pressure = FEFunction(qspace, std::move(p));
  const SparseMatrix mq = assemble_mass(Q, threads);
  out.p_norm = std::sqrt(std::max(0.0, out.pressure.coefficients.dot(mq * out.pressure.coefficients)));
  out.load_norm = load_norm(mcase, *mesh);
  return out;
}

ErrorReport error_norms(const ManufacturedCase& mcase, const FEFunction& sigma_h,
                        const FEFunction& psi_h, const FEFunction& p_h, int threads) {
  const FESpace& sigma = *sigma_h.space;
  const FESpace& stream = *psi_h.space;
  const FESpace& pressure = *p_h.space;
  const Mesh& mesh = sigma.mesh();
  const int d = mesh.dim();
  const QuadratureRule& rule = simplex_rule(d, kLoadDegree);
  const ReferenceTable st = sigma.reference_table(rule.points, 0);
  const ReferenceTable pt = stream.reference_table(rule.points, 2);
  const ReferenceTable qt = pressure.reference_table(rule.points, 0);

  // per element: grad u, u, sigma, p, max div
  std::vector<std::array<double, 5>> local(mesh.num_elements());
  parallel_for(mesh.num_elements(), threads, [&](int e) {
    const ElementGeometry& g = mesh.element_geometry(e);
    const VectorXd w = volume_weights(rule, g);
    const MatrixXd s = evaluate(sigma.tabulate(e, st), sigma_h.local(e));
    const CurlTabulation curl = curl_of(stream.tabulate(e, pt), true);
    const VectorXd c = psi_h.local(e);
    const MatrixXd p = evaluate(pressure.tabulate(e, qt), p_h.local(e));
    MatrixXd u(rule.size(), d);
    MatrixXd gu(rule.size(), d * d);
    for (int i = 0; i < d; ++i) u.col(i) = curl.velocity[i] * c;
    for (int i = 0; i < d * d; ++i) gu.col(i) = curl.gradient[i] * c;
    std::array<double, 5> acc{0, 0, 0, 0, 0};
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto qi = static_cast<Eigen::Index>(q);
      const Vec x = g.map(rule.points[q]);
      const Vec ue = mcase.velocity(x);
      const Mat ge = mcase.velocity_gradient(x);
      const Mat se = mcase.stress(x);
      double eg = 0.0;
      double es = 0.0;
      double div = 0.0;
      for (int i = 0; i < d; ++i) {
        div += gu(qi, i * d + i);
        for (int k = 0; k < d; ++k) {
          eg += std::pow(ge(i, k) - gu(qi, i * d + k), 2);
          es += std::pow(se(i, k) - s(qi, i * d + k), 2);
        }
      }
      acc[0] += w(qi) * eg;
      acc[1] += w(qi) * (ue - u.row(qi).transpose()).squaredNorm();
      acc[2] += w(qi) * es;
      acc[3] += w(qi) * std::pow(mcase.pressure(x) - p(qi, 0), 2);
      acc[4] = std::max(acc[4], std::abs(div));
    }
    local[e] = acc;
  });

  // tangential jumps of u_h; the exact velocity is continuous and vanishes on the boundary
  const QuadratureRule& frule = simplex_rule(d - 1, kLoadDegree);
  const auto ft = facet_tables(stream, frule, 1);
  std::vector<double> jumps(mesh.num_facets());
  parallel_for(mesh.num_facets(), threads, [&](int f) {
    const FacetFrame frame = mesh.facet_frame(f);
    const VectorXd w = facet_weights(frule, frame.measure);
    MatrixXd jump = MatrixXd::Zero(frule.size(), d);
    const auto owners = mesh.facet_owners(f);
    for (std::size_t o = 0; o < owners.size(); ++o) {
      const CurlTabulation curl = curl_of(stream.tabulate(owners[o].element, ft[owners[o].local_facet]), false);
      const VectorXd c = psi_h.local(owners[o].element);
      for (int i = 0; i < d; ++i) jump.col(i) += (o == 0 ? 1.0 : -1.0) * (curl.velocity[i] * c);
    }
    double acc = 0.0;
    for (const Vec& t : frame.tangents) acc += w.dot((jump * t).cwiseAbs2());
    jumps[f] = acc / mesh.h();
  });

  ErrorReport r;
  r.num_elements = mesh.num_elements();
  r.ndof_sigma = sigma.num_dofs();
  r.ndof_stream = stream.num_dofs();
  r.h = mesh.h();
  std::array<double, 4> sum{0, 0, 0, 0};
  for (const auto& a : local) {
    for (int i = 0; i < 4; ++i) sum[i] += a[i];
    r.max_div_u = std::max(r.max_div_u, a[4]);
  }
  double jump_sum = 0.0;
  for (double j : jumps) jump_sum += j;
  r.err_h1semi_u = std::sqrt(sum[0]);
  r.err_l2_u = std::sqrt(sum[1]);
  r.err_l2_sigma = std::sqrt(sum[2]) / mcase.nu;
  r.err_l2_p = std::sqrt(sum[3]);
  r.err_1h_u = std::sqrt(sum[0] + jump_sum);
  return r;
}

double gradient_norm(const FEFunction& lambda_h) {
  const SparseMatrix k = assemble_stiffness(*lambda_h.space);
  return std::sqrt(std::max(0.0, lambda_h.coefficients.dot(k * lambda_h.coefficients)));
}

double load_norm(const ManufacturedCase& mcase, const Mesh& mesh) {
  const QuadratureRule& rule = simplex_rule(mesh.dim(), kLoadDegree);
  double acc = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry& g = mesh.element_geometry(e);
    const VectorXd w = volume_weights(rule, g);
    for (std::size_t q = 0; q < rule.size(); ++q)
      acc += w(static_cast<Eigen::Index>(q)) * mcase.load(g.map(rule.points[q])).squaredNorm();
  }
  return std::sqrt(acc);
}

double eoc(double previous, double current) { return std::log2(previous / current); }

}  // namespace hhj
