#include "hhj/postprocess.hpp"
#include "hhj/quadrature.hpp"
#include "hhj/stokes.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <random>

using namespace hhj;

namespace {

std::shared_ptr<const Mesh> make_mesh(int dim, int n) {
  return std::make_shared<const Mesh>(Mesh::structured(dim, n));
}

FEFunction random_function(const std::shared_ptr<const FESpace>& space, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  FEFunction u(space);
  for (Eigen::Index i = 0; i < u.coefficients.size(); ++i) u.coefficients(i) = dist(rng);
  return u;
}

// Closed-form L2 norms over the unit square/cube of the manufactured fields,
// integrated exactly with sympy: ||p||^2 = 25/198 (2D), 25/132 (3D);
// ||u||^2 = 2/33075, 1/3472875; ||grad u||^2 = 4/1225, 22/1157625.
struct ExactNorms {
  double p;
  double u;
  double grad_u;
};
constexpr ExactNorms kNorms2D{0.35533452725935072383, 0.0077761579135973907879,
                              0.057142857142857142857};
constexpr ExactNorms kNorms3D{0.43519413988924459544, 0.00053660587601810576350,
                              0.0043594067449244138883};

}  // namespace

TEST(Velocity, ZeroStreamGivesZeroVelocity) {
  const Discretization disc(make_mesh(2, 2), 3);
  const FEFunction psi(disc.stream);
  const VelocitySample s = velocity_eval(psi, 1, {Vec::Constant(2, 0.25)});
  EXPECT_EQ(s.values.norm(), 0.0);
  EXPECT_EQ(s.gradients.norm(), 0.0);
}

TEST(Velocity, CurlOfInterpolatedBubble2D) {
  // psi = x(1-x)y(1-y) lies in S^4 with zero trace, so u_h = curl psi exactly.
  const Discretization disc(make_mesh(2, 2), 4);
  const FEFunction psi = interpolate(disc.stream, [](const Vec& x) {
    return Eigen::VectorXd::Constant(1, x(0) * (1 - x(0)) * x(1) * (1 - x(1)));
  });
  const std::vector<Vec> pts{Vec::Constant(2, 0.2), Vec::Constant(2, 0.6)};
  const Mesh& m = *disc.mesh;
  for (int e = 0; e < m.num_elements(); ++e) {
    const VelocitySample s = velocity_eval(psi, e, pts);
    for (std::size_t q = 0; q < pts.size(); ++q) {
      const Vec x = m.element_geometry(e).map(pts[q]);
      const double gx = (1 - 2 * x(0)) * x(1) * (1 - x(1));
      const double gy = x(0) * (1 - x(0)) * (1 - 2 * x(1));
      const auto qi = static_cast<Eigen::Index>(q);
      EXPECT_NEAR(s.values(qi, 0), -gy, 1e-13);
      EXPECT_NEAR(s.values(qi, 1), gx, 1e-13);
      const double gxy = (1 - 2 * x(0)) * (1 - 2 * x(1));
      EXPECT_NEAR(s.gradients(qi, 0), -gxy, 1e-12);                      // d_x u_0
      EXPECT_NEAR(s.gradients(qi, 1), 2 * x(0) * (1 - x(0)), 1e-12);     // d_y u_0
      EXPECT_NEAR(s.gradients(qi, 2), -2 * x(1) * (1 - x(1)), 1e-12);    // d_x u_1
      EXPECT_NEAR(s.gradients(qi, 3), gxy, 1e-12);                       // d_y u_1
    }
  }
}

TEST(Velocity, RandomStreamIsDivergenceFree) {
  for (auto [dim, k] : {std::pair{2, 2}, std::pair{2, 4}, std::pair{3, 2}, std::pair{3, 3}}) {
    const Discretization disc(make_mesh(dim, 2), k);
    const FEFunction psi = random_function(disc.stream, 17);
    const QuadratureRule& rule = simplex_rule(dim, kLoadDegree);
    for (int e = 0; e < disc.mesh->num_elements(); e += 5) {
      const VelocitySample s = velocity_eval(psi, e, rule.points);
      Eigen::VectorXd div = Eigen::VectorXd::Zero(s.gradients.rows());
      for (int i = 0; i < dim; ++i) div += s.gradients.col(i * dim + i);
      EXPECT_LE(div.cwiseAbs().maxCoeff(), 1e-12 * (1.0 + s.gradients.cwiseAbs().maxCoeff()))
          << dim << "D k=" << k;
    }
  }
}

TEST(ErrorNorms, ZeroInputsGiveExactNorms) {
  for (int dim : {2, 3}) {
    const ExactNorms& ref = dim == 2 ? kNorms2D : kNorms3D;
    auto mesh = make_mesh(dim, 2);
    const Discretization disc(mesh, 2);
    auto q = std::make_shared<const FESpace>(mesh, Family::DgL2ZeroMean, 0);
    const ManufacturedCase mc(dim, 1e-6);
    // The 3D |u|^2 integrand has degree 22, beyond the degree-18 rule.
    const ErrorReport r =
        error_norms(mc, FEFunction(disc.sigma), FEFunction(disc.stream), FEFunction(q));
    EXPECT_NEAR(r.err_l2_p, ref.p, 1e-12 * ref.p) << dim << "D";
    EXPECT_NEAR(r.err_l2_u, ref.u, 1e-12 * ref.u) << dim << "D";
    EXPECT_NEAR(r.err_h1semi_u, ref.grad_u, 1e-12 * ref.grad_u) << dim << "D";
    EXPECT_NEAR(r.err_l2_sigma, ref.grad_u, 1e-12 * ref.grad_u) << dim << "D";
    EXPECT_NEAR(r.err_1h_u, ref.grad_u, 1e-12 * ref.grad_u) << dim << "D";
    EXPECT_EQ(r.max_div_u, 0.0);
    EXPECT_EQ(r.num_elements, mesh->num_elements());
    EXPECT_EQ(r.ndof_sigma, disc.sigma->num_dofs());
    EXPECT_EQ(r.ndof_stream, disc.stream->num_dofs());
  }
}

TEST(ErrorNorms, Deterministic) {
  auto mesh = make_mesh(2, 4);
  const ManufacturedCase mc(2, 1e-6);
  const StokesSolution sol = solve_stokes(mc, mesh, 3);
  const PressureRecovery pr = recover_pressure(sol.sigma, mc);
  const ErrorReport a = error_norms(mc, sol.sigma, sol.psi, pr.pressure);
  const ErrorReport b = error_norms(mc, sol.sigma, sol.psi, pr.pressure, 3);
  EXPECT_EQ(a.err_h1semi_u, b.err_h1semi_u);
  EXPECT_EQ(a.err_l2_u, b.err_l2_u);
  EXPECT_EQ(a.err_l2_sigma, b.err_l2_sigma);
  EXPECT_EQ(a.err_l2_p, b.err_l2_p);
  EXPECT_EQ(a.err_1h_u, b.err_1h_u);
}

TEST(ErrorNorms, EocIsBaseTwo) {
  EXPECT_DOUBLE_EQ(eoc(4.0, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(eoc(1.0, 1.0), 0.0);
}

TEST(PressureRecovery, GradientLoadGivesProjectedPotential) {
  // f = grad theta with sigma_h = 0: p_h is the zero-mean L2 projection of theta.
  for (auto [dim, k] : {std::pair{2, 3}, std::pair{3, 2}}) {
    auto mesh = make_mesh(dim, 2);
    ManufacturedCase mc(dim, 1e-6);
    mc.velocity_scale = 0.0;
    mc.pressure_scale = 0.0;
    mc.theta_scale = 1.0;
    const Discretization disc(mesh, k);
    const PressureRecovery pr = recover_pressure(FEFunction(disc.sigma), mc);
    auto q = std::make_shared<const FESpace>(mesh, Family::DgL2ZeroMean, k - 2);
    const FEFunction proj =
        interpolate(q, [&](const Vec& x) { return Eigen::VectorXd::Constant(1, mc.pressure(x)); });
    double diff = 0.0;
    double scale = 0.0;
    for (int e = 0; e < mesh->num_elements(); ++e) {
      const Vec x = mesh->element_geometry(e).map(Vec::Constant(dim, 0.2));
      diff = std::max(diff, std::abs(pr.pressure.value(e, x)(0) - proj.value(e, x)(0)));
      scale = std::max(scale, std::abs(proj.value(e, x)(0)));
    }
    EXPECT_LE(diff, 1e-10 * scale) << dim << "D";
    EXPECT_LE(pr.relative_w(), 1e-8) << dim << "D";
  }
}

TEST(PressureRecovery, DiscreteSolutionHasVanishingW) {
  for (auto [dim, k, n] : {std::tuple{2, 2, 4}, std::tuple{2, 4, 2}, std::tuple{3, 2, 2}}) {
    auto mesh = make_mesh(dim, n);
    const ManufacturedCase mc(dim, 1e-6);
    const StokesSolution sol = solve_stokes(mc, mesh, k);
    const PressureRecovery pr = recover_pressure(sol.sigma, mc);
    EXPECT_LE(pr.relative_w(), 1e-8) << dim << "D k=" << k;
    EXPECT_GT(pr.load_norm, 0.0);
  }
}

TEST(BrokenH1, SymmetricPositiveDefinite) {
  auto v = std::make_shared<const FESpace>(make_mesh(2, 2), Family::BdmHDiv, 2);
  const Eigen::MatrixXd m(assemble_broken_h1(*v));
  EXPECT_LE((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-14 * m.cwiseAbs().maxCoeff());
  EXPECT_TRUE(m.llt().info() == Eigen::Success);
}

TEST(LoadNorm, MatchesQuadratureOfLoad) {
  auto mesh = make_mesh(2, 1);
  const ManufacturedCase mc(2, 1.0);
  std::vector<double> t, w;
  gauss_legendre01(12, t, w);
  double sum = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < t.size(); ++j) {
      Vec x(2);
      x << t[i], t[j];
      sum += w[i] * w[j] * mc.load(x).squaredNorm();
    }
  EXPECT_NEAR(load_norm(mc, *mesh), std::sqrt(sum), 1e-13 * std::sqrt(sum));
}
