#include "hhj/solver.hpp"
#include "hhj/stokes.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

using namespace hhj;

namespace {

SparseMatrix from_dense(const Eigen::MatrixXd& d) { return d.sparseView(); }

SolveOptions with(SolverMethod method, double tol = 1e-10) {
  SolveOptions o;
  o.method = method;
  o.tol = tol;
  return o;
}

double relative_change(const Eigen::VectorXd& x, const Eigen::VectorXd& ref) {
  return (x - ref).norm() / ref.norm();
}

class BothMethods : public ::testing::TestWithParam<SolverMethod> {};

}  // namespace

TEST_P(BothMethods, IdentityRecoversRhs) {
  const SparseMatrix id = from_dense(Eigen::MatrixXd::Identity(5, 5));
  const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(5, 0);
  const SolveReport r = solve(id, e1, with(GetParam()));
  EXPECT_EQ(r.solution, e1);
  EXPECT_EQ(r.residual, 0.0);
}

TEST_P(BothMethods, TwoByTwoSaddle) {
  Eigen::MatrixXd m(2, 2);
  m << 1, 1, 1, 0;
  const SolveReport r = solve(from_dense(m), Eigen::Vector2d(0, 1), with(GetParam()));
  EXPECT_NEAR(r.solution(0), 1.0, 1e-14);
  EXPECT_NEAR(r.solution(1), -1.0, 1e-14);
  EXPECT_LE(r.residual, 1e-10);
}

TEST_P(BothMethods, ZeroRhsGivesZero) {
  Eigen::MatrixXd m(2, 2);
  m << 2, 1, 1, -3;
  const SolveReport r = solve(from_dense(m), Eigen::Vector2d::Zero(), with(GetParam()));
  EXPECT_EQ(r.solution.norm(), 0.0);
}

INSTANTIATE_TEST_SUITE_P(Methods, BothMethods,
                         ::testing::Values(SolverMethod::Direct, SolverMethod::Iterative),
                         [](const auto& info) { return to_string(info.param); });

TEST(Solver, RejectsToleranceOutOfRange) {
  const SparseMatrix id = from_dense(Eigen::MatrixXd::Identity(2, 2));
  EXPECT_THROW(solve(id, Eigen::Vector2d(1, 0), with(SolverMethod::Direct, 1e-16)), Error);
  EXPECT_THROW(solve(id, Eigen::Vector2d(1, 0), with(SolverMethod::Direct, 1e-5)), Error);
}

TEST(Solver, SingularMatrixFails) {
  Eigen::MatrixXd m(3, 3);
  m << 1, 2, 3, 2, 4, 6, 0, 0, 1;
  EXPECT_THROW(solve(from_dense(m), Eigen::Vector3d(1, 0, 0), with(SolverMethod::Direct)),
               SolveError);
}

TEST(Solver, IterativeFailureCarriesBestResidual) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
  m.diagonal() << 1, -1e-3, 1e3, 0.5;
  m(0, 3) = m(3, 0) = 2.0;
  SolveOptions o = with(SolverMethod::Iterative, 1e-14);
  o.max_iterations = 1;
  try {
    solve(from_dense(m), Eigen::Vector4d(1, 1, 1, 1), o);
    FAIL() << "expected SolveError";
  } catch (const SolveError& e) {
    EXPECT_GT(e.best_residual(), 1e-14);
    EXPECT_TRUE(std::isfinite(e.best_residual()));
  }
}

TEST(Solver, MethodNamesRoundTrip) {
  for (SolverMethod m : {SolverMethod::Direct, SolverMethod::Iterative})
    EXPECT_EQ(solver_method_from_string(to_string(m)), m);
  EXPECT_THROW(solver_method_from_string("cholesky"), Error);
}

TEST(Solver, SmallStokesSystemMatchesDenseLu) {
  auto mesh = std::make_shared<const Mesh>(Mesh::structured(2, 1));
  const ManufacturedCase mc(2, 1e-6);
  const Discretization disc(mesh, 2);
  const LinearSystem sys = assemble_system(mc, disc);
  ASSERT_EQ(sys.size, 12);
  const Eigen::MatrixXd dense(sys.matrix);
  const Eigen::VectorXd oracle = dense.fullPivLu().solve(sys.rhs);
  const SolveReport r = solve(sys, with(SolverMethod::Direct));
  EXPECT_LE(relative_change(r.solution, oracle), 1e-10);
  EXPECT_LE(r.residual, 1e-10);
}

TEST(Solver, DirectAndIterativeAgree) {
  for (auto [dim, n] : {std::pair{2, 8}, std::pair{3, 2}}) {
    auto mesh = std::make_shared<const Mesh>(Mesh::structured(dim, n));
    const ManufacturedCase mc(dim, 1e-6);
    const Discretization disc(mesh, 2);
    const LinearSystem sys = assemble_system(mc, disc);
    const SolveReport d = solve(sys, with(SolverMethod::Direct));
    const SolveReport it = solve(sys, with(SolverMethod::Iterative));
    EXPECT_LE(d.residual, 1e-10);
    EXPECT_LE(it.residual, 1e-10);
    EXPECT_LE(relative_change(it.solution, d.solution), 1e-8) << "dim " << dim;
  }
}

TEST(Solver, DirectIsDeterministic) {
  auto mesh = std::make_shared<const Mesh>(Mesh::structured(2, 4));
  const Discretization disc(mesh, 3);
  const LinearSystem sys = assemble_system(ManufacturedCase(2, 1e-6), disc);
  const SolveReport a = solve(sys, with(SolverMethod::Direct));
  const SolveReport b = solve(sys, with(SolverMethod::Direct));
  EXPECT_EQ(a.solution, b.solution);
}
