#include "hhj/polynomial.hpp"
#include "hhj/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace hhj;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// Exact integral of x^a y^b z^c over the unit simplex: a! b! c! / (a+b+c+d)!.
double exact_monomial(int dim, const std::array<int, 3>& e) {
  double num = 1.0;
  int sum = 0;
  for (int i = 0; i < dim; ++i) {
    num *= factorial(e[i]);
    sum += e[i];
  }
  return num / factorial(sum + dim);
}

}  // namespace

class QuadratureExactness : public ::testing::TestWithParam<int> {};

TEST_P(QuadratureExactness, IntegratesMonomialsUpToDegree) {
  const int dim = GetParam();
  for (int degree = 0; degree <= kMaxQuadratureDegree; ++degree) {
    const QuadratureRule& rule = simplex_rule(dim, degree);
    const MonomialSet m(dim, degree);
    const Eigen::MatrixXd v = m.values(rule.points);
    for (int i = 0; i < m.size(); ++i) {
      double sum = 0.0;
      for (std::size_t q = 0; q < rule.size(); ++q) sum += rule.weights[q] * v(q, i);
      const double exact = exact_monomial(dim, m.exponent(i));
      EXPECT_NEAR(sum, exact, 1e-14 * std::max(1.0, exact * 1e3))
          << "dim " << dim << " degree " << degree << " monomial " << i;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllDims, QuadratureExactness, ::testing::Values(1, 2, 3));

TEST(Quadrature, WeightsPositiveAndPointsInside) {
  for (int dim = 1; dim <= 3; ++dim) {
    const QuadratureRule& rule = simplex_rule(dim, 9);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      EXPECT_GT(rule.weights[q], 0.0);
      const Eigen::VectorXd b = rule.barycentric(q);
      EXPECT_GT(b.minCoeff(), 0.0);
      EXPECT_NEAR(b.sum(), 1.0, 1e-15);
    }
  }
}

TEST(Quadrature, RejectsUnsupported) {
  EXPECT_THROW(simplex_rule(4, 2), Error);
  EXPECT_THROW(simplex_rule(2, 21), Error);
  EXPECT_THROW(simplex_rule(2, -1), Error);
}

TEST(Quadrature, GaussLegendreAscending) {
  std::vector<double> x;
  std::vector<double> w;
  gauss_legendre01(5, x, w);
  ASSERT_EQ(x.size(), 5u);
  for (std::size_t i = 1; i < x.size(); ++i) EXPECT_LT(x[i - 1], x[i]);
  EXPECT_NEAR(x[2], 0.5, 1e-15);
  double s = 0.0;
  for (double v : w) s += v;
  EXPECT_NEAR(s, 1.0, 1e-15);
}

TEST(Polynomial, OrthonormalBasisIsOrthonormal) {
  for (int dim = 1; dim <= 3; ++dim)
    for (int degree = 0; degree <= 4; ++degree) {
      const OrthonormalBasis& basis = orthonormal_basis(dim, degree);
      const QuadratureRule& rule = simplex_rule(dim, 2 * degree);
      const Eigen::MatrixXd v = basis.values(rule.points);
      double total = 0.0;
      for (double w : rule.weights) total += w;
      Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(v.cols(), v.cols());
      for (std::size_t q = 0; q < rule.size(); ++q)
        gram += (rule.weights[q] / total) * v.row(q).transpose() * v.row(q);
      EXPECT_LT((gram - Eigen::MatrixXd::Identity(v.cols(), v.cols())).norm(), 1e-12);
    }
}

TEST(Polynomial, Dimensions) {
  EXPECT_EQ(polynomial_dimension(2, 3), 10);
  EXPECT_EQ(polynomial_dimension(3, 2), 10);
  EXPECT_EQ(polynomial_dimension(1, 4), 5);
  EXPECT_EQ(MonomialSet(2, 3).count_below(2), 3);
}
