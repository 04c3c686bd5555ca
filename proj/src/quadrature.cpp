#include "hhj/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace hhj {

Eigen::VectorXd QuadratureRule::barycentric(std::size_t q) const {
  Eigen::VectorXd lambda(dim + 1);
  lambda(0) = 1.0 - points[q].sum();
  for (int i = 0; i < dim; ++i) lambda(i + 1) = points[q](i);
  return lambda;
}

Eigen::Matrix<long double, Eigen::Dynamic, 1> QuadratureRule::extended_barycentric(std::size_t q) const {
  Eigen::Matrix<long double, Eigen::Dynamic, 1> lambda(dim + 1);
  lambda(0) = 1.0L - extended_points[q].sum();
  for (int i = 0; i < dim; ++i) lambda(i + 1) = extended_points[q](i);
  return lambda;
}

namespace {

void gauss_legendre01_extended(int npoints, std::vector<long double>& nodes,
                               std::vector<long double>& weights) {
  nodes.assign(npoints, 0.0L);
  weights.assign(npoints, 0.0L);
  for (int i = 0; i < npoints; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess.
    long double x = std::cos(std::numbers::pi_v<long double> * (i + 0.75L) / (npoints + 0.5L));
    long double dp = 0.0L;
    for (int it = 0; it < 100; ++it) {
      long double p0 = 1.0L;
      long double p1 = x;
      for (int k = 2; k <= npoints; ++k) {
        const long double p2 = ((2.0L * k - 1.0L) * x * p1 - (k - 1.0L) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = npoints * (x * p1 - p0) / (x * x - 1.0L);
      const long double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-19L) break;
    }
    // Map [-1, 1] to [0, 1], ascending order.
    nodes[npoints - 1 - i] = 0.5L * (x + 1.0L);
    weights[npoints - 1 - i] = 1.0L / ((1.0L - x * x) * dp * dp);
  }
}

void add_point(QuadratureRule& rule, LongVec p, long double w) {
  rule.points.push_back(p.cast<double>());
  rule.weights.push_back(static_cast<double>(w));
  rule.extended_points.push_back(std::move(p));
  rule.extended_weights.push_back(w);
}

QuadratureRule build_rule(int dim, int degree) {
  QuadratureRule rule;
  rule.dim = dim;
  rule.degree = degree;
  std::vector<long double> xu, wu, xv, wv, xw, ww;
  if (dim == 1) {
    gauss_legendre01_extended(degree / 2 + 1, xu, wu);
    for (std::size_t i = 0; i < xu.size(); ++i) {
      LongVec p(1);
      p << xu[i];
      add_point(rule, p, wu[i]);
    }
    return rule;
  }
  if (dim == 2) {
    // x = u, y = v (1 - u), jacobian (1 - u).
    gauss_legendre01_extended((degree + 1) / 2 + 1, xu, wu);
    gauss_legendre01_extended(degree / 2 + 1, xv, wv);
    for (std::size_t i = 0; i < xu.size(); ++i)
      for (std::size_t j = 0; j < xv.size(); ++j) {
        LongVec p(2);
        p << xu[i], xv[j] * (1.0L - xu[i]);
        add_point(rule, p, wu[i] * wv[j] * (1.0L - xu[i]));
      }
    return rule;
  }
  // x = u, y = v (1 - u), z = w (1 - u)(1 - v), jacobian (1 - u)^2 (1 - v).
  gauss_legendre01_extended((degree + 2) / 2 + 1, xu, wu);
  gauss_legendre01_extended((degree + 1) / 2 + 1, xv, wv);
  gauss_legendre01_extended(degree / 2 + 1, xw, ww);
  for (std::size_t i = 0; i < xu.size(); ++i)
    for (std::size_t j = 0; j < xv.size(); ++j)
      for (std::size_t k = 0; k < xw.size(); ++k) {
        const long double u = xu[i];
        const long double v = xv[j];
        LongVec p(3);
        p << u, v * (1.0L - u), xw[k] * (1.0L - u) * (1.0L - v);
        add_point(rule, p, wu[i] * wv[j] * ww[k] * (1.0L - u) * (1.0L - u) * (1.0L - v));
      }
  return rule;
}

}  // namespace

void gauss_legendre01(int npoints, std::vector<double>& nodes, std::vector<double>& weights) {
  std::vector<long double> x, w;
  gauss_legendre01_extended(npoints, x, w);
  nodes.assign(x.begin(), x.end());
  weights.assign(w.begin(), w.end());
}

const QuadratureRule& simplex_rule(int dim, int degree) {
  require(dim >= 1 && dim <= 3, "simplex_rule: dimension must be 1, 2 or 3");
  require(degree >= 0 && degree <= kMaxQuadratureDegree,
          "simplex_rule: unsupported degree " + std::to_string(degree));
  static const auto rules = [] {
    std::array<std::array<QuadratureRule, kMaxQuadratureDegree + 1>, 3> all;
    for (int d = 1; d <= 3; ++d)
      for (int p = 0; p <= kMaxQuadratureDegree; ++p) all[d - 1][p] = build_rule(d, p);
    return all;
  }();
  return rules[dim - 1][degree];
}

}  // namespace hhj
