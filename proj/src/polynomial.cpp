#include "hhj/polynomial.hpp"

#include "hhj/quadrature.hpp"

#include <map>
#include <mutex>

namespace hhj {

int polynomial_dimension(int dim, int degree) {
  if (degree < 0) return 0;
  int num = 1;
  int den = 1;
  for (int i = 1; i <= dim; ++i) {
    num *= degree + i;
    den *= i;
  }
  return num / den;
}

MonomialSet::MonomialSet(int dim, int degree) : dim_(dim), degree_(degree) {
  require(dim >= 1 && dim <= 3, "MonomialSet: dimension must be 1, 2 or 3");
  require(degree >= 0, "MonomialSet: negative degree");
  for (int total = 0; total <= degree; ++total) {
    if (dim == 1) {
      exponents_.push_back({total, 0, 0});
    } else if (dim == 2) {
      for (int b = 0; b <= total; ++b) exponents_.push_back({total - b, b, 0});
    } else {
      for (int b = 0; b <= total; ++b)
        for (int c = 0; c <= total - b; ++c) exponents_.push_back({total - b - c, b, c});
    }
  }
}

int MonomialSet::count_below(int d) const { return polynomial_dimension(dim_, d - 1); }

Eigen::MatrixXd MonomialSet::eval(const std::vector<Vec>& points,
                                  const std::array<int, 3>& order) const {
  Eigen::MatrixXd out(points.size(), size());
  for (std::size_t q = 0; q < points.size(); ++q) {
    for (int m = 0; m < size(); ++m) {
      double value = 1.0;
      for (int i = 0; i < dim_; ++i) {
        const int e = exponents_[m][i];
        const int o = order[i];
        if (o > e) {
          value = 0.0;
          break;
        }
        double factor = 1.0;
        for (int r = 0; r < o; ++r) factor *= e - r;
        double power = 1.0;
        for (int r = 0; r < e - o; ++r) power *= points[q](i);
        value *= factor * power;
      }
      out(q, m) = value;
    }
  }
  return out;
}

Eigen::MatrixXd MonomialSet::values(const std::vector<Vec>& points) const {
  return eval(points, {0, 0, 0});
}

Eigen::MatrixXd MonomialSet::derivative(const std::vector<Vec>& points, int i) const {
  std::array<int, 3> order{0, 0, 0};
  order[i] = 1;
  return eval(points, order);
}

Eigen::MatrixXd MonomialSet::second_derivative(const std::vector<Vec>& points, int i,
                                               int j) const {
  std::array<int, 3> order{0, 0, 0};
  order[i] += 1;
  order[j] += 1;
  return eval(points, order);
}

namespace {

OrthonormalBasis build_orthonormal(int dim, int degree) {
  OrthonormalBasis basis;
  basis.monomials = MonomialSet(dim, degree);
  const auto& rule = simplex_rule(dim, 2 * degree);
  const Eigen::MatrixXd v = basis.monomials.values(rule.points);
  Eigen::VectorXd w(rule.size());
  double measure = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    w(q) = rule.weights[q];
    measure += rule.weights[q];
  }
  w /= measure;
  const int n = basis.monomials.size();
  // Modified Gram-Schmidt on the weighted samples, mirrored in coefficient space.
  Eigen::MatrixXd y = w.cwiseSqrt().asDiagonal() * v;
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(n, n);
  for (int j = 0; j < n; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < j; ++i) {
        const double proj = y.col(i).dot(y.col(j));
        y.col(j) -= proj * y.col(i);
        c.col(j) -= proj * c.col(i);
      }
    }
    const double norm = y.col(j).norm();
    y.col(j) /= norm;
    c.col(j) /= norm;
  }
  basis.coefficients = c;
  return basis;
}

}  // namespace

const OrthonormalBasis& orthonormal_basis(int dim, int degree) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, OrthonormalBasis> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find({dim, degree});
  if (it == cache.end()) it = cache.emplace(std::pair{dim, degree}, build_orthonormal(dim, degree)).first;
  return it->second;
}

}  // namespace hhj
