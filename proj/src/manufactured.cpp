#include "hhj/manufactured.hpp"

#include <array>
#include <cmath>

namespace hhj {

namespace {

// a(t) = t^2 (t-1)^2 = t^4 - 2t^3 + t^2 and its derivatives.
template <class T>
T a(T t, int order) {
  switch (order) {
    case 0: return t * t * (t - 1) * (t - 1);
    case 1: return 4 * t * t * t - 6 * t * t + 2 * t;
    case 2: return 12 * t * t - 12 * t + 2;
    case 3: return 24 * t - 12;
    case 4: return T(24);
    default: return T(0);
  }
}

// Mixed partial derivative of g = prod_i a(x_i).
template <class V>
typename V::Scalar dg(const V& x, const std::array<int, 3>& alpha) {
  typename V::Scalar v(1);
  for (int i = 0; i < x.size(); ++i) v *= a(x(i), alpha[i]);
  return v;
}

std::array<int, 3> unit(int i) {
  std::array<int, 3> e{0, 0, 0};
  e[i] += 1;
  return e;
}

std::array<int, 3> plus(std::array<int, 3> e, int i) {
  e[i] += 1;
  return e;
}

// Velocity u = curl psi written through derivatives of g: u_i = sum_j C_ij d_j g
// with a constant matrix C (2D: curl of a scalar; 3D: curl of (g, g, g)).
Mat curl_matrix(int dim) {
  Mat c = Mat::Zero(dim, dim);
  if (dim == 2) {
    c(0, 1) = -1.0;
    c(1, 0) = 1.0;
  } else {
    c(0, 1) = 1.0;
    c(0, 2) = -1.0;
    c(1, 2) = 1.0;
    c(1, 0) = -1.0;
    c(2, 0) = 1.0;
    c(2, 1) = -1.0;
  }
  return c;
}

template <class V>
V grad_theta_of(const V& x) {
  const int d = static_cast<int>(x.size());
  V g(d);
  for (int i = 0; i < d; ++i) {
    typename V::Scalar v = 3 * x(i) * x(i);
    for (int j = 0; j < d; ++j)
      if (j != i) v *= x(j) * x(j) * x(j);
    g(i) = v;
  }
  return g;
}

template <class V>
V load_of(const ManufacturedCase& mc, const V& x) {
  using T = typename V::Scalar;
  const int d = mc.dim;
  const Mat c = curl_matrix(d);
  // Laplacian of grad g, component j: sum_k d_j d_k d_k g
  V lap_grad(d);
  for (int j = 0; j < d; ++j) {
    T s(0);
    for (int k = 0; k < d; ++k) s += dg(x, plus(plus(unit(j), k), k));
    lap_grad(j) = s;
  }
  const V grad_theta = grad_theta_of(x);
  V f(d);
  for (int i = 0; i < d; ++i) {
    T visc(0);
    for (int j = 0; j < d; ++j) visc += T(c(i, j)) * lap_grad(j);
    const T grad_p = 5 * x(i) * x(i) * x(i) * x(i);
    f(i) = -T(mc.nu) * T(mc.velocity_scale) * visc + T(mc.pressure_scale) * grad_p +
           T(mc.theta_scale) * grad_theta(i);
  }
  return f;
}

}  // namespace

ManufacturedCase::ManufacturedCase(int d, double viscosity) : dim(d), nu(viscosity) {
  require(d == 2 || d == 3, "ManufacturedCase: dim must be 2 or 3");
  require(viscosity > 0.0, "ManufacturedCase: nu must be positive");
}

Vec ManufacturedCase::psi(const Vec& x) const {
  const double g = velocity_scale * dg(x, {0, 0, 0});
  return dim == 2 ? Vec::Constant(1, g) : Vec::Constant(3, g);
}

Vec ManufacturedCase::velocity(const Vec& x) const {
  const Mat c = curl_matrix(dim);
  Vec grad(dim);
  for (int j = 0; j < dim; ++j) grad(j) = dg(x, unit(j));
  return velocity_scale * (c * grad);
}

Mat ManufacturedCase::velocity_gradient(const Vec& x) const {
  const Mat c = curl_matrix(dim);
  Mat hess(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int k = 0; k < dim; ++k) hess(j, k) = dg(x, plus(unit(j), k));
  return velocity_scale * (c * hess);
}

Mat ManufacturedCase::stress(const Vec& x) const { return nu * velocity_gradient(x); }

double ManufacturedCase::theta(const Vec& x) const {
  double v = 1.0;
  for (int i = 0; i < dim; ++i) v *= x(i) * x(i) * x(i);
  return v;
}

Vec ManufacturedCase::grad_theta(const Vec& x) const { return grad_theta_of(x); }

double ManufacturedCase::pressure(const Vec& x) const {
  double p = -dim / 6.0;
  for (int i = 0; i < dim; ++i) p += std::pow(x(i), 5);
  // mean of prod x_i^3 over the unit cube is 4^-dim
  const double theta_mean = std::pow(0.25, dim);
  return pressure_scale * p + theta_scale * (theta(x) - theta_mean);
}

Vec ManufacturedCase::load(const Vec& x) const { return load_of(*this, x); }

LongVec ManufacturedCase::load(const LongVec& x) const { return load_of(*this, x); }

}  // namespace hhj
