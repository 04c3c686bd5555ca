#pragma once

#include "hhj/types.hpp"

namespace hhj {

/// Closed-form Stokes solution on the unit square/cube built from the stream
/// function psi = a(x)a(y) (2D) or psi = (g, g, g), g = a(x)a(y)a(z) (3D) with
/// a(t) = t^2 (t - 1)^2, and the pressure p = sum x_i^5 - d/6.
///
/// The load is f = velocity_scale (-nu Lap u) + pressure_scale grad p
///                 + theta_scale grad theta,
/// with theta = prod x_i^3. Exact fields are scaled the same way, and the
/// theta part is added to the exact pressure with its mean removed.
struct ManufacturedCase {
  int dim = 2;
  double nu = 1e-6;
  double velocity_scale = 1.0;
  double pressure_scale = 1.0;
  double theta_scale = 0.0;

  ManufacturedCase() = default;
  ManufacturedCase(int d, double viscosity);

  /// Stream function (1 component in 2D, 3 in 3D).
  [[nodiscard]] Vec psi(const Vec& x) const;
  [[nodiscard]] Vec velocity(const Vec& x) const;
  /// (grad u)_ij = d_j u_i.
  [[nodiscard]] Mat velocity_gradient(const Vec& x) const;
  /// sigma = nu grad u.
  [[nodiscard]] Mat stress(const Vec& x) const;
  [[nodiscard]] double pressure(const Vec& x) const;
  [[nodiscard]] Vec load(const Vec& x) const;
  [[nodiscard]] LongVec load(const LongVec& x) const;
  [[nodiscard]] Vec grad_theta(const Vec& x) const;
  [[nodiscard]] double theta(const Vec& x) const;
};

}  // namespace hhj
