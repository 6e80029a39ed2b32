#pragma once

#include <cmath>
#include <numbers>

namespace fkhom {

/// First positive zero of J_0, i.e. the unit-disk Dirichlet eigenvalue is its square.
template <typename Scalar = double>
Scalar bessel_j0_first_zero() {
  // Newton on J_0 with J_0' = -J_1, started close to the root.
  Scalar x = Scalar(2.4);
  for (int it = 0; it < 50; ++it) {
    const Scalar f = std::cyl_bessel_j(Scalar(0), x);
    const Scalar df = -std::cyl_bessel_j(Scalar(1), x);
    const Scalar step = f / df;
    x -= step;
    if (std::abs(step) < Scalar(1e-15) * x) break;
  }
  return x;
}

/// lambda_1(B_1, id) in two dimensions.
template <typename Scalar = double>
Scalar unit_disk_eigenvalue() {
  const Scalar j = bessel_j0_first_zero<Scalar>();
  return j * j;
}

/// |B_1| in two dimensions.
template <typename Scalar = double>
constexpr Scalar unit_ball_volume() {
  return std::numbers::pi_v<Scalar>;
}

inline constexpr int kDim = 2;

}  // namespace fkhom
