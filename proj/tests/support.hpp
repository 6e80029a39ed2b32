#pragma once

#include "fkhom/grid.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace fkhom::test {

/// J_0 by its power series; accurate to ~1e-15 for |x| < 5.
inline double j0_series(double x) {
  double term = 1.0, sum = 1.0;
  const double q = -0.25 * x * x;
  for (int k = 1; k < 60; ++k) {
    term *= q / (double(k) * k);
    sum += term;
  }
  return sum;
}

/// J_1 by its power series.
inline double j1_series(double x) {
  double term = 0.5 * x, sum = term;
  const double q = -0.25 * x * x;
  for (int k = 1; k < 60; ++k) {
    term *= q / (double(k) * (k + 1));
    sum += term;
  }
  return sum;
}

template <typename F>
double bisect(F f, double lo, double hi) {
  double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// First zero of J_0 by bisection of the series on [2, 3].
inline double j01_oracle() { return bisect(j0_series, 2.0, 3.0); }

/// Max of J_1 on [0, j01]: the zero of J_1' = J_0 - J_1/x near 1.84.
inline double j1_max_oracle() {
  const double x = bisect([](double t) { return j0_series(t) - j1_series(t) / t; }, 1.0, 2.5);
  return j1_series(x);
}

/// Area of the circular segment cut from a disk of radius r by a chord at
/// distance d from the centre.
inline double segment_area(double r, double d) { return r * r * std::acos(d / r) - d * std::sqrt(r * r - d * d); }

/// Union of 2-5 random disks around `c`, reduced to the component holding
/// the first disk's centre. Deterministic in `seed`.
inline DomainMask random_blob(unsigned seed, double h = 1.0 / 32, const Eigen::Vector2d& c = Eigen::Vector2d(0.5, 0.5),
                              double scale = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U01(0.0, 1.0);
  const GridWindow w = GridWindow::centered(c, 3.2 * scale, h);
  const int k = 2 + static_cast<int>(U01(rng) * 4);
  std::vector<Eigen::Vector2d> centres;
  std::vector<double> radii;
  for (int q = 0; q < k; ++q) {
    const double r = scale * (0.25 + 0.3 * U01(rng));
    const double ang = 2.0 * M_PI * U01(rng);
    const double off = q == 0 ? 0.0 : scale * 0.5 * U01(rng);
    centres.push_back(c + off * Eigen::Vector2d(std::cos(ang), std::sin(ang)));
    radii.push_back(r);
  }
  DomainMask m = mask_from(w, [&](const Eigen::Vector2d& x) {
    for (std::size_t q = 0; q < centres.size(); ++q)
      if ((x - centres[q]).norm() < radii[q]) return true;
    return false;
  });
  int count = 0;
  const Eigen::ArrayXXi lab = label_components(m, &count);
  const Eigen::Vector2d q0 = (centres[0] - w.origin) / h;
  const int keep = lab(static_cast<int>(q0(0)), static_cast<int>(q0(1)));
  DomainMask out(w);
  for (int j = 0; j < w.ny; ++j)
    for (int i = 0; i < w.nx; ++i) out.set(i, j, lab(i, j) == keep);
  return out;
}

/// B with a random fraction of its boundary cells removed and of the outside
/// neighbours of the boundary added.
inline DomainMask jitter_boundary(const DomainMask& B, unsigned seed, double frac) {
  std::mt19937 rng(seed);
  std::bernoulli_distribution flip(frac);
  DomainMask A = B;
  for (const auto& b : B.boundary_cells()) {
    if (flip(rng)) A.set(b(0), b(1), false);
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int i = b(0) + di[k], j = b(1) + dj[k];
      if (B.window().contains(i, j) && !B(i, j) && flip(rng)) A.set(i, j, true);
    }
  }
  return A;
}

/// Right side of |A D B|/|B| <= (d/|B|) [1 + 1/gamma + |log(2 + P |B| / d)|^p].
inline double dist_omega_bound(double d, double volB, double P, double p, double gamma) {
  return d / volB * (1.0 + 1.0 / gamma + std::pow(std::abs(std::log(2.0 + P * volB / d)), p));
}

inline std::vector<DomainMask> blob_corpus(int n, unsigned seed0 = 1000, double h = 1.0 / 32) {
  std::vector<DomainMask> v;
  for (int s = 0; s < n; ++s) v.push_back(random_blob(seed0 + static_cast<unsigned>(s), h));
  return v;
}

}  // namespace fkhom::test
