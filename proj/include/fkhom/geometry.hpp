#pragma once

#include "fkhom/constants.hpp"
#include "fkhom/grid.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>

namespace fkhom {

/// Square root of a symmetric positive definite 2x2 matrix, by its
/// eigendecomposition.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> spd_sqrt(const Eigen::Matrix<Scalar, 2, 2>& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, 2, 2>> es;
  es.computeDirect(M);
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

/// E = center + abar^{1/2} B_rho, of volume det(abar)^{1/2} |B_1| rho^2.
template <typename Scalar>
struct EllipsoidT {
  Eigen::Matrix<Scalar, 2, 1> center = Eigen::Matrix<Scalar, 2, 1>::Zero();
  Scalar rho = Scalar(1);
  Eigen::Matrix<Scalar, 2, 2> sqrt_abar = Eigen::Matrix<Scalar, 2, 2>::Identity();

  static EllipsoidT from_abar(const Eigen::Matrix<Scalar, 2, 2>& abar, Scalar rho,
                              const Eigen::Matrix<Scalar, 2, 1>& c = Eigen::Matrix<Scalar, 2, 1>::Zero()) {
    return {c, rho, spd_sqrt(abar)};
  }
  /// Member of the family with prescribed volume.
  static EllipsoidT with_volume(const Eigen::Matrix<Scalar, 2, 2>& abar, Scalar volume,
                                const Eigen::Matrix<Scalar, 2, 1>& c = Eigen::Matrix<Scalar, 2, 1>::Zero()) {
    const Eigen::Matrix<Scalar, 2, 2> s = spd_sqrt(abar);
    return {c, std::sqrt(volume / (s.determinant() * unit_ball_volume<Scalar>())), s};
  }

  Scalar volume() const { return sqrt_abar.determinant() * unit_ball_volume<Scalar>() * rho * rho; }
  /// |abar^{-1/2}(x - center)| / rho; below 1 inside.
  Scalar normalized_radius(const Eigen::Matrix<Scalar, 2, 1>& x) const {
    return sqrt_abar.ldlt().solve(x - center).norm() / rho;
  }
  bool contains(const Eigen::Matrix<Scalar, 2, 1>& x) const { return normalized_radius(x) < Scalar(1); }
  /// Half-widths of the axis-aligned bounding box.
  Eigen::Matrix<Scalar, 2, 1> half_extent() const { return rho * sqrt_abar.rowwise().norm(); }
};

using Ellipsoid = EllipsoidT<double>;

/// Lowest Dirichlet eigenvalue of -div(abar grad) on an abar-ellipsoid of volume m:
/// lambda_1(E, abar) = lambda_1(B_rho, id) = j_{0,1}^2 |B_1| det(abar)^{1/2} / m.
template <typename Scalar>
Scalar ellipsoid_eigenvalue(const Eigen::Matrix<Scalar, 2, 2>& abar, Scalar m) {
  return unit_disk_eigenvalue<Scalar>() * unit_ball_volume<Scalar>() * std::sqrt(abar.determinant()) / m;
}

/// Capped logarithmic modulus omega(s) = min(gamma, |log(2 + 1/s)|^{-p}), omega(0) = 0.
template <typename Scalar>
Scalar omega(Scalar s, Scalar p, Scalar gamma) {
  if (!(s > Scalar(0))) return Scalar(0);
  return std::min(gamma, std::pow(std::log(Scalar(2) + Scalar(1) / s), -p));
}

/// Window of spacing h holding E with `margin` free cells on every side,
/// aligned to the lattice h Z^2.
GridWindow window_for(const Ellipsoid& E, double h, int margin = 2);

/// Cells whose centres satisfy |abar^{-1/2}(x - c)| < rho. Throws DomainError
/// unless E fits the window with a one-cell margin.
DomainMask rasterize_ellipsoid(const Ellipsoid& E, const GridWindow& window);

/// Exact squared Euclidean distance transform (in cell units) to the cells
/// where `feature` is true; infinity when there are none.
Eigen::ArrayXXd squared_distance_transform(const DomainMask::Cells& feature);

/// Distance from each cell centre of `window` to the cell-face boundary of U:
/// centre distance to the nearest cell of opposite occupancy minus h/2.
/// Cells beyond U's window count as unoccupied.
GridFunction boundary_distance(const DomainMask& U, const GridWindow& window);

/// rho(x, U): boundary distance, positive outside U and negative inside.
GridFunction signed_distance(const DomainMask& U);

struct AsymmetryResult {
  double value = 0.0;  ///< |U Delta E| / |U|
  Ellipsoid best;
};

/// Fraenkel-type asymmetry over abar-ellipsoids with |E| = |U|, searching the
/// centre by compass search from the barycentre down to step h/2. With
/// `free_volume` the radius is searched too.
AsymmetryResult asymmetry(const DomainMask& U, const Eigen::Matrix2d& abar, bool free_volume = false);

/// |U Delta E| by counting cells of U's lattice.
double symmetric_difference_volume(const DomainMask& U, const Ellipsoid& E);

/// Hausdorff distance between the boundary cell-centre sets of U and V.
double hausdorff_boundary(const DomainMask& U, const DomainMask& V);

struct RegularityReport {
  double kappa0 = 0.0;   ///< inner/outer density lower bound (sampled)
  double kappaU = 0.0;   ///< global density quantity (sampled suprema)
  double strip_P = 0.0;  ///< boundary strip constant over t = h, 2h, 4h, ...
  std::optional<double> hausdorff_to;
};

/// Density fractions |U cap B_r(x)|/|B_r| and |B_r \ U|/|B_r| for the cell
/// centre x = (i, j) of U's window, ball volumes by lattice counting.
std::pair<double, double> density_fractions(const DomainMask& U, int i, int j, double r);

RegularityReport density_report(const DomainMask& U, const DomainMask* reference = nullptr);

/// sup over all t > 0 of |{x in U : d(x, dU) <= t}| / (|U|^{1/2} t); the
/// supremum is attained at one of the finitely many distance values.
double strip_constant_sup(const DomainMask& U);

/// dist_omega(A, B) = int_{A Delta B} omega(d(x, dB) / |B|^{1/2}) dx.
/// Requires p > d + 4 and 0 < gamma < |log 2|^{-p}.
double dist_omega(const DomainMask& A, const DomainMask& B, double p, double gamma);

/// int_B omega(d(x, dB) / |B|^{1/2}) dx.
double omega_mass(const DomainMask& B, double p, double gamma);

void check_omega_parameters(double p, double gamma);

}  // namespace fkhom
