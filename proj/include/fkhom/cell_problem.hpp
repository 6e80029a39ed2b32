#pragma once

#include "fkhom/coeff_field.hpp"
#include "fkhom/geometry.hpp"
#include "fkhom/grid.hpp"

#include <Eigen/Dense>

#include <array>

namespace fkhom {

struct CellOptions {
  double tol = 1e-10;  ///< relative residual of the periodic solve
  int max_iter = 50000;
};

/// Periodic mean-zero correctors chi_{e_1}, chi_{e_2} on the n x n cell grid,
/// values at cell centres ((i+1/2)/n, (j+1/2)/n).
struct CorrectorSet {
  int n = 0;
  std::array<GridFunction, 2> chi;
  std::array<double, 2> residual_norms{0.0, 0.0};
  std::array<int, 2> iterations{0, 0};

  /// chi_q = q_1 chi_{e_1} + q_2 chi_{e_2} at a grid cell (indices wrap).
  double value(const Eigen::Vector2d& q, int i, int j) const;
  /// Periodic bilinear interpolation of chi_{e_k} at x.
  double at(int k, const Eigen::Vector2d& x) const;
};

struct HomogenizedTensor {
  Eigen::Matrix2d abar = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d sqrt_abar = Eigen::Matrix2d::Identity();
  double det_abar = 1.0;
  double symmetry_discrepancy = 0.0;  ///< |abar_12 - abar_21| before symmetrisation

  static HomogenizedTensor from_matrix(const Eigen::Matrix2d& M);
};

/// Solve -div(a(q + grad chi_q)) = 0 on the torus for q = e_1, e_2 with the
/// five-point flux scheme and face samples of `a`. Conjugate gradients with a
/// mean-zero projection every iteration. Throws ConvergenceError on failure.
CorrectorSet solve_correctors(const CoeffField& a, const CellOptions& opts = {});

/// Same system for a single direction q (used for rotated-basis checks).
GridFunction solve_corrector(const CoeffField& a, const Eigen::Vector2d& q, const CellOptions& opts = {},
                             double* residual = nullptr);

/// Discrete cell energy <(q + grad phi) . a (q + grad phi)> of a periodic grid
/// function phi; its minimum over phi is q . abar q.
double cell_energy(const CoeffField& a, const Eigen::Vector2d& q, const GridFunction& phi);

/// abar_ij = <(e_i + grad chi_i) . a (e_j + grad chi_j)>, symmetrised.
/// Throws InconsistencyError if the result leaves [Lambda^{-1}, Lambda].
HomogenizedTensor homogenize(const CoeffField& a, const CorrectorSet& chi);

/// Convenience: correctors then homogenize.
HomogenizedTensor homogenized_tensor(const CoeffField& a, const CellOptions& opts = {});

struct CorrectedTrial {
  DomainMask mask;
  GridFunction xi;              ///< u_E + zeta grad u_E . chi, zero off E
  double rayleigh = 0.0;        ///< R(xi) with the oscillating coefficient
  double lambda_abar = 0.0;     ///< discrete lambda_1(E, abar) on the same mask
  double excess = 0.0;          ///< R(xi)/lambda_abar - 1
  double measured_C = 0.0;      ///< excess * |E|^{1/(2d)}
};

/// Two-scale trial field on an abar-ellipsoid. The cutoff zeta is 1 inside the
/// (1-t)-dilate of E, 0 outside E and linear in the normalised radius between.
CorrectedTrial corrected_trial(const Ellipsoid& E, const HomogenizedTensor& abar, const CorrectorSet& chi,
                               const CoeffField& a, double t, double h);

}  // namespace fkhom
