#pragma once

#include "fkhom/cell_problem.hpp"
#include "fkhom/config.hpp"
#include "fkhom/eigensolver.hpp"
#include "fkhom/geometry.hpp"
#include "fkhom/grid.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fkhom {

/// g(x) = mu [1 + omega~(rho(x, U*) / |U*|^{1/2})] with omega~ the odd
/// reflection of the capped modulus: above mu outside U*, below inside,
/// equal to mu(1 + gamma0) beyond the cap distance.
struct PenaltyField {
  GridFunction g;     ///< values on `window`
  GridWindow window;  ///< reference window padded past the cap distance
  DomainMask reference;
  double mu = 0.0;
  double gamma0 = 0.0;
  double p = 0.0;

  double far_value() const { return mu * (1.0 + gamma0); }
  /// g at cell (i, j) of a window on the same lattice.
  double at(const GridWindow& w, int i, int j) const;
};

struct PenaltyHypotheses {
  double ratio_min = 0.0;   ///< min g / mu
  double ratio_max = 0.0;   ///< max g / mu
  double gamma_hyp = 0.0;   ///< smallest gamma with (1+gamma)^{-1} <= g/mu <= 1+gamma
  bool scaled_ellipticity = false;  ///< with gamma = gamma0
  bool localizing = false;          ///< g is the constant far value beyond the cap distance
  /// max |g(x)-g(y)| / (mu omega*((|x-y|+h)/|U*|^{1/2})) over sampled pairs, omega* the
  /// modulus of continuity of the odd reflection of omega
  double modulus_ratio = 0.0;
  bool dini = false;
};

/// Penalty term of J: either a constant mu or a PenaltyField.
class Penalty {
 public:
  Penalty(double mu) : mu_(mu) {}  // NOLINT(google-explicit-constructor)
  Penalty(const PenaltyField& g) : mu_(g.mu), field_(&g) {}  // NOLINT(google-explicit-constructor)

  double mu() const { return mu_; }
  bool is_constant() const { return field_ == nullptr; }
  double at(const GridWindow& w, int i, int j) const { return field_ ? field_->at(w, i, j) : mu_; }
  /// h^2 sum of g over the cells of U.
  double volume_term(const DomainMask& U) const;

 private:
  double mu_;
  const PenaltyField* field_ = nullptr;
};

/// Discrete J = lambda_1(U, a) + h^2 sum_U g.
double energy_J(const Medium& a, const Penalty& g, const DomainMask& U, const EigenOptions& opts = {});

struct TraceRow {
  int iter = 0;
  double energy = 0.0;
  double lambda1 = 0.0;
  double volume = 0.0;
  std::string accepted_move;
};

struct OptResult {
  DomainMask mask;
  double energy = 0.0;
  double lambda1 = 0.0;
  EigenResult eig;
  std::vector<TraceRow> trace;
  bool converged = false;
  int iterations = 0;
};

/// Descent on J over masks of the init window. Candidates per step: superlevel
/// sets of the eigenfunction at quantile levels (ranked by the Rayleigh
/// bound of (u - t)_+, best few solved), one-cell dilation and erosion,
/// shape-gradient moves that add outside neighbours where a |du/dn|^2 > g and
/// drop boundary cells where it is below g, and the principal component.
/// The best strict improvement is accepted; the quantile spacing halves on a
/// stall. Throws CollapseError when init has fewer than 5 cells, DomainError
/// when the window is too small for mu.
OptResult minimize_J(const Medium& a, const Penalty& g, const DomainMask& init, const OptOptions& opt = {},
                     const EigenOptions& eig = {});

struct EllipsoidMinimizer {
  Ellipsoid E;
  double f = 0.0;  ///< rho^{-2} j^2 + mu det^{1/2} pi rho^2
};

/// Minimizer of J_mu(., abar) over abar-ellipsoids:
/// rho^4 = mu^{-1} det(abar)^{-1/2} pi^{-1} j^2.
EllipsoidMinimizer ellipsoid_minimizer(const Eigen::Matrix2d& abar, double mu,
                                       const Eigen::Vector2d& center = Eigen::Vector2d::Zero());

/// Square window on the h lattice around `center` with side
/// window_factor mu^{-1/4} lambda_max(abar)^{1/2} det(abar)^{-1/8}.
GridWindow optimization_window(const Eigen::Matrix2d& abar, double mu, double h, const Eigen::Vector2d& center,
                               double window_factor);

/// Cells x of `target` with c + (x - c)/s in U (nearest-cell lookup), c the barycentre of U.
DomainMask rescale_mask(const DomainMask& U, double s, const GridWindow& target);

struct VolumeMapRow {
  double mu = 0.0;
  double volume = 0.0;
  double energy = 0.0;
  double lambda1 = 0.0;
  double perimeter = 0.0;
  DomainMask mask;
};

struct VolumeMapScan {
  std::vector<VolumeMapRow> rows;
  std::vector<std::pair<double, double>> detected_jumps;  ///< mu intervals
  std::vector<std::pair<double, double>> violations;      ///< mu intervals where the volume grew beyond 2h perimeter
  bool monotone() const { return violations.empty(); }
};

struct ScanSetup {
  Eigen::Matrix2d abar = Eigen::Matrix2d::Identity();
  Eigen::Vector2d center = Eigen::Vector2d::Constant(0.5);
  double h = 1.0 / 16;
  OptOptions opt;
  EigenOptions eig;
};

/// minimize_J at one mu on an optimization_window around the start: the
/// rasterized ellipsoid minimizer at setup.center, or `previous` rescaled by
/// (mu_prev/mu)^{1/4} about its barycentre.
OptResult optimize_at(const Medium& a, double mu, const DomainMask* previous, double mu_prev, const ScanSetup& setup);

/// minimize_J along an increasing mu grid. The first point starts from the
/// rasterized ellipsoid minimizer, later points from the previous minimizer
/// rescaled by (mu_prev/mu)^{1/4}.
VolumeMapScan volume_map(const Medium& a, const std::vector<double>& mu_grid, const ScanSetup& setup);

/// Geometric grid of n points from lo to hi.
std::vector<double> geometric_grid(double lo, double hi, int n);

struct MuSelection {
  double mu = 0.0;
  double mu_lo = 0.0, mu_hi = 0.0;
  double vol_lo = 0.0, vol_hi = 0.0;  ///< volumes at mu_lo (larger) and mu_hi
  bool singular = false;               ///< bracket collapsed across a volume jump
};

/// Bracket m between consecutive scan rows and bisect in log mu, calling
/// `volume_at(mu)` to refine, until the bracket volumes are within `vol_tol`
/// of m or `max_steps` is reached; returns the bracket midpoint. Throws
/// RangeError if m lies outside the scanned volumes.
MuSelection select_mu(const VolumeMapScan& scan, double m, const std::function<double(double)>& volume_at,
                      double vol_tol, int max_steps = 8);

/// Throws RangeError unless p > 6 and 0 < gamma0 < log(2)^{-p}.
PenaltyField build_penalty(const DomainMask& U_star, double mu_star, double p, double gamma0);
PenaltyHypotheses validate_penalty(const PenaltyField& g, int pairs = 400, unsigned seed = 7);

/// |U| (J_mu(U) - best_known).
double energy_deficit(const Medium& a, const DomainMask& U, double mu, double best_known,
                      const EigenOptions& opts = {});

struct PipelineReport {
  DomainMask omega;
  double mu_star = 0.0;
  bool singular_mu = false;
  PenaltyHypotheses hypotheses;
  double lambda_U = 0.0;
  double lambda_omega = 0.0;
  double eigen_closeness = 0.0;    ///< m |lambda_1(U) - lambda_1(Omega*)|
  double measure_closeness = 0.0;  ///< |U Delta Omega*| / m
  double dist_omega_ratio = 0.0;   ///< dist_omega(Omega*, U) / |U|
  double deficit = 0.0;            ///< energy_deficit of U against the J_mu* scan minimum
  double closeness_bound = 0.0;    ///< 2 deficit + 2 m lambda_1(U) |U Delta Omega*| / m
  RegularityReport regularity;
};

/// Replace the volume constraint |Omega| = |U| by the penalty built around
/// U: choose mu* for m = |U| from a local volume map, build g and minimize J_g
/// starting at U.
PipelineReport hard_constraint_pipeline(const Medium& a, const DomainMask& U, double p, double gamma0,
                                        const ScanSetup& setup);

}  // namespace fkhom
