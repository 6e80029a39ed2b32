#pragma once

#include "fkhom/shape_opt.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace fkhom {

struct SweepRow {
  double mu = 0.0;
  double m = 0.0;
  double lambda_a = 0.0;
  double lambda_bar_ellipsoid = 0.0;  ///< lambda_1(E, abar), |E| = m, closed form
  double scaled_err = 0.0;            ///< m |lambda_a - lambda_bar_ellipsoid|
  double asym = 0.0;
  double hausdorff_scaled = 0.0;  ///< d_H(dU, dE) / m^{1/2}, E the best asymmetry ellipsoid
  double lip_scaled = 0.0;
  double nondeg_scaled = 0.0;
  double kappa0 = 0.0;
  double strip_P = 0.0;
  double calE = 0.0;
  int iters = 0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  ///< root mean square of the log residuals
  int rows_used = 0;
};

/// Least squares fit of log y = slope log x + intercept. Drops the first
/// point when `drop_first`. Throws RangeError with fewer than 3 usable
/// points or a non-positive value.
RateFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, bool drop_first);

/// mu for dyadic volumes m0, 2 m0, ... from the ellipsoid closed form
/// m = (pi det(abar)^{1/2} j^2 / mu)^{1/2}.
std::vector<double> dyadic_mu_levels(const Eigen::Matrix2d& abar, double m0, int levels);

/// Measured row for a minimizer U of J_mu (eigenpair `res` on U).
SweepRow sweep_row(const Medium& a, const Eigen::Matrix2d& abar, double mu, const OptResult& res,
                   const EigenOptions& eig = {});

struct RateSweep {
  std::vector<SweepRow> rows;  ///< ordered by increasing m
  RateFit err_fit;             ///< scaled_err against m; NaN with rows_used 0 if a value is zero
  RateFit asym_fit;            ///< asym against m, same convention
  bool err_strictly_decreasing = false;
  bool asym_decreasing = false;
};

/// minimize_J per mu (largest mu first, warm starts rescaled from the
/// previous level), one SweepRow each, and the two rate fits.
RateSweep rate_sweep(const Medium& a, std::vector<double> mu_levels, const ScanSetup& setup, bool drop_smallest = true);
RateSweep rate_sweep_from_rows(std::vector<SweepRow> rows, bool drop_smallest = true);

struct ScalingFits {
  RateFit lambda_vs_mu;  ///< target 2/(d+2)
  RateFit m_vs_mu;       ///< target -d/(d+2)
};

/// Fits over all rows; throws RangeError with fewer than 4 rows.
ScalingFits scaling_fit(const std::vector<SweepRow>& rows);
ScalingFits scaling_sweep(const Medium& a, const std::vector<double>& mu_levels, const ScanSetup& setup);

struct FaberKrahnRow {
  double gap = 0.0;   ///< (m / det^{1/2}) lambda_1(U, abar) - pi j^2
  double asym = 0.0;
  double ratio = 0.0;  ///< gap / asym^2
  bool skipped = false;
};

struct FaberKrahnReport {
  std::vector<FaberKrahnRow> rows;
  double min_ratio = 0.0;  ///< empirical c_d floor
  bool all_positive = false;
};

FaberKrahnRow faber_krahn_row(const DomainMask& U, const Eigen::Matrix2d& abar, const EigenOptions& eig = {});
FaberKrahnReport faber_krahn_check(const std::vector<DomainMask>& masks, const Eigen::Matrix2d& abar,
                                   const EigenOptions& eig = {});

extern const char* const kSweepHeader;

void write_csv(std::ostream& os, const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_csv(std::istream& is);

/// Writes <dir>/sweep.csv and <dir>/summary.json. Throws Error when the
/// directory cannot be written.
void emit_report(const RateSweep& sweep, const ScalingFits* scaling, const std::string& dir);

}  // namespace fkhom
