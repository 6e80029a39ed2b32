#pragma once

#include "fkhom/cell_problem.hpp"
#include "fkhom/coeff_field.hpp"
#include "fkhom/eigensolver.hpp"

#include <string>
#include <vector>

namespace fkhom {

struct GridOptions {
  int cells_per_period = 16;
  double h = 0.0;  ///< mask spacing; 0 means 1 / cells_per_period
  double spacing() const { return h > 0.0 ? h : 1.0 / cells_per_period; }
};

struct OptOptions {
  int max_outer = 300;
  int stall_iters = 3;
  int quantile_levels = 32;   ///< thresholds at quantiles j / (2 * levels), j = 1..levels
  int screen_top = 3;         ///< threshold candidates solved exactly after the Rayleigh screen
  double candidate_tol = 1e-8;  ///< eigen tolerance while comparing candidates
  double window_factor = 4.0;   ///< window side >= factor * mu^{-1/(d+2)}
  double jump_frac = 0.05;
};

struct SweepOptions {
  double m0 = 4.0;   ///< smallest target volume; levels double it
  int levels = 4;
  bool drop_smallest = true;
  std::vector<double> volmap_mu{0.05, 2.0};  ///< [mu_min, mu_max]
  int volmap_points = 8;
  double p = 7.0;
  double gamma0 = 0.1;
};

struct ProblemConfig {
  int dim = 2;
  FieldKind kind = FieldKind::Constant;
  FieldParams params{{"m11", 1.0}, {"m12", 0.0}, {"m22", 1.0}};
  GridOptions grid;
  EigenOptions eig;
  CellOptions cell;
  OptOptions opt;
  SweepOptions sweep;

  CoeffField field() const { return build_field(kind, params, grid.cells_per_period); }
};

/// Parse a config document. Unknown keys at any level are rejected with
/// ConfigError, as are invariant violations (dim != 2, h <= 0, n < 4,
/// non-positive tolerances).
ProblemConfig parse_config(const std::string& json_text);
ProblemConfig load_config(const std::string& path);
std::string dump_config(const ProblemConfig& cfg);

}  // namespace fkhom
