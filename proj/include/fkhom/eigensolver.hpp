#pragma once

#include "fkhom/coeff_field.hpp"
#include "fkhom/grid.hpp"

#include <Eigen/Sparse>

#include <optional>

namespace fkhom {

/// Coefficient source for the Dirichlet operator: either a periodic field or
/// a constant matrix (typically a homogenized tensor). Non-owning view.
class Medium {
 public:
  Medium(const CoeffField& field) : field_(&field) {}  // NOLINT(google-explicit-constructor)
  template <typename Derived>
  Medium(const Eigen::MatrixBase<Derived>& M) : matrix_(M) {}  // NOLINT(google-explicit-constructor)

  Eigen::Matrix2d at(const Eigen::Vector2d& x) const { return field_ ? field_->at(x) : matrix_; }
  bool is_constant() const { return field_ == nullptr || field_->is_constant(); }
  /// Lambda of the medium.
  double ellipticity() const;

 private:
  const CoeffField* field_ = nullptr;
  Eigen::Matrix2d matrix_ = Eigen::Matrix2d::Identity();
};

struct EigenOptions {
  double tol = 1e-10;  ///< relative residual |Au - lambda u| / (lambda |u|)
  int max_iter = 2000;
};

struct EigenResult {
  double lambda1 = 0.0;
  std::optional<double> lambda2;
  GridFunction u;                 ///< principal mode, u >= 0, h^2 sum u^2 = 1, zero off the mask
  std::optional<GridFunction> u2;  ///< second mode when k = 2, orthogonal to u
  double residual = 0.0;
  int iterations = 0;
  int components = 0;
};

struct EigenDiagnostics {
  double lip_scaled = 0.0;     ///< |U|^{1/2+1/d} max |grad u|
  double nondeg_scaled = 0.0;  ///< sampled lower estimate of the strong non-degeneracy constant
  double sup_scaled = 0.0;     ///< |U|^{1/2} max u
  double boundary_slope = 0.0;  ///< face flux u/(h/2) summed over boundary faces per Crofton length, unscaled
};

/// Five-point flux operator -div(a grad .) on the occupied cells, scaled by
/// h^{-2}. Faces towards unoccupied cells carry the Dirichlet condition at the
/// face (half-cell distance). `index` receives the unknown number of each
/// cell (-1 off the mask).
Eigen::SparseMatrix<double> dirichlet_operator(const Medium& a, const DomainMask& U, Eigen::ArrayXXi* index = nullptr);

/// Discrete Dirichlet energy h^2 v.Av and Rayleigh quotient v.Av / v.v, v restricted to U.
double dirichlet_energy(const Medium& a, const DomainMask& U, const GridFunction& v);
double rayleigh_quotient(const Medium& a, const DomainMask& U, const GridFunction& v);

/// h^d-weighted L2 norm over the window.
double l2_norm(const GridFunction& v, double h);

/// Lowest k (1 or 2) Dirichlet eigenpairs. Connected components decouple and
/// are solved separately; the principal mode lives on the component with the
/// smallest eigenvalue. `warm_start` seeds the iteration when given.
EigenResult eigen(const Medium& a, const DomainMask& U, int k = 1, const EigenOptions& opts = {},
                  const GridFunction* warm_start = nullptr);

/// Scale-invariant eigenfunction diagnostics. The non-degeneracy value is a
/// lower estimate: at most 256 boundary cells and dyadic radii are sampled.
EigenDiagnostics diagnostics(const EigenResult& res, const DomainMask& U);

struct GapCheck {
  double delta = 0.0;     ///< R(v)/lambda_1 - 1
  double distance = 0.0;  ///< min over s = +-1 of |v - s u|
  double gap = 0.0;       ///< lambda_2/lambda_1 - 1
  double lhs = 0.0;       ///< gap * distance^2
  double rhs = 0.0;       ///< 4 delta
  bool holds = false;
  bool degenerate_gap = false;  ///< gap below 1e-8: the inequality carries no information
};

/// Spectral-gap stability of a trial function v supported in U (v is
/// normalised in L2 before use).
GapCheck gap_stability_check(const Medium& a, const DomainMask& U, const GridFunction& v, const EigenOptions& opts = {});
GapCheck gap_stability_check(const Medium& a, const DomainMask& U, const GridFunction& v, const EigenResult& pairs);

}  // namespace fkhom
