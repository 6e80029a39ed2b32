#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace fkhom {

enum class FieldKind { Constant, Laminate, Checkerboard, Trig };

FieldKind parse_field_kind(const std::string& name);
std::string to_string(FieldKind kind);

using FieldParams = std::map<std::string, double>;

/// Z^2-periodic symmetric coefficient field a(x) with unit period.
///
/// The analytic formula is kept alongside the face samples of an n x n
/// periodic grid: solvers on other grids evaluate the formula at their own
/// face midpoints through at(). Validation (symmetry, ellipticity on a
/// direction set, Lipschitz estimate) runs on the stored samples.
class CoeffField {
 public:
  FieldKind kind() const { return kind_; }
  const FieldParams& params() const { return params_; }
  int cells_per_period() const { return n_; }

  /// Ellipticity constant: Lambda^{-1} <= a <= Lambda.
  double lambda_ell() const { return lambda_ell_; }
  /// Finite-difference estimate of ||grad a||_inf over the face samples.
  double lip_bound() const { return lip_bound_; }

  /// Evaluate a at an arbitrary point; x is reduced modulo the period first.
  Eigen::Matrix2d at(const Eigen::Vector2d& x) const;

  /// Sample on the x-face (i/n, (j+1/2)/n) resp. y-face ((i+1/2)/n, j/n); indices wrap.
  const Eigen::Matrix2d& x_face(int i, int j) const { return x_faces_[index(i, j)]; }
  const Eigen::Matrix2d& y_face(int i, int j) const { return y_faces_[index(i, j)]; }

  bool is_constant() const { return kind_ == FieldKind::Constant; }
  /// Off-diagonal entries vanish identically.
  bool is_diagonal() const;
  /// The checkerboard is discontinuous and so outside the Lipschitz hypothesis.
  bool lipschitz_hypothesis() const { return kind_ != FieldKind::Checkerboard; }

  /// Cell average of a over the period (on the face samples).
  Eigen::Matrix2d mean() const;

 private:
  friend CoeffField build_field(FieldKind, const FieldParams&, int);

  int index(int i, int j) const {
    const int ii = ((i % n_) + n_) % n_;
    const int jj = ((j % n_) + n_) % n_;
    return jj * n_ + ii;
  }

  FieldKind kind_ = FieldKind::Constant;
  FieldParams params_;
  int n_ = 0;
  double lambda_ell_ = 1.0;
  double lip_bound_ = 0.0;
  std::vector<Eigen::Matrix2d> x_faces_;
  std::vector<Eigen::Matrix2d> y_faces_;
};

/// Build and validate a field. Parameters by kind:
///   constant:     m11, m12, m22 (m21 optional, must equal m12)
///   laminate:     alpha, beta      s(x_1) layers, smoothed over one cell of width 1/n
///   checkerboard: alpha, beta      half-period squares
///   trig:         c, A             (c + A sin(2 pi x_1) sin(2 pi x_2)) Id, c > |A|
/// Throws EllipticityError on non-elliptic parameters, ConfigError on missing ones.
CoeffField build_field(FieldKind kind, const FieldParams& params, int cells_per_period);

/// Identity-scaled constant field s * Id.
CoeffField scalar_field(double s, int cells_per_period);

/// Constant field with matrix M.
CoeffField constant_field(const Eigen::Matrix2d& M, int cells_per_period);

/// Ellipticity constant of a single SPD matrix: max(lambda_max, 1/lambda_min).
double ellipticity_of(const Eigen::Matrix2d& M);

}  // namespace fkhom
