#include "fkhom/coeff_field.hpp"

#include "fkhom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace fkhom {

namespace {

double param(const FieldParams& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) throw ConfigError("coefficient parameter '" + key + "' missing");
  return it->second;
}

double wrap(double t) { return t - std::floor(t); }

// Laminate profile: alpha on [0,1/2), beta on [1/2,1), linear ramps of width w
// centred on both jumps.
double laminate_profile(double t, double alpha, double beta, double w) {
  t = wrap(t);
  const double half = 0.5 * w;
  if (std::abs(t - 0.5) <= half) return alpha + (beta - alpha) * (t - (0.5 - half)) / w;
  if (t <= half) return beta + (alpha - beta) * (t + half) / w;
  if (t >= 1.0 - half) return beta + (alpha - beta) * (t - 1.0 + half) / w;
  return t < 0.5 ? alpha : beta;
}

double checker_value(double t1, double t2, double alpha, double beta) {
  const int k = static_cast<int>(std::floor(2.0 * wrap(t1))) + static_cast<int>(std::floor(2.0 * wrap(t2)));
  return (k % 2 == 0) ? alpha : beta;
}

// On a discontinuity line the four diagonal offsets straddle it, giving the
// arithmetic mean of the adjacent values (and of all four at a corner).
double checkerboard_profile(double x1, double x2, double alpha, double beta) {
  constexpr double eps = 1e-9;
  double sum = 0.0;
  for (double s1 : {-eps, eps})
    for (double s2 : {-eps, eps}) sum += checker_value(x1 + s1, x2 + s2, alpha, beta);
  return 0.25 * sum;
}

}  // namespace

FieldKind parse_field_kind(const std::string& name) {
  if (name == "constant") return FieldKind::Constant;
  if (name == "laminate") return FieldKind::Laminate;
  if (name == "checkerboard") return FieldKind::Checkerboard;
  if (name == "trig") return FieldKind::Trig;
  throw ConfigError("unknown coefficient kind '" + name + "'");
}

std::string to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::Constant: return "constant";
    case FieldKind::Laminate: return "laminate";
    case FieldKind::Checkerboard: return "checkerboard";
    case FieldKind::Trig: return "trig";
  }
  return "unknown";
}

double ellipticity_of(const Eigen::Matrix2d& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(M, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(1);
  if (!(lo > 0.0)) throw EllipticityError("matrix is not positive definite (min eigenvalue " + std::to_string(lo) + ")");
  return std::max(hi, 1.0 / lo);
}

Eigen::Matrix2d CoeffField::at(const Eigen::Vector2d& x) const {
  switch (kind_) {
    case FieldKind::Constant: {
      Eigen::Matrix2d M;
      M << params_.at("m11"), params_.at("m12"), params_.at("m12"), params_.at("m22");
      return M;
    }
    case FieldKind::Laminate: {
      const double s = laminate_profile(x(0), params_.at("alpha"), params_.at("beta"), 1.0 / n_);
      return s * Eigen::Matrix2d::Identity();
    }
    case FieldKind::Checkerboard: {
      const double s = checkerboard_profile(x(0), x(1), params_.at("alpha"), params_.at("beta"));
      return s * Eigen::Matrix2d::Identity();
    }
    case FieldKind::Trig: {
      constexpr double tau = 2.0 * std::numbers::pi;
      const double s = params_.at("c") + params_.at("A") * std::sin(tau * wrap(x(0))) * std::sin(tau * wrap(x(1)));
      return s * Eigen::Matrix2d::Identity();
    }
  }
  return Eigen::Matrix2d::Identity();
}

bool CoeffField::is_diagonal() const {
  return kind_ != FieldKind::Constant || params_.at("m12") == 0.0;
}

Eigen::Matrix2d CoeffField::mean() const {
  Eigen::Matrix2d sum = Eigen::Matrix2d::Zero();
  for (const auto& M : x_faces_) sum += M;
  return sum / static_cast<double>(x_faces_.size());
}

CoeffField build_field(FieldKind kind, const FieldParams& params, int cells_per_period) {
  if (cells_per_period < 4) throw ConfigError("cells_per_period must be >= 4");

  CoeffField f;
  f.kind_ = kind;
  f.n_ = cells_per_period;

  // Analytic ellipticity certificate per kind.
  double lambda = 1.0;
  switch (kind) {
    case FieldKind::Constant: {
      const double m11 = param(params, "m11"), m12 = param(params, "m12"), m22 = param(params, "m22");
      if (auto it = params.find("m21"); it != params.end() && std::abs(it->second - m12) > 1e-12)
        throw EllipticityError("constant coefficient matrix is not symmetric");
      f.params_ = {{"m11", m11}, {"m12", m12}, {"m22", m22}};
      Eigen::Matrix2d M;
      M << m11, m12, m12, m22;
      lambda = ellipticity_of(M);
      break;
    }
    case FieldKind::Laminate:
    case FieldKind::Checkerboard: {
      const double alpha = param(params, "alpha"), beta = param(params, "beta");
      if (!(alpha > 0.0) || !(beta > 0.0)) {
        std::ostringstream os;
        os << to_string(kind) << " requires alpha > 0 and beta > 0 (got alpha=" << alpha << ", beta=" << beta << ")";
        throw EllipticityError(os.str());
      }
      f.params_ = {{"alpha", alpha}, {"beta", beta}};
      lambda = std::max({alpha, beta, 1.0 / alpha, 1.0 / beta});
      break;
    }
    case FieldKind::Trig: {
      const double c = param(params, "c"), A = param(params, "A");
      if (!(c - std::abs(A) > 0.0)) {
        std::ostringstream os;
        os << "trig requires c > |A| (got c=" << c << ", A=" << A << "; min eigenvalue " << c - std::abs(A) << ")";
        throw EllipticityError(os.str());
      }
      f.params_ = {{"c", c}, {"A", A}};
      lambda = std::max(c + std::abs(A), 1.0 / (c - std::abs(A)));
      break;
    }
  }
  f.lambda_ell_ = lambda;

  const int n = cells_per_period;
  const double h = 1.0 / n;
  f.x_faces_.resize(static_cast<std::size_t>(n) * n);
  f.y_faces_.resize(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      f.x_faces_[f.index(i, j)] = f.at(Eigen::Vector2d(i * h, (j + 0.5) * h));
      f.y_faces_[f.index(i, j)] = f.at(Eigen::Vector2d((i + 0.5) * h, j * h));
    }

  // Validate every sample on a fixed direction set.
  constexpr int kDirections = 16;
  const double slack = 1e-12 * lambda;
  auto check = [&](const Eigen::Matrix2d& M) {
    if (std::abs(M(0, 1) - M(1, 0)) > 1e-12) throw EllipticityError("sampled coefficient is not symmetric");
    for (int k = 0; k < kDirections; ++k) {
      const double th = std::numbers::pi * k / kDirections;
      const Eigen::Vector2d xi(std::cos(th), std::sin(th));
      const double q = xi.dot(M * xi);
      if (q < 1.0 / lambda - slack || q > lambda + slack) {
        std::ostringstream os;
        os << "sampled coefficient violates ellipticity: xi.M.xi = " << q << " outside [" << 1.0 / lambda << ", "
           << lambda << "]";
        throw EllipticityError(os.str());
      }
    }
  };
  for (const auto& M : f.x_faces_) check(M);
  for (const auto& M : f.y_faces_) check(M);

  // Discrete Lipschitz estimate from neighbouring samples of each family.
  double lip = 0.0;
  auto diff = [&](const std::vector<Eigen::Matrix2d>& v) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const auto& M = v[f.index(i, j)];
        const double dx = (v[f.index(i + 1, j)] - M).operatorNorm();
        const double dy = (v[f.index(i, j + 1)] - M).operatorNorm();
        lip = std::max({lip, dx / h, dy / h});
      }
  };
  diff(f.x_faces_);
  diff(f.y_faces_);
  f.lip_bound_ = lip;
  return f;
}

CoeffField scalar_field(double s, int cells_per_period) {
  return build_field(FieldKind::Constant, {{"m11", s}, {"m12", 0.0}, {"m22", s}}, cells_per_period);
}

CoeffField constant_field(const Eigen::Matrix2d& M, int cells_per_period) {
  return build_field(FieldKind::Constant, {{"m11", M(0, 0)}, {"m12", M(0, 1)}, {"m21", M(1, 0)}, {"m22", M(1, 1)}},
                     cells_per_period);
}

}  // namespace fkhom
