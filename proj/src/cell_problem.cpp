#include "fkhom/cell_problem.hpp"

#include "fkhom/eigensolver.hpp"
#include "fkhom/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fkhom {

namespace {

int wrap(int i, int n) { return ((i % n) + n) % n; }

// Periodic five-point operator (a_f / h^2 weights) applied to x.
GridFunction apply_periodic(const CoeffField& a, const GridFunction& x) {
  const int n = a.cells_per_period();
  const double inv_h2 = double(n) * n;
  GridFunction y(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double c = x(i, j);
      const double e = a.x_face(i + 1, j)(0, 0) * (c - x(wrap(i + 1, n), j));
      const double w = a.x_face(i, j)(0, 0) * (c - x(wrap(i - 1, n), j));
      const double no = a.y_face(i, j + 1)(1, 1) * (c - x(i, wrap(j + 1, n)));
      const double s = a.y_face(i, j)(1, 1) * (c - x(i, wrap(j - 1, n)));
      y(i, j) = inv_h2 * (e + w + no + s);
    }
  return y;
}

// Discrete divergence of the constant-gradient flux a q.
GridFunction divergence_of(const CoeffField& a, const Eigen::Vector2d& q) {
  const int n = a.cells_per_period();
  GridFunction b(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double fe = (a.x_face(i + 1, j) * q)(0), fw = (a.x_face(i, j) * q)(0);
      const double fn = (a.y_face(i, j + 1) * q)(1), fs = (a.y_face(i, j) * q)(1);
      b(i, j) = n * ((fe - fw) + (fn - fs));
    }
  return b;
}

GridFunction diagonal_of(const CoeffField& a) {
  const int n = a.cells_per_period();
  GridFunction d(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      d(i, j) = double(n) * n *
                (a.x_face(i + 1, j)(0, 0) + a.x_face(i, j)(0, 0) + a.y_face(i, j + 1)(1, 1) + a.y_face(i, j)(1, 1));
  return d;
}

}  // namespace

double CorrectorSet::value(const Eigen::Vector2d& q, int i, int j) const {
  const int ii = wrap(i, n), jj = wrap(j, n);
  return q(0) * chi[0](ii, jj) + q(1) * chi[1](ii, jj);
}

double CorrectorSet::at(int k, const Eigen::Vector2d& x) const {
  const double gx = x(0) * n - 0.5, gy = x(1) * n - 0.5;
  const double fx = std::floor(gx), fy = std::floor(gy);
  const double tx = gx - fx, ty = gy - fy;
  const int i = static_cast<int>(fx), j = static_cast<int>(fy);
  const GridFunction& c = chi[static_cast<std::size_t>(k)];
  auto v = [&](int a, int b) { return c(wrap(a, n), wrap(b, n)); };
  return (1 - tx) * (1 - ty) * v(i, j) + tx * (1 - ty) * v(i + 1, j) + (1 - tx) * ty * v(i, j + 1) +
         tx * ty * v(i + 1, j + 1);
}

HomogenizedTensor HomogenizedTensor::from_matrix(const Eigen::Matrix2d& M) {
  HomogenizedTensor t;
  t.symmetry_discrepancy = std::abs(M(0, 1) - M(1, 0));
  t.abar = 0.5 * (M + M.transpose());
  t.sqrt_abar = spd_sqrt(t.abar);
  t.det_abar = t.abar.determinant();
  return t;
}

GridFunction solve_corrector(const CoeffField& a, const Eigen::Vector2d& q, const CellOptions& opts, double* residual) {
  const int n = a.cells_per_period();
  if (n < 8) throw DomainError("cell problem needs at least 8 cells per period");
  if (!a.is_diagonal() && !a.is_constant())
    throw DomainError("five-point cell problem needs diagonal coefficients");

  GridFunction b = divergence_of(a, q);
  b -= b.mean();
  const double bnorm = std::sqrt(b.square().sum());
  GridFunction x = GridFunction::Zero(n, n);
  if (bnorm == 0.0) {
    if (residual) *residual = 0.0;
    return x;
  }

  // Jacobi-preconditioned CG on the mean-zero subspace.
  const GridFunction dinv = diagonal_of(a).inverse();
  GridFunction r = b;
  GridFunction z = r * dinv;
  z -= z.mean();
  GridFunction p = z;
  double rz = (r * z).sum();
  double rel = 1.0;
  for (int it = 1; it <= opts.max_iter; ++it) {
    const GridFunction Ap = apply_periodic(a, p);
    const double alpha = rz / (p * Ap).sum();
    x += alpha * p;
    x -= x.mean();
    r -= alpha * Ap;
    r -= r.mean();
    rel = std::sqrt(r.square().sum()) / bnorm;
    if (rel <= opts.tol) {
      // true residual, not the recursively updated one
      GridFunction tr = b - apply_periodic(a, x);
      rel = std::sqrt(tr.square().sum()) / bnorm;
      if (rel <= 10.0 * opts.tol) {
        if (residual) *residual = rel;
        return x;
      }
      r = tr;
    }
    z = r * dinv;
    z -= z.mean();
    const double rz_new = (r * z).sum();
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw ConvergenceError("corrector solve did not converge", rel);
}

CorrectorSet solve_correctors(const CoeffField& a, const CellOptions& opts) {
  CorrectorSet set;
  set.n = a.cells_per_period();
  for (int k = 0; k < 2; ++k) {
    double res = 0.0;
    set.chi[static_cast<std::size_t>(k)] = solve_corrector(a, Eigen::Vector2d::Unit(k), opts, &res);
    set.residual_norms[static_cast<std::size_t>(k)] = res;
  }
  return set;
}

double cell_energy(const CoeffField& a, const Eigen::Vector2d& q, const GridFunction& phi) {
  const int n = a.cells_per_period();
  double sum = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double gx = q(0) + n * (phi(i, j) - phi(wrap(i - 1, n), j));
      const double gy = q(1) + n * (phi(i, j) - phi(i, wrap(j - 1, n)));
      sum += a.x_face(i, j)(0, 0) * gx * gx + a.y_face(i, j)(1, 1) * gy * gy;
    }
  // Off-diagonal part: only constant fields carry it, and their correctors vanish.
  const double a12 = a.mean()(0, 1);
  return sum / (double(n) * n) + 2.0 * a12 * q(0) * q(1);
}

HomogenizedTensor homogenize(const CoeffField& a, const CorrectorSet& chi) {
  const int n = chi.n;
  if (n != a.cells_per_period()) throw DomainError("corrector grid does not match the coefficient grid");
  Eigen::Matrix2d M = Eigen::Matrix2d::Zero();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Eigen::Vector2d gx, gy;  // (e_k + grad chi_k) on the x-face resp. y-face, k = 0, 1
      for (int k = 0; k < 2; ++k) {
        const auto& c = chi.chi[static_cast<std::size_t>(k)];
        gx(k) = (k == 0 ? 1.0 : 0.0) + n * (c(i, j) - c(wrap(i - 1, n), j));
        gy(k) = (k == 1 ? 1.0 : 0.0) + n * (c(i, j) - c(i, wrap(j - 1, n)));
      }
      M += a.x_face(i, j)(0, 0) * gx * gx.transpose() + a.y_face(i, j)(1, 1) * gy * gy.transpose();
    }
  M /= double(n) * n;
  const double a12 = a.mean()(0, 1);
  M(0, 1) += a12;
  M(1, 0) += a12;

  HomogenizedTensor t = HomogenizedTensor::from_matrix(M);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(t.abar, Eigen::EigenvaluesOnly);
  const double L = a.lambda_ell();
  const double slack = 1e-9;
  if (es.eigenvalues()(0) < 1.0 / L - slack || es.eigenvalues()(1) > L + slack)
    throw InconsistencyError("homogenized matrix violates the ellipticity bounds of the field");
  return t;
}

HomogenizedTensor homogenized_tensor(const CoeffField& a, const CellOptions& opts) {
  return homogenize(a, solve_correctors(a, opts));
}

CorrectedTrial corrected_trial(const Ellipsoid& E, const HomogenizedTensor& abar, const CorrectorSet& chi,
                               const CoeffField& a, double t, double h) {
  if (!(t > 0.0 && t < 1.0)) throw RangeError("cutoff width t must lie in (0, 1)");
  CorrectedTrial out;
  const GridWindow w = window_for(E, h, 2);
  out.mask = rasterize_ellipsoid(E, w);
  const EigenResult ubar = eigen(abar.abar, out.mask, 1);
  out.lambda_abar = ubar.lambda1;

  const GridFunction& u = ubar.u;
  auto val = [&](int i, int j) { return w.contains(i, j) ? u(i, j) : 0.0; };
  out.xi = GridFunction::Zero(w.nx, w.ny);
  for (int j = 0; j < w.ny; ++j)
    for (int i = 0; i < w.nx; ++i) {
      if (!out.mask(i, j)) continue;
      const Eigen::Vector2d x = w.center(i, j);
      const double s = E.normalized_radius(x);
      const double zeta = std::clamp((1.0 - s) / t, 0.0, 1.0);
      const double gx = (val(i + 1, j) - val(i - 1, j)) / (2.0 * h);
      const double gy = (val(i, j + 1) - val(i, j - 1)) / (2.0 * h);
      out.xi(i, j) = u(i, j) + zeta * (gx * chi.at(0, x) + gy * chi.at(1, x));
    }
  out.rayleigh = rayleigh_quotient(a, out.mask, out.xi);
  out.excess = out.rayleigh / out.lambda_abar - 1.0;
  out.measured_C = out.excess * std::pow(E.volume(), 1.0 / (2.0 * kDim));
  return out;
}

}  // namespace fkhom
