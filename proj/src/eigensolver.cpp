#include "fkhom/eigensolver.hpp"

#include "fkhom/errors.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace fkhom {

double Medium::ellipticity() const { return field_ ? field_->lambda_ell() : ellipticity_of(matrix_); }

namespace {

constexpr int kOffsets[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

// Normal flux coefficient of the face between cell (i, j) and its neighbour
// in direction d.
double face_coefficient(const Medium& a, const GridWindow& w, int i, int j, int d) {
  const Eigen::Vector2d c = w.center(i, j);
  const double half = 0.5 * w.h;
  const Eigen::Vector2d x = c + half * Eigen::Vector2d(kOffsets[d][0], kOffsets[d][1]);
  const Eigen::Matrix2d M = a.at(x);
  if (std::abs(M(0, 1)) > 1e-10 * M.norm())
    throw DomainError("five-point operator needs diagonal coefficients (off-diagonal entry at a face)");
  return d < 2 ? M(0, 0) : M(1, 1);
}

// Operator on a list of cells with local numbering `local` (-1 elsewhere).
Eigen::SparseMatrix<double> assemble(const Medium& a, const DomainMask& U, const std::vector<Eigen::Vector2i>& cells,
                                     const Eigen::ArrayXXi& local) {
  const GridWindow& w = U.window();
  const double inv_h2 = 1.0 / (w.h * w.h);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(cells.size() * 5);
  for (std::size_t p = 0; p < cells.size(); ++p) {
    const int i = cells[p](0), j = cells[p](1);
    double diag = 0.0;
    for (int d = 0; d < 4; ++d) {
      const int ni = i + kOffsets[d][0], nj = j + kOffsets[d][1];
      const double c = face_coefficient(a, w, i, j, d) * inv_h2;
      if (U(ni, nj) && local(ni, nj) >= 0) {
        diag += c;
        trip.emplace_back(static_cast<int>(p), local(ni, nj), -c);
      } else {
        diag += 2.0 * c;
      }
    }
    trip.emplace_back(static_cast<int>(p), static_cast<int>(p), diag);
  }
  const int n = static_cast<int>(cells.size());
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

struct Pair {
  double lambda;
  Eigen::VectorXd vec;
  double residual;
};

// Lowest `want` eigenpairs of an SPD matrix by block inverse iteration with
// Rayleigh-Ritz (shift 0).
std::vector<Pair> lowest_pairs(const Eigen::SparseMatrix<double>& A, int want, const EigenOptions& opts,
                               const Eigen::VectorXd* seed, int& iterations) {
  const int n = static_cast<int>(A.rows());
  want = std::min(want, n);
  std::vector<Pair> out;
  if (n <= 64) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(A)};
    for (int q = 0; q < want; ++q) out.push_back({es.eigenvalues()(q), es.eigenvectors().col(q), 0.0});
    iterations = 1;
    return out;
  }

  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(A);
  if (llt.info() != Eigen::Success) throw InconsistencyError("Dirichlet operator is not positive definite");

  const int b = std::min(n, want + 2);
  Eigen::MatrixXd X(n, b);
  std::mt19937 rng(12345u);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int c = 0; c < b; ++c)
    for (int r = 0; r < n; ++r) X(r, c) = unif(rng);
  if (seed && seed->norm() > 0.0)
    X.col(0) = seed->cwiseAbs();
  else
    X.col(0).setOnes();

  Eigen::VectorXd theta;
  Eigen::MatrixXd V;
  double worst = 0.0;
  for (int it = 1; it <= opts.max_iter; ++it) {
    Eigen::MatrixXd Y = llt.solve(X);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, b);
    Eigen::MatrixXd AQ = A * Q;
    Eigen::MatrixXd H = Q.transpose() * AQ;
    H = 0.5 * (H + H.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    theta = es.eigenvalues();
    V = es.eigenvectors();
    X = Q * V;
    Eigen::MatrixXd R = AQ * V - X * theta.asDiagonal();
    worst = 0.0;
    for (int q = 0; q < want; ++q) worst = std::max(worst, R.col(q).norm() / (std::abs(theta(q)) * X.col(q).norm()));
    if (worst <= opts.tol) {
      iterations = it;
      for (int q = 0; q < want; ++q) {
        const double rq = R.col(q).norm() / (std::abs(theta(q)) * X.col(q).norm());
        out.push_back({theta(q), X.col(q), rq});
      }
      return out;
    }
  }
  throw ConvergenceError("eigensolver did not converge within " + std::to_string(opts.max_iter) + " iterations", worst);
}

}  // namespace

Eigen::SparseMatrix<double> dirichlet_operator(const Medium& a, const DomainMask& U, Eigen::ArrayXXi* index) {
  Eigen::ArrayXXi local = Eigen::ArrayXXi::Constant(U.nx(), U.ny(), -1);
  std::vector<Eigen::Vector2i> cells;
  for (int j = 0; j < U.ny(); ++j)
    for (int i = 0; i < U.nx(); ++i)
      if (U(i, j)) {
        local(i, j) = static_cast<int>(cells.size());
        cells.emplace_back(i, j);
      }
  auto A = assemble(a, U, cells, local);
  if (index) *index = std::move(local);
  return A;
}

namespace {

Eigen::VectorXd gather(const GridFunction& v, const Eigen::ArrayXXi& index, int n) {
  Eigen::VectorXd x(n);
  for (int j = 0; j < index.cols(); ++j)
    for (int i = 0; i < index.rows(); ++i)
      if (index(i, j) >= 0) x(index(i, j)) = v(i, j);
  return x;
}

}  // namespace

double dirichlet_energy(const Medium& a, const DomainMask& U, const GridFunction& v) {
  Eigen::ArrayXXi index;
  const auto A = dirichlet_operator(a, U, &index);
  const Eigen::VectorXd x = gather(v, index, static_cast<int>(A.rows()));
  return U.h() * U.h() * x.dot(A * x);
}

double rayleigh_quotient(const Medium& a, const DomainMask& U, const GridFunction& v) {
  Eigen::ArrayXXi index;
  const auto A = dirichlet_operator(a, U, &index);
  const Eigen::VectorXd x = gather(v, index, static_cast<int>(A.rows()));
  const double nn = x.squaredNorm();
  if (!(nn > 0.0)) throw DomainError("Rayleigh quotient of a function vanishing on the mask");
  return x.dot(A * x) / nn;
}

double l2_norm(const GridFunction& v, double h) { return h * std::sqrt(v.square().sum()); }

EigenResult eigen(const Medium& a, const DomainMask& U, int k, const EigenOptions& opts,
                  const GridFunction* warm_start) {
  if (k != 1 && k != 2) throw DomainError("eigen: k must be 1 or 2");
  if (U.empty()) throw DomainError("eigen: empty mask");

  int ncomp = 0;
  const Eigen::ArrayXXi labels = label_components(U, &ncomp);
  std::vector<std::vector<Eigen::Vector2i>> comp_cells(static_cast<std::size_t>(ncomp));
  Eigen::ArrayXXi local = Eigen::ArrayXXi::Constant(U.nx(), U.ny(), -1);
  for (int j = 0; j < U.ny(); ++j)
    for (int i = 0; i < U.nx(); ++i) {
      const int c = labels(i, j);
      if (c < 0) continue;
      auto& cells = comp_cells[static_cast<std::size_t>(c)];
      local(i, j) = static_cast<int>(cells.size());
      cells.emplace_back(i, j);
    }

  struct Found {
    double lambda;
    int comp;
    Eigen::VectorXd vec;
    double residual;
  };
  std::vector<Found> found;
  EigenResult res;
  res.components = ncomp;
  for (int c = 0; c < ncomp; ++c) {
    const auto& cells = comp_cells[static_cast<std::size_t>(c)];
    const auto A = assemble(a, U, cells, local);
    Eigen::VectorXd seed;
    if (warm_start) {
      seed.resize(static_cast<Eigen::Index>(cells.size()));
      for (std::size_t p = 0; p < cells.size(); ++p) {
        const int i = cells[p](0), j = cells[p](1);
        seed(static_cast<Eigen::Index>(p)) =
            (i < warm_start->rows() && j < warm_start->cols()) ? (*warm_start)(i, j) : 0.0;
      }
    }
    int iters = 0;
    auto pairs = lowest_pairs(A, k, opts, warm_start ? &seed : nullptr, iters);
    res.iterations = std::max(res.iterations, iters);
    for (auto& p : pairs) found.push_back({p.lambda, c, std::move(p.vec), p.residual});
  }
  std::stable_sort(found.begin(), found.end(), [](const Found& x, const Found& y) { return x.lambda < y.lambda; });

  const double h = U.h();
  auto scatter = [&](const Found& f) {
    GridFunction g = GridFunction::Zero(U.nx(), U.ny());
    const auto& cells = comp_cells[static_cast<std::size_t>(f.comp)];
    for (std::size_t p = 0; p < cells.size(); ++p) g(cells[p](0), cells[p](1)) = f.vec(static_cast<Eigen::Index>(p));
    g /= l2_norm(g, h);
    return g;
  };

  const Found& first = found.front();
  res.lambda1 = first.lambda;
  res.residual = first.residual;
  res.u = scatter(first);
  if (res.u.sum() < 0.0) res.u = -res.u;
  const double umax = res.u.maxCoeff();
  const double umin = res.u.minCoeff();
  if (umin < -1e-8 * umax) throw InconsistencyError("principal eigenfunction changes sign (min " + std::to_string(umin) + ")");
  res.u = res.u.max(0.0);

  if (k == 2) {
    if (found.size() < 2) throw DomainError("eigen: mask has a single cell, no second eigenpair");
    const Found& second = found[1];
    res.lambda2 = second.lambda;
    res.residual = std::max(res.residual, second.residual);
    GridFunction u2 = scatter(second);
    // Same-component modes are orthogonal by Rayleigh-Ritz; re-project to clean rounding.
    u2 -= (h * h * (u2 * res.u).sum()) * res.u;
    u2 /= l2_norm(u2, h);
    if (u2.sum() < 0.0) u2 = -u2;
    res.u2 = std::move(u2);
  }
  return res;
}

EigenDiagnostics diagnostics(const EigenResult& res, const DomainMask& U) {
  if (U.empty()) throw DomainError("diagnostics: empty mask");
  const double h = U.h();
  const double vol = U.volume();
  const GridFunction& u = res.u;

  double grad_max = 0.0;
  double slope_sum = 0.0;
  long slope_faces = 0;
  for (int j = 0; j < U.ny(); ++j)
    for (int i = 0; i < U.nx(); ++i) {
      if (!U(i, j)) continue;
      auto one_dir = [&](int di, int dj) {
        const bool fwd = U(i + di, j + dj), bwd = U(i - di, j - dj);
        const double up = u(i, j);
        if (fwd && bwd) return (u(i + di, j + dj) - u(i - di, j - dj)) / (2.0 * h);
        if (fwd) return (u(i + di, j + dj) - up) / h;
        if (bwd) return (up - u(i - di, j - dj)) / h;
        return up / (0.5 * h);
      };
      const double gx = one_dir(1, 0), gy = one_dir(0, 1);
      const int open_faces = !U(i + 1, j) + !U(i - 1, j) + !U(i, j + 1) + !U(i, j - 1);
      slope_sum += open_faces * u(i, j) / (0.5 * h);
      slope_faces += open_faces;
      grad_max = std::max(grad_max, std::hypot(gx, gy));
    }

  EigenDiagnostics d;
  d.lip_scaled = std::pow(vol, 0.5 + 0.5) * grad_max;
  d.sup_scaled = std::sqrt(vol) * u.maxCoeff();
  // total face flux over the Crofton length pi/4 * h * faces of the staircase
  d.boundary_slope = slope_faces > 0 ? 4.0 / M_PI * slope_sum / static_cast<double>(slope_faces) : 0.0;

  auto boundary = U.boundary_cells();
  const std::size_t stride = std::max<std::size_t>(1, (boundary.size() + 255) / 256);
  const double rmax = std::sqrt(vol);
  double nondeg = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < boundary.size(); b += stride) {
    const int bi = boundary[b](0), bj = boundary[b](1);
    for (double r = 2.0 * h; r <= rmax * (1.0 + 1e-12); r *= 2.0) {
      const int R = static_cast<int>(std::floor(r / h));
      double sup = 0.0;
      for (int dj = -R; dj <= R; ++dj)
        for (int di = -R; di <= R; ++di) {
          if ((di * di + dj * dj) * h * h > r * r) continue;
          if (U(bi + di, bj + dj)) sup = std::max(sup, u(bi + di, bj + dj));
        }
      nondeg = std::min(nondeg, vol * sup / r);
    }
  }
  d.nondeg_scaled = std::isfinite(nondeg) ? nondeg : 0.0;
  return d;
}

GapCheck gap_stability_check(const Medium& a, const DomainMask& U, const GridFunction& v, const EigenResult& pairs) {
  if (!pairs.lambda2 || !pairs.u2) throw DomainError("gap_stability_check needs two eigenpairs");
  const double h = U.h();
  GridFunction w = GridFunction::Zero(U.nx(), U.ny());
  for (int j = 0; j < U.ny(); ++j)
    for (int i = 0; i < U.nx(); ++i)
      if (U(i, j)) w(i, j) = v(i, j);
  const double outside = l2_norm(v - w, h);
  if (outside > 1e-12 * l2_norm(v, h)) throw DomainError("trial function is not supported in U");
  w /= l2_norm(w, h);

  GapCheck g;
  const double l1 = pairs.lambda1, l2 = *pairs.lambda2;
  g.delta = rayleigh_quotient(a, U, w) / l1 - 1.0;
  g.distance = std::min(l2_norm(w - pairs.u, h), l2_norm(w + pairs.u, h));
  g.gap = l2 / l1 - 1.0;
  g.lhs = g.gap * g.distance * g.distance;
  g.rhs = 4.0 * g.delta;
  g.degenerate_gap = g.gap < 1e-8;
  g.holds = g.lhs <= g.rhs + 1e-12;
  return g;
}

GapCheck gap_stability_check(const Medium& a, const DomainMask& U, const GridFunction& v, const EigenOptions& opts) {
  return gap_stability_check(a, U, v, eigen(a, U, 2, opts));
}

}  // namespace fkhom
