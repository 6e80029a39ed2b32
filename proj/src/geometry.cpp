#include "fkhom/geometry.hpp"

#include "fkhom/errors.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace fkhom {

namespace {

constexpr double kInf = 1e20;

// Felzenszwalb-Huttenlocher lower envelope of parabolas, one line.
void distance_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  auto at = [](const auto& c, int i) { return c[static_cast<std::size_t>(i)]; };
  auto intersect = [&](int q, int p) { return ((at(f, q) + double(q) * q) - (at(f, p) + double(p) * p)) / (2.0 * (q - p)); };
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s = intersect(q, at(v, k));
    while (s <= at(z, k)) {
      --k;
      s = intersect(q, at(v, k));
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (at(z, k + 1) < q) ++k;
    const int p = at(v, k);
    d[static_cast<std::size_t>(q)] = double(q - p) * (q - p) + at(f, p);
  }
}

GridWindow padded(const GridWindow& w, int pad) {
  GridWindow p = w;
  p.nx += 2 * pad;
  p.ny += 2 * pad;
  p.origin -= pad * w.h * Eigen::Vector2d::Ones();
  return p;
}

Eigen::Vector2i lattice_index(const GridWindow& w, const Eigen::Vector2d& x) {
  const Eigen::Vector2d t = (x - w.origin) / w.h;
  return Eigen::Vector2i(static_cast<int>(std::floor(t(0))), static_cast<int>(std::floor(t(1))));
}

std::vector<Eigen::Vector2i> ball_offsets(double r, double h) {
  const int R = static_cast<int>(std::floor(r / h + 1e-9));
  const double rr = (r / h) * (r / h) * (1.0 + 1e-12);
  std::vector<Eigen::Vector2i> out;
  for (int dj = -R; dj <= R; ++dj)
    for (int di = -R; di <= R; ++di)
      if (di * di + dj * dj <= rr) out.emplace_back(di, dj);
  return out;
}

long count_in(const DomainMask& U, int i, int j, const std::vector<Eigen::Vector2i>& offsets) {
  long n = 0;
  for (const auto& o : offsets) n += U(i + o(0), j + o(1));
  return n;
}

template <typename T>
std::vector<T> subsample(const std::vector<T>& v, std::size_t cap) {
  if (v.size() <= cap) return v;
  std::vector<T> out;
  out.reserve(cap);
  for (std::size_t k = 0; k < cap; ++k) out.push_back(v[k * v.size() / cap]);
  return out;
}

std::vector<double> dyadic_radii(double start, double stop) {
  std::vector<double> r;
  for (double t = start; t <= stop * (1.0 + 1e-12); t *= 2.0) r.push_back(t);
  return r;
}

}  // namespace

Eigen::ArrayXXd squared_distance_transform(const DomainMask::Cells& feature) {
  const int nx = static_cast<int>(feature.rows()), ny = static_cast<int>(feature.cols());
  Eigen::ArrayXXd D(nx, ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) D(i, j) = feature(i, j) ? 0.0 : kInf;
  const int n = std::max(nx, ny);
  std::vector<double> f, d;
  std::vector<int> v(static_cast<std::size_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n) + 1);
  // columns (along j)
  f.resize(static_cast<std::size_t>(ny));
  d.resize(static_cast<std::size_t>(ny));
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) f[static_cast<std::size_t>(j)] = D(i, j);
    distance_1d(f, d, v, z);
    for (int j = 0; j < ny; ++j) D(i, j) = d[static_cast<std::size_t>(j)];
  }
  f.resize(static_cast<std::size_t>(nx));
  d.resize(static_cast<std::size_t>(nx));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) f[static_cast<std::size_t>(i)] = D(i, j);
    distance_1d(f, d, v, z);
    for (int i = 0; i < nx; ++i) D(i, j) = std::min(d[static_cast<std::size_t>(i)], kInf);
  }
  if (!(feature != 0).any()) D.setConstant(std::numeric_limits<double>::infinity());
  return D;
}

GridWindow window_for(const Ellipsoid& E, double h, int margin) {
  const Eigen::Vector2d ext = E.half_extent();
  GridWindow w;
  w.h = h;
  const Eigen::Vector2d lo = E.center - ext;
  const Eigen::Vector2d hi = E.center + ext;
  const int i0 = static_cast<int>(std::floor(lo(0) / h)) - margin;
  const int j0 = static_cast<int>(std::floor(lo(1) / h)) - margin;
  const int i1 = static_cast<int>(std::ceil(hi(0) / h)) + margin;
  const int j1 = static_cast<int>(std::ceil(hi(1) / h)) + margin;
  w.origin = Eigen::Vector2d(i0 * h, j0 * h);
  w.nx = i1 - i0;
  w.ny = j1 - j0;
  return w;
}

DomainMask rasterize_ellipsoid(const Ellipsoid& E, const GridWindow& window) {
  const Eigen::Vector2d ext = E.half_extent();
  const Eigen::Vector2d lo = window.origin + window.h * Eigen::Vector2d::Ones();
  const Eigen::Vector2d hi = window.origin + window.h * Eigen::Vector2d(window.nx - 1, window.ny - 1);
  if (((E.center - ext).array() < lo.array()).any() || ((E.center + ext).array() > hi.array()).any())
    throw DomainError("ellipsoid does not fit the grid window with a one-cell margin");
  const Eigen::Matrix2d inv = E.sqrt_abar.inverse();
  return mask_from(window, [&](const Eigen::Vector2d& x) { return (inv * (x - E.center)).norm() < E.rho; });
}

GridFunction boundary_distance(const DomainMask& U, const GridWindow& window) {
  if (U.empty()) throw DomainError("boundary distance of an empty mask");
  const GridWindow W = padded(common_window(U.window(), window), 1);
  const DomainMask P = embed(U, W);
  const auto D_out = squared_distance_transform((P.cells() == 0).cast<std::uint8_t>());
  const auto D_in = squared_distance_transform(P.cells());
  const Eigen::Vector2d off_d = (window.origin - W.origin) / W.h;
  const int oi = static_cast<int>(std::lround(off_d(0))), oj = static_cast<int>(std::lround(off_d(1)));
  GridFunction d(window.nx, window.ny);
  for (int j = 0; j < window.ny; ++j)
    for (int i = 0; i < window.nx; ++i) {
      const int a = i + oi, b = j + oj;
      const double sq = P(a, b) ? D_out(a, b) : D_in(a, b);
      d(i, j) = (std::sqrt(sq) - 0.5) * W.h;
    }
  return d;
}

GridFunction signed_distance(const DomainMask& U) {
  GridFunction d = boundary_distance(U, U.window());
  for (int j = 0; j < U.ny(); ++j)
    for (int i = 0; i < U.nx(); ++i)
      if (U(i, j)) d(i, j) = -d(i, j);
  return d;
}

double symmetric_difference_volume(const DomainMask& U, const Ellipsoid& E) {
  const GridWindow& w = U.window();
  const Eigen::Vector2d ext = E.half_extent();
  const Eigen::Vector2i lo = lattice_index(w, E.center - ext) - Eigen::Vector2i::Ones();
  const Eigen::Vector2i hi = lattice_index(w, E.center + ext) + Eigen::Vector2i::Ones();
  const Eigen::Matrix2d inv = E.sqrt_abar.inverse();
  const double rr = E.rho * E.rho;
  long in_e = 0, overlap = 0;
  for (int j = lo(1); j <= hi(1); ++j)
    for (int i = lo(0); i <= hi(0); ++i) {
      if ((inv * (w.center(i, j) - E.center)).squaredNorm() >= rr) continue;
      ++in_e;
      overlap += U(i, j);
    }
  return w.h * w.h * static_cast<double>(U.count() + in_e - 2 * overlap);
}

AsymmetryResult asymmetry(const DomainMask& U, const Eigen::Matrix2d& abar, bool free_volume) {
  if (U.empty()) throw DomainError("asymmetry of an empty mask");
  const double vol = U.volume();
  const double h = U.h();
  Ellipsoid E = Ellipsoid::with_volume(abar, vol, U.barycenter());
  double best = symmetric_difference_volume(U, E);

  const double dirs[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  double step = 0.25 * E.rho;
  int guard = 0;
  while (step >= 0.5 * h && guard++ < 10000) {
    Ellipsoid cand_best = E;
    double val_best = best;
    for (const auto& d : dirs) {
      Ellipsoid c = E;
      c.center += step * Eigen::Vector2d(d[0], d[1]).normalized();
      const double v = symmetric_difference_volume(U, c);
      if (v < val_best) {
        val_best = v;
        cand_best = c;
      }
    }
    if (free_volume) {
      for (double s : {1.0 + step / E.rho, 1.0 - step / E.rho}) {
        if (s <= 0.0) continue;
        Ellipsoid c = E;
        c.rho *= s;
        const double v = symmetric_difference_volume(U, c);
        if (v < val_best) {
          val_best = v;
          cand_best = c;
        }
      }
    }
    if (val_best < best) {
      best = val_best;
      E = cand_best;
    } else {
      step *= 0.5;
    }
  }
  return {best / vol, E};
}

double hausdorff_boundary(const DomainMask& U, const DomainMask& V) {
  if (U.empty() || V.empty()) throw DomainError("Hausdorff distance with an empty mask");
  const GridWindow W = padded(common_window(U.window(), V.window()), 1);
  const DomainMask A = embed(U, W), B = embed(V, W);
  DomainMask::Cells bA = DomainMask::Cells::Zero(W.nx, W.ny), bB = bA;
  for (int j = 0; j < W.ny; ++j)
    for (int i = 0; i < W.nx; ++i) {
      bA(i, j) = A.is_boundary(i, j);
      bB(i, j) = B.is_boundary(i, j);
    }
  const auto DA = squared_distance_transform(bA);
  const auto DB = squared_distance_transform(bB);
  double worst = 0.0;
  for (int j = 0; j < W.ny; ++j)
    for (int i = 0; i < W.nx; ++i) {
      if (bA(i, j)) worst = std::max(worst, DB(i, j));
      if (bB(i, j)) worst = std::max(worst, DA(i, j));
    }
  return std::sqrt(worst) * W.h;
}

std::pair<double, double> density_fractions(const DomainMask& U, int i, int j, double r) {
  const auto offsets = ball_offsets(r, U.h());
  const double total = static_cast<double>(offsets.size());
  const double in = static_cast<double>(count_in(U, i, j, offsets));
  return {in / total, (total - in) / total};
}

RegularityReport density_report(const DomainMask& U, const DomainMask* reference) {
  if (U.empty()) throw DomainError("density report of an empty mask");
  const double h = U.h();
  const double scale = std::sqrt(U.volume());
  const auto boundary = subsample(U.boundary_cells(), 256);

  RegularityReport rep;

  // inner/outer density bound
  double kappa0 = 1.0;
  // radii up to that of the equal-volume disk; below 4h the lattice balls are too coarse
  for (double r : dyadic_radii(4.0 * h, std::max(4.0 * h, scale / std::sqrt(M_PI)))) {
    const auto offsets = ball_offsets(r, h);
    const double total = static_cast<double>(offsets.size());
    for (const auto& b : boundary) {
      const double in = static_cast<double>(count_in(U, b(0), b(1), offsets));
      kappa0 = std::min({kappa0, in / total, (total - in) / total});
    }
  }
  rep.kappa0 = kappa0;

  // global density quantity: both suprema over the same dyadic radii
  std::vector<Eigen::Vector2i> interior;
  for (int j = 0; j < U.ny(); ++j)
    for (int i = 0; i < U.nx(); ++i)
      if (U(i, j)) interior.emplace_back(i, j);
  interior = subsample(interior, 256);
  double doubling = 0.0, outer = 0.0;
  const auto radii = dyadic_radii(2.0 * h, 4.0 * scale);
  for (double r : radii) {
    const auto big = ball_offsets(r, h);
    const auto small = ball_offsets(0.5 * r, h);
    for (const auto& z : interior) {
      const double nb = static_cast<double>(count_in(U, z(0), z(1), big));
      const double ns = static_cast<double>(count_in(U, z(0), z(1), small));
      if (ns > 0.0) doubling = std::max(doubling, nb / ns);
    }
    const double total = static_cast<double>(big.size());
    for (const auto& b : boundary) {
      const double out = total - static_cast<double>(count_in(U, b(0), b(1), big));
      if (out > 0.0) outer = std::max(outer, total / out);
    }
  }
  rep.kappaU = doubling + outer;

  // boundary strip constant
  const GridFunction d = boundary_distance(U, U.window());
  std::vector<double> inside;
  for (int j = 0; j < U.ny(); ++j)
    for (int i = 0; i < U.nx(); ++i)
      if (U(i, j)) inside.push_back(d(i, j));
  std::sort(inside.begin(), inside.end());
  double P = 0.0;
  for (double t = h; t <= scale * (1.0 + 1e-12); t *= 2.0) {
    const auto n = std::upper_bound(inside.begin(), inside.end(), t * (1.0 + 1e-9)) - inside.begin();
    P = std::max(P, h * h * static_cast<double>(n) / (scale * t));
  }
  rep.strip_P = P;

  if (reference) rep.hausdorff_to = hausdorff_boundary(U, *reference);
  return rep;
}

double strip_constant_sup(const DomainMask& U) {
  if (U.empty()) throw DomainError("strip constant of an empty mask");
  const double h = U.h();
  const double scale = std::sqrt(U.volume());
  const GridFunction d = boundary_distance(U, U.window());
  std::vector<double> inside;
  for (int j = 0; j < U.ny(); ++j)
    for (int i = 0; i < U.nx(); ++i)
      if (U(i, j)) inside.push_back(d(i, j));
  std::sort(inside.begin(), inside.end());
  double P = 0.0;
  for (std::size_t k = 0; k < inside.size(); ++k) {
    if (k + 1 < inside.size() && inside[k + 1] == inside[k]) continue;
    P = std::max(P, h * h * static_cast<double>(k + 1) / (scale * inside[k]));
  }
  return P;
}

void check_omega_parameters(double p, double gamma) {
  if (!(p > kDim + 4)) throw RangeError("omega exponent p must exceed d + 4 = 6");
  const double cap = std::pow(std::log(2.0), -p);
  if (!(gamma > 0.0) || !(gamma < cap))
    throw RangeError("omega cap gamma must lie in (0, |log 2|^{-p}) = (0, " + std::to_string(cap) + ")");
}

double dist_omega(const DomainMask& A, const DomainMask& B, double p, double gamma) {
  check_omega_parameters(p, gamma);
  if (B.empty()) throw DomainError("dist_omega: reference set has no boundary");
  const GridWindow W = padded(common_window(A.window(), B.window()), 1);
  const DomainMask a = embed(A, W), b = embed(B, W);
  const GridFunction d = boundary_distance(b, W);
  const double scale = std::sqrt(B.volume());
  double sum = 0.0;
  for (int j = 0; j < W.ny; ++j)
    for (int i = 0; i < W.nx; ++i)
      if (a(i, j) != b(i, j)) sum += omega(d(i, j) / scale, p, gamma);
  return W.h * W.h * sum;
}

double omega_mass(const DomainMask& B, double p, double gamma) {
  check_omega_parameters(p, gamma);
  const GridFunction d = boundary_distance(B, B.window());
  const double scale = std::sqrt(B.volume());
  double sum = 0.0;
  for (int j = 0; j < B.ny(); ++j)
    for (int i = 0; i < B.nx(); ++i)
      if (B(i, j)) sum += omega(d(i, j) / scale, p, gamma);
  return B.h() * B.h() * sum;
}

}  // namespace fkhom
