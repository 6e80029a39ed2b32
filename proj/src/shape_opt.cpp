#include "fkhom/shape_opt.hpp"

#include "fkhom/constants.hpp"
#include "fkhom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace fkhom {

namespace {

// Modulus of continuity of the odd reflection of omega: sup_t omega~(t + r) - omega~(t).
double reflected_modulus(double r, double p, double gamma, double s_cap) {
  auto w = [&](double t) { return t < 0.0 ? -omega(-t, p, gamma) : omega(t, p, gamma); };
  double best = w(0.5 * r) - w(-0.5 * r);
  const int n = 256;
  for (int k = 0; k <= n; ++k) {
    const double t = -r + (s_cap + r) * k / n;
    best = std::max(best, w(t + r) - w(t));
  }
  return best;
}

// Lattice offset of window b's origin inside window a, in cells.
Eigen::Vector2i lattice_offset(const GridWindow& a, const GridWindow& b) {
  const Eigen::Vector2d d = (b.origin - a.origin) / a.h;
  return {static_cast<int>(std::lround(d(0))), static_cast<int>(std::lround(d(1)))};
}

// Normal face coefficients of the window: cx(i, j) on the face between cells
// (i-1, j) and (i, j), cy(i, j) between (i, j-1) and (i, j).
struct FaceCoefficients {
  Eigen::ArrayXXd cx, cy;

  FaceCoefficients(const Medium& a, const GridWindow& w) : cx(w.nx + 1, w.ny), cy(w.nx, w.ny + 1) {
    for (int j = 0; j < w.ny; ++j)
      for (int i = 0; i <= w.nx; ++i)
        cx(i, j) = a.at(w.origin + w.h * Eigen::Vector2d(i, j + 0.5))(0, 0);
    for (int j = 0; j <= w.ny; ++j)
      for (int i = 0; i < w.nx; ++i)
        cy(i, j) = a.at(w.origin + w.h * Eigen::Vector2d(i + 0.5, j))(1, 1);
  }
};

// Rayleigh quotient of v on the mask {v > 0} with face-Dirichlet conditions.
double positive_part_rayleigh(const FaceCoefficients& f, const GridFunction& v, double h) {
  const int nx = static_cast<int>(v.rows()), ny = static_cast<int>(v.cols());
  double num = 0.0, den = 0.0;
  auto face = [&](double c, double a, double b) {
    if (a > 0.0 && b > 0.0) return c * (a - b) * (a - b);
    if (a > 0.0) return 2.0 * c * a * a;
    if (b > 0.0) return 2.0 * c * b * b;
    return 0.0;
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const double a = i > 0 ? v(i - 1, j) : 0.0, b = i < nx ? v(i, j) : 0.0;
      num += face(f.cx(i, j), a, b);
    }
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double a = j > 0 ? v(i, j - 1) : 0.0, b = j < ny ? v(i, j) : 0.0;
      num += face(f.cy(i, j), a, b);
    }
  den = v.square().sum();
  return den > 0.0 ? num / (h * h * den) : std::numeric_limits<double>::infinity();
}

struct Candidate {
  DomainMask mask;
  std::string name;
  int di = 0, dj = 0;  ///< translation of the warm start
};

GridFunction shifted(const GridFunction& u, int di, int dj) {
  GridFunction v = GridFunction::Zero(u.rows(), u.cols());
  for (Eigen::Index j = 0; j < u.cols(); ++j)
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      const Eigen::Index a = i + di, b = j + dj;
      if (a >= 0 && b >= 0 && a < u.rows() && b < u.cols()) v(a, b) = u(i, j);
    }
  return v;
}

// Shape-gradient moves. Face flux density a_f (2 u_P / h)^2 estimates a |du/dn|^2
// at the face-Dirichlet boundary; adding outside cells where it beats g and
// dropping boundary cells where it falls short both lower J to first order.
void gradient_candidates(const DomainMask& U, const GridFunction& u, const FaceCoefficients& f, const Penalty& g,
                         double fraction, std::vector<Candidate>& out) {
  const GridWindow& w = U.window();
  const double h = w.h;
  Eigen::ArrayXXd add_sum = Eigen::ArrayXXd::Zero(w.nx, w.ny), add_n = add_sum;
  Eigen::ArrayXXd rem_sum = add_sum, rem_n = add_sum;
  auto flux = [&](double c, double uP) { return c * (2.0 * uP / h) * (2.0 * uP / h); };
  for (int j = 0; j < w.ny; ++j)
    for (int i = 0; i < w.nx; ++i) {
      if (!U(i, j)) continue;
      const double uP = u(i, j);
      const int nb[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
      const double cf[4] = {f.cx(i + 1, j), f.cx(i, j), f.cy(i, j + 1), f.cy(i, j)};
      for (int d = 0; d < 4; ++d) {
        const int a = nb[d][0], b = nb[d][1];
        if (U(a, b)) continue;
        const double s = flux(cf[d], uP);
        rem_sum(i, j) += s;
        rem_n(i, j) += 1;
        if (w.contains(a, b)) {
          add_sum(a, b) += s;
          add_n(a, b) += 1;
        }
      }
    }
  struct Move {
    double margin;
    int i, j;
  };
  std::vector<Move> adds, rems;
  for (int j = 0; j < w.ny; ++j)
    for (int i = 0; i < w.nx; ++i) {
      const double gv = g.at(w, i, j);
      if (add_n(i, j) > 0) {
        const double m = add_sum(i, j) / add_n(i, j) / gv - 1.0;
        if (m > 0.0) adds.push_back({m, i, j});
      }
      if (rem_n(i, j) > 0) {
        const double m = 1.0 - rem_sum(i, j) / rem_n(i, j) / gv;
        if (m > 0.0) rems.push_back({m, i, j});
      }
    }
  auto top = [&](std::vector<Move> v) {
    std::sort(v.begin(), v.end(), [](const Move& a, const Move& b) { return a.margin > b.margin; });
    const std::size_t keep = v.empty() ? 0 : std::max<std::size_t>(1, static_cast<std::size_t>(fraction * v.size()));
    v.resize(keep);
    return v;
  };
  const auto A = top(adds), R = top(rems);
  std::ostringstream tag;
  tag << "_f" << fraction;
  if (!A.empty()) {
    DomainMask m = U;
    for (const auto& mv : A) m.set(mv.i, mv.j, true);
    out.push_back({m, "grad_add" + tag.str()});
  }
  if (!R.empty()) {
    DomainMask m = U;
    for (const auto& mv : R) m.set(mv.i, mv.j, false);
    out.push_back({m, "grad_remove" + tag.str()});
  }
  if (!A.empty() && !R.empty()) {
    DomainMask m = U;
    for (const auto& mv : A) m.set(mv.i, mv.j, true);
    for (const auto& mv : R) m.set(mv.i, mv.j, false);
    out.push_back({m, "grad_balanced" + tag.str()});
  }
}

DomainMask superlevel(const DomainMask& U, const GridFunction& u, double t) {
  DomainMask m(U.window());
  for (int j = 0; j < U.ny(); ++j)
    for (int i = 0; i < U.nx(); ++i) m.set(i, j, U(i, j) && u(i, j) > t);
  return m;
}

DomainMask principal_component(const DomainMask& U, const GridFunction& u) {
  int count = 0;
  const Eigen::ArrayXXi labels = label_components(U, &count);
  if (count <= 1) return U;
  Eigen::Index mi = 0, mj = 0;
  u.maxCoeff(&mi, &mj);
  const int keep = labels(mi, mj);
  DomainMask m(U.window());
  for (int j = 0; j < U.ny(); ++j)
    for (int i = 0; i < U.nx(); ++i) m.set(i, j, labels(i, j) == keep);
  return m;
}

}  // namespace

double PenaltyField::at(const GridWindow& w, int i, int j) const {
  const Eigen::Vector2i off = lattice_offset(window, w);
  const int a = i + off(0), b = j + off(1);
  return window.contains(a, b) ? g(a, b) : far_value();
}

double Penalty::volume_term(const DomainMask& U) const {
  if (!field_) return mu_ * U.volume();
  const GridWindow& w = U.window();
  double s = 0.0;
  for (int j = 0; j < w.ny; ++j)
    for (int i = 0; i < w.nx; ++i)
      if (U(i, j)) s += field_->at(w, i, j);
  return w.h * w.h * s;
}

double energy_J(const Medium& a, const Penalty& g, const DomainMask& U, const EigenOptions& opts) {
  return eigen(a, U, 1, opts).lambda1 + g.volume_term(U);
}

OptResult minimize_J(const Medium& a, const Penalty& g, const DomainMask& init, const OptOptions& opt,
                     const EigenOptions& eig) {
  if (init.count() < 5) throw CollapseError("initial mask has fewer than 5 cells");
  if (!(g.mu() > 0.0)) throw RangeError("mu must be positive");
  const GridWindow& w = init.window();
  const double side = std::min(w.nx, w.ny) * w.h;
  const double need = opt.window_factor * std::pow(g.mu(), -1.0 / (kDim + 2)) / a.ellipticity();
  if (side < need) throw DomainError("window too small for the expected minimizer");
  if (!init.has_margin()) throw DomainError("initial mask touches the window edge");

  const FaceCoefficients faces(a, w);
  EigenOptions fast = eig;
  fast.tol = std::max(eig.tol, opt.candidate_tol);

  OptResult out;
  out.mask = init;
  out.eig = eigen(a, init, 1, fast);
  out.lambda1 = out.eig.lambda1;
  out.energy = out.lambda1 + g.volume_term(init);
  out.trace.push_back({0, out.energy, out.lambda1, init.volume(), "init"});

  double spacing = 1.0 / (2.0 * opt.quantile_levels);
  double fraction = 0.25;
  int stall = 0;
  for (int it = 1; it <= opt.max_outer; ++it) {
    const DomainMask& U = out.mask;
    const GridFunction& u = out.eig.u;
    std::vector<Candidate> cands;

    // thresholds, screened by the Rayleigh bound of (u - t)_+
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(U.count()));
    for (int j = 0; j < w.ny; ++j)
      for (int i = 0; i < w.nx; ++i)
        if (U(i, j)) vals.push_back(u(i, j));
    std::sort(vals.begin(), vals.end());
    std::vector<std::pair<double, double>> screened;  // (bound, t)
    for (int q = 1; q <= opt.quantile_levels; ++q) {
      const double level = q * spacing;
      const auto k = static_cast<std::size_t>(level * static_cast<double>(vals.size()));
      if (k == 0 || k >= vals.size()) continue;
      const double t = vals[k - 1];
      const GridFunction v = (u - t).max(0.0) * (U.cells() != 0).cast<double>();
      const DomainMask m = superlevel(U, u, t);
      if (m.count() < 5) continue;
      screened.emplace_back(positive_part_rayleigh(faces, v, w.h) + g.volume_term(m), t);
    }
    std::sort(screened.begin(), screened.end());
    screened.erase(std::unique(screened.begin(), screened.end(),
                               [](const auto& x, const auto& y) { return x.second == y.second; }),
                   screened.end());
    for (std::size_t s = 0; s < screened.size() && static_cast<int>(s) < opt.screen_top; ++s) {
      std::ostringstream name;
      name << "threshold_t" << screened[s].second;
      cands.push_back({superlevel(U, u, screened[s].second), name.str()});
    }
    cands.push_back({dilate(U), "dilate"});
    cands.push_back({erode(U), "erode"});
    gradient_candidates(U, u, faces, g, 1.0, cands);
    gradient_candidates(U, u, faces, g, fraction, cands);
    if (!a.is_constant() || !g.is_constant()) {
      cands.push_back({shift_cells(U, 1, 0), "shift_+x", 1, 0});
      cands.push_back({shift_cells(U, -1, 0), "shift_-x", -1, 0});
      cands.push_back({shift_cells(U, 0, 1), "shift_+y", 0, 1});
      cands.push_back({shift_cells(U, 0, -1), "shift_-y", 0, -1});
    }
    {
      DomainMask pc = principal_component(U, u);
      if (!(pc == U)) cands.push_back({pc, "component"});
    }

    double best_E = out.energy;
    int best = -1;
    EigenResult best_res;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      const DomainMask& m = cands[c].mask;
      if (m.count() < 5 || !m.has_margin() || m == U) continue;
      const double vol = g.volume_term(m);
      if (vol >= best_E) continue;  // lambda > 0
      const GridFunction warm = (cands[c].di || cands[c].dj) ? shifted(u, cands[c].di, cands[c].dj) : u;
      EigenResult r = eigen(a, m, 1, fast, &warm);
      const double E = r.lambda1 + vol;
      if (E < best_E) {
        best_E = E;
        best = static_cast<int>(c);
        best_res = std::move(r);
      }
    }
    out.iterations = it;
    if (best >= 0 && best_E < out.energy - 1e-13 * std::abs(out.energy)) {
      out.mask = cands[static_cast<std::size_t>(best)].mask;
      out.eig = std::move(best_res);
      out.energy = best_E;
      out.lambda1 = out.eig.lambda1;
      out.trace.push_back({it, out.energy, out.lambda1, out.mask.volume(), cands[static_cast<std::size_t>(best)].name});
      stall = 0;
    } else {
      out.trace.push_back({it, out.energy, out.lambda1, out.mask.volume(), "none"});
      spacing *= 0.5;
      fraction *= 0.5;
      if (++stall >= opt.stall_iters) {
        out.converged = true;
        break;
      }
    }
  }

  out.eig = eigen(a, out.mask, 1, eig, &out.eig.u);
  out.lambda1 = out.eig.lambda1;
  out.energy = std::min(out.energy, out.lambda1 + g.volume_term(out.mask));
  return out;
}

EllipsoidMinimizer ellipsoid_minimizer(const Eigen::Matrix2d& abar, double mu, const Eigen::Vector2d& center) {
  if (!(mu > 0.0)) throw RangeError("mu must be positive");
  const double j2 = unit_disk_eigenvalue();
  const double sdet = std::sqrt(abar.determinant());
  const double rho = std::pow((2.0 / kDim) * j2 / (mu * sdet * unit_ball_volume()), 1.0 / (kDim + 2));
  EllipsoidMinimizer e;
  e.E = Ellipsoid::from_abar(abar, rho, center);
  e.f = j2 / (rho * rho) + mu * sdet * unit_ball_volume() * std::pow(rho, kDim);
  return e;
}

GridWindow optimization_window(const Eigen::Matrix2d& abar, double mu, double h, const Eigen::Vector2d& center,
                               double window_factor) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(abar, Eigen::EigenvaluesOnly);
  const double side = window_factor * std::pow(mu, -1.0 / (kDim + 2)) * std::sqrt(es.eigenvalues()(1)) /
                      std::pow(abar.determinant(), 1.0 / 8.0);
  return GridWindow::centered(center, side, h);
}

DomainMask rescale_mask(const DomainMask& U, double s, const GridWindow& target) {
  if (U.empty()) throw DomainError("cannot rescale an empty mask");
  const Eigen::Vector2d c = U.barycenter();
  const GridWindow& w = U.window();
  DomainMask out(target);
  for (int j = 0; j < target.ny; ++j)
    for (int i = 0; i < target.nx; ++i) {
      const Eigen::Vector2d x = c + (target.center(i, j) - c) / s;
      const Eigen::Vector2d q = (x - w.origin) / w.h;
      out.set(i, j, U(static_cast<int>(std::floor(q(0))), static_cast<int>(std::floor(q(1)))));
    }
  return out;
}

std::vector<double> geometric_grid(double lo, double hi, int n) {
  if (!(lo > 0.0 && hi > lo) || n < 2) throw RangeError("geometric grid needs 0 < lo < hi and n >= 2");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) g[static_cast<std::size_t>(k)] = lo * std::pow(hi / lo, double(k) / (n - 1));
  return g;
}

OptResult optimize_at(const Medium& a, double mu, const DomainMask* previous, double mu_prev, const ScanSetup& s) {
  const Eigen::Vector2d c = previous ? previous->barycenter() : s.center;
  const GridWindow w = optimization_window(s.abar, mu, s.h, c, s.opt.window_factor);
  DomainMask init;
  if (previous)
    init = rescale_mask(*previous, std::pow(mu_prev / mu, 1.0 / (kDim + 2)), w);
  else
    init = rasterize_ellipsoid(ellipsoid_minimizer(s.abar, mu, c).E, w);
  return minimize_J(a, mu, init, s.opt, s.eig);
}

VolumeMapScan volume_map(const Medium& a, const std::vector<double>& mu_grid, const ScanSetup& setup) {
  if (mu_grid.empty()) throw RangeError("empty mu grid");
  for (std::size_t k = 1; k < mu_grid.size(); ++k)
    if (!(mu_grid[k] > mu_grid[k - 1])) throw RangeError("mu grid must be strictly increasing");
  VolumeMapScan scan;
  for (std::size_t k = 0; k < mu_grid.size(); ++k) {
    const VolumeMapRow* prev = k ? &scan.rows.back() : nullptr;
    OptResult r = optimize_at(a, mu_grid[k], prev ? &prev->mask : nullptr, prev ? prev->mu : 0.0, setup);
    scan.rows.push_back({mu_grid[k], r.mask.volume(), r.energy, r.lambda1, r.mask.perimeter(), r.mask});
  }
  for (std::size_t k = 1; k < scan.rows.size(); ++k) {
    const auto& p = scan.rows[k - 1];
    const auto& q = scan.rows[k];
    const double tol = 2.0 * setup.h * std::max(p.perimeter, q.perimeter);
    if (q.volume > p.volume + tol) scan.violations.emplace_back(p.mu, q.mu);
    const double predicted = p.volume * std::pow(p.mu / q.mu, double(kDim) / (kDim + 2));
    if (predicted - q.volume > setup.opt.jump_frac * p.volume) scan.detected_jumps.emplace_back(p.mu, q.mu);
  }
  return scan;
}

MuSelection select_mu(const VolumeMapScan& scan, double m, const std::function<double(double)>& volume_at,
                      double vol_tol, int max_steps) {
  if (scan.rows.empty()) throw RangeError("empty volume scan");
  const auto& rows = scan.rows;
  for (const auto& r : rows)
    if (std::abs(r.volume - m) <= vol_tol) return {r.mu, r.mu, r.mu, r.volume, r.volume, false};
  std::size_t k = rows.size();
  for (std::size_t i = 0; i + 1 < rows.size(); ++i)
    if (rows[i].volume >= m && m >= rows[i + 1].volume) {
      k = i;
      break;
    }
  if (k == rows.size()) throw RangeError("target volume outside the scanned range");

  MuSelection s{0.0, rows[k].mu, rows[k + 1].mu, rows[k].volume, rows[k + 1].volume, false};
  for (int step = 0; step < max_steps; ++step) {
    if (s.vol_lo - m <= vol_tol || m - s.vol_hi <= vol_tol) break;
    const double mid = std::sqrt(s.mu_lo * s.mu_hi);
    const double v = volume_at(mid);
    if (v >= m) {
      s.mu_lo = mid;
      s.vol_lo = v;
    } else {
      s.mu_hi = mid;
      s.vol_hi = v;
    }
  }
  // The predicted volume change over the final bracket is tiny; a large
  // measured gap marks a discontinuity of the volume map.
  const double predicted_gap = s.vol_lo * (1.0 - std::pow(s.mu_lo / s.mu_hi, double(kDim) / (kDim + 2)));
  s.singular = (s.vol_lo - s.vol_hi) > predicted_gap + 2.0 * vol_tol + 0.05 * m;
  if (s.vol_lo - m <= vol_tol && !(m - s.vol_hi <= vol_tol))
    s.mu = s.mu_lo;
  else if (m - s.vol_hi <= vol_tol && !(s.vol_lo - m <= vol_tol))
    s.mu = s.mu_hi;
  else
    s.mu = std::sqrt(s.mu_lo * s.mu_hi);
  return s;
}

PenaltyField build_penalty(const DomainMask& U_star, double mu_star, double p, double gamma0) {
  check_omega_parameters(p, gamma0);
  if (!(mu_star > 0.0)) throw RangeError("mu* must be positive");
  if (U_star.empty()) throw DomainError("penalty reference mask is empty");
  const double L = std::sqrt(U_star.volume());
  // omega reaches gamma0 at s_cap = 1 / (exp(gamma0^{-1/p}) - 2)
  const double s_cap = 1.0 / (std::exp(std::pow(gamma0, -1.0 / p)) - 2.0);
  const GridWindow& w0 = U_star.window();
  const int pad = static_cast<int>(std::ceil(s_cap * L / w0.h)) + 2;
  PenaltyField f;
  f.window = {w0.nx + 2 * pad, w0.ny + 2 * pad, w0.h, w0.origin - Eigen::Vector2d::Constant(pad * w0.h)};
  f.reference = U_star;
  f.mu = mu_star;
  f.gamma0 = gamma0;
  f.p = p;
  const GridFunction d = boundary_distance(U_star, f.window);
  const DomainMask R = embed(U_star, f.window);
  f.g.resize(f.window.nx, f.window.ny);
  for (int j = 0; j < f.window.ny; ++j)
    for (int i = 0; i < f.window.nx; ++i) {
      const double w = omega(d(i, j) / L, p, gamma0);
      f.g(i, j) = mu_star * (1.0 + (R(i, j) ? -w : w));
    }
  return f;
}

PenaltyHypotheses validate_penalty(const PenaltyField& g, int pairs, unsigned seed) {
  PenaltyHypotheses h;
  h.ratio_min = g.g.minCoeff() / g.mu;
  h.ratio_max = std::max(g.g.maxCoeff(), g.far_value()) / g.mu;
  h.gamma_hyp = std::max(h.ratio_max - 1.0, 1.0 / h.ratio_min - 1.0);
  h.scaled_ellipticity = h.gamma_hyp <= g.gamma0;

  const double L = std::sqrt(g.reference.volume());
  const double s_cap = 1.0 / (std::exp(std::pow(g.gamma0, -1.0 / g.p)) - 2.0);
  const GridFunction d = boundary_distance(g.reference, g.window);
  const DomainMask R = embed(g.reference, g.window);
  h.localizing = true;
  for (int j = 0; j < g.window.ny; ++j)
    for (int i = 0; i < g.window.nx; ++i) {
      const bool inside = R(i, j);
      if (!inside && d(i, j) > s_cap * L && g.g(i, j) != g.far_value()) h.localizing = false;
    }
  // border cells of the padded window must already sit at the far value
  for (int i = 0; i < g.window.nx; ++i)
    if (g.g(i, 0) != g.far_value() || g.g(i, g.window.ny - 1) != g.far_value()) h.localizing = false;

  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> di(0, g.window.nx - 1), dj(0, g.window.ny - 1);
  const double hh = g.window.h;
  for (int k = 0; k < pairs; ++k) {
    const int i1 = di(rng), j1 = dj(rng), i2 = di(rng), j2 = dj(rng);
    const double r = (g.window.center(i1, j1) - g.window.center(i2, j2)).norm();
    const double bound = g.mu * reflected_modulus((r + hh) / L, g.p, g.gamma0, s_cap);
    h.modulus_ratio = std::max(h.modulus_ratio, std::abs(g.g(i1, j1) - g.g(i2, j2)) / bound);
  }
  // omega*^{1/(d+4)} ~ |log r|^{-p/(d+4)} near 0 is Dini iff p > d + 4
  h.dini = h.modulus_ratio <= 1.0 + 1e-9 && g.p > kDim + 4;
  return h;
}

double energy_deficit(const Medium& a, const DomainMask& U, double mu, double best_known, const EigenOptions& opts) {
  return U.volume() * (energy_J(a, mu, U, opts) - best_known);
}

PipelineReport hard_constraint_pipeline(const Medium& a, const DomainMask& U, double p, double gamma0,
                                        const ScanSetup& setup) {
  if (U.empty()) throw DomainError("pipeline input mask is empty");
  check_omega_parameters(p, gamma0);
  const double m = U.volume();
  const double sdet = std::sqrt(setup.abar.determinant());
  // ellipsoid prediction: m = (pi sdet j^2 / mu)^{1/2}
  const double mu_pred = unit_ball_volume() * sdet * unit_disk_eigenvalue() / (m * m);

  ScanSetup local = setup;
  local.center = U.barycenter();
  std::vector<double> grid{mu_pred / 1.6, mu_pred * 1.6};
  VolumeMapScan scan = volume_map(a, grid, local);
  for (int widen = 0; widen < 4 && !(scan.rows.front().volume >= m && m >= scan.rows.back().volume); ++widen) {
    grid = {grid.front() / 2.0, grid.back() * 2.0};
    scan = volume_map(a, grid, local);
  }
  auto volume_at = [&](double mu) {
    return optimize_at(a, mu, &scan.rows.front().mask, scan.rows.front().mu, local).mask.volume();
  };
  const MuSelection sel = select_mu(scan, m, volume_at, 2.0 * setup.h * U.perimeter());

  PipelineReport rep;
  rep.mu_star = sel.mu;
  rep.singular_mu = sel.singular;

  // reference J_mu* minimum for the deficit surrogate
  const OptResult ref = optimize_at(a, sel.mu, &scan.rows.front().mask, scan.rows.front().mu, local);

  const PenaltyField g = build_penalty(U, sel.mu, p, gamma0);
  rep.hypotheses = validate_penalty(g);

  const GridWindow w = optimization_window(setup.abar, sel.mu, setup.h, U.barycenter(), setup.opt.window_factor);
  const GridWindow cw = common_window(w, U.window());
  const DomainMask init = embed(U, cw);
  const OptResult r = minimize_J(a, g, init, setup.opt, setup.eig);
  rep.omega = r.mask;

  rep.lambda_U = eigen(a, U, 1, setup.eig).lambda1;
  rep.lambda_omega = r.lambda1;
  rep.eigen_closeness = std::pow(m, 2.0 / kDim) * std::abs(rep.lambda_U - rep.lambda_omega);
  rep.measure_closeness = symmetric_difference_volume(r.mask, U) / m;
  rep.dist_omega_ratio = dist_omega(r.mask, U, p, gamma0) / m;
  rep.deficit = std::max(0.0, energy_deficit(a, U, sel.mu, ref.energy, setup.eig));
  rep.closeness_bound = 2.0 * rep.deficit + 2.0 * (2.0 / kDim) * m * rep.lambda_U * rep.measure_closeness;
  rep.regularity = density_report(r.mask);
  return rep;
}

}  // namespace fkhom
