// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 0 when
// every criterion ran; with --strict it is the number of FAIL lines.

#include "fkhom/errors.hpp"
#include "fkhom/harness.hpp"

#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>

using namespace fkhom;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();

CoeffField trig(int n) { return build_field(FieldKind::Trig, {{"c", 2}, {"A", 1}}, n); }

Outcome cell_oracles() {
  Outcome o{true, ""};
  auto timed = [&](const char* name, const std::function<std::pair<bool, std::string>()>& f) {
    const auto t0 = Clock::now();
    const auto [ok, d] = f();
    const double dt = seconds_since(t0);
    o.pass = o.pass && ok && dt < 30.0;
    o.detail += fmt("%s %s (%.1fs) ", name, d.c_str(), dt);
  };
  timed("constant", [] {
    Eigen::Matrix2d M;
    M << 2.0, 0.3, 0.3, 1.5;
    const double err = (homogenized_tensor(constant_field(M, 16)).abar - M).cwiseAbs().maxCoeff();
    return std::pair{err < 1e-10, fmt("err=%.1e", err)};
  });
  timed("laminate", [] {
    const Eigen::Matrix2d A =
        homogenized_tensor(build_field(FieldKind::Laminate, {{"alpha", 1}, {"beta", 4}}, 128)).abar;
    const double e1 = std::abs(A(0, 0) / 1.6 - 1.0), e2 = std::abs(A(1, 1) / 2.5 - 1.0);
    return std::pair{e1 < 0.01 && e2 < 0.01 && std::abs(A(0, 1)) < 1e-8, fmt("diag=(%.5f,%.5f)", A(0, 0), A(1, 1))};
  });
  timed("checkerboard", [] {
    const Eigen::Matrix2d A =
        homogenized_tensor(build_field(FieldKind::Checkerboard, {{"alpha", 1}, {"beta", 4}}, 256)).abar;
    const double err = (A - 2.0 * I).cwiseAbs().maxCoeff() / 2.0;
    return std::pair{err < 0.05, fmt("diag=(%.4f,%.4f)", A(0, 0), A(1, 1))};
  });
  return o;
}

Outcome eigen_oracles() {
  const auto t0 = Clock::now();
  const double h = 1.0 / 256;
  const DomainMask sq = box_mask(GridWindow{258, 258, h, Eigen::Vector2d::Constant(-h)}, Eigen::Vector2d::Zero(),
                                 Eigen::Vector2d::Ones());
  const double ls = eigen(I, sq).lambda1;
  const DomainMask dk = disk_mask(GridWindow::centered(Eigen::Vector2d::Zero(), 2.1, h), Eigen::Vector2d::Zero(), 1.0);
  const double ld = eigen(I, dk).lambda1;
  const double dt = seconds_since(t0);
  const double j2 = std::pow(test::j01_oracle(), 2);
  const double es = std::abs(ls / (2.0 * M_PI * M_PI) - 1.0), ed = std::abs(ld / j2 - 1.0);
  return {es < 1e-3 && ed < 0.01 && dt < 60.0,
          fmt("square rel=%.2e disk rel=%.2e (%.1fs)", es, ed, dt)};
}

Outcome optimizer_calibration() {
  const auto t0 = Clock::now();
  const double j2 = std::pow(test::j01_oracle(), 2);
  const double mu = j2 / M_PI;
  const GridWindow w = optimization_window(I, mu, 1.0 / 32, Eigen::Vector2d::Zero(), 4.0);
  const DomainMask init = box_mask(w, Eigen::Vector2d::Constant(-0.8), Eigen::Vector2d::Constant(0.8));
  const OptResult r = minimize_J(I, mu, init);
  Ellipsoid B;
  B.center = r.mask.barycenter();
  const double asym = symmetric_difference_volume(r.mask, B) / r.mask.volume();
  const double rel = std::abs(r.energy / (2.0 * j2) - 1.0);
  const double dt = seconds_since(t0);
  return {asym < 0.05 && rel < 0.02 && dt < 300.0,
          fmt("asym vs unit disk=%.4f J rel=%.4f iters=%d (%.1fs)", asym, rel, r.iterations, dt)};
}

/// One trig(2,1) sweep shared by the scaling and rate criteria.
struct TrigSweep {
  RateSweep rate;
  ScalingFits scaling;
  double seconds = 0.0;
};

const TrigSweep& trig_sweep() {
  static const TrigSweep s = [] {
    const auto t0 = Clock::now();
    const CoeffField a = trig(16);
    ScanSetup setup;
    setup.abar = homogenized_tensor(a).abar;
    setup.h = 1.0 / 16;
    TrigSweep out;
    out.rate = rate_sweep(a, dyadic_mu_levels(setup.abar, 4.0, 4), setup, true);
    out.scaling = scaling_fit(out.rate.rows);
    out.seconds = seconds_since(t0);
    return out;
  }();
  return s;
}

Outcome scaling_exponents() {
  const TrigSweep& s = trig_sweep();
  const double a = s.scaling.lambda_vs_mu.slope, b = s.scaling.m_vs_mu.slope;
  return {std::abs(a - 0.5) <= 0.05 && std::abs(b + 0.5) <= 0.05,
          fmt("lambda~mu^%.4f m~mu^%.4f (%.1fs, shared with rate sweep)", a, b, s.seconds)};
}

Outcome homogenization_rate() {
  const TrigSweep& s = trig_sweep();
  std::string errs, asyms;
  for (const auto& r : s.rate.rows) {
    errs += fmt("%.4f ", r.scaled_err);
    asyms += fmt("%.4f ", r.asym);
  }
  const bool ok = s.rate.err_strictly_decreasing && s.rate.err_fit.slope <= -0.25 && s.rate.asym_decreasing;
  return {ok, fmt("scaled_err=[%s] decreasing=%s slope=%.3f asym=[%s] decreasing=%s", errs.c_str(),
                  s.rate.err_strictly_decreasing ? "yes" : "no", s.rate.err_fit.slope, asyms.c_str(),
                  s.rate.asym_decreasing ? "yes" : "no")};
}

Outcome volume_map_monotone() {
  const auto t0 = Clock::now();
  const CoeffField a = trig(16);
  ScanSetup setup;
  setup.abar = homogenized_tensor(a).abar;
  setup.h = 1.0 / 16;
  const VolumeMapScan scan = volume_map(a, geometric_grid(0.05, 2.0, 8), setup);
  std::string vols;
  for (const auto& r : scan.rows) vols += fmt("%.3f ", r.volume);
  return {scan.monotone() && scan.rows.size() == 8,
          fmt("volumes=[%s] jumps=%zu violations=%zu (%.1fs)", vols.c_str(), scan.detected_jumps.size(),
              scan.violations.size(), seconds_since(t0))};
}

Outcome penalization_identity() {
  const CoeffField a = trig(16);
  const double h = 1.0 / 16, mu = 0.8, p = 7.0, gamma0 = 0.1;
  const DomainMask Us = test::random_blob(4242, h);
  const PenaltyField g = build_penalty(Us, mu, p, gamma0);
  const double mass = omega_mass(Us, p, gamma0);
  double worst = 0.0;
  for (unsigned s = 0; s < 5; ++s) {
    const DomainMask W = test::random_blob(5000 + s, h, Eigen::Vector2d(0.3 + 0.15 * s, 0.6));
    const double Jg = energy_J(a, g, W);
    const double defect = Jg - energy_J(a, mu, W) - mu * dist_omega(W, Us, p, gamma0) + mu * mass;
    worst = std::max(worst, std::abs(defect) / Jg);
  }
  return {worst < 1e-8, fmt("max |defect|/J_g=%.2e over 5 masks", worst)};
}

Outcome dist_omega_bound() {
  const double p = 7.0, gamma = 0.1;
  int holds = 0;
  double tightest = 0.0;
  for (unsigned k = 0; k < 20; ++k) {
    const DomainMask B = test::random_blob(6000 + k);
    const DomainMask A = k % 2 ? test::jitter_boundary(B, 6100 + k, 0.3) : test::random_blob(6200 + k);
    const double d = dist_omega(A, B, p, gamma);
    const double lhs = symmetric_difference_volume(A, B) / B.volume();
    const double rhs = test::dist_omega_bound(d, B.volume(), strip_constant_sup(B), p, gamma);
    holds += lhs <= rhs;
    tightest = std::max(tightest, lhs / rhs);
  }
  return {holds == 20, fmt("%d/20 pairs hold, max lhs/rhs=%.3e", holds, tightest)};
}

DomainMask notched_disk(const DomainMask& disk, const Eigen::Vector2d& c, double R, double frac) {
  const GridWindow& w = disk.window();
  const long target = std::lround(frac * static_cast<double>(disk.count()));
  for (double depth = w.h;; depth += w.h) {
    DomainMask U = disk;
    long removed = 0;
    for (int j = 0; j < w.ny; ++j)
      for (int i = 0; i < w.nx; ++i) {
        const Eigen::Vector2d x = w.center(i, j) - c;
        if (disk(i, j) && x(0) > R - depth && std::abs(x(1)) < 0.3 * R) {
          U.set(i, j, false);
          ++removed;
        }
      }
    if (removed >= target) return U;
  }
}

Outcome selection_pipeline() {
  const auto t0 = Clock::now();
  const CoeffField a = trig(16);
  const double h = 1.0 / 16, R = 1.6;
  const Eigen::Vector2d c(0.5, 0.5);
  ScanSetup setup;
  setup.abar = homogenized_tensor(a).abar;
  setup.h = h;
  const DomainMask disk = disk_mask(GridWindow::centered(c, 2.0 * R + 8.0 * h, h), c, R);
  const DomainMask U = notched_disk(disk, c, R, 0.03);
  const double notch = 1.0 - U.volume() / disk.volume();
  const PipelineReport rep = hard_constraint_pipeline(a, U, 7.0, 0.1, setup);
  const RegularityReport base = density_report(disk);
  auto within2 = [](double x, double ref) { return x >= ref / 2.0 && x <= 2.0 * ref; };
  const bool ok = rep.measure_closeness < 0.06 && rep.eigen_closeness <= rep.closeness_bound &&
                  within2(rep.regularity.kappa0, base.kappa0) && within2(rep.regularity.strip_P, base.strip_P);
  return {ok, fmt("notch=%.3f |UdO|/m=%.4f m|dlambda|=%.4f bound=%.4f kappa0 %.3f/%.3f strip_P %.3f/%.3f "
                  "mu*=%.4f%s (%.1fs)",
                  notch, rep.measure_closeness, rep.eigen_closeness, rep.closeness_bound, rep.regularity.kappa0,
                  base.kappa0, rep.regularity.strip_P, base.strip_P, rep.mu_star, rep.singular_mu ? " singular" : "",
                  seconds_since(t0))};
}

Outcome gap_stability() {
  const CoeffField a = trig(16);
  const double h = 1.0 / 32;
  const DomainMask U = box_mask(GridWindow{60, 40, h, Eigen::Vector2d::Zero()}, Eigen::Vector2d(2 * h, 2 * h),
                                Eigen::Vector2d(1.8, 1.1));
  const EigenResult r = eigen(a, U, 2);
  bool ok = true;
  std::string ratios;
  for (double eps : {0.05, 0.1, 0.15, 0.2}) {
    const GapCheck g = gap_stability_check(a, U, GridFunction(r.u + eps * *r.u2), r);
    const double q = g.lhs / g.rhs;
    ok = ok && g.holds && q >= 0.2 && q <= 1.0 && !g.degenerate_gap;
    ratios += fmt("%.4f ", q);
  }
  return {ok, fmt("lhs/rhs=[%s]", ratios.c_str())};
}

Outcome faber_krahn() {
  const auto corpus = test::blob_corpus(20, 7000);
  const FaberKrahnReport rep = faber_krahn_check(corpus, I);
  const double h = 1.0 / 64;
  const DomainMask sq = box_mask(GridWindow{72, 72, h, Eigen::Vector2d::Constant(-4 * h)}, Eigen::Vector2d::Zero(),
                                 Eigen::Vector2d::Ones());
  const FaberKrahnRow r = faber_krahn_row(sq, I);
  const double j2 = std::pow(test::j01_oracle(), 2);
  const double gap_ref = 2.0 * M_PI * M_PI - M_PI * j2;
  const double asym_ref = 8.0 * test::segment_area(1.0 / std::sqrt(M_PI), 0.5);
  const bool ok = rep.all_positive && std::abs(r.gap / gap_ref - 1.0) < 0.05 && std::abs(r.asym / asym_ref - 1.0) < 0.05;
  return {ok, fmt("corpus min gap/A^2=%.3f square gap=%.4f (ref %.4f) A=%.4f (ref %.4f)", rep.min_ratio, r.gap,
                  gap_ref, r.asym, asym_ref)};
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"cell problem oracles", cell_oracles},
      {"eigenvalue oracles", eigen_oracles},
      {"optimizer calibration", optimizer_calibration},
      {"scaling exponents", scaling_exponents},
      {"homogenization rate", homogenization_rate},
      {"volume map monotonicity", volume_map_monotone},
      {"penalization identity", penalization_identity},
      {"dist_omega bound", dist_omega_bound},
      {"selection pipeline", selection_pipeline},
      {"gap stability", gap_stability},
      {"Faber-Krahn positivity", faber_krahn},
  };
  int failed = 0, errors = 0, k = 0;
  for (const auto& [name, run] : criteria) {
    ++k;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
      ++errors;
    }
    failed += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", k, name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", k - failed, k);
  return strict ? failed : errors;
}
