#include "fkhom/harness.hpp"

#include "fkhom/constants.hpp"
#include "fkhom/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace fkhom {

const char* const kSweepHeader =
    "mu,m,lambda_a,lambda_bar_ellipsoid,scaled_err,asym,hausdorff_scaled,lip_scaled,nondeg_scaled,kappa0,strip_P,"
    "calE,iters";

RateFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, bool drop_first) {
  if (x.size() != y.size()) throw RangeError("fit needs paired samples");
  std::vector<double> lx, ly;
  for (std::size_t k = drop_first ? 1 : 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0 && y[k] > 0.0)) throw RangeError("log-log fit needs positive values");
    lx.push_back(std::log(x[k]));
    ly.push_back(std::log(y[k]));
  }
  const auto n = static_cast<Eigen::Index>(lx.size());
  if (n < 3) throw RangeError("rate fit needs at least 3 rows");
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    A(k, 0) = lx[static_cast<std::size_t>(k)];
    A(k, 1) = 1.0;
    b(k) = ly[static_cast<std::size_t>(k)];
  }
  const Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
  RateFit f;
  f.slope = c(0);
  f.intercept = c(1);
  f.residual = std::sqrt((A * c - b).squaredNorm() / double(n));
  f.rows_used = static_cast<int>(n);
  return f;
}

std::vector<double> dyadic_mu_levels(const Eigen::Matrix2d& abar, double m0, int levels) {
  if (!(m0 > 0.0) || levels < 1) throw RangeError("dyadic levels need m0 > 0 and at least one level");
  const double c = unit_ball_volume() * std::sqrt(abar.determinant()) * unit_disk_eigenvalue();
  std::vector<double> mu;
  for (int k = 0; k < levels; ++k) {
    const double m = m0 * std::pow(2.0, k);
    mu.push_back(c / (m * m));
  }
  return mu;
}

SweepRow sweep_row(const Medium& a, const Eigen::Matrix2d& abar, double mu, const OptResult& res,
                   const EigenOptions& eig) {
  const DomainMask& U = res.mask;
  SweepRow r;
  r.mu = mu;
  r.m = U.volume();
  r.lambda_a = res.lambda1;
  r.lambda_bar_ellipsoid = ellipsoid_eigenvalue(abar, r.m);
  r.scaled_err = std::pow(r.m, 2.0 / kDim) * std::abs(r.lambda_a - r.lambda_bar_ellipsoid);
  const AsymmetryResult as = asymmetry(U, abar);
  r.asym = as.value;
  const DomainMask E = rasterize_ellipsoid(as.best, window_for(as.best, U.h(), 2));
  r.hausdorff_scaled = hausdorff_boundary(U, E) / std::pow(r.m, 1.0 / kDim);
  const EigenDiagnostics dg = diagnostics(res.eig, U);
  r.lip_scaled = dg.lip_scaled;
  r.nondeg_scaled = dg.nondeg_scaled;
  const RegularityReport reg = density_report(U);
  r.kappa0 = reg.kappa0;
  r.strip_P = reg.strip_P;
  const double lE_a = eigen(a, E, 1, eig).lambda1;
  const double lE_bar = eigen(abar, E, 1, eig).lambda1;
  const double lU_bar = eigen(abar, U, 1, eig).lambda1;
  r.calE = std::pow(E.volume(), 2.0 / kDim) * (lE_a - lE_bar) + std::pow(r.m, 2.0 / kDim) * (lU_bar - r.lambda_a);
  r.iters = res.iterations;
  return r;
}

RateSweep rate_sweep_from_rows(std::vector<SweepRow> rows, bool drop_smallest) {
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.m < b.m; });
  RateSweep s;
  s.rows = std::move(rows);
  std::vector<double> m, err, asym;
  for (const auto& r : s.rows) {
    m.push_back(r.m);
    err.push_back(r.scaled_err);
    asym.push_back(r.asym);
  }
  auto fit_or_nan = [&](const std::vector<double>& y) {
    for (double v : y)
      if (!(v > 0.0)) return RateFit{std::nan(""), std::nan(""), std::nan(""), 0};
    return fit_loglog(m, y, drop_smallest);
  };
  s.err_fit = fit_or_nan(err);
  s.asym_fit = fit_or_nan(asym);
  s.err_strictly_decreasing = true;
  s.asym_decreasing = true;
  for (std::size_t k = 1; k < s.rows.size(); ++k) {
    if (!(err[k] < err[k - 1])) s.err_strictly_decreasing = false;
    if (!(asym[k] < asym[k - 1])) s.asym_decreasing = false;
  }
  return s;
}

namespace {

std::vector<std::pair<double, OptResult>> run_levels(const Medium& a, std::vector<double> mu, const ScanSetup& setup) {
  std::sort(mu.begin(), mu.end(), std::greater<>());
  std::vector<std::pair<double, OptResult>> out;
  for (double m : mu) {
    const bool warm = !out.empty();
    out.emplace_back(m, optimize_at(a, m, warm ? &out.back().second.mask : nullptr, warm ? out.back().first : 0.0,
                                    setup));
  }
  return out;
}

}  // namespace

RateSweep rate_sweep(const Medium& a, std::vector<double> mu_levels, const ScanSetup& setup, bool drop_smallest) {
  if (mu_levels.size() < 4) throw RangeError("rate sweep needs at least 4 levels");
  std::vector<SweepRow> rows;
  for (const auto& [mu, res] : run_levels(a, std::move(mu_levels), setup))
    rows.push_back(sweep_row(a, setup.abar, mu, res, setup.eig));
  return rate_sweep_from_rows(std::move(rows), drop_smallest);
}

ScalingFits scaling_fit(const std::vector<SweepRow>& rows) {
  if (rows.size() < 4) throw RangeError("scaling fit needs at least 4 levels");
  std::vector<double> mu, lam, m;
  for (const auto& r : rows) {
    mu.push_back(r.mu);
    lam.push_back(r.lambda_a);
    m.push_back(r.m);
  }
  return {fit_loglog(mu, lam, false), fit_loglog(mu, m, false)};
}

ScalingFits scaling_sweep(const Medium& a, const std::vector<double>& mu_levels, const ScanSetup& setup) {
  if (mu_levels.size() < 4) throw RangeError("scaling sweep needs at least 4 levels");
  std::vector<SweepRow> rows;
  for (const auto& [mu, res] : run_levels(a, mu_levels, setup)) {
    SweepRow r;
    r.mu = mu;
    r.m = res.mask.volume();
    r.lambda_a = res.lambda1;
    rows.push_back(r);
  }
  return scaling_fit(rows);
}

FaberKrahnRow faber_krahn_row(const DomainMask& U, const Eigen::Matrix2d& abar, const EigenOptions& eig) {
  FaberKrahnRow r;
  const double lam = eigen(abar, U, 1, eig).lambda1;
  r.gap = U.volume() / std::sqrt(abar.determinant()) * lam - unit_ball_volume() * unit_disk_eigenvalue();
  r.asym = asymmetry(U, abar).value;
  if (r.asym <= 0.0) {
    r.skipped = true;
    return r;
  }
  r.ratio = r.gap / (r.asym * r.asym);
  return r;
}

FaberKrahnReport faber_krahn_check(const std::vector<DomainMask>& masks, const Eigen::Matrix2d& abar,
                                   const EigenOptions& eig) {
  FaberKrahnReport rep;
  rep.all_positive = true;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (const auto& U : masks) {
    rep.rows.push_back(faber_krahn_row(U, abar, eig));
    const auto& r = rep.rows.back();
    if (r.skipped) continue;
    rep.min_ratio = std::min(rep.min_ratio, r.ratio);
    if (!(r.ratio > 0.0)) rep.all_positive = false;
  }
  return rep;
}

void write_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << kSweepHeader << '\n';
  char buf[64];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf << sep;
  };
  for (const auto& r : rows) {
    for (double v : {r.mu, r.m, r.lambda_a, r.lambda_bar_ellipsoid, r.scaled_err, r.asym, r.hausdorff_scaled,
                     r.lip_scaled, r.nondeg_scaled, r.kappa0, r.strip_P, r.calE})
      put(v, ',');
    os << r.iters << '\n';
  }
}

std::vector<SweepRow> parse_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kSweepHeader) throw ConfigError("sweep CSV header mismatch");
  std::vector<SweepRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 13) throw ConfigError("sweep CSV row has " + std::to_string(f.size()) + " fields");
    SweepRow r;
    double* dst[] = {&r.mu,         &r.m,          &r.lambda_a,      &r.lambda_bar_ellipsoid, &r.scaled_err, &r.asym,
                     &r.hausdorff_scaled, &r.lip_scaled, &r.nondeg_scaled, &r.kappa0, &r.strip_P, &r.calE};
    for (int k = 0; k < 12; ++k) *dst[k] = std::stod(f[static_cast<std::size_t>(k)]);
    r.iters = std::stoi(f[12]);
    rows.push_back(r);
  }
  return rows;
}

void emit_report(const RateSweep& sweep, const ScalingFits* scaling, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const std::filesystem::path base(dir);
  std::ofstream csv(base / "sweep.csv");
  if (!csv) throw Error("cannot write " + (base / "sweep.csv").string());
  write_csv(csv, sweep.rows);

  auto fit = [](const RateFit& f) {
    return nlohmann::json{{"slope", f.slope}, {"intercept", f.intercept}, {"residual", f.residual},
                          {"rows_used", f.rows_used}};
  };
  nlohmann::json j;
  j["rows"] = sweep.rows.size();
  j["scaled_err_vs_m"] = fit(sweep.err_fit);
  j["asym_vs_m"] = fit(sweep.asym_fit);
  j["scaled_err_strictly_decreasing"] = sweep.err_strictly_decreasing;
  j["asym_decreasing"] = sweep.asym_decreasing;
  j["rate_fit_drops_smallest_m"] = !sweep.rows.empty() && sweep.err_fit.rows_used < static_cast<int>(sweep.rows.size());
  if (scaling) {
    j["lambda_vs_mu"] = fit(scaling->lambda_vs_mu);
    j["m_vs_mu"] = fit(scaling->m_vs_mu);
  }
  std::ofstream js(base / "summary.json");
  if (!js) throw Error("cannot write " + (base / "summary.json").string());
  js << j.dump(2) << '\n';
}

}  // namespace fkhom
