#include "fkhom/errors.hpp"
#include "fkhom/harness.hpp"

#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fkhom;

namespace {

SweepRow synthetic_row(double m) {
  SweepRow r;
  r.mu = 1.0 / (m * m);
  r.m = m;
  r.lambda_a = 35.0 / m + 0.1;
  r.lambda_bar_ellipsoid = 35.0 / m;
  r.scaled_err = 0.1 * m;
  r.asym = 0.2 / std::sqrt(m);
  r.hausdorff_scaled = 1.0 / 3.0;
  r.lip_scaled = 4.7;
  r.nondeg_scaled = 2.0 / 7.0;
  r.kappa0 = 0.3;
  r.strip_P = std::sqrt(2.0);
  r.calE = 1e-17;
  r.iters = static_cast<int>(m);
  return r;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("log-log fit recovers an exact power law") {
  std::vector<double> x, y;
  for (double t : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    x.push_back(t);
    y.push_back(3.0 * std::pow(t, -0.5));
  }
  y[0] = 100.0;  // dropped
  const RateFit f = fit_loglog(x, y, true);
  CHECK(f.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0));
  CHECK(f.residual < 1e-12);
  CHECK(f.rows_used == 4);
  CHECK(fit_loglog(x, y, false).slope < -0.5);
  CHECK_THROWS_AS(fit_loglog({1, 2, 3}, {1, 2, 3}, true), RangeError);
  CHECK_THROWS_AS(fit_loglog({1, 2, 3}, {1, 0, 3}, false), RangeError);
  CHECK_THROWS_AS(fit_loglog({1, 2, 3}, {1, 2}, false), RangeError);
}

TEST_CASE("dyadic mu levels invert the ellipsoid volume law") {
  Eigen::Matrix2d abar;
  abar << 2.0, 0.0, 0.0, 2.0;
  const auto mu = dyadic_mu_levels(abar, 4.0, 4);
  REQUIRE(mu.size() == 4);
  const double j = test::j01_oracle();
  for (std::size_t k = 0; k < mu.size(); ++k) {
    const double m = std::sqrt(M_PI * 2.0 * j * j / mu[k]);
    CHECK(m == doctest::Approx(4.0 * std::pow(2.0, double(k))));
    CHECK(ellipsoid_minimizer(abar, mu[k]).E.volume() == doctest::Approx(m));
  }
  CHECK(mu[1] / mu[0] == doctest::Approx(0.25));
  CHECK_THROWS_AS(dyadic_mu_levels(abar, 0.0, 4), RangeError);
}

TEST_CASE("CSV output") {
  std::ostringstream empty;
  write_csv(empty, {});
  CHECK(empty.str() == std::string(kSweepHeader) + "\n");
  CHECK(empty.str().rfind("mu,m,lambda_a,lambda_bar_ellipsoid,scaled_err,asym,hausdorff_scaled,lip_scaled,"
                          "nondeg_scaled,kappa0,strip_P,calE,iters\n",
                          0) == 0);

  std::vector<SweepRow> rows;
  for (double m : {4.0, 8.0, 16.0, 32.0}) rows.push_back(synthetic_row(m));
  std::stringstream ss;
  write_csv(ss, rows);
  int lines = 0;
  for (char c : ss.str()) lines += c == '\n';
  CHECK(lines == 5);

  const auto back = parse_csv(ss);
  REQUIRE(back.size() == rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(back[k].mu == rows[k].mu);
    CHECK(back[k].lambda_a == rows[k].lambda_a);
    CHECK(back[k].hausdorff_scaled == rows[k].hausdorff_scaled);
    CHECK(back[k].nondeg_scaled == rows[k].nondeg_scaled);
    CHECK(back[k].strip_P == rows[k].strip_P);
    CHECK(back[k].calE == rows[k].calE);
    CHECK(back[k].iters == rows[k].iters);
  }

  std::istringstream bad("mu,m\n1,2\n");
  CHECK_THROWS_AS(parse_csv(bad), ConfigError);
  std::istringstream short_row(std::string(kSweepHeader) + "\n1,2,3\n");
  CHECK_THROWS_AS(parse_csv(short_row), ConfigError);
}

TEST_CASE("rate sweep flags and fits from rows") {
  std::vector<SweepRow> rows;
  for (double m : {32.0, 4.0, 16.0, 8.0}) {
    SweepRow r = synthetic_row(m);
    r.scaled_err = 2.0 / std::sqrt(m);
    rows.push_back(r);
  }
  const RateSweep s = rate_sweep_from_rows(rows);
  CHECK(s.rows.front().m == 4.0);
  CHECK(s.err_strictly_decreasing);
  CHECK(s.asym_decreasing);
  CHECK(s.err_fit.slope == doctest::Approx(-0.5));
  CHECK(s.err_fit.rows_used == 3);
  rows[0].scaled_err = 10.0;
  CHECK_FALSE(rate_sweep_from_rows(rows).err_strictly_decreasing);
}

TEST_CASE("emit_report writes CSV and summary") {
  const auto dir = std::filesystem::temp_directory_path() / "fkhom_test_report";
  std::filesystem::remove_all(dir);
  std::vector<SweepRow> rows;
  for (double m : {4.0, 8.0, 16.0, 32.0}) rows.push_back(synthetic_row(m));
  const RateSweep s = rate_sweep_from_rows(rows);
  const ScalingFits sc{{0.5, 0.0, 0.0, 4}, {-0.5, 0.0, 0.0, 4}};
  emit_report(s, &sc, dir.string());
  std::istringstream csv(read_file(dir / "sweep.csv"));
  CHECK(parse_csv(csv).size() == 4);
  const auto j = nlohmann::json::parse(read_file(dir / "summary.json"));
  CHECK(j.at("rows") == 4);
  CHECK(j.at("lambda_vs_mu").at("slope") == 0.5);
  CHECK(j.at("rate_fit_drops_smallest_m") == true);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(emit_report(s, nullptr, "/proc/fkhom/unwritable"), Error);
}

TEST_CASE("Faber-Krahn rows for the disk and the square") {
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const double j = test::j01_oracle();
  const double h = 1.0 / 64;
  const DomainMask sq = box_mask(GridWindow{72, 72, h, Eigen::Vector2d::Constant(-4 * h)}, Eigen::Vector2d::Zero(),
                                 Eigen::Vector2d::Ones());
  const FaberKrahnRow r = faber_krahn_row(sq, I);
  CHECK(r.gap == doctest::Approx(2.0 * M_PI * M_PI - M_PI * j * j).epsilon(0.05));
  CHECK(r.asym == doctest::Approx(8.0 * test::segment_area(1.0 / std::sqrt(M_PI), 0.5)).epsilon(0.05));
  CHECK(r.ratio > 0.0);

  const DomainMask disk = disk_mask(GridWindow::centered(Eigen::Vector2d::Zero(), 2.5, 1.0 / 32), Eigen::Vector2d::Zero(), 1.0);
  const FaberKrahnRow d = faber_krahn_row(disk, I);
  CHECK(d.gap > 0.0);
  CHECK(d.gap < 0.05 * M_PI * j * j);
  CHECK(d.asym < 0.05);

  const FaberKrahnReport rep = faber_krahn_check(test::blob_corpus(5, 3000, 1.0 / 16), I);
  CHECK(rep.rows.size() == 5);
  CHECK(rep.all_positive);
  CHECK(rep.min_ratio > 0.0);
}

TEST_CASE("scaling fits") {
  CHECK_THROWS_AS(scaling_fit({synthetic_row(4.0)}), RangeError);
  std::vector<SweepRow> rows;
  for (double m : {4.0, 8.0, 16.0, 32.0}) rows.push_back(synthetic_row(m));
  const ScalingFits f = scaling_fit(rows);
  CHECK(f.m_vs_mu.slope == doctest::Approx(-0.5));
}

TEST_CASE("scaling sweep on the identity") {
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  ScanSetup s;
  s.abar = I;
  s.h = 1.0 / 16;
  const ScalingFits f = scaling_sweep(I, dyadic_mu_levels(I, 2.0, 4), s);
  CHECK(f.lambda_vs_mu.slope == doctest::Approx(0.5).epsilon(0.02));
  CHECK(f.m_vs_mu.slope == doctest::Approx(-0.5).epsilon(0.02));
}

TEST_CASE("a zero error leaves the rate fit undefined") {
  std::vector<SweepRow> rows;
  for (double m : {4.0, 8.0, 16.0, 32.0}) rows.push_back(synthetic_row(m));
  rows[2].asym = 0.0;
  const RateSweep s = rate_sweep_from_rows(rows);
  CHECK(std::isnan(s.asym_fit.slope));
  CHECK(s.asym_fit.rows_used == 0);
  CHECK(s.err_fit.rows_used == 3);
}
