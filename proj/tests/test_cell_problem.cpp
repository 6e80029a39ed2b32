#include "fkhom/cell_problem.hpp"
#include "fkhom/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace fkhom;

namespace {

CoeffField laminate(int n) { return build_field(FieldKind::Laminate, {{"alpha", 1}, {"beta", 4}}, n); }
CoeffField trig(int n) { return build_field(FieldKind::Trig, {{"c", 2}, {"A", 1}}, n); }

}  // namespace

TEST_CASE("constant coefficients: zero correctors and abar = M") {
  Eigen::Matrix2d M;
  M << 2.0, 0.3, 0.3, 1.5;
  const CoeffField a = constant_field(M, 16);
  const CorrectorSet chi = solve_correctors(a);
  CHECK(chi.chi[0].abs().maxCoeff() == 0.0);
  CHECK(chi.chi[1].abs().maxCoeff() == 0.0);
  const HomogenizedTensor t = homogenize(a, chi);
  CHECK((t.abar - M).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((t.sqrt_abar * t.sqrt_abar - t.abar).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(t.det_abar == doctest::Approx(M.determinant()));
}

TEST_CASE("laminate: harmonic and arithmetic means") {
  const CoeffField a = laminate(128);
  const CorrectorSet chi = solve_correctors(a);
  const HomogenizedTensor t = homogenize(a, chi);
  CHECK(t.abar(0, 0) == doctest::Approx(1.6).epsilon(0.01));
  CHECK(t.abar(1, 1) == doctest::Approx(2.5).epsilon(0.01));
  CHECK(std::abs(t.abar(0, 1)) < 1e-10);
  // chi_{e_2} vanishes: the layers do not vary along x_2
  CHECK(chi.chi[1].abs().maxCoeff() < 1e-12);
  // chi_{e_1} depends on x_1 only, with constant flux s (1 + chi') = <1/s>^{-1} across faces
  const int n = chi.n;
  const double flux0 = a.x_face(0, 0)(0, 0) * (1.0 + n * (chi.chi[0](0, 0) - chi.chi[0](n - 1, 0)));
  for (int i = 0; i < n; ++i) {
    const double f = a.x_face(i, 7)(0, 0) * (1.0 + n * (chi.chi[0](i, 7) - chi.chi[0]((i - 1 + n) % n, 7)));
    CHECK(f == doctest::Approx(flux0).epsilon(1e-8));
    CHECK(chi.chi[0](i, 7) == doctest::Approx(chi.chi[0](i, 0)).epsilon(1e-9));
  }
  CHECK(flux0 == doctest::Approx(t.abar(0, 0)).epsilon(1e-8));
}

TEST_CASE("laminate: discrete abar converges at least at first order") {
  std::vector<double> err;
  for (int n : {16, 32, 64}) err.push_back(std::abs(homogenized_tensor(laminate(n)).abar(0, 0) - 1.6));
  const double slope = std::log2(err[0] / err[2]) / 2.0;
  CHECK(slope >= 0.9);
}

TEST_CASE("checkerboard: Dykhne value sqrt(alpha beta)") {
  const CoeffField a = build_field(FieldKind::Checkerboard, {{"alpha", 1}, {"beta", 4}}, 128);
  const HomogenizedTensor t = homogenized_tensor(a);
  CHECK(t.abar(0, 0) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(t.abar(1, 1) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("correctors are mean zero, converged and linear in q") {
  const CoeffField a = trig(32);
  const CorrectorSet chi = solve_correctors(a);
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(chi.chi[static_cast<std::size_t>(k)].mean()) < 1e-10);
    CHECK(chi.residual_norms[static_cast<std::size_t>(k)] <= 1e-9);
  }
  const Eigen::Vector2d q(0.7, -1.3);
  const GridFunction direct = solve_corrector(a, q);
  double diff = 0.0;
  for (int j = 0; j < chi.n; ++j)
    for (int i = 0; i < chi.n; ++i) diff = std::max(diff, std::abs(direct(i, j) - chi.value(q, i, j)));
  CHECK(diff < 1e-8);
}

TEST_CASE("trig: abar isotropic inside the ellipticity bounds") {
  const HomogenizedTensor t = homogenized_tensor(trig(32));
  CHECK(t.abar(0, 0) == doctest::Approx(t.abar(1, 1)).epsilon(1e-10));
  CHECK(std::abs(t.abar(0, 1)) < 1e-10);
  CHECK(t.abar(0, 0) > 1.0);
  CHECK(t.abar(0, 0) < 2.0);  // below the arithmetic mean c
  CHECK(t.symmetry_discrepancy < 1e-10);
}

TEST_CASE("trig correctors self-converge at second order") {
  const CorrectorSet ref = solve_correctors(trig(256));
  std::vector<double> err;
  for (int n : {32, 64}) {
    const CorrectorSet c = solve_correctors(trig(n));
    double s = 0.0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Eigen::Vector2d x((i + 0.5) / n, (j + 0.5) / n);
        const double d = c.chi[0](i, j) - ref.at(0, x);
        s += d * d;
      }
    err.push_back(std::sqrt(s) / n);
  }
  CHECK(err[0] / err[1] > 3.0);
}

TEST_CASE("rotated basis gives the rotated tensor") {
  const CoeffField a = trig(32);
  const HomogenizedTensor t = homogenized_tensor(a);
  const double th = 0.4;
  const Eigen::Vector2d q(std::cos(th), std::sin(th));
  const GridFunction chi_q = solve_corrector(a, q);
  CHECK(cell_energy(a, q, chi_q) == doctest::Approx(q.dot(t.abar * q)).epsilon(1e-9));
}

TEST_CASE("energy identity: perturbing the corrector raises the cell energy") {
  const CoeffField a = laminate(32);
  const CorrectorSet chi = solve_correctors(a);
  const HomogenizedTensor t = homogenize(a, chi);
  const Eigen::Vector2d e1(1, 0);
  CHECK(cell_energy(a, e1, chi.chi[0]) == doctest::Approx(t.abar(0, 0)).epsilon(1e-10));
  std::mt19937 rng(11);
  std::normal_distribution<double> N(0.0, 1e-3);
  for (int s = 0; s < 5; ++s) {
    GridFunction p = chi.chi[0];
    for (Eigen::Index k = 0; k < p.size(); ++k) p(k) += N(rng);
    CHECK(cell_energy(a, e1, p) > t.abar(0, 0));
  }
}

TEST_CASE("cell grid must be at least 8 cells") {
  CHECK_THROWS_AS(solve_correctors(trig(4)), DomainError);
}

TEST_CASE("corrected trial: constant field reproduces the ellipsoid eigenvalue") {
  const HomogenizedTensor t = HomogenizedTensor::from_matrix(Eigen::Matrix2d::Identity());
  const CoeffField a = scalar_field(1.0, 16);
  const CorrectorSet chi = solve_correctors(a);
  const Ellipsoid E = Ellipsoid::from_abar(t.abar, 1.0, Eigen::Vector2d(0.5, 0.5));
  const CorrectedTrial tr = corrected_trial(E, t, chi, a, 0.3, 1.0 / 32);
  CHECK(std::abs(tr.excess) < 1e-9);
  CHECK_THROWS_AS(corrected_trial(E, t, chi, a, 1.5, 1.0 / 32), RangeError);
}

TEST_CASE("corrected trial on trig: positive excess that shrinks with |E|") {
  const CoeffField a = trig(16);
  const CorrectorSet chi = solve_correctors(a);
  const HomogenizedTensor t = homogenize(a, chi);
  std::vector<double> excess;
  for (double vol : {64.0, 256.0}) {
    const Ellipsoid E = Ellipsoid::with_volume(t.abar, vol, Eigen::Vector2d(0.5, 0.5));
    const double tc = std::pow(vol, 0.25) / std::sqrt(vol);
    const CorrectedTrial tr = corrected_trial(E, t, chi, a, tc, 1.0 / 16);
    CHECK(tr.excess > 0.0);
    excess.push_back(tr.excess);
  }
  CHECK(excess[1] < excess[0]);
}
