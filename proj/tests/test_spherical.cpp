#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "hspin/errors.hpp"
#include "hspin/spectral.hpp"
#include "hspin/spherical.hpp"

using hspin::SpectralModel;
using hspin::SphericalSolution;

namespace {
const double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("critical coupling: hierarchical d=3 value and closed forms") {
  const SpectralModel model = SpectralModel::infinite_K(2.0, 3);
  CHECK(hspin::beta_c(model) == doctest::Approx(5.25).epsilon(1e-12));

  // Independent series: sum_k w_k / lambda_k with w_k = (7/8) 8^{-k},
  // lambda_k = 4^{-k}/3.
  double series = 0.0;
  double w = 7.0 / 8.0;
  double lam = 1.0 / 3.0;
  for (int k = 0; k < 200; ++k) {
    series += w / lam;
    w /= 8.0;
    lam /= 4.0;
  }
  CHECK(series == doctest::Approx(5.25).epsilon(1e-12));

  for (double d : {3.0, 4.0, 5.0}) {
    CHECK(hspin::beta_c(SpectralModel::continuum(d)) ==
          doctest::Approx(2.0 * d / (d - 2.0)).epsilon(1e-9));
  }
}

TEST_CASE("critical coupling: finite lattice sum and divergent cases") {
  const hspin::LatticeShape shape = hspin::LatticeShape::make(2, 1, 3);
  const SpectralModel model = SpectralModel::finite(shape);
  double direct = 0.0;
  for (int k = 0; k < shape.K; ++k) {
    direct += model.weight(k) / model.lambda(k);
  }
  CHECK(hspin::beta_c(model) == doctest::Approx(direct).epsilon(1e-13));

  CHECK_THROWS_AS(hspin::beta_c(SpectralModel::infinite_K(2.0, 2)),
                  hspin::DivergenceError);
  CHECK_THROWS_AS(hspin::beta_c(SpectralModel::continuum(2.0)),
                  hspin::DivergenceError);
  // A finite cutoff leaves the density positive at lambda = 0.
  CHECK_THROWS_AS(hspin::beta_c(SpectralModel::continuum(4.0, 2.0)),
                  hspin::DivergenceError);
}

TEST_CASE("saddle-point solve below criticality") {
  const SpectralModel model = SpectralModel::continuum(4.0);
  const double beta = 2.0;
  const SphericalSolution sol = hspin::solve_mu(beta, model);

  CHECK_FALSE(sol.condensed);
  CHECK(sol.mu < 0.0);
  CHECK(sol.rho0 == 0.0);
  CHECK(hspin::resolvent_expectation(sol.mu, model) ==
        doctest::Approx(beta).epsilon(1e-11));
  CHECK(sol.clt_variance == doctest::Approx(-1.0 / sol.mu).epsilon(1e-13));

  const double f_direct =
      -0.5 * sol.mu * beta - 0.5 * (1.0 + std::log(beta)) -
      0.5 * hspin::expectation(
                [&](double lam) { return std::log(lam - sol.mu); }, model);
  CHECK(sol.free_energy == doctest::Approx(f_direct).epsilon(1e-12));
  CHECK(hspin::free_energy(beta, model) ==
        doctest::Approx(sol.free_energy).epsilon(1e-12));

  const double z = 0.7;
  CHECK(hspin::mgf(beta, z, model) ==
        doctest::Approx(std::exp(-z * z / (2.0 * sol.mu))).epsilon(1e-12));
  CHECK(hspin::clt_variance(beta, model) ==
        doctest::Approx(-1.0 / sol.mu).epsilon(1e-12));

  // mu(beta) increases toward zero with beta.
  const double mu1 = hspin::solve_mu(1.0, model).mu;
  const double mu3 = hspin::solve_mu(3.0, model).mu;
  const double mu39 = hspin::solve_mu(3.9, model).mu;
  CHECK(mu1 < mu3);
  CHECK(mu3 < mu39);
  CHECK(mu39 < 0.0);
}

TEST_CASE("condensed branch conventions") {
  const SpectralModel model = SpectralModel::continuum(4.0);
  const double beta = 6.0;
  const SphericalSolution sol = hspin::solve_mu(beta, model);

  CHECK(sol.condensed);
  CHECK(sol.mu == 0.0);
  CHECK(sol.rho0 == doctest::Approx(beta - 4.0).epsilon(1e-9));
  CHECK(std::isnan(sol.clt_variance));

  // Closed form: f(6) = -1/4 - (1/2) ln 3 for the quartic continuum density.
  CHECK(sol.free_energy ==
        doctest::Approx(-0.25 - 0.5 * std::log(3.0)).epsilon(1e-9));

  CHECK_THROWS_AS(hspin::mgf(beta, 1.0, model), hspin::CriticalityError);
  CHECK_THROWS_AS(hspin::clt_variance(beta, model), hspin::CriticalityError);
  CHECK_THROWS_AS(hspin::kappa_n(beta, 1.0, 100, model),
                  hspin::CriticalityError);

  CHECK_THROWS_AS(hspin::solve_mu(-1.0, model), hspin::DomainError);
  CHECK_THROWS_AS(hspin::solve_mu(0.0, model), hspin::DomainError);
}

TEST_CASE("condensed branch on a finite lattice") {
  const SpectralModel model = SpectralModel::finite(2, 1, 3);
  const double bc = hspin::beta_c(model);
  const SphericalSolution sol = hspin::solve_mu(2.0 * bc, model);
  CHECK(sol.condensed);
  CHECK(sol.rho0 == doctest::Approx(bc).epsilon(1e-10));
  // The simple zero eigenvalue makes E ln(lambda) = -infinity; the
  // condensed-branch free energy of a finite spectrum is +infinity by
  // convention (the formula is only thermodynamically meaningful in the
  // infinite-volume models).
  CHECK(std::isinf(sol.free_energy));
  CHECK(sol.free_energy > 0.0);
}

TEST_CASE("specialized d=4 solver") {
  // At beta = 4(1 - ln 2) the root is exactly -1/2.
  const double beta_star = 4.0 * (1.0 - std::log(2.0));
  CHECK(hspin::solve_mu_d4(beta_star) == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(hspin::solve_mu(beta_star, SpectralModel::continuum(4.0)).mu ==
        doctest::Approx(-0.5).epsilon(1e-9));

  const SpectralModel model = SpectralModel::continuum(4.0);
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 5; ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const double beta = 0.1 + u * 3.7;
    CHECK(std::abs(hspin::solve_mu_d4(beta) - hspin::solve_mu(beta, model).mu) <
          1e-10);
  }

  CHECK_THROWS_AS(hspin::solve_mu_d4(0.0), hspin::DomainError);
  CHECK_THROWS_AS(hspin::solve_mu_d4(4.0), hspin::DomainError);
  CHECK_THROWS_AS(hspin::solve_mu_d4(5.0), hspin::DomainError);
}

TEST_CASE("hierarchical d=3 midpoint: root location and residual") {
  const SpectralModel model = SpectralModel::infinite_K(2.0, 3);
  const double beta = 2.625;  // half the critical coupling
  const SphericalSolution sol = hspin::solve_mu(beta, model);
  CHECK(sol.mu > -0.13);
  CHECK(sol.mu < -0.10);
  CHECK(hspin::resolvent_expectation(sol.mu, model) ==
        doctest::Approx(beta).epsilon(1e-11));
}

TEST_CASE("finite lattice solve satisfies the zero-mode-aware sum rule") {
  const SpectralModel model = SpectralModel::finite(2, 2, 2);
  const double beta = 0.5 * hspin::beta_c(model);
  const SphericalSolution sol = hspin::solve_mu(beta, model);
  CHECK_FALSE(sol.condensed);
  CHECK(hspin::resolvent_expectation(sol.mu, model) ==
        doctest::Approx(beta).epsilon(1e-11));
}

TEST_CASE("finite-volume constraint root and curvature constant") {
  const SpectralModel model = SpectralModel::continuum(4.0);
  const double beta = 2.0;
  const double z = 1.0;
  const double mu = hspin::solve_mu(beta, model).mu;

  SUBCASE("z = 0 recovers the thermodynamic root exactly") {
    const hspin::FiniteNCorrection fc = hspin::kappa_n(beta, 0.0, 1000, model);
    CHECK(fc.delta == 0.0);
    CHECK(fc.kappa == fc.mu);
  }

  SUBCASE("curvature constant matches its defining expectation") {
    const hspin::FiniteNCorrection fc = hspin::kappa_n(beta, z, 1000, model);
    const double e2 = hspin::expectation(
        [&](double lam) { return 1.0 / ((lam - mu) * (lam - mu)); }, model);
    CHECK(fc.c == doctest::Approx(1.0 / (mu * mu * e2)).epsilon(1e-10));
    CHECK(fc.mu == doctest::Approx(mu).epsilon(1e-12));
  }

  SUBCASE("delta follows the -c z^2 / n asymptotics") {
    const std::int64_t n = 100000000;
    const hspin::FiniteNCorrection fc = hspin::kappa_n(beta, z, n, model);
    CHECK(fc.delta < 0.0);
    const double predicted = -fc.c * z * z / static_cast<double>(n);
    CHECK(fc.delta / predicted == doctest::Approx(1.0).epsilon(1e-4));
    // kappa = mu + delta without cancellation.
    CHECK(fc.kappa == doctest::Approx(fc.mu + fc.delta).epsilon(1e-14));
    CHECK(fc.kappa < fc.mu);
  }

  CHECK_THROWS_AS(hspin::kappa_n(beta, z, 0, model), hspin::DomainError);
}

TEST_CASE("finite-volume MGF converges to the limit at rate 1/n") {
  const SpectralModel model = SpectralModel::continuum(4.0);
  const double beta = 2.0;
  const double z = 1.0;
  const double log_theta = std::log(hspin::mgf(beta, z, model));

  CHECK(hspin::mgf_finite_n(beta, 0.0, 500, model) == 1.0);

  const double e1 =
      std::abs(std::log(hspin::mgf_finite_n(beta, z, 4000, model)) - log_theta);
  const double e2 =
      std::abs(std::log(hspin::mgf_finite_n(beta, z, 8000, model)) - log_theta);
  CHECK(e2 / e1 > 0.4);
  CHECK(e2 / e1 < 0.6);

  const double e_big =
      std::abs(std::log(hspin::mgf_finite_n(beta, z, 10000000, model)) -
               log_theta);
  CHECK(e_big < 1e-5);
}

TEST_CASE("free energy derivative identity at spot points") {
  const SpectralModel model = SpectralModel::continuum(4.0);
  const double h = 1e-4;
  for (double beta : {0.5, 1.5, 3.0}) {
    const double fp = hspin::free_energy(beta + h, model);
    const double fm = hspin::free_energy(beta - h, model);
    const double mu = hspin::solve_mu(beta, model).mu;
    const double expected = -0.5 * (mu + 1.0 / beta);
    CHECK((fp - fm) / (2.0 * h) == doctest::Approx(expected).epsilon(1e-5));
  }
}
