#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "hspin/errors.hpp"
#include "hspin/lattice.hpp"
#include "hspin/mc.hpp"
#include "hspin/operators.hpp"
#include "hspin/rng.hpp"

using hspin::LatticeShape;
using hspin::McRunConfig;
using hspin::Rng;
using hspin::SpinConfiguration;

namespace {

// Independent uniform point on the sphere |x|^2 = N.
void draw_on_sphere(Rng& rng, int N, double* out) {
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (int c = 0; c < N; ++c) {
      out[c] = rng.normal();
      norm2 += out[c] * out[c];
    }
  } while (norm2 < 1e-12);
  const double scale = std::sqrt(static_cast<double>(N) / norm2);
  for (int c = 0; c < N; ++c) out[c] *= scale;
}

// Scalar-spin energy computed from scratch, independent of the tree code.
double naive_energy_n1(const std::vector<double>& sigma,
                       const LatticeShape& shape) {
  double mu0 = 0.0;
  for (int k = 1; k <= shape.K; ++k) {
    mu0 += std::pow(static_cast<double>(shape.L), -2.0 * k);
  }
  double blocks = 0.0;
  std::int64_t bk = 1;
  for (int k = 1; k <= shape.K; ++k) {
    bk *= shape.block;
    const double w = std::pow(static_cast<double>(shape.L),
                              -(2.0 + shape.d) * k);
    for (std::int64_t tau = 0; tau < shape.n / bk; ++tau) {
      double s = 0.0;
      for (std::int64_t j = tau * bk; j < (tau + 1) * bk; ++j) s += sigma[j];
      blocks += w * s * s;
    }
  }
  return 0.5 * (mu0 * shape.n - blocks);
}

}  // namespace

TEST_CASE("configurations: alignment, randomness, integrity") {
  const LatticeShape shape = LatticeShape::make(2, 2, 2);
  const int N = 3;

  const SpinConfiguration aligned = hspin::make_aligned_config(shape, N);
  CHECK(std::abs(aligned.energy) < 1e-12);  // the constant mode is massless
  CHECK(aligned.total_spin()[0] ==
        doctest::Approx(shape.n * std::sqrt(3.0)).epsilon(1e-13));
  CHECK(aligned.total_spin()[1] == 0.0);
  CHECK_NOTHROW(hspin::check_integrity(aligned));

  Rng rng(5);
  const SpinConfiguration random = hspin::make_random_config(shape, N, rng);
  CHECK(random.energy >= -1e-12);  // -Delta is positive semi-definite
  CHECK_NOTHROW(hspin::check_integrity(random));
  for (std::int64_t j = 0; j < shape.n; ++j) {
    double norm2 = 0.0;
    for (int c = 0; c < N; ++c) norm2 += random.site(j)[c] * random.site(j)[c];
    CHECK(norm2 == doctest::Approx(static_cast<double>(N)).epsilon(1e-12));
  }
}

TEST_CASE("energy matches the dense quadratic form") {
  const LatticeShape shape = LatticeShape::make(2, 1, 2);
  const int N = 3;
  Rng rng(17);
  const SpinConfiguration config = hspin::make_random_config(shape, N, rng);

  const Eigen::MatrixXd lap = hspin::HierOperator::laplacian(shape).dense();
  double direct = 0.0;
  for (int c = 0; c < N; ++c) {
    Eigen::VectorXd xc(shape.n);
    for (std::int64_t j = 0; j < shape.n; ++j) xc[j] = config.site(j)[c];
    direct += 0.5 * xc.dot(lap * xc);
  }
  CHECK(config.energy == doctest::Approx(direct).epsilon(1e-12));
  CHECK(hspin::energy_from_sums(config) ==
        doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("single-site deltas stay consistent with full recomputation") {
  struct Case {
    LatticeShape shape;
    int N;
  };
  const std::vector<Case> cases = {{LatticeShape::make(2, 1, 3), 3},
                                   {LatticeShape::make(3, 1, 2), 1},
                                   {LatticeShape::make(2, 2, 2), 2}};
  Rng rng(23);
  for (const Case& c : cases) {
    SpinConfiguration config = hspin::make_random_config(c.shape, c.N, rng);
    std::vector<double> proposal(c.N);
    for (int move = 0; move < 10000; ++move) {
      const std::int64_t site =
          static_cast<std::int64_t>(rng.uniform() * c.shape.n);
      if (c.N == 1) {
        proposal[0] = -config.site(site)[0];
      } else {
        draw_on_sphere(rng, c.N, proposal.data());
      }
      const double before = config.energy;
      const double predicted =
          hspin::proposal_delta_energy(config, site, proposal.data());
      hspin::apply_site_update(config, site, proposal.data());
      CHECK(config.energy == doctest::Approx(before + predicted));

      if (move % 1000 == 999) {
        SpinConfiguration fresh = config;
        hspin::rebuild_sums(fresh);
        CHECK(std::abs(fresh.energy - config.energy) < 1e-8);
        CHECK_NOTHROW(hspin::check_integrity(config));
      }
    }
    // Rebuilding is idempotent.
    SpinConfiguration once = config;
    hspin::rebuild_sums(once);
    SpinConfiguration twice = once;
    hspin::rebuild_sums(twice);
    CHECK(once.energy == twice.energy);
    for (std::size_t k = 0; k < once.sums.size(); ++k) {
      CHECK(once.sums[k] == twice.sums[k]);
    }
  }
}

TEST_CASE("exact enumeration agrees with a direct sum over sign patterns") {
  const LatticeShape shape = LatticeShape::make(2, 1, 3);  // n = 8
  const double beta = 0.6;
  const double z = 0.8;

  double zsum = 0.0, theta_num = 0.0, x2_num = 0.0;
  std::vector<double> sigma(shape.n);
  for (std::int64_t m = 0; m < (std::int64_t(1) << shape.n); ++m) {
    double mag = 0.0;
    for (std::int64_t j = 0; j < shape.n; ++j) {
      sigma[j] = ((m >> j) & 1) ? 1.0 : -1.0;
      mag += sigma[j];
    }
    const double w = std::exp(-beta * naive_energy_n1(sigma, shape));
    zsum += w;
    const double x = std::sqrt(beta) * mag / std::sqrt(double(shape.n));
    theta_num += w * std::exp(z * x);
    x2_num += w * x * x;
  }

  const hspin::ExactN1 exact = hspin::exact_partition_N1(shape, beta, z);
  CHECK(exact.Z == doctest::Approx(zsum).epsilon(1e-12));
  CHECK(exact.theta == doctest::Approx(theta_num / zsum).epsilon(1e-12));
  CHECK(exact.x_sq_mean == doctest::Approx(x2_num / zsum).epsilon(1e-12));

  CHECK_THROWS_AS(
      hspin::exact_partition_N1(LatticeShape::make(2, 1, 5), 0.3, 0.0),
      hspin::CapacityError);
}

TEST_CASE("reflected pair means match direct enumeration and stay nonnegative") {
  const LatticeShape shape = LatticeShape::make(2, 1, 2);
  const double beta = 0.9;
  const hspin::ReflectionPlane plane{1, 0};

  auto f = [](const std::vector<double>& x) { return x[0] + 0.5 * x[1]; };

  // Direct enumeration with an explicitly-built site permutation.
  std::vector<std::int64_t> perm(shape.n);
  for (std::int64_t j = 0; j < shape.n; ++j) {
    perm[j] = hspin::reflect_site(j, plane, shape);
  }
  double zsum = 0.0, num = 0.0;
  std::vector<double> sigma(shape.n), reflected(shape.n);
  for (int m = 0; m < 16; ++m) {
    for (std::int64_t j = 0; j < shape.n; ++j) {
      sigma[j] = ((m >> j) & 1) ? 1.0 : -1.0;
    }
    for (std::int64_t j = 0; j < shape.n; ++j) reflected[perm[j]] = sigma[j];
    const double w = std::exp(-beta * naive_energy_n1(sigma, shape));
    zsum += w;
    num += w * f(sigma) * f(reflected);
  }

  const double got = hspin::reflected_pair_mean(shape, beta, plane, f);
  CHECK(got == doctest::Approx(num / zsum).epsilon(1e-12));
  CHECK(got >= -1e-12);
}

TEST_CASE("chain sampling leaves the exact distribution invariant (TV)") {
  const LatticeShape shape = LatticeShape::make(2, 1, 2);  // n = 4
  const double beta = 0.7;

  // Exact Boltzmann weights of the 16 sign states.
  std::vector<double> prob(16, 0.0);
  std::vector<double> sigma(4);
  double zsum = 0.0;
  for (int m = 0; m < 16; ++m) {
    for (int j = 0; j < 4; ++j) sigma[j] = ((m >> j) & 1) ? 1.0 : -1.0;
    prob[m] = std::exp(-beta * naive_energy_n1(sigma, shape));
    zsum += prob[m];
  }
  for (double& p : prob) p /= zsum;

  McRunConfig config;
  config.shape = shape;
  config.N = 1;
  config.beta = beta;
  config.sweeps = 16000000;
  config.burn_in = 10000;
  config.seed = 321;

  std::vector<std::int64_t> counts(16, 0);
  hspin::mcmc_run(config, [&](const SpinConfiguration& state,
                              const hspin::ChainStats&) {
    int idx = 0;
    for (int j = 0; j < 4; ++j) {
      if (state.site(j)[0] > 0.0) idx |= (1 << j);
    }
    ++counts[idx];
  });

  double tv = 0.0;
  for (int m = 0; m < 16; ++m) {
    tv += std::abs(static_cast<double>(counts[m]) / config.sweeps - prob[m]);
  }
  tv *= 0.5;
  CHECK(tv <= 1e-3);
}

TEST_CASE("infinite temperature marginal is uniform (KS test)") {
  const LatticeShape shape = LatticeShape::make(2, 1, 2);
  McRunConfig config;
  config.shape = shape;
  config.N = 3;
  config.beta = 0.0;
  config.sweeps = 100000;
  config.burn_in = 100;
  config.seed = 77;
  config.proposal = hspin::Proposal::Resphere;  // iid redraws at beta = 0

  std::vector<double> samples;
  samples.reserve(config.sweeps);
  hspin::mcmc_run(config, [&](const SpinConfiguration& state,
                              const hspin::ChainStats&) {
    samples.push_back(state.site(0)[0]);
  });

  // One coordinate of a uniform point on the sphere |x|^2 = 3 is uniform on
  // [-sqrt(3), sqrt(3)].
  std::sort(samples.begin(), samples.end());
  const double root3 = std::sqrt(3.0);
  const double m = static_cast<double>(samples.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(std::abs(samples[i]) <= root3 + 1e-12);
    const double cdf = (samples[i] + root3) / (2.0 * root3);
    ks = std::max(ks, std::abs(cdf - static_cast<double>(i) / m));
    ks = std::max(ks, std::abs(cdf - static_cast<double>(i + 1) / m));
  }
  CHECK(ks < 1.817 / std::sqrt(m));
}

TEST_CASE("MGF estimates: exact value at z=0 and agreement at small size") {
  const LatticeShape shape = LatticeShape::make(2, 1, 2);
  McRunConfig config;
  config.shape = shape;
  config.N = 1;
  config.beta = 0.3;
  config.sweeps = 40000;
  config.burn_in = 2000;
  config.seed = 9;

  const std::vector<double> grid = {0.0, 0.5};
  const hspin::McOutput out = hspin::run_mc(config, grid);
  REQUIRE(out.theta.size() == 2);
  CHECK(out.theta[0].mean == 1.0);
  CHECK(out.theta[0].std_error == 0.0);
  CHECK(out.total_sweeps == config.sweeps);
  CHECK(out.acceptance_rate > 0.0);
  CHECK(out.acceptance_rate <= 1.0);

  const hspin::ExactN1 exact = hspin::exact_partition_N1(shape, 0.3, 0.5);
  CHECK(std::abs(out.theta[1].mean - exact.theta) <
        4.0 * out.theta[1].std_error);
  CHECK(std::abs(out.x_sq.mean - exact.x_sq_mean) < 4.0 * out.x_sq.std_error);
  // The odd moment vanishes by symmetry.
  CHECK(std::abs(out.x_mean.mean) < 4.0 * out.x_mean.std_error + 1e-4);
  CHECK(out.theta[1].tau_int >= 0.5);
}

TEST_CASE("runs are reproducible and thread-schedule independent") {
  const LatticeShape shape = LatticeShape::make(2, 2, 2);
  McRunConfig config;
  config.shape = shape;
  config.N = 2;
  config.beta = 0.8;
  config.sweeps = 5000;
  config.burn_in = 500;
  config.chains = 3;
  config.seed = 20240817;

  const std::vector<double> grid = {0.0, 0.4, 1.0};
  config.threads = 1;
  const hspin::McOutput serial = hspin::run_mc(config, grid);
  const hspin::McOutput repeat = hspin::run_mc(config, grid);
  config.threads = 3;
  const hspin::McOutput threaded = hspin::run_mc(config, grid);

  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(serial.theta[i].mean == repeat.theta[i].mean);
    CHECK(serial.theta[i].std_error == repeat.theta[i].std_error);
    CHECK(serial.theta[i].mean == threaded.theta[i].mean);
    CHECK(serial.theta[i].std_error == threaded.theta[i].std_error);
  }
  CHECK(serial.x_sq.mean == threaded.x_sq.mean);
  CHECK(serial.energy_mean.mean == threaded.energy_mean.mean);

  config.threads = 1;
  config.seed = 20240818;
  const hspin::McOutput other = hspin::run_mc(config, grid);
  CHECK(other.theta[1].mean != serial.theta[1].mean);
}

TEST_CASE("rotation step adapts during burn-in only") {
  const LatticeShape shape = LatticeShape::make(2, 1, 3);
  McRunConfig config;
  config.shape = shape;
  config.N = 4;
  config.beta = 1.5;
  config.sweeps = 2000;
  config.burn_in = 3000;
  config.seed = 13;
  config.proposal = hspin::Proposal::Rotation;

  double first_step = -1.0, last_step = -1.0;
  hspin::mcmc_run(config, [&](const SpinConfiguration&,
                              const hspin::ChainStats& stats) {
    if (first_step < 0.0) first_step = stats.rotation_step;
    last_step = stats.rotation_step;
  });
  CHECK(first_step > 0.0);
  CHECK(first_step == last_step);  // frozen through the measurement phase
}

TEST_CASE("block-spin histogram second moment matches exact enumeration") {
  const LatticeShape shape = LatticeShape::make(2, 1, 2);  // n = 4
  McRunConfig config;
  config.shape = shape;
  config.N = 1;
  config.beta = 0.7;
  config.sweeps = 40000;
  config.burn_in = 2000;
  config.chains = 2;
  config.seed = 4242;

  // With gamma = d the block variable equals the scaled central-limit
  // variable of exact_partition_N1, so its second moment has an exact value.
  const hspin::BlockSpinResult res =
      hspin::block_spin_histogram(config, /*gamma_exponent=*/1.0, 32);
  CHECK(res.gamma_exponent == 1.0);
  CHECK(res.bin_centers.size() == 32);
  std::int64_t total = 0;
  for (std::int64_t c : res.counts) total += c;
  CHECK(total == config.sweeps * config.chains);

  const hspin::ExactN1 exact =
      hspin::exact_partition_N1(shape, config.beta, 0.0);
  CHECK(std::abs(res.second_moment.mean - exact.x_sq_mean) <
        6.0 * res.second_moment.std_error + 0.02);
  CHECK(std::abs(res.mean.mean) < 6.0 * res.mean.std_error + 0.02);

  CHECK_THROWS_AS(hspin::block_spin_histogram(config, 2.0, 32),
                  hspin::DomainError);
  McRunConfig infinite_temp = config;
  infinite_temp.beta = 0.0;
  CHECK_THROWS_AS(hspin::block_spin_histogram(infinite_temp, 1.0, 32),
                  hspin::DomainError);
}

TEST_CASE("run configuration validation") {
  McRunConfig config;
  config.shape = LatticeShape::make(2, 1, 2);
  config.N = 0;
  CHECK_THROWS_AS(hspin::run_mc(config, {0.0}), hspin::DomainError);
  config.N = 1;
  config.sweeps = 0;
  CHECK_THROWS_AS(hspin::run_mc(config, {0.0}), hspin::DomainError);
  config.sweeps = 10;
  config.beta = -0.5;
  CHECK_THROWS_AS(hspin::run_mc(config, {0.0}), hspin::DomainError);
  config.beta = 0.5;
  config.rotation_step = 0.0;
  CHECK_THROWS_AS(hspin::run_mc(config, {0.0}), hspin::DomainError);
}
