#pragma once

// Metropolis Monte Carlo for the O(N) Heisenberg model on the hierarchical
// lattice, with exact small-system oracles.
//
// Convention: the Boltzmann weight is exp(-beta * E(x)) with E(x) the
// quadratic form (1/2)(x, (-Delta (x) I) x) and every site constrained to the
// sphere |x_j|^2 = N.  (The equivalent radius-sqrt(beta N) convention is
// recovered by rescaling x -> sqrt(beta) x; beta stays a pure weight
// parameter here.)
//
// The energy is evaluated through the hierarchical partial-sum tree
// s_{k,tau} = sum_{sites in block (k,tau)} x_i:
//     (x, -Delta x) = mu0 ||x||^2 - sum_{k=1..K} L^{-(2+d)k} sum_tau |s_{k,tau}|^2
// so a single-site update costs O(K N): the only quantities that change are
// the K partial sums containing the site, each by the same delta, and
// ||x||^2 = nN is pinned by the spherical site constraint.
//
// Sampling: per-site Metropolis with two proposal kernels, each reversible —
// "resphere" (independent uniform point on the sphere, guarantees
// ergodicity) and a small rotation x' = sqrt(N) (x + step g)/|x + step g|
// with g standard normal (isotropic, hence symmetric).  The default mix
// alternates them; the rotation step adapts toward ~40% acceptance during
// burn-in only and is frozen for the measurement phase, so detailed balance
// is exact where it matters.  At N = 1 the sphere is {-1, +1} and every
// proposal degenerates to a sign flip.
//
// Error bars: batch means with automatic batch-size doubling (binning
// analysis) plus an integrated-autocorrelation estimate; estimates whose
// error has not plateaued carry a precision warning instead of failing.
// Multiple chains draw per-chain seeds from a SplitMix64 stream and merge as
// a pure reduction in chain order, so results depend on (seed, chains) but
// never on thread scheduling.

#include <cstdint>
#include <functional>
#include <vector>

#include "hspin/errors.hpp"
#include "hspin/lattice.hpp"
#include "hspin/rng.hpp"

namespace hspin {

struct SpinConfiguration {
  LatticeShape shape;
  int N = 1;
  std::vector<double> spins;  // site-major, spins[j*N + c]
  // sums[k-1] holds the level-k block sums, block-major: (n / L^{dk}) * N.
  std::vector<std::vector<double>> sums;
  double energy = 0.0;  // cached; kept in sync by apply_site_update

  const double* site(std::int64_t j) const { return spins.data() + j * N; }
  double* site(std::int64_t j) { return spins.data() + j * N; }
  // Total spin vector (the single top-level block sum), N components.
  const double* total_spin() const { return sums.back().data(); }
};

// All spins aligned along the first axis: x_j = (sqrt(N), 0, ..., 0).
SpinConfiguration make_aligned_config(const LatticeShape& shape, int N);
// Independent uniform draws on the sphere |x|^2 = N.
SpinConfiguration make_random_config(const LatticeShape& shape, int N,
                                     Rng& rng);

// Recompute the partial-sum tree (and the cached energy) from the spins.
void rebuild_sums(SpinConfiguration& config);

// Energy from the tree alone; the zero mode (all spins equal) gives 0.
double energy_from_sums(const SpinConfiguration& config);

// Consistency check: every tree entry against a recomputed block sum (1e-8),
// every site norm against N (1e-9), and the cached energy against
// energy_from_sums (1e-8 relative).  Throws NumericError on violation.
void check_integrity(const SpinConfiguration& config);

// Energy change if site `site` were replaced by new_spin (N components,
// assumed on the sphere); O(K N), no state change.
double proposal_delta_energy(const SpinConfiguration& config,
                             std::int64_t site, const double* new_spin);

// Replace site `site` by new_spin, updating the tree and the cached energy.
void apply_site_update(SpinConfiguration& config, std::int64_t site,
                       const double* new_spin);

enum class Proposal { Resphere, Rotation, Mix };

struct McRunConfig {
  LatticeShape shape;
  int N = 1;
  double beta = 0.0;
  std::int64_t sweeps = 10000;  // measurement sweeps per chain (1 sweep = n updates)
  std::int64_t burn_in = 1000;  // discarded sweeps per chain
  int chains = 1;
  int threads = 1;
  std::uint64_t seed = 1;
  Proposal proposal = Proposal::Mix;
  double rotation_step = 0.5;  // initial small-rotation step size
  bool adapt_step = true;      // tune toward 40% acceptance during burn-in
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double tau_int = 0.0;  // integrated autocorrelation, >= 0.5, sweep units
  std::int64_t n_samples = 0;
  std::uint64_t seed = 0;
  bool precision_warning = false;  // error estimate had not plateaued
};

struct ChainStats {
  std::int64_t proposed = 0;
  std::int64_t accepted = 0;
  double rotation_step = 0.0;

  double acceptance_rate() const {
    return proposed > 0 ? static_cast<double>(accepted) / proposed : 0.0;
  }
};

// Run a single chain (chain 0 of the config), invoking the callback after
// every measurement sweep with the current configuration and running move
// statistics.  The callback must not retain the reference.
void mcmc_run(const McRunConfig& config,
              const std::function<void(const SpinConfiguration&,
                                       const ChainStats&)>& on_sweep);

struct McOutput {
  std::vector<McEstimate> theta;  // one per z-grid entry
  McEstimate x_sq;                // <X^2> for the same X as theta
  McEstimate x_mean;              // <X>, symmetry diagnostic
  McEstimate energy_mean;         // <E>
  double acceptance_rate = 0.0;   // pooled over chains
  std::int64_t total_sweeps = 0;  // summed measurement sweeps
};

// Estimate the moment generating function Theta(z) = < exp(z X) > of the
// scaled block variable
//     X = sqrt(beta) sum_{i,j} x_{ij} / sqrt(nN)
// on the given z grid (sample mean of exp, one sample per sweep), along with
// its first two moments.  The sqrt(beta) factor converts between the two
// equivalent model normalizations -- spins of norm sqrt(N) with beta in the
// Gibbs weight (used here) versus spins of norm sqrt(beta N) with unit
// weight -- so that below criticality Theta converges to the spherical-model
// limit exp(-z^2 / (2 mu(beta))) with mu the chemical potential of the
// matching spectral model.  z = 0 returns exactly 1 with zero variance.
McOutput run_mc(const McRunConfig& config, const std::vector<double>& z_grid);

// Convenience form of run_mc returning only the per-z estimates.
std::vector<McEstimate> estimate_mgf(const McRunConfig& config,
                                     const std::vector<double>& z_grid);

struct BlockSpinResult {
  McEstimate mean;           // <Y>
  McEstimate second_moment;  // <Y^2>
  double gamma_exponent = 0.0;
  std::vector<double> bin_centers;
  std::vector<std::int64_t> counts;
};

// Empirical distribution of the scalar block variable
//     Y = sqrt(beta) n^{-gamma/(2d)} sum_j x_{j,1}
// (first spin component; the components are exchangeable; sqrt(beta) as in
// run_mc).  gamma must be d (central-limit normalization, under which the
// second moment tracks clt_variance below criticality) or d + 2 (the
// stronger renormalization-group normalization).
BlockSpinResult block_spin_histogram(const McRunConfig& config,
                                     double gamma_exponent, int bins = 64);

// ---------------------------------------------------------------------------
// Exact small-system oracles (N = 1, spins in {-1,+1}^n, n <= 20).

struct ExactN1 {
  double Z = 0.0;          // partition function
  double theta = 0.0;      // Theta(z) = <exp(z X)>, X = sqrt(beta/n) sum x
  double x_sq_mean = 0.0;  // <X^2> for the same X
};

// Exhaustive 2^n enumeration at N = 1 (Gray-code walk, O(2^n K)).
ExactN1 exact_partition_N1(const LatticeShape& shape, double beta, double z);

// <F * (F o reflection)> under the N = 1 Boltzmann measure, by enumeration;
// F receives the n spin values.  Nonnegative for reflection-positive
// couplings, which the tests verify at small n.
double reflected_pair_mean(
    const LatticeShape& shape, double beta, const ReflectionPlane& plane,
    const std::function<double(const std::vector<double>&)>& observable);

}  // namespace hspin
