#include "hspin/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <utility>

#include "hspin/operators.hpp"

namespace hspin {

namespace {

int check_components(int N) {
  if (N < 1 || N > 4096) {
    throw DomainError("component count N must lie in [1, 4096], got " +
                      std::to_string(N));
  }
  return N;
}

// Per-level geometry of the partial-sum tree: block size, block count, and
// the energy weight L^{-(2+d)k}.
struct Levels {
  std::vector<std::int64_t> block_size;
  std::vector<double> weight;
  double weight_sum = 0.0;

  explicit Levels(const LatticeShape& shape) {
    block_size.resize(shape.K);
    weight.resize(shape.K);
    std::int64_t bs = 1;
    for (int k = 1; k <= shape.K; ++k) {
      bs *= shape.block;
      block_size[k - 1] = bs;
      weight[k - 1] = std::pow(static_cast<double>(shape.L), -(2.0 + shape.d) * k);
      weight_sum += weight[k - 1];
    }
  }
};

void draw_sphere(Rng& rng, int N, double* out) {
  for (;;) {
    double norm2 = 0.0;
    for (int c = 0; c < N; ++c) {
      out[c] = rng.normal();
      norm2 += out[c] * out[c];
    }
    if (norm2 > 1e-24) {
      const double scale = std::sqrt(N / norm2);
      for (int c = 0; c < N; ++c) out[c] *= scale;
      return;
    }
  }
}

void draw_rotation(Rng& rng, int N, const double* x, double step, double* out) {
  for (;;) {
    double norm2 = 0.0;
    for (int c = 0; c < N; ++c) {
      out[c] = x[c] + step * rng.normal();
      norm2 += out[c] * out[c];
    }
    if (norm2 > 1e-24) {
      const double scale = std::sqrt(N / norm2);
      for (int c = 0; c < N; ++c) out[c] *= scale;
      return;
    }
  }
}

}  // namespace

SpinConfiguration make_aligned_config(const LatticeShape& shape, int N) {
  check_components(N);
  SpinConfiguration config;
  config.shape = shape;
  config.N = N;
  config.spins.assign(static_cast<std::size_t>(shape.n) * N, 0.0);
  const double r = std::sqrt(static_cast<double>(N));
  for (std::int64_t j = 0; j < shape.n; ++j) config.spins[j * N] = r;
  rebuild_sums(config);
  return config;
}

SpinConfiguration make_random_config(const LatticeShape& shape, int N,
                                     Rng& rng) {
  check_components(N);
  SpinConfiguration config;
  config.shape = shape;
  config.N = N;
  config.spins.resize(static_cast<std::size_t>(shape.n) * N);
  for (std::int64_t j = 0; j < shape.n; ++j) {
    draw_sphere(rng, N, config.site(j));
  }
  rebuild_sums(config);
  return config;
}

void rebuild_sums(SpinConfiguration& config) {
  const LatticeShape& shape = config.shape;
  const int N = config.N;
  config.sums.assign(shape.K, {});
  const std::vector<double>* prev = &config.spins;
  std::int64_t blocks = shape.n;
  for (int k = 1; k <= shape.K; ++k) {
    blocks /= shape.block;
    std::vector<double>& level = config.sums[k - 1];
    level.assign(static_cast<std::size_t>(blocks) * N, 0.0);
    for (std::int64_t b = 0; b < blocks * shape.block; ++b) {
      const double* src = prev->data() + b * N;
      double* dst = level.data() + (b / shape.block) * N;
      for (int c = 0; c < N; ++c) dst[c] += src[c];
    }
    prev = &level;
  }
  config.energy = energy_from_sums(config);
}

double energy_from_sums(const SpinConfiguration& config) {
  const LatticeShape& shape = config.shape;
  const Levels levels(shape);
  double coupling = 0.0;
  for (int k = 1; k <= shape.K; ++k) {
    const std::vector<double>& level = config.sums[k - 1];
    double s2 = 0.0;
    for (double v : level) s2 += v * v;
    coupling += levels.weight[k - 1] * s2;
  }
  const double norm2 = static_cast<double>(shape.n) * config.N;
  return 0.5 * (mu0(shape) * norm2 - coupling);
}

void check_integrity(const SpinConfiguration& config) {
  const LatticeShape& shape = config.shape;
  const int N = config.N;
  for (std::int64_t j = 0; j < shape.n; ++j) {
    double norm2 = 0.0;
    for (int c = 0; c < N; ++c) norm2 += config.site(j)[c] * config.site(j)[c];
    if (std::abs(norm2 - N) > 1e-9) {
      throw NumericError("spin " + std::to_string(j) +
                         " is off the sphere: |x|^2 = " + std::to_string(norm2));
    }
  }
  SpinConfiguration fresh = config;
  rebuild_sums(fresh);
  for (int k = 1; k <= shape.K; ++k) {
    const std::vector<double>& got = config.sums[k - 1];
    const std::vector<double>& want = fresh.sums[k - 1];
    if (got.size() != want.size()) {
      throw NumericError("partial-sum tree has wrong shape at level " +
                         std::to_string(k));
    }
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (std::abs(got[i] - want[i]) > 1e-8) {
        throw NumericError("partial-sum tree inconsistent at level " +
                           std::to_string(k) + ", entry " + std::to_string(i));
      }
    }
  }
  const double fresh_energy = energy_from_sums(config);
  if (std::abs(config.energy - fresh_energy) >
      1e-8 * std::max(1.0, std::abs(fresh_energy))) {
    throw NumericError("cached energy " + std::to_string(config.energy) +
                       " disagrees with recomputation " +
                       std::to_string(fresh_energy));
  }
}

double proposal_delta_energy(const SpinConfiguration& config,
                             std::int64_t site, const double* new_spin) {
  const LatticeShape& shape = config.shape;
  const int N = config.N;
  const Levels levels(shape);
  const double* old_spin = config.site(site);
  double d2 = 0.0;
  for (int c = 0; c < N; ++c) {
    const double dc = new_spin[c] - old_spin[c];
    d2 += dc * dc;
  }
  double dE = -0.5 * levels.weight_sum * d2;
  for (int k = 1; k <= shape.K; ++k) {
    const double* block =
        config.sums[k - 1].data() + (site / levels.block_size[k - 1]) * N;
    double dot = 0.0;
    for (int c = 0; c < N; ++c) dot += block[c] * (new_spin[c] - old_spin[c]);
    dE -= levels.weight[k - 1] * dot;
  }
  return dE;
}

void apply_site_update(SpinConfiguration& config, std::int64_t site,
                       const double* new_spin) {
  const LatticeShape& shape = config.shape;
  const int N = config.N;
  config.energy += proposal_delta_energy(config, site, new_spin);
  double* old_spin = config.site(site);
  std::int64_t bs = 1;
  for (int k = 1; k <= shape.K; ++k) {
    bs *= shape.block;
    double* block = config.sums[k - 1].data() + (site / bs) * N;
    for (int c = 0; c < N; ++c) block[c] += new_spin[c] - old_spin[c];
  }
  std::memcpy(old_spin, new_spin, sizeof(double) * N);
}

namespace {

// ---------------------------------------------------------------------------
// Batch-means accumulator with automatic batch doubling (binning analysis).
// Level l holds means of 2^l consecutive samples; the standard error is read
// off where the per-level estimate plateaus, and the ratio to the naive
// (level-0) error gives the integrated autocorrelation time.

class Binning {
 public:
  void add(double x) {
    int level = 0;
    for (;;) {
      if (static_cast<int>(levels_.size()) <= level) levels_.emplace_back();
      Level& node = levels_[level];
      ++node.count;
      node.sum += x;
      node.sumsq += x * x;
      if (!node.has_pending) {
        node.pending = x;
        node.has_pending = true;
        return;
      }
      node.has_pending = false;
      x = 0.5 * (node.pending + x);
      ++level;
    }
  }

  McEstimate finalize(std::uint64_t seed) const {
    McEstimate est;
    est.seed = seed;
    if (levels_.empty() || levels_[0].count == 0) {
      est.precision_warning = true;
      return est;
    }
    const Level& raw = levels_[0];
    est.n_samples = raw.count;
    est.mean = raw.sum / raw.count;
    if (raw.count < 2) {
      est.precision_warning = true;
      est.tau_int = 0.5;
      return est;
    }

    auto error_at = [&](int l) {
      const Level& node = levels_[l];
      const double m = node.sum / node.count;
      double var = node.sumsq / node.count - m * m;
      var = std::max(0.0, var) * node.count / (node.count - 1.0);
      return std::sqrt(var / node.count);
    };

    int top = 0;
    for (int l = 0; l < static_cast<int>(levels_.size()); ++l) {
      if (levels_[l].count >= 64) top = l;
    }
    double err = 0.0;
    for (int l = 0; l <= top; ++l) err = std::max(err, error_at(l));
    est.std_error = err;
    const double err0 = error_at(0);
    est.tau_int = (err0 > 0.0) ? 0.5 * (err / err0) * (err / err0) : 0.5;
    // Warn when the batch hierarchy is too shallow to see decorrelation, or
    // when the error is still growing at the deepest usable level.
    est.precision_warning =
        (top < 3) || (error_at(top) > 1.05 * error_at(top - 1));
    if (err0 == 0.0) est.precision_warning = false;  // constant observable
    return est;
  }

 private:
  struct Level {
    std::int64_t count = 0;
    double sum = 0.0;
    double sumsq = 0.0;
    bool has_pending = false;
    double pending = 0.0;
  };
  std::vector<Level> levels_;
};

McEstimate merge_estimates(const std::vector<McEstimate>& chains,
                           std::uint64_t seed) {
  McEstimate out;
  out.seed = seed;
  std::int64_t total = 0;
  for (const McEstimate& e : chains) total += e.n_samples;
  out.n_samples = total;
  if (total == 0) {
    out.precision_warning = true;
    return out;
  }
  double err2 = 0.0;
  for (const McEstimate& e : chains) {
    const double w = static_cast<double>(e.n_samples) / total;
    out.mean += w * e.mean;
    out.tau_int += w * e.tau_int;
    err2 += w * w * e.std_error * e.std_error;
    out.precision_warning = out.precision_warning || e.precision_warning;
  }
  out.std_error = std::sqrt(err2);
  return out;
}

void validate_run_config(const McRunConfig& config) {
  check_components(config.N);
  if (!(config.beta >= 0.0)) {
    throw DomainError("beta must be >= 0, got " + std::to_string(config.beta));
  }
  if (config.sweeps < 1) throw DomainError("sweeps must be >= 1");
  if (config.burn_in < 0) throw DomainError("burn_in must be >= 0");
  if (config.chains < 1) throw DomainError("chains must be >= 1");
  if (config.threads < 1) throw DomainError("threads must be >= 1");
  if (!(config.rotation_step > 0.0)) {
    throw DomainError("rotation_step must be > 0");
  }
}

std::uint64_t chain_seed(std::uint64_t master, int chain) {
  return splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(chain) + 1));
}

// Metropolis chain driver.  Burn-in (with optional step adaptation) followed
// by `sweeps` measurement sweeps; after each measurement sweep the sink is
// called with the configuration and the measurement-phase move statistics.
template <typename OnSweep>
void run_single_chain(const McRunConfig& config, std::uint64_t seed,
                      OnSweep&& on_sweep) {
  const LatticeShape& shape = config.shape;
  const int N = config.N;
  Rng rng(seed);
  SpinConfiguration state = make_random_config(shape, N, rng);
  const Levels levels(shape);
  const int K = shape.K;

  // Proposal plan: at N = 1 every kernel degenerates to a sign flip, so the
  // resphere kernel is used throughout; otherwise Mix alternates kernels
  // update by update.
  const bool mix = config.proposal == Proposal::Mix && N > 1;
  const bool rotation_only = config.proposal == Proposal::Rotation && N > 1;
  double step = config.rotation_step;

  std::vector<double> proposal(N);
  ChainStats stats;
  std::int64_t rot_proposed = 0;
  std::int64_t rot_accepted = 0;
  std::int64_t move_counter = 0;

  auto sweep_once = [&](bool adapting) {
    for (std::int64_t j = 0; j < shape.n; ++j) {
      const bool rotate =
          rotation_only || (mix && ((move_counter++ & 1) != 0));
      if (rotate) {
        draw_rotation(rng, N, state.site(j), step, proposal.data());
      } else {
        draw_sphere(rng, N, proposal.data());
      }

      // O(K N) energy delta against the partial sums along the site's branch.
      const double* old_spin = state.site(j);
      double d2 = 0.0;
      for (int c = 0; c < N; ++c) {
        const double dc = proposal[c] - old_spin[c];
        d2 += dc * dc;
      }
      double dE = -0.5 * levels.weight_sum * d2;
      for (int k = 0; k < K; ++k) {
        const double* block =
            state.sums[k].data() + (j / levels.block_size[k]) * N;
        double dot = 0.0;
        for (int c = 0; c < N; ++c) {
          dot += block[c] * (proposal[c] - old_spin[c]);
        }
        dE -= levels.weight[k] * dot;
      }

      ++stats.proposed;
      if (rotate) ++rot_proposed;
      const bool accept =
          dE <= 0.0 || rng.uniform() < std::exp(-config.beta * dE);
      if (accept) {
        ++stats.accepted;
        if (rotate) ++rot_accepted;
        state.energy += dE;
        double* mut = state.site(j);
        for (int k = 0; k < K; ++k) {
          double* block = state.sums[k].data() + (j / levels.block_size[k]) * N;
          for (int c = 0; c < N; ++c) block[c] += proposal[c] - mut[c];
        }
        std::memcpy(mut, proposal.data(), sizeof(double) * N);
      }
    }
    if (adapting && rot_proposed >= 256) {
      const double rate = static_cast<double>(rot_accepted) / rot_proposed;
      if (rate > 0.45) {
        step = std::min(step * 1.25, 10.0);
      } else if (rate < 0.35) {
        step = std::max(step * 0.8, 1e-4);
      }
      rot_proposed = 0;
      rot_accepted = 0;
    }
  };

  const bool adapt = config.adapt_step && (mix || rotation_only);
  for (std::int64_t s = 0; s < config.burn_in; ++s) sweep_once(adapt);

  // Measurement phase: frozen step, fresh statistics, drift-free energy.
  stats = ChainStats{};
  stats.rotation_step = step;
  state.energy = energy_from_sums(state);
  for (std::int64_t s = 0; s < config.sweeps; ++s) {
    sweep_once(false);
    if ((s & 63) == 63) state.energy = energy_from_sums(state);
    on_sweep(static_cast<const SpinConfiguration&>(state), stats);
  }
}

// Runs `chains` jobs over at most `threads` workers; job c writes only its
// own result slot, so the outcome is independent of scheduling.
void run_chain_jobs(int chains, int threads,
                    const std::function<void(int)>& job) {
  const int workers = std::min(threads, chains);
  if (workers <= 1) {
    for (int c = 0; c < chains; ++c) job(c);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int c = next.fetch_add(1);
        if (c >= chains) return;
        try {
          job(c);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct ChainAccumulators {
  std::vector<Binning> theta;
  Binning x_sq;
  Binning x_mean;
  Binning energy;
  std::vector<double> block_samples;  // only filled when requested
  ChainStats stats;
};

void accumulate_chain(const McRunConfig& config, int chain,
                      const std::vector<double>& z_grid,
                      double block_prefactor, ChainAccumulators& acc) {
  acc.theta.assign(z_grid.size(), Binning{});
  // sqrt(beta) rescales to the normalization in which Theta's large-volume
  // limit is exp(-z^2/(2 mu)); see run_mc in the header.
  const double clt_scale =
      std::sqrt(config.beta) /
      std::sqrt(static_cast<double>(config.shape.n) * config.N);
  const bool want_blocks = block_prefactor != 0.0;
  if (want_blocks) {
    acc.block_samples.reserve(static_cast<std::size_t>(config.sweeps));
  }
  run_single_chain(
      config, chain_seed(config.seed, chain),
      [&](const SpinConfiguration& state, const ChainStats& stats) {
        const double* total = state.total_spin();
        double sum_all = 0.0;
        for (int c = 0; c < config.N; ++c) sum_all += total[c];
        const double x = sum_all * clt_scale;
        for (std::size_t i = 0; i < z_grid.size(); ++i) {
          acc.theta[i].add(std::exp(z_grid[i] * x));
        }
        acc.x_sq.add(x * x);
        acc.x_mean.add(x);
        acc.energy.add(state.energy);
        if (want_blocks) {
          acc.block_samples.push_back(block_prefactor * total[0]);
        }
        acc.stats = stats;
      });
}

std::vector<ChainAccumulators> run_all_chains(const McRunConfig& config,
                                              const std::vector<double>& z_grid,
                                              double block_prefactor) {
  validate_run_config(config);
  std::vector<ChainAccumulators> per_chain(config.chains);
  run_chain_jobs(config.chains, config.threads, [&](int c) {
    accumulate_chain(config, c, z_grid, block_prefactor, per_chain[c]);
  });
  return per_chain;
}

McEstimate merged(const std::vector<ChainAccumulators>& per_chain,
                  Binning ChainAccumulators::* member, std::uint64_t seed) {
  std::vector<McEstimate> parts;
  parts.reserve(per_chain.size());
  for (const ChainAccumulators& acc : per_chain) {
    parts.push_back((acc.*member).finalize(seed));
  }
  return merge_estimates(parts, seed);
}

}  // namespace

void mcmc_run(const McRunConfig& config,
              const std::function<void(const SpinConfiguration&,
                                       const ChainStats&)>& on_sweep) {
  validate_run_config(config);
  run_single_chain(config, chain_seed(config.seed, 0), on_sweep);
}

McOutput run_mc(const McRunConfig& config, const std::vector<double>& z_grid) {
  const std::vector<ChainAccumulators> per_chain =
      run_all_chains(config, z_grid, 0.0);

  McOutput out;
  out.theta.reserve(z_grid.size());
  for (std::size_t i = 0; i < z_grid.size(); ++i) {
    std::vector<McEstimate> parts;
    parts.reserve(per_chain.size());
    for (const ChainAccumulators& acc : per_chain) {
      parts.push_back(acc.theta[i].finalize(config.seed));
    }
    out.theta.push_back(merge_estimates(parts, config.seed));
  }
  out.x_sq = merged(per_chain, &ChainAccumulators::x_sq, config.seed);
  out.x_mean = merged(per_chain, &ChainAccumulators::x_mean, config.seed);
  out.energy_mean = merged(per_chain, &ChainAccumulators::energy, config.seed);

  std::int64_t proposed = 0;
  std::int64_t accepted = 0;
  for (const ChainAccumulators& acc : per_chain) {
    proposed += acc.stats.proposed;
    accepted += acc.stats.accepted;
    out.total_sweeps += config.sweeps;
  }
  out.acceptance_rate =
      proposed > 0 ? static_cast<double>(accepted) / proposed : 0.0;
  return out;
}

std::vector<McEstimate> estimate_mgf(const McRunConfig& config,
                                     const std::vector<double>& z_grid) {
  return run_mc(config, z_grid).theta;
}

BlockSpinResult block_spin_histogram(const McRunConfig& config,
                                     double gamma_exponent, int bins) {
  const double d = config.shape.d;
  if (std::abs(gamma_exponent - d) > 1e-9 &&
      std::abs(gamma_exponent - (d + 2.0)) > 1e-9) {
    throw DomainError("gamma exponent must be d or d+2, got " +
                      std::to_string(gamma_exponent));
  }
  if (bins < 1 || bins > 100000) {
    throw DomainError("histogram bin count out of range");
  }
  if (!(config.beta > 0.0)) {
    throw DomainError(
        "block_spin_histogram needs beta > 0 (the scaled block variable "
        "is degenerate at beta = 0)");
  }
  const double prefactor =
      std::sqrt(config.beta) * std::pow(static_cast<double>(config.shape.n),
                                        -gamma_exponent / (2.0 * d));

  const std::vector<ChainAccumulators> per_chain =
      run_all_chains(config, {}, prefactor);

  BlockSpinResult result;
  result.gamma_exponent = gamma_exponent;

  double lo = 0.0, hi = 0.0;
  bool first = true;
  std::vector<McEstimate> m1, m2;
  for (const ChainAccumulators& acc : per_chain) {
    Binning b1, b2;
    for (double y : acc.block_samples) {
      b1.add(y);
      b2.add(y * y);
      if (first) {
        lo = hi = y;
        first = false;
      } else {
        lo = std::min(lo, y);
        hi = std::max(hi, y);
      }
    }
    m1.push_back(b1.finalize(config.seed));
    m2.push_back(b2.finalize(config.seed));
  }
  result.mean = merge_estimates(m1, config.seed);
  result.second_moment = merge_estimates(m2, config.seed);

  if (first) return result;  // no samples
  if (hi - lo < 1e-12) hi = lo + 1e-12;
  const double width = (hi - lo) / bins;
  result.bin_centers.resize(bins);
  result.counts.assign(bins, 0);
  for (int b = 0; b < bins; ++b) {
    result.bin_centers[b] = lo + (b + 0.5) * width;
  }
  for (const ChainAccumulators& acc : per_chain) {
    for (double y : acc.block_samples) {
      int b = static_cast<int>((y - lo) / width);
      b = std::clamp(b, 0, bins - 1);
      ++result.counts[b];
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Exact N = 1 enumeration.

namespace {

// Walks all 2^n sign configurations in Gray-code order, maintaining spins,
// partial sums, and energy incrementally (O(K) per step).  The visitor
// receives the spins, the energy, and the index of the site flipped since the
// previous call (-1 on the first).
template <typename Visit>
void enumerate_signs(const LatticeShape& shape, Visit&& visit) {
  if (shape.n > 20) {
    throw CapacityError("exact enumeration supports n <= 20, got " +
                        std::to_string(shape.n));
  }
  const Levels levels(shape);
  const int K = shape.K;
  std::vector<double> spins(shape.n, 1.0);
  std::vector<std::vector<double>> sums(K);
  for (int k = 0; k < K; ++k) {
    sums[k].assign(shape.n / levels.block_size[k],
                   static_cast<double>(levels.block_size[k]));
  }
  double coupling = 0.0;
  for (int k = 0; k < K; ++k) {
    for (double s : sums[k]) coupling += levels.weight[k] * s * s;
  }
  double energy = 0.5 * (mu0(shape) * shape.n - coupling);

  visit(static_cast<const std::vector<double>&>(spins), energy, std::int64_t{-1});

  const std::uint64_t total = std::uint64_t{1} << shape.n;
  for (std::uint64_t i = 1; i < total; ++i) {
    // Gray code: configuration i differs from i-1 in bit ctz(i).
    int j = 0;
    while (((i >> j) & 1u) == 0u) ++j;
    const double delta = -2.0 * spins[j];
    double dE = -0.5 * levels.weight_sum * delta * delta;
    for (int k = 0; k < K; ++k) {
      dE -= levels.weight[k] * sums[k][j / levels.block_size[k]] * delta;
    }
    spins[j] = -spins[j];
    for (int k = 0; k < K; ++k) {
      sums[k][j / levels.block_size[k]] += delta;
    }
    energy += dE;
    visit(static_cast<const std::vector<double>&>(spins), energy,
          static_cast<std::int64_t>(j));
  }
}

}  // namespace

ExactN1 exact_partition_N1(const LatticeShape& shape, double beta, double z) {
  if (!(beta >= 0.0)) {
    throw DomainError("beta must be >= 0, got " + std::to_string(beta));
  }
  const double clt_scale =
      std::sqrt(beta) / std::sqrt(static_cast<double>(shape.n));
  double magnetization = 0.0;
  double Z = 0.0;
  double theta_num = 0.0;
  double x2_num = 0.0;
  enumerate_signs(shape, [&](const std::vector<double>& spins, double energy,
                             std::int64_t flipped) {
    if (flipped < 0) {
      magnetization = 0.0;
      for (double s : spins) magnetization += s;
    } else {
      magnetization += 2.0 * spins[flipped];
    }
    const double w = std::exp(-beta * energy);
    const double x = magnetization * clt_scale;
    Z += w;
    theta_num += w * std::exp(z * x);
    x2_num += w * x * x;
  });
  ExactN1 out;
  out.Z = Z;
  out.theta = theta_num / Z;
  out.x_sq_mean = x2_num / Z;
  return out;
}

double reflected_pair_mean(
    const LatticeShape& shape, double beta, const ReflectionPlane& plane,
    const std::function<double(const std::vector<double>&)>& observable) {
  if (!(beta >= 0.0)) {
    throw DomainError("beta must be >= 0, got " + std::to_string(beta));
  }
  std::vector<std::int64_t> permutation(shape.n);
  for (std::int64_t j = 0; j < shape.n; ++j) {
    permutation[j] = reflect_site(j, plane, shape);
  }
  std::vector<double> reflected(shape.n);
  double Z = 0.0;
  double num = 0.0;
  enumerate_signs(shape, [&](const std::vector<double>& spins, double energy,
                             std::int64_t flipped) {
    if (flipped < 0) {
      for (std::int64_t j = 0; j < shape.n; ++j) {
        reflected[j] = spins[permutation[j]];
      }
    } else {
      // The reflection is an involution: flipping site j changes the
      // reflected configuration at position perm(j).
      reflected[permutation[flipped]] = spins[flipped];
    }
    const double w = std::exp(-beta * energy);
    Z += w;
    num += w * observable(spins) * observable(reflected);
  });
  return num / Z;
}

}  // namespace hspin
