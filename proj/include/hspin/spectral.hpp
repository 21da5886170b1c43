// Spectra of the hierarchical Laplacian and the expectation functional E f(−Δ).
//
// Three spectral models share one interface:
//   finite(L,d,K):  eigenvalues λ_k = (L^{−2k} − L^{−2K})/(L²−1), k = 0,…,K,
//                   multiplicity L^{d(K−k)} − L^{d(K−k−1)} for k < K and 1 for
//                   the simple zero eigenvalue λ_K;
//   infinite_K(L,d): λ_k = L^{−2k}/(L²−1) with weights (1−L^{−d})L^{−dk}; the
//                   zero mode carries no weight.  Non-integer L is allowed here
//                   purely as a numerical limit device (λ then rescaled by a
//                   caller-chosen factor, e.g. (L−1) for the L↓1 limit);
//   continuum(d,C): absolutely continuous measure with density
//                   ρ′(λ) = 2^{d/2}(d/2)(λ + e^{−2C}/2)^{d/2−1}
//                   supported on [0, (1−e^{−2C})/2], the L↓1, K·ln L = C limit.
//
// E f(−Δ) is the weight-averaged f over the spectrum: an exact finite sum, a
// truncated series with a certified geometric tail bound, or an adaptive
// quadrature (relative tolerance 1e−10, substitution λ = u² for d < 4).

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "hspin/lattice.hpp"

namespace hspin {

// Closed-form spectrum accessors for a finite lattice shape.
double eigenvalue(int k, const LatticeShape& shape);
std::int64_t multiplicity(int k, const LatticeShape& shape);

class SpectralModel {
 public:
  enum class Variant { Finite, InfiniteK, Continuum };

  static SpectralModel finite(const LatticeShape& shape);
  static SpectralModel finite(int L, int d, int K);
  // lambda_scale multiplies every eigenvalue; 1 for the plain model, (L−1)
  // when the model is used as an L↓1 approximation of the continuum.
  static SpectralModel infinite_K(double L, int d, double lambda_scale = 1.0);
  static SpectralModel continuum(double d,
                                 double C = std::numeric_limits<double>::infinity());

  Variant variant() const { return variant_; }
  double L() const { return L_; }
  double d() const { return d_; }
  int K() const { return K_; }
  double C() const { return C_; }
  double lambda_scale() const { return lambda_scale_; }
  const LatticeShape& shape() const;  // Finite only

  // Level-k eigenvalue / weight (Finite: 0 <= k <= K; InfiniteK: k >= 0).
  double lambda(int k) const;
  double weight(int k) const;
  // Weight of the zero eigenvalue: 1/n for Finite, 0 otherwise.
  double zero_mode_weight() const;
  // Top of the spectrum's support.
  double support_max() const;

 private:
  Variant variant_ = Variant::Finite;
  double L_ = 2.0;
  double d_ = 1.0;
  int K_ = 1;
  double C_ = std::numeric_limits<double>::infinity();
  double lambda_scale_ = 1.0;
  LatticeShape shape_{};
  bool has_shape_ = false;
};

// Limiting spectral density of the continuum model; 0 outside the support.
double continuum_density(double lambda, double d, double C);

// E f(−Δ) for the model; throws DivergenceError when the infinite-K series
// fails its certified tail bound (e.g. f ~ 1/λ with d <= 2).
double expectation(const std::function<double(double)>& f,
                   const SpectralModel& model);

// E (−Δ − μ)^{−1} for μ < 0 (Finite models include the 1/n zero-mode term).
double resolvent_expectation(double mu, const SpectralModel& model);

// Integrated density of eigenvalues ρ_n(λ) = (1/n)#{i : λ_i <= λ} as an exact
// step function (capped at the dense comparison size).
struct EmpiricalDistribution {
  std::vector<double> lambdas;     // ascending step locations
  std::vector<double> cumulative;  // ρ_n at and above each location
  double operator()(double lambda) const;
};
EmpiricalDistribution empirical_distribution(const LatticeShape& shape);

// Nonhomogeneous (disordered) Laplacian: eigenvalues c·λ_k·e^{X} with X drawn
// from a mean-zero law and c normalized by c^{−1} = E e^{X}.
struct DisorderModel {
  SpectralModel base;  // must be an InfiniteK model
  std::function<double(std::mt19937_64&)> sample_x;
  double c = 1.0;
};

struct MeanWithError {
  double value = 0.0;
  double std_error = 0.0;
};

// Monte Carlo estimate of (1−L^{−d}) Σ_k L^{−dk} E_X f(c λ_k e^{X});
// deterministic given the seed (per-sample sub-streams derived from it).
MeanWithError disorder_expectation(const std::function<double(double)>& f,
                                   const DisorderModel& model,
                                   std::int64_t samples, std::uint64_t seed);

// Diagnostic spectral-dimension estimate 2·ln μ([0,t]) / ln t at small t > 0.
double spectral_dimension_estimate(const SpectralModel& model, double t);

}  // namespace hspin
