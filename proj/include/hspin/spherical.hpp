// Spherical-model thermodynamics over a hierarchical (or continuum) spectrum.
//
// The saddle-point sum rule ties the inverse temperature to the chemical
// potential μ ≤ 0:
//     β = E (−Δ − μ)^{−1}            (uncondensed branch, β < β_c)
// with critical coupling β_c = E (−Δ)^{−1} over the nonzero modes.  Above β_c
// the convention is μ = 0 with condensate density ρ₀ = β − β_c (the sum-rule
// inequality saturated).  From μ(β) follow
//     f(β)  = −μβ/2 − ln√(eβ) − ½ E ln(−Δ−μ)        (free energy)
//     Θ(β,z) = exp(−z²/(2μ))                         (block-spin MGF limit)
//     CLT variance −1/μ
// and the finite-volume corrections: κ_n solves β = E(−Δ−κ)^{−1} + z²/(nκ²),
// κ = μ − (c/n)z² + o(z²/n) with curvature constant c = [E(1−J/μ)^{−2}]^{−1},
// and Θ_n = exp(−nβ(κ−μ)/2 − (n/2)E ln((−Δ−κ)/(−Δ−μ)) − z²/(2κ)) approaches
// Θ at rate O(1/n) in log.

#pragma once

#include <cstdint>

#include "hspin/spectral.hpp"

namespace hspin {

struct SphericalSolution {
  double beta = 0.0;
  double mu = 0.0;            // <= 0; strictly negative below beta_c
  double rho0 = 0.0;          // condensate density, beta - beta_c above beta_c
  double free_energy = 0.0;
  double clt_variance = 0.0;  // -1/mu; NaN on the condensed branch
  bool condensed = false;     // mu = 0 convention in force (value convention-dependent)
};

// E (−Δ)^{−1} over the nonzero modes.  DivergenceError when the series or
// integral genuinely diverges: infinite_K or continuum with d <= 2, or a
// continuum model with finite cutoff C (density positive at λ = 0).
double beta_c(const SpectralModel& model);

// Solve the sum rule for μ(β); fills the whole solution including the free
// energy.  Bracketed root-finding, residual below 1e−12·max(1,β).
SphericalSolution solve_mu(double beta, const SpectralModel& model);

// Specialized d = 4 continuum solver for 1 − β/4 = −2μ ln(1 − 1/(2μ)).
double solve_mu_d4(double beta);

double free_energy(double beta, const SpectralModel& model);

// Θ(β,z); CriticalityError at or above beta_c.
double mgf(double beta, double z, const SpectralModel& model);

// −1/μ(β); CriticalityError at or above beta_c.
double clt_variance(double beta, const SpectralModel& model);

struct FiniteNCorrection {
  std::int64_t n = 0;
  double kappa = 0.0;   // root of the finite-volume constraint, < 0
  double mu = 0.0;      // the n = ∞ root at the same beta
  double delta = 0.0;   // kappa − mu, computed without cancellation
  double c = 0.0;       // curvature constant [E(1−J/μ)^{−2}]^{−1}
};

FiniteNCorrection kappa_n(double beta, double z, std::int64_t n_total,
                          const SpectralModel& model);

double mgf_finite_n(double beta, double z, std::int64_t n_total,
                    const SpectralModel& model);

}  // namespace hspin
