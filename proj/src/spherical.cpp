#include "hspin/spherical.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "hspin/rootfind.hpp"

namespace hspin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// beta_c, with divergent cases reported as +infinity instead of thrown (the
// solver uses this to decide whether condensation exists at all).
double beta_c_or_inf(const SpectralModel& model) {
  switch (model.variant()) {
    case SpectralModel::Variant::Finite: {
      // Finite-size value: E(−Δ)^{−1} over the nonzero modes, always finite.
      double sum = 0.0;
      for (int k = model.K() - 1; k >= 0; --k) {
        sum += model.weight(k) / model.lambda(k);
      }
      return sum;
    }
    case SpectralModel::Variant::InfiniteK: {
      if (model.d() <= 2.0) return kInf;
      // (1−L^{−d})(L²−1)/(1−L^{−(d−2)}), rescaled if the eigenvalues are.
      const double L = model.L();
      const double d = model.d();
      return (1.0 - std::pow(L, -d)) * (L * L - 1.0) /
             ((1.0 - std::pow(L, -(d - 2.0))) * model.lambda_scale());
    }
    case SpectralModel::Variant::Continuum: {
      if (!std::isinf(model.C())) return kInf;  // density positive at 0
      if (model.d() <= 2.0) return kInf;
      return 2.0 * model.d() / (model.d() - 2.0);
    }
  }
  return kInf;
}

}  // namespace

double beta_c(const SpectralModel& model) {
  const double bc = beta_c_or_inf(model);
  if (std::isinf(bc)) {
    std::string why;
    if (model.variant() == SpectralModel::Variant::Continuum &&
        !std::isinf(model.C())) {
      why = "continuum model with finite cutoff C has E(-Delta)^{-1} = inf "
            "(density positive at 0)";
    } else {
      why = "E(-Delta)^{-1} diverges for d = " + std::to_string(model.d()) +
            " <= 2";
    }
    throw DivergenceError("beta_c: " + why);
  }
  return bc;
}

SphericalSolution solve_mu(double beta, const SpectralModel& model) {
  if (!(beta > 0.0)) {
    throw DomainError("solve_mu: beta must be > 0, got " + std::to_string(beta));
  }
  SphericalSolution sol;
  sol.beta = beta;

  const double bc = beta_c_or_inf(model);
  if (beta >= bc) {
    // Condensed branch: μ = 0 convention, ρ₀ saturates the sum rule.
    sol.condensed = true;
    sol.mu = 0.0;
    sol.rho0 = beta - bc;
    sol.clt_variance = kNaN;
    sol.free_energy =
        -0.5 * (1.0 + std::log(beta)) -
        0.5 * expectation([](double lam) { return std::log(lam); }, model);
    return sol;
  }

  auto residual = [&](double mu) {
    return resolvent_expectation(mu, model) - beta;
  };
  // E(λ−μ)^{−1} < 1/|μ|, so μ = −max(1, 2/β) is guaranteed below the root;
  // walk the upper end toward 0 until the resolvent exceeds β.
  double lo = -std::max(1.0, 2.0 / beta);
  double hi = -1e-8;
  double fhi = residual(hi);
  while (fhi < 0.0) {
    hi *= 0.0625;
    if (hi > -1e-300) {
      throw NumericError("solve_mu: bracket upper end underflowed at beta = " +
                         std::to_string(beta) + " (resolvent residual " +
                         std::to_string(fhi) + ")");
    }
    fhi = residual(hi);
  }
  const double f_tol = 1e-12 * std::max(1.0, beta);
  const RootResult root = solve_bracketed(residual, lo, hi, f_tol);

  sol.mu = root.x;
  sol.rho0 = 0.0;
  sol.clt_variance = -1.0 / sol.mu;
  const double mu = sol.mu;
  sol.free_energy =
      -0.5 * mu * beta - 0.5 * (1.0 + std::log(beta)) -
      0.5 * expectation([mu](double lam) { return std::log(lam - mu); }, model);
  return sol;
}

double solve_mu_d4(double beta) {
  if (!(beta > 0.0) || !(beta < 4.0)) {
    throw DomainError("solve_mu_d4: beta must lie in (0, 4), got " +
                      std::to_string(beta) +
                      " (condensed phase: use solve_mu)");
  }
  // g(μ) = −2μ ln(1 − 1/(2μ)) decreases from 1 (μ → −∞) to 0 (μ → 0⁻);
  // solve g(μ) = 1 − β/4.
  const double target = 1.0 - beta / 4.0;
  auto g = [](double mu) { return -2.0 * mu * std::log1p(-1.0 / (2.0 * mu)); };
  auto h = [&](double mu) { return g(mu) - target; };
  double lo = -1.0;
  if (h(lo) < 0.0) {
    lo = expand_bracket(h, lo, -1.0, [](double x) { return 2.0 * x; });
  }
  double hi = -1e-12;
  if (h(hi) > 0.0) {
    hi = expand_bracket(h, hi, 1.0, [](double x) { return 0.25 * x; });
  }
  return solve_bracketed(h, lo, hi, 5e-15).x;
}

double free_energy(double beta, const SpectralModel& model) {
  return solve_mu(beta, model).free_energy;
}

double mgf(double beta, double z, const SpectralModel& model) {
  const SphericalSolution sol = solve_mu(beta, model);
  if (sol.condensed) {
    throw CriticalityError("mgf: beta = " + std::to_string(beta) +
                           " is at or above beta_c; the Gaussian limit fails");
  }
  return std::exp(-z * z / (2.0 * sol.mu));
}

double clt_variance(double beta, const SpectralModel& model) {
  const SphericalSolution sol = solve_mu(beta, model);
  if (sol.condensed) {
    throw CriticalityError("clt_variance: beta = " + std::to_string(beta) +
                           " is at or above beta_c");
  }
  return -1.0 / sol.mu;
}

FiniteNCorrection kappa_n(double beta, double z, std::int64_t n_total,
                          const SpectralModel& model) {
  if (n_total < 1) {
    throw DomainError("kappa_n: n_total must be >= 1, got " +
                      std::to_string(n_total));
  }
  const SphericalSolution sol = solve_mu(beta, model);
  if (sol.condensed) {
    throw CriticalityError("kappa_n: beta = " + std::to_string(beta) +
                           " is at or above beta_c");
  }
  const double mu = sol.mu;
  const double n = static_cast<double>(n_total);

  const double e2 = expectation(
      [mu](double lam) { return 1.0 / ((lam - mu) * (lam - mu)); }, model);

  FiniteNCorrection out;
  out.n = n_total;
  out.mu = mu;
  out.c = 1.0 / (mu * mu * e2);  // [E(1−J/μ)^{−2}]^{−1}

  if (z == 0.0) {
    out.kappa = mu;  // identical root problem
    out.delta = 0.0;
    return out;
  }

  // Solve for δ = κ − μ from the subtracted sum rule
  //     δ · E[(λ−μ−δ)^{−1}(λ−μ)^{−1}] + z²/(n(μ+δ)²) = 0 ,
  // which keeps κ − μ at full relative precision (the two resolvent
  // expectations would cancel catastrophically at large n).
  auto G = [&](double delta) {
    const double kappa = mu + delta;
    const double cross = expectation(
        [mu, delta](double lam) {
          return 1.0 / ((lam - mu - delta) * (lam - mu));
        },
        model);
    return delta * cross + z * z / (n * kappa * kappa);
  };
  const double scale = z * z / (n * mu * mu);  // G(0) > 0 sets the size
  const double guess = -out.c * z * z / n;     // leading-order shift
  double lo = 8.0 * guess;                     // safely beyond the root
  if (G(lo) > 0.0) {
    lo = expand_bracket(G, lo, 1.0, [](double x) { return 2.0 * x; });
  }
  const RootResult root = solve_bracketed(G, lo, 0.0, 1e-12 * scale);
  out.delta = root.x;
  out.kappa = mu + root.x;
  return out;
}

double mgf_finite_n(double beta, double z, std::int64_t n_total,
                    const SpectralModel& model) {
  if (z == 0.0) return 1.0;  // κ = μ collapses every term
  const FiniteNCorrection fc = kappa_n(beta, z, n_total, model);
  const double mu = fc.mu;
  const double delta = fc.delta;
  const double n = static_cast<double>(fc.n);

  // ln Θ_n = −(n/2)[β δ + E ln((λ−κ)/(λ−μ))] − z²/(2κ).  With
  // t(λ) = −δ/(λ−μ) we have E t = −δ·E(λ−μ)^{−1}, so the bracket equals
  // E[log1p(t) − t] + δ(β − E(λ−μ)^{−1}): an O(δ²) quantity computed without
  // cancellation (the naive difference would drown the O(1/n) signal).
  const double small = expectation(
      [mu, delta](double lam) {
        const double t = -delta / (lam - mu);
        return std::log1p(t) - t;
      },
      model);
  const double r_mu = resolvent_expectation(mu, model);
  const double log_theta =
      -0.5 * n * (small + delta * (beta - r_mu)) - z * z / (2.0 * fc.kappa);
  return std::exp(log_theta);
}

}  // namespace hspin
