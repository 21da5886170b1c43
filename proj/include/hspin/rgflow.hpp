#pragma once

// Renormalization-group recursion in potential form, as truncated
// Taylor-coefficient flows.
//
// Potentials are represented as u(x) = sum_{m>=1} c_m x^m around x = 0 with
// c_0 = 0 by normalization (the value at the origin is subtracted so the
// associated characteristic function stays 1 at zero).  This coefficient
// representation is the well-posed choice: the finite-N equation carries a
// coefficient (2/N)x multiplying u_xx that changes sign at x = 0, which makes
// grid-based integration ill-posed on half the line, while the coefficient
// flow truncates to a small ODE system.
//
// Two flows are provided:
//   * heat_flow:  u_t = (2/N) x u_xx + u_x - 2x (u_x)^2           (one block step)
//   * lpa_flow:   the same plus  - gamma x u_x + d u - u_x(t,0)   (continuous RG)
// with the (2/N) diffusion term dropped at N = infinity.  The discrete
// recursion rg_step composes a coefficient rescale c_m <- L^{d - gamma m} c_m
// with heat_flow to t = 1/2 and a re-normalization c_0 <- 0.
//
// Products in 2x(u_x)^2 generate degrees above the truncation order M; they
// are dropped (projective truncation), and convergence in M is monitored by
// the tests rather than assumed.  Any coefficient exceeding 1e12 in magnitude
// aborts the flow with a blow-up report carrying the failure time; blow-up is
// a reportable outcome, not an exception, because critical_search classifies
// trajectories by it.

#include <cstdint>
#include <functional>
#include <vector>

#include "hspin/errors.hpp"

namespace hspin {

// Marker value for the N = infinity (inviscid) flow.
inline constexpr int kInfiniteComponents = -1;

// Coefficients |c_m| beyond this magnitude classify the trajectory as blown
// up; chosen far above any bounded trajectory of interest but far below
// overflow so the quadratic right-hand side stays finite.
inline constexpr double kBlowUpGuard = 1e12;

struct FlowState {
  std::vector<double> coeffs;  // coeffs[m-1] = c_m for m = 1..M; c_0 = 0
  int N = kInfiniteComponents;  // component count, or kInfiniteComponents
  double d = 4.0;               // dimension parameter
  double gamma = 6.0;           // scaling exponent, d + 2 unless overridden
  double L = 2.0;               // block ratio for the discrete recursion
  double k_or_t = 0.0;          // step count (discrete) or flow time

  int order() const { return static_cast<int>(coeffs.size()); }
};

// Initial potential u_0 to truncation order M: beta and N plus the extracted
// Taylor coefficients c_1..c_M (c_0 = 0 by construction).
struct InitialCondition {
  double beta = 0.0;
  int N = kInfiniteComponents;
  std::vector<double> coeffs;
};

// Result of a flow invocation.  On blow-up, `state` holds the last accepted
// step (coefficients may be large but are finite) and `blow_up_time` the flow
// time (or discrete step count) at which the guard tripped.
struct FlowResult {
  FlowState state;
  bool blew_up = false;
  double blow_up_time = 0.0;
  std::vector<FlowState> trajectory;  // sampled states, when requested
};

// Taylor coefficients of u_0 for the finite-N single-site measure (uniform on
// the sphere of radius sqrt(beta N)): the series
//   psi(x) = sum_m (beta N^2 x / 4)^m / (m! (N/2)_m)
// is log-differentiated term by term and scaled by -1/N.  Throws DomainError
// on invalid (beta, N, M) and NumericError if coefficient extraction
// overflows before reaching order M.
InitialCondition initial_u0(double beta, int N, int M);

// N = infinity limit of initial_u0 via the saddle-point (Debye) asymptotics
// of the same series: with y = beta x and sigma(y) solving sigma(1 + sigma) = y,
//   u_0(x) = -sigma + (1/2) ln(1 + sigma),
// expanded to order M by power-series composition.  Cross-validated against
// 1/N extrapolation of initial_u0 in the tests.
InitialCondition initial_u0_infinite(double beta, int M);

// Flow state assembled from an initial condition; gamma defaults to d + 2.
FlowState make_flow_state(const InitialCondition& ic, double d, double L);
FlowState make_flow_state(const InitialCondition& ic, double d, double L,
                          double gamma);

// Integrate the heat-type coefficient flow for a duration t_final (> 0) from
// the given state; the returned state has c_0 re-normalized to 0 and
// k_or_t advanced by t_final.  Adaptive embedded Runge-Kutta stepping with
// relative tolerance 1e-10, absolute 1e-12.
FlowResult heat_flow(const FlowState& state, double t_final);

// Integrate the local-potential-approximation flow for a duration t_final,
// sampling the trajectory at the requested times (relative offsets in
// (0, t_final]); the final state is always appended.  The u_x(t,0) term keeps
// c_0 = 0 identically along the flow.
FlowResult lpa_flow(const FlowState& state, double t_final,
                    const std::vector<double>& sample_times = {});

// One discrete RG step: c_m <- L^{d - gamma m} c_m, heat_flow to t = 1/2,
// c_0 <- 0, k_or_t incremented by 1.  Requires L > 1 with an integer block
// count L^d >= 2.
FlowResult rg_step(const FlowState& state);

enum class FlowKind { Discrete, Lpa };

struct CriticalSearchOptions {
  double width = 1e-6;        // target bracket width
  int discrete_steps = 40;    // classification budget, FlowKind::Discrete
  double lpa_horizon = 20.0;  // classification budget, FlowKind::Lpa
};

struct CriticalSearchResult {
  double critical = 0.0;  // bracket midpoint
  double lo = 0.0;        // final bracket: bounded side
  double hi = 0.0;        // final bracket: blow-up side (may be < lo)
  int iterations = 0;
};

// Bisect the parameter of `state_for` between lo and hi for the boundary
// separating bounded trajectories from blow-up under the chosen flow.  The
// two endpoints must classify differently within the budget; otherwise a
// CriticalityError with endpoint diagnostics is thrown.
CriticalSearchResult critical_search(
    double lo, double hi, const std::function<FlowState(double)>& state_for,
    FlowKind kind, const CriticalSearchOptions& options = {});

// Convenience form bisecting beta with the initial condition wired in
// (initial_u0 or, for N = kInfiniteComponents, initial_u0_infinite).
CriticalSearchResult critical_search_beta(
    double d, int N, int M, FlowKind kind, double beta_lo, double beta_hi,
    double L = 2.0, const CriticalSearchOptions& options = {});

}  // namespace hspin
