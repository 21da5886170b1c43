#include "hspin/rgflow.hpp"

#include <boost/numeric/odeint.hpp>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace hspin {

namespace ode = boost::numeric::odeint;

namespace {

using Vec = std::vector<double>;

constexpr double kRelTol = 1e-10;
constexpr double kAbsTol = 1e-12;

// Logarithm of a power series with unit constant term: given p_1..p_M of
// P(x) = 1 + sum p_m x^m, returns l_1..l_M of ln P via the convolution
// recurrence  l_m = p_m - (1/m) sum_{j=1}^{m-1} j l_j p_{m-j}.
Vec series_log(const Vec& p) {
  const int M = static_cast<int>(p.size()) - 1;  // p[0] == 1
  Vec l(M + 1, 0.0);
  for (int m = 1; m <= M; ++m) {
    double acc = p[m];
    for (int j = 1; j < m; ++j) {
      acc -= static_cast<double>(j) / m * l[j] * p[m - j];
    }
    l[m] = acc;
  }
  return l;
}

void check_order(int M) {
  if (M < 1 || M > 64) {
    throw DomainError("truncation order M must lie in [1, 64], got " +
                      std::to_string(M));
  }
}

// Coefficient ODE right-hand side shared by the heat and LPA flows.  The
// state vector y has y[j] = c_j for j = 0..M; truncation sets c_{M+1} = 0.
//
//   dc_j/dt =  (2/N) j(j+1) c_{j+1}                       (diffusion, finite N)
//            + (j+1) c_{j+1}                              (transport u_x)
//            - 2 sum_{a+b=j-1, a,b>=0} (a+1)(b+1) c_{a+1} c_{b+1}
//            [ - gamma j c_j + d c_j - delta_{j0} c_1 ]   (LPA terms only)
struct CoefficientOde {
  int M = 0;
  bool lpa = false;
  bool infinite_N = true;
  double two_over_N = 0.0;
  double gamma = 0.0;
  double d = 0.0;

  void operator()(const Vec& y, Vec& dy, double /*t*/) const {
    for (int j = 0; j <= M; ++j) {
      const double next = (j < M) ? y[j + 1] : 0.0;
      double v = (j + 1) * next;
      if (!infinite_N) v += two_over_N * j * (j + 1) * next;
      if (j >= 1) {
        double quad = 0.0;
        for (int a = 0; a < j; ++a) {
          quad += (a + 1) * (j - a) * y[a + 1] * y[j - a];
        }
        v -= 2.0 * quad;
      }
      if (lpa) {
        v += (d - gamma * j) * y[j];
        if (j == 0) v -= y[1];
      }
      dy[j] = v;
    }
  }
};

CoefficientOde make_ode(const FlowState& state, bool lpa) {
  if (state.coeffs.empty()) {
    throw DomainError("flow state has no coefficients");
  }
  if (state.N != kInfiniteComponents && state.N < 1) {
    throw DomainError("component count must be >= 1 or the infinite marker");
  }
  CoefficientOde rhs;
  rhs.M = state.order();
  rhs.lpa = lpa;
  rhs.infinite_N = (state.N == kInfiniteComponents);
  rhs.two_over_N = rhs.infinite_N ? 0.0 : 2.0 / state.N;
  rhs.gamma = state.gamma;
  rhs.d = state.d;
  return rhs;
}

// Thrown out of the step observer when the guard trips; carries the time.
struct BlowUpSignal {
  double t = 0.0;
};

bool violates_guard(const Vec& y) {
  for (double c : y) {
    if (!std::isfinite(c) || std::abs(c) > kBlowUpGuard) return true;
  }
  return false;
}

// Integrates y' = rhs over [0, span], watching the blow-up guard after every
// accepted step.  Returns true on completion; on blow-up returns false with
// *blow_time set and y holding the state at the trip (or the last fully
// finite state if non-finite values appeared).
bool integrate_guarded(const CoefficientOde& rhs, Vec& y, double span,
                       double* blow_time) {
  auto stepper =
      ode::make_controlled(kAbsTol, kRelTol, ode::runge_kutta_cash_karp54<Vec>());
  Vec last_finite = y;
  auto observer = [&](const Vec& cur, double t) {
    if (violates_guard(cur)) throw BlowUpSignal{t};
    last_finite = cur;
  };
  const double dt0 = std::min(1e-3, span / 2.0);
  try {
    ode::integrate_adaptive(stepper, rhs, y, 0.0, span, dt0, observer);
  } catch (const BlowUpSignal& signal) {
    bool finite = true;
    for (double c : y) finite = finite && std::isfinite(c);
    if (!finite) y = last_finite;
    *blow_time = signal.t;
    return false;
  } catch (const std::runtime_error&) {
    // Step-size control failed to make progress; classify as blow-up at the
    // last accepted time.
    y = last_finite;
    *blow_time = span;
    return false;
  }
  return true;
}

FlowResult run_flow(const FlowState& state, double t_final, bool lpa,
                    const std::vector<double>& sample_times) {
  if (!(t_final > 0.0)) {
    throw DomainError("flow duration must be > 0, got " +
                      std::to_string(t_final));
  }
  std::vector<double> samples = sample_times;
  std::sort(samples.begin(), samples.end());
  for (double t : samples) {
    if (!(t > 0.0) || t > t_final) {
      throw DomainError("sample times must lie in (0, t_final]");
    }
  }

  const CoefficientOde rhs = make_ode(state, lpa);
  const int M = state.order();
  Vec y(M + 1, 0.0);
  for (int m = 1; m <= M; ++m) y[m] = state.coeffs[m - 1];

  FlowResult result;
  result.state = state;

  auto snapshot = [&](double t_offset) {
    FlowState s = state;
    for (int m = 1; m <= M; ++m) s.coeffs[m - 1] = y[m];
    s.k_or_t = state.k_or_t + t_offset;
    return s;
  };

  if (violates_guard(y)) {
    result.blew_up = true;
    result.blow_up_time = state.k_or_t;
    return result;
  }

  double done = 0.0;
  auto advance_to = [&](double target) {
    double blow_time = 0.0;
    if (!integrate_guarded(rhs, y, target - done, &blow_time)) {
      result.blew_up = true;
      result.blow_up_time = state.k_or_t + done + blow_time;
      return false;
    }
    done = target;
    return true;
  };

  for (double t : samples) {
    if (t <= done) continue;  // duplicates collapse to one sample
    if (!advance_to(t)) break;
    result.trajectory.push_back(snapshot(done));
  }
  if (!result.blew_up && done < t_final) advance_to(t_final);

  result.state = snapshot(result.blew_up ? (result.blow_up_time - state.k_or_t)
                                         : t_final);
  if (!result.blew_up && !sample_times.empty()) {
    result.trajectory.push_back(result.state);
  }
  return result;
}

}  // namespace

InitialCondition initial_u0(double beta, int N, int M) {
  if (!(beta > 0.0)) {
    throw DomainError("initial_u0: beta must be > 0, got " +
                      std::to_string(beta));
  }
  if (N < 1) {
    throw DomainError("initial_u0: N must be >= 1, got " + std::to_string(N));
  }
  check_order(M);

  // The single-site weight is psi(x) = 0F1(; N/2; beta N^2 x / 4) and
  // u0 = -ln(psi)/N.  Rewriting the defining equation
  // x psi'' + (N/2) psi' = (beta N^2 / 4) psi in terms of u0 yields a
  // coefficient recursion whose intermediates stay at the scale of the
  // answer for every N.  (Extracting the logarithm from the moment series
  // instead loses about m*log10(N) digits at order m: the moments grow like
  // N^m while the cumulants stay O(N).)
  Vec c(M + 1, 0.0);
  c[1] = -0.5 * beta;
  for (int m = 1; m < M; ++m) {
    double acc = 0.0;
    for (int j = 0; j < m; ++j) {
      acc += (j + 1) * (m - j) * c[j + 1] * c[m - j];
    }
    c[m + 1] = acc / ((m + 1) * (0.5 + static_cast<double>(m) / N));
    if (!std::isfinite(c[m + 1])) {
      throw NumericError("initial_u0: coefficient recursion overflowed at "
                         "order " + std::to_string(m + 1));
    }
  }

  InitialCondition ic;
  ic.beta = beta;
  ic.N = N;
  ic.coeffs.assign(c.begin() + 1, c.end());
  return ic;
}

InitialCondition initial_u0_infinite(double beta, int M) {
  if (!(beta > 0.0)) {
    throw DomainError("initial_u0_infinite: beta must be > 0, got " +
                      std::to_string(beta));
  }
  check_order(M);

  // Saddle-point form: with y = beta x, sigma solves sigma(1 + sigma) = y,
  // so sigma_1 = 1 and sigma_m = -sum_{a+b=m, a,b>=1} sigma_a sigma_b.
  Vec sigma(M + 1, 0.0);
  sigma[1] = 1.0;
  for (int m = 2; m <= M; ++m) {
    double acc = 0.0;
    for (int a = 1; a < m; ++a) acc += sigma[a] * sigma[m - a];
    sigma[m] = -acc;
  }

  // u0 = -sigma + (1/2) ln(1 + sigma), then y^m -> (beta x)^m.
  Vec one_plus_sigma = sigma;
  one_plus_sigma[0] = 1.0;
  const Vec l = series_log(one_plus_sigma);

  InitialCondition ic;
  ic.beta = beta;
  ic.N = kInfiniteComponents;
  ic.coeffs.resize(M);
  double beta_pow = 1.0;
  for (int m = 1; m <= M; ++m) {
    beta_pow *= beta;
    ic.coeffs[m - 1] = (-sigma[m] + 0.5 * l[m]) * beta_pow;
  }
  return ic;
}

FlowState make_flow_state(const InitialCondition& ic, double d, double L) {
  return make_flow_state(ic, d, L, d + 2.0);
}

FlowState make_flow_state(const InitialCondition& ic, double d, double L,
                          double gamma) {
  if (!(d > 0.0)) {
    throw DomainError("make_flow_state: d must be > 0");
  }
  FlowState state;
  state.coeffs = ic.coeffs;
  state.N = ic.N;
  state.d = d;
  state.gamma = gamma;
  state.L = L;
  state.k_or_t = 0.0;
  return state;
}

FlowResult heat_flow(const FlowState& state, double t_final) {
  return run_flow(state, t_final, /*lpa=*/false, {});
}

FlowResult lpa_flow(const FlowState& state, double t_final,
                    const std::vector<double>& sample_times) {
  return run_flow(state, t_final, /*lpa=*/true, sample_times);
}

FlowResult rg_step(const FlowState& state) {
  if (!(state.L > 1.0)) {
    throw DomainError("rg_step: block ratio L must be > 1");
  }
  const double block = std::pow(state.L, state.d);
  if (block < 2.0 - 1e-9 ||
      std::abs(block - std::round(block)) > 1e-9 * block) {
    throw DomainError("rg_step: L^d must be an integer >= 2, got " +
                      std::to_string(block));
  }

  FlowState rescaled = state;
  for (int m = 1; m <= state.order(); ++m) {
    rescaled.coeffs[m - 1] *=
        std::pow(state.L, state.d - state.gamma * m);
  }
  FlowResult result = run_flow(rescaled, 0.5, /*lpa=*/false, {});
  result.state.k_or_t = state.k_or_t + 1.0;
  if (result.blew_up) result.blow_up_time = state.k_or_t + 1.0;
  return result;
}

namespace {

enum class Classified { Bounded, BlownUp };

Classified classify(const FlowState& start, FlowKind kind,
                    const CriticalSearchOptions& options, double* final_max) {
  double peak = 0.0;
  auto track = [&](const FlowState& s) {
    for (double c : s.coeffs) peak = std::max(peak, std::abs(c));
  };
  if (kind == FlowKind::Discrete) {
    FlowState cur = start;
    for (int step = 0; step < options.discrete_steps; ++step) {
      FlowResult r = rg_step(cur);
      if (r.blew_up) {
        *final_max = kBlowUpGuard;
        return Classified::BlownUp;
      }
      cur = std::move(r.state);
      track(cur);
    }
    *final_max = peak;
    return Classified::Bounded;
  }
  FlowResult r = lpa_flow(start, options.lpa_horizon);
  track(r.state);
  *final_max = r.blew_up ? kBlowUpGuard : peak;
  return r.blew_up ? Classified::BlownUp : Classified::Bounded;
}

}  // namespace

CriticalSearchResult critical_search(
    double lo, double hi, const std::function<FlowState(double)>& state_for,
    FlowKind kind, const CriticalSearchOptions& options) {
  if (!(options.width > 0.0)) {
    throw DomainError("critical_search: bracket width must be > 0");
  }
  double max_lo = 0.0;
  double max_hi = 0.0;
  const Classified class_lo = classify(state_for(lo), kind, options, &max_lo);
  const Classified class_hi = classify(state_for(hi), kind, options, &max_hi);
  if (class_lo == class_hi) {
    const char* label =
        (class_lo == Classified::Bounded) ? "bounded" : "blown up";
    throw CriticalityError(
        "critical_search: endpoints are indistinguishable (both " +
        std::string(label) + "; peak |c| " + std::to_string(max_lo) + " at " +
        std::to_string(lo) + ", " + std::to_string(max_hi) + " at " +
        std::to_string(hi) + ")");
  }

  double bounded = (class_lo == Classified::Bounded) ? lo : hi;
  double blown = (class_lo == Classified::Bounded) ? hi : lo;
  CriticalSearchResult result;
  while (std::abs(blown - bounded) > options.width &&
         result.iterations < 200) {
    const double mid = 0.5 * (bounded + blown);
    double unused = 0.0;
    if (classify(state_for(mid), kind, options, &unused) ==
        Classified::Bounded) {
      bounded = mid;
    } else {
      blown = mid;
    }
    ++result.iterations;
  }
  result.lo = bounded;
  result.hi = blown;
  result.critical = 0.5 * (bounded + blown);
  return result;
}

CriticalSearchResult critical_search_beta(double d, int N, int M,
                                          FlowKind kind, double beta_lo,
                                          double beta_hi, double L,
                                          const CriticalSearchOptions& options) {
  auto state_for = [&, d, N, M, L](double beta) {
    const InitialCondition ic = (N == kInfiniteComponents)
                                    ? initial_u0_infinite(beta, M)
                                    : initial_u0(beta, N, M);
    return make_flow_state(ic, d, L);
  };
  return critical_search(beta_lo, beta_hi, state_for, kind, options);
}

}  // namespace hspin
