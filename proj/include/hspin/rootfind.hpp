// Bracketed scalar root finding: bisection safeguarded by secant steps.
//
// All solvers in this project reduce to monotone one-dimensional problems, so a
// guaranteed bracket plus secant acceleration is both robust and fast.  The
// caller supplies a valid bracket [lo, hi] with f(lo), f(hi) of opposite sign
// (or zero); expand_bracket helps construct one.  Failures throw NumericError
// with the bracket state embedded in the message.

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "hspin/errors.hpp"

namespace hspin {

struct RootResult {
  double x = 0.0;         // root abscissa
  double fx = 0.0;        // residual at x
  int iterations = 0;
};

// Find x in [lo, hi] with |f(x)| <= f_tol, assuming sign(f(lo)) != sign(f(hi)).
// Secant steps are taken when they fall safely inside the bracket, otherwise
// bisection; the bracket shrinks monotonically, so convergence is guaranteed.
inline RootResult solve_bracketed(const std::function<double(double)>& f,
                                  double lo, double hi, double f_tol,
                                  int max_iter = 200) {
  double flo = f(lo);
  double fhi = f(hi);
  if (std::isnan(flo) || std::isnan(fhi)) {
    throw NumericError("solve_bracketed: NaN at bracket endpoint [" +
                       std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  if (flo == 0.0) return {lo, 0.0, 0};
  if (fhi == 0.0) return {hi, 0.0, 0};
  if ((flo > 0) == (fhi > 0)) {
    throw NumericError("solve_bracketed: no sign change on [" +
                       std::to_string(lo) + ", " + std::to_string(hi) +
                       "], f = " + std::to_string(flo) + " / " +
                       std::to_string(fhi));
  }
  double x = lo, fx = flo;
  for (int it = 1; it <= max_iter; ++it) {
    // Trial point: secant through the bracket endpoints when well-conditioned.
    double mid = 0.5 * (lo + hi);
    double trial = mid;
    const double denom = fhi - flo;
    if (denom != 0.0) {
      const double sec = (lo * fhi - hi * flo) / denom;
      // Accept the secant point only if it lies strictly inside the bracket
      // (with a small margin so we never stall at an endpoint).
      const double margin = 0.01 * (hi - lo);
      if (sec > lo + margin && sec < hi - margin) trial = sec;
    }
    x = trial;
    fx = f(x);
    if (std::isnan(fx)) {
      throw NumericError("solve_bracketed: NaN at x = " + std::to_string(x));
    }
    if (std::abs(fx) <= f_tol) return {x, fx, it};
    if ((fx > 0) == (flo > 0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
    // Bracket exhausted to machine resolution: accept the better endpoint.
    if (hi - lo <= std::numeric_limits<double>::epsilon() *
                       (std::abs(lo) + std::abs(hi) + 1e-300)) {
      if (std::abs(fx) <= 1e3 * f_tol) return {x, fx, it};
      throw NumericError(
          "solve_bracketed: bracket collapsed at x = " + std::to_string(x) +
          " with residual " + std::to_string(fx) + " > tol " +
          std::to_string(f_tol));
    }
  }
  if (std::abs(fx) <= 1e3 * f_tol) return {x, fx, max_iter};
  throw NumericError("solve_bracketed: no convergence after " +
                     std::to_string(max_iter) + " iterations, bracket [" +
                     std::to_string(lo) + ", " + std::to_string(hi) +
                     "], residual " + std::to_string(fx));
}

// Expand a one-sided starting interval geometrically until f changes sign.
// `grow` maps the current endpoint to the next trial (e.g. doubling toward
// -infinity).  Returns the bracketing endpoint; throws if the budget runs out.
inline double expand_bracket(const std::function<double(double)>& f,
                             double start, double f_at_start_sign,
                             const std::function<double(double)>& grow,
                             int max_steps = 200) {
  double x = start;
  for (int i = 0; i < max_steps; ++i) {
    x = grow(x);
    const double fx = f(x);
    if (std::isnan(fx)) {
      throw NumericError("expand_bracket: NaN at x = " + std::to_string(x));
    }
    if (fx == 0.0 || (fx > 0) != (f_at_start_sign > 0)) return x;
  }
  throw NumericError("expand_bracket: no sign change within budget from " +
                     std::to_string(start));
}

}  // namespace hspin
