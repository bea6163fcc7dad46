#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>

#include "error.hpp"

namespace levy_passage {

struct RootResult {
  double root = 0.0;
  int iterations = 0;
};

/// Safeguarded Newton on a sign-change bracket [lo, hi]. Newton steps that
/// leave the bracket, or do not halve it fast enough, fall back to bisection.
/// `df` may be empty, in which case a central difference is used.
inline RootResult newton_bisect(const std::function<double(double)>& f,
                                const std::function<double(double)>& df, double lo, double hi,
                                double rel_tol = 1e-12, int max_iter = 300) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return {lo, 0};
  if (fhi == 0.0) return {hi, 0};
  if (!(std::isfinite(flo) || std::isfinite(fhi)) || (flo > 0) == (fhi > 0)) {
    std::ostringstream msg;
    msg << "root not bracketed on [" << lo << ", " << hi << "]: f(lo)=" << flo << ", f(hi)=" << fhi;
    throw NumericalError(msg.str());
  }
  const bool increasing = fhi > 0;
  auto deriv = [&](double x, double fx) {
    if (df) return df(x);
    const double h = 1e-7 * std::max(1.0, std::abs(x));
    const double fp = f(x + h);
    if (std::isfinite(fp)) return (fp - fx) / h;
    return (fx - f(x - h)) / h;
  };
  double x = 0.5 * (lo + hi);
  double prev_width = hi - lo;
  for (int it = 1; it <= max_iter; ++it) {
    const double fx = f(x);
    if (fx == 0.0) return {x, it};
    if (std::isfinite(fx) && (fx > 0) == increasing)
      hi = x;
    else
      lo = x;
    const double width = hi - lo;
    if (width <= rel_tol * std::max(std::abs(lo), std::abs(hi)) || width <= 1e-300) return {0.5 * (lo + hi), it};
    double next = 0.5 * (lo + hi);
    if (std::isfinite(fx)) {
      const double d = deriv(x, fx);
      if (std::isfinite(d) && d != 0.0) {
        const double cand = x - fx / d;
        if (cand > lo && cand < hi && width < 0.75 * prev_width) next = cand;
        if (cand > lo && cand < hi && std::abs(cand - x) <= rel_tol * std::abs(x)) return {cand, it};
      }
    }
    prev_width = width;
    x = next;
  }
  std::ostringstream msg;
  msg << "root finder did not converge; last bracket [" << lo << ", " << hi << "]";
  throw NumericalError(msg.str());
}

/// Grows hi geometrically from start until f changes sign relative to f(lo).
/// Stops (and returns nothing) once f becomes non-finite or hi passes limit.
inline std::optional<double> expand_upper(const std::function<double(double)>& f, double lo, double start,
                                          double limit = 1e12, double factor = 2.0) {
  const double flo = f(lo);
  for (double hi = start; hi <= limit; hi *= factor) {
    const double fhi = f(hi);
    if (!std::isfinite(fhi)) return std::nullopt;
    if ((fhi > 0) != (flo > 0) || fhi == 0.0) return hi;
  }
  return std::nullopt;
}

}  // namespace levy_passage
