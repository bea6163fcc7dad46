#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature with helpers for the tail
// integrals that show up everywhere: integrands like 1/(x|ln x|) are slowly
// varying, so intervals are cut into log-spaced panels before adapting.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "error.hpp"

namespace levy_passage {

using RealFn = std::function<double(double)>;

/// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;
};

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline QuadResult gk15(const RealFn& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double resk = fc * kWgk[7];
  double resg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    resk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  return {resk * h, std::abs((resk - resg) * h)};
}

}  // namespace detail

/// Integral of f over [a, b] (a < b): global adaptive bisection of the
/// interval with the largest error estimate, capped at max_intervals. Error
/// below a few ulps of the running total counts as converged.
inline QuadResult integrate_panel(const RealFn& f, double a, double b, double abs_tol, int max_intervals = 400) {
  QuadResult acc;
  if (!(b > a)) return acc;
  struct Piece {
    double a, b;
    QuadResult r;
    bool operator<(const Piece& o) const { return r.abs_error < o.r.abs_error; }
  };
  std::vector<Piece> heap{{a, b, detail::gk15(f, a, b)}};
  double value = heap[0].r.value;
  double error = heap[0].r.abs_error;
  if (!std::isfinite(value)) return {value, error};
  while (static_cast<int>(heap.size()) < max_intervals) {
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(value);
    if (error <= std::max(abs_tol, floor)) break;
    std::pop_heap(heap.begin(), heap.end());
    const Piece worst = heap.back();
    heap.pop_back();
    const double m = 0.5 * (worst.a + worst.b);
    if (!(m > worst.a && m < worst.b)) {
      heap.push_back(worst);
      std::push_heap(heap.begin(), heap.end());
      break;
    }
    const QuadResult l = detail::gk15(f, worst.a, m);
    const QuadResult r = detail::gk15(f, m, worst.b);
    if (!std::isfinite(l.value) || !std::isfinite(r.value)) return {l.value + r.value, error};
    value += l.value + r.value - worst.r.value;
    error += l.abs_error + r.abs_error - worst.r.abs_error;
    heap.push_back({worst.a, m, l});
    std::push_heap(heap.begin(), heap.end());
    heap.push_back({m, worst.b, r});
    std::push_heap(heap.begin(), heap.end());
  }
  CompensatedSum v;
  double e = 0.0;
  for (const auto& p : heap) {
    v.add(p.r.value);
    e += p.r.abs_error;
  }
  acc.value = v.value();
  acc.abs_error = e;
  return acc;
}

/// Integral over [a, b] with optional interior breakpoints. Positive
/// intervals are split into panels whose end-point ratio is at most 2.
inline double integrate(const RealFn& f, double a, double b, double rel_tol = 1e-10,
                        const std::vector<double>& breakpoints = {}) {
  if (a == b) return 0.0;
  if (a > b) return -integrate(f, b, a, rel_tol, breakpoints);
  std::vector<double> cuts{a};
  for (double p : breakpoints)
    if (p > a && p < b) cuts.push_back(p);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());

  std::vector<std::pair<double, double>> panels;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double lo = cuts[i];
    const double hi = cuts[i + 1];
    if (lo > 0.0) {
      while (hi / lo > 2.0) {
        panels.emplace_back(lo, 2.0 * lo);
        lo *= 2.0;
      }
    }
    panels.emplace_back(lo, hi);
  }
  // A rough pass sets the absolute tolerance from the magnitude of the result.
  double scale = 0.0;
  for (const auto& [lo, hi] : panels) scale += std::abs(detail::gk15(f, lo, hi).value);
  if (!std::isfinite(scale)) return scale;
  const double tol = std::max(rel_tol * scale, 1e-300) / static_cast<double>(panels.size());
  CompensatedSum total;
  for (const auto& [lo, hi] : panels) {
    const QuadResult r = integrate_panel(f, lo, hi, tol);
    if (!std::isfinite(r.value)) return r.value;
    total.add(r.value);
  }
  return total.value();
}

/// Integral of f over (0, b] for integrands that may be singular at 0.
/// Uses y = b e^{-s} on doubling s-panels; returns +/-inf when the tail of
/// the transformed integral does not die out.
inline double integrate_from_zero(const RealFn& f, double b, double rel_tol = 1e-10,
                                  const std::vector<double>& breakpoints = {}) {
  if (!(b > 0.0)) return 0.0;
  const RealFn g = [&](double s) {
    const double y = b * std::exp(-s);
    return y == 0.0 ? 0.0 : f(y) * y;
  };
  std::vector<double> s_breaks;
  for (double p : breakpoints)
    if (p > 0.0 && p < b) s_breaks.push_back(std::log(b / p));
  std::sort(s_breaks.begin(), s_breaks.end());

  CompensatedSum total;
  double lo = 0.0;
  double width = 1.0;
  double magnitude = 0.0;
  std::vector<double> pieces;
  int small_streak = 0;
  while (lo + width <= 745.0) {
    const double hi = lo + width;
    std::vector<double> inner;
    for (double s : s_breaks)
      if (s > lo && s < hi) inner.push_back(s);
    const double piece = integrate(g, lo, hi, rel_tol, inner);
    if (!std::isfinite(piece)) return piece;
    total.add(piece);
    magnitude = std::max(magnitude, std::abs(total.value()));
    pieces.push_back(piece);
    if (std::abs(piece) <= rel_tol * 1e-2 * magnitude || (magnitude == 0.0 && hi > 60.0 && piece == 0.0)) {
      if (++small_streak >= 2) return total.value();
    } else {
      small_streak = 0;
    }
    lo = hi;
    width *= 2.0;
  }
  // Algebraic decay in s: pieces over doubling panels shrink geometrically
  // when the integral converges, so the remainder is a geometric tail.
  const std::size_t k = pieces.size();
  if (k >= 3 && pieces[k - 1] != 0.0 && pieces[k - 2] != 0.0 &&
      (pieces[k - 1] > 0) == (pieces[k - 2] > 0)) {
    const double r1 = pieces[k - 1] / pieces[k - 2];
    const double r0 = pieces[k - 2] / pieces[k - 3];
    if (r1 > 0.0 && r1 < 0.9 && r0 > 0.0 && r0 < 0.95) return total.value() + pieces[k - 1] * r1 / (1.0 - r1);
  } else if (k >= 1 && std::abs(pieces.back()) <= 1e-6 * std::max(magnitude, 1e-300)) {
    return total.value();
  }
  return total.value() > 0 ? std::numeric_limits<double>::infinity()
                           : -std::numeric_limits<double>::infinity();
}

/// Integral of f over [a, inf). Panels double in length; a run that keeps
/// producing non-negligible mass past 1e300 is reported as divergent.
inline double integrate_to_infinity(const RealFn& f, double a, double rel_tol = 1e-10,
                                    const std::vector<double>& breakpoints = {}) {
  CompensatedSum total;
  double lo = a;
  double width = std::max(1.0, std::abs(a));
  double magnitude = 0.0;
  int small_streak = 0;
  int panels = 0;
  std::vector<double> pieces;
  while (lo < 1e300 && panels < 1000) {
    const double hi = lo + width;
    const double piece = integrate(f, lo, hi, rel_tol, breakpoints);
    if (!std::isfinite(piece)) return piece;
    total.add(piece);
    magnitude = std::max(magnitude, std::abs(total.value()));
    pieces.push_back(piece);
    const double mag_now = std::abs(piece);
    if (mag_now <= rel_tol * 1e-2 * magnitude || (magnitude == 0.0 && piece == 0.0 && hi > 1e6)) {
      if (++small_streak >= 3) return total.value();
    } else {
      small_streak = 0;
    }
    lo = hi;
    width *= 2.0;
    ++panels;
  }
  const std::size_t k = pieces.size();
  if (k >= 3 && pieces[k - 1] != 0.0 && pieces[k - 2] != 0.0) {
    const double r1 = pieces[k - 1] / pieces[k - 2];
    const double r0 = pieces[k - 2] / pieces[k - 3];
    if (r1 > 0.0 && r1 < 0.9 && r0 > 0.0 && r0 < 0.95) return total.value() + pieces[k - 1] * r1 / (1.0 - r1);
  }
  const double sign = total.value() >= 0.0 ? 1.0 : -1.0;
  return sign * std::numeric_limits<double>::infinity();
}

}  // namespace levy_passage
