#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "error.hpp"

namespace levy_passage {

/// Streaming mean and variance (Welford), mergeable with Chan's formula.
class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  void merge(const RunningStats& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double n = static_cast<double>(n_ + o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.n_) / n;
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
    n_ += o.n_;
  }

  std::size_t count() const { return n_; }
  double mean() const { return n_ ? mean_ : std::numeric_limits<double>::quiet_NaN(); }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : std::numeric_limits<double>::quiet_NaN(); }
  double sd() const { return std::sqrt(variance()); }
  double se() const { return n_ > 1 ? sd() / std::sqrt(static_cast<double>(n_)) : std::numeric_limits<double>::quiet_NaN(); }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Accumulates pairs (a, b) to estimate sum(a)/sum(b) with a delta-method
/// standard error.
class RatioStats {
 public:
  void add(double a, double b) {
    ++n_;
    const double na = static_cast<double>(n_);
    const double da = a - ma_;
    const double db = b - mb_;
    ma_ += da / na;
    mb_ += db / na;
    saa_ += da * (a - ma_);
    sbb_ += db * (b - mb_);
    sab_ += da * (b - mb_);
  }

  std::size_t count() const { return n_; }
  double ratio() const { return ma_ / mb_; }
  double se() const {
    if (n_ < 2) return std::numeric_limits<double>::quiet_NaN();
    const double n1 = static_cast<double>(n_ - 1);
    const double r = ratio();
    const double var = (saa_ - 2.0 * r * sab_ + r * r * sbb_) / n1;
    return std::sqrt(std::max(var, 0.0) / static_cast<double>(n_)) / std::abs(mb_);
  }

 private:
  std::size_t n_ = 0;
  double ma_ = 0.0, mb_ = 0.0, saa_ = 0.0, sbb_ = 0.0, sab_ = 0.0;
};

/// Type-7 sample quantile (linear interpolation between order statistics).
inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw PreconditionError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("quantile level outside [0, 1]");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

}  // namespace levy_passage
