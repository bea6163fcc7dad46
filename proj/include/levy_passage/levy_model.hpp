#pragma once

// Lévy processes described by their characteristic triplet (gamma, sigma2, Pi),
// with the tail functionals and stability classifiers built on top.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "expression.hpp"
#include "jump_law.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "roots.hpp"

namespace levy_passage {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Family {
  BrownianDrift,
  CompoundPoissonDrift,
  DriftMinusPoisson,
  SpectrallyNegative,
  AppendixCE1,
  AppendixCE2,
  Custom,
};

enum class LimitPoint { Zero, Infinity };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::BrownianDrift: return "BrownianDrift";
    case Family::CompoundPoissonDrift: return "CompoundPoissonDrift";
    case Family::DriftMinusPoisson: return "DriftMinusPoisson";
    case Family::SpectrallyNegative: return "SpectrallyNegative";
    case Family::AppendixCE1: return "AppendixCE1";
    case Family::AppendixCE2: return "AppendixCE2";
    case Family::Custom: return "Custom";
  }
  return "";
}

/// The Lévy measure, described through its two tails.
///
/// pos_tail(x) = Pi((x, inf)), neg_tail(x) = Pi((-inf, -x)). Densities and
/// atoms describe the same measure pointwise and are used by the moment
/// routines that integrate y Pi(dy) directly.
struct JumpMeasure {
  RealFn pos_tail;
  RealFn neg_tail;
  RealFn pos_density;  // density at +y, y > 0
  RealFn neg_density;  // density at -z, z > 0
  std::vector<Atom> atoms;
  std::vector<double> breakpoints;  // positive moduli where tails are not smooth
  double pos_support = 0.0;         // pos_tail vanishes on [pos_support, inf)
  double neg_support = 0.0;
  std::optional<double> drift_bv;   // d_X when the process has bounded variation
  double total_mass = kInf;         // finite for compound Poisson measures
  std::function<double(Rng&)> exact_sampler;          // draws from Pi/total_mass
  std::function<double(Rng&, double)> tail_sampler;   // draws |J| > eps from the restriction
  bool lattice = false;

  double pos(double x) const { return (pos_tail && x < pos_support) ? pos_tail(x) : 0.0; }
  double neg(double x) const { return (neg_tail && x < neg_support) ? neg_tail(x) : 0.0; }
  double tail(double x) const { return pos(x) + neg(x); }
  bool finite_activity() const { return std::isfinite(total_mass); }
  bool zero() const { return pos_support == 0.0 && neg_support == 0.0; }

  /// A jump of modulus greater than eps from the normalised restriction of Pi.
  double sample(Rng& rng, double eps) const {
    if (tail_sampler) return tail_sampler(rng, eps);
    if (!exact_sampler) throw UnsupportedModelError("jump measure has no sampler");
    for (int i = 0; i < 1000000; ++i) {
      const double j = exact_sampler(rng);
      if (std::abs(j) > eps) return j;
    }
    throw ConfigurationError("no jump larger than epsilon after 1e6 draws; reduce epsilon");
  }
};

/// Ladder quantities a closed-form family can report.
struct LadderMoments {
  double d_H = 0.0;
  double EL1_inv = kInf;
};

class LevyModel {
 public:
  struct Data {
    Family family = Family::Custom;
    std::string name;
    double gamma = 0.0;
    double sigma2 = 0.0;
    JumpMeasure measure;
    std::map<std::string, double> params;
    std::optional<JumpLaw> law;  // compound Poisson jump law
    double rate = 0.0;           // compound Poisson rate
    std::optional<double> finite_drift;  // gamma - int_{|x|<=1} x Pi(dx), finite activity only
    std::function<double(double)> cumulant_closed;
    std::function<double(double)> cumulant_derivative_closed;
    std::optional<double> mean_closed;
    std::optional<double> abs_mean_finite;  // known finiteness of E|X_1|
  };

  LevyModel() = default;
  explicit LevyModel(Data d) : d_(std::make_shared<const Data>(std::move(d))) {}

  Family family() const { return d().family; }
  const std::string& name() const { return d().name; }
  double gamma() const { return d().gamma; }
  double sigma2() const { return d().sigma2; }
  const JumpMeasure& measure() const { return d().measure; }
  const std::map<std::string, double>& params() const { return d().params; }
  double param(const std::string& key) const {
    auto it = d().params.find(key);
    if (it == d().params.end()) throw PreconditionError("model has no parameter '" + key + "'");
    return it->second;
  }
  bool has_param(const std::string& key) const { return d().params.count(key) > 0; }
  const std::optional<JumpLaw>& law() const { return d().law; }
  double rate() const { return d().rate; }
  const Data& data() const { return d(); }

  double pos_tail(double x) const { return checked(measure().pos(x), "positive tail", x); }
  double neg_tail(double x) const { return checked(measure().neg(x), "negative tail", x); }
  double tail(double x) const { return pos_tail(x) + neg_tail(x); }

  bool spectrally_negative() const { return measure().pos_support == 0.0; }
  bool bounded_variation() const { return sigma2() == 0.0 && measure().drift_bv.has_value(); }
  std::optional<double> drift_bv() const {
    if (sigma2() != 0.0) return std::nullopt;
    return measure().drift_bv;
  }
  /// gamma - int_{|x|<=1} x Pi(dx) for finite-activity measures.
  std::optional<double> finite_drift() const { return d().finite_drift; }

  const std::function<double(double)>& cumulant_closed() const { return d().cumulant_closed; }
  const std::function<double(double)>& cumulant_derivative_closed() const {
    return d().cumulant_derivative_closed;
  }
  const std::optional<double>& mean_closed() const { return d().mean_closed; }

 private:
  const Data& d() const {
    if (!d_) throw PreconditionError("use of an empty LevyModel");
    return *d_;
  }
  static double checked(double v, const char* what, double x) {
    if (!std::isfinite(v) || v < 0.0) {
      std::ostringstream msg;
      msg << what << " evaluated to " << v << " at x=" << x;
      throw MeasureEvaluationError(msg.str());
    }
    return v;
  }
  std::shared_ptr<const Data> d_;
};

// ---------------------------------------------------------------------------
// Tail integrals

namespace detail {

inline std::vector<double> all_breaks(const LevyModel& m) {
  std::vector<double> b = m.measure().breakpoints;
  if (std::isfinite(m.measure().pos_support) && m.measure().pos_support > 0) b.push_back(m.measure().pos_support);
  if (std::isfinite(m.measure().neg_support) && m.measure().neg_support > 0) b.push_back(m.measure().neg_support);
  b.push_back(1.0);
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

inline double support_end(const LevyModel& m) {
  return std::max(m.measure().pos_support, m.measure().neg_support);
}

/// Integral of f over [lo, hi] where hi may be infinite and lo may be 0.
/// The integrand is assumed to vanish past the support of the measure.
inline double integrate_span(const LevyModel& m, const RealFn& f, double lo, double hi, double rel_tol = 1e-11) {
  const double sup = support_end(m);
  hi = std::min(hi, sup);
  if (!(hi > lo)) return 0.0;
  const auto breaks = all_breaks(m);
  if (lo == 0.0) {
    const double mid = std::min(hi, 1.0);
    double total = integrate_from_zero(f, mid, rel_tol, breaks);
    if (!std::isfinite(total) || hi <= mid) return total;
    return total + integrate_span(m, f, mid, hi, rel_tol);
  }
  if (std::isinf(hi)) {
    const double start = std::max(lo, 1.0);
    double total = lo < start ? integrate(f, lo, start, rel_tol, breaks) : 0.0;
    // Finite breakpoints come first; the doubling scan covers the rest.
    double from = start;
    for (double b : breaks)
      if (b > from) {
        total += integrate(f, from, b, rel_tol, breaks);
        from = b;
      }
    const double rest = integrate_to_infinity(f, from, rel_tol);
    return total + rest;
  }
  return integrate(f, lo, hi, rel_tol, breaks);
}

}  // namespace detail

/// int_0^1 Pi_bar(y) dy = int (1 ^ |x|) Pi(dx); +inf for unbounded variation.
inline double bv_integral(const LevyModel& m) {
  if (m.measure().zero()) return 0.0;
  return detail::integrate_span(m, [&](double y) { return m.tail(y); }, 0.0, 1.0, 1e-9);
}

/// int (1 ^ x^2) Pi(dx) = 2 int_0^1 y Pi_bar(y) dy.
inline double quadratic_integral(const LevyModel& m) {
  if (m.measure().zero()) return 0.0;
  return detail::integrate_span(m, [&](double y) { return 2.0 * y * m.tail(y); }, 0.0, 1.0, 1e-9);
}

/// int_{|x|>1} |x| Pi(dx) split by side: Pi_bar(1) + int_1^inf Pi_bar.
inline double large_jump_moment(const LevyModel& m, int side) {
  const RealFn t = [&](double y) { return side > 0 ? m.pos_tail(y) : m.neg_tail(y); };
  const double at1 = t(1.0);
  return at1 + detail::integrate_span(m, t, 1.0, kInf, 1e-9);
}

/// E X_1 as an extended real; NaN when both sides of E|X_1| diverge.
inline double mean(const LevyModel& m) {
  if (m.mean_closed()) return *m.mean_closed();
  const double up = large_jump_moment(m, +1);
  const double down = large_jump_moment(m, -1);
  if (std::isinf(up) && std::isinf(down)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(up)) return kInf;
  if (std::isinf(down)) return -kInf;
  // Upward jumps larger than 1 add their size, the truncated part is in gamma.
  return m.gamma() + up - down;
}

/// True when X_t -> +inf is known from the mean.
inline bool drifts_to_plus_infinity(const LevyModel& m) { return mean(m) > 0.0; }

inline bool finite_abs_mean(const LevyModel& m) {
  if (m.data().abs_mean_finite) return *m.data().abs_mean_finite;
  return std::isfinite(large_jump_moment(m, +1)) && std::isfinite(large_jump_moment(m, -1));
}

// ---------------------------------------------------------------------------
// Truncated mean and variance

/// A(x) = gamma + Pi_bar+(1) - Pi_bar-(1) + int_1^x (Pi_bar+ - Pi_bar-).
inline double truncated_mean(const LevyModel& m, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw PreconditionError("truncated_mean needs finite x > 0");
  double a = m.gamma() + m.pos_tail(1.0) - m.neg_tail(1.0);
  if (m.measure().zero() || x == 1.0) return a;
  const RealFn diff = [&](double y) { return m.pos_tail(y) - m.neg_tail(y); };
  if (x > 1.0)
    a += detail::integrate_span(m, diff, 1.0, x, 1e-11);
  else
    a -= detail::integrate_span(m, diff, x, 1.0, 1e-11);
  return a;
}

/// Signed int_{lo<|y|<=hi} y^power Pi(dy) from densities and atoms (power 1 or 2).
inline double partial_moment(const LevyModel& m, double lo, double hi, int power) {
  const JumpMeasure& jm = m.measure();
  if (jm.zero() || !(hi > lo)) return 0.0;
  double total = 0.0;
  for (const Atom& a : jm.atoms) {
    const double r = std::abs(a.location);
    if (r > lo && r <= hi) total += (power == 1 ? a.location : a.location * a.location) * a.mass;
  }
  const RealFn f = [&](double y) {
    const double p = jm.pos_density && y < jm.pos_support ? jm.pos_density(y) : 0.0;
    const double q = jm.neg_density && y < jm.neg_support ? jm.neg_density(y) : 0.0;
    return power == 1 ? y * (p - q) : y * y * (p + q);
  };
  total += detail::integrate_span(m, f, lo, hi, 1e-11);
  return total;
}

/// Second algebraic form of A(x): gamma + x(Pi_bar+ - Pi_bar-)(x) + int_{1<|y|<=x} y Pi(dy),
/// evaluated through densities and atoms.
inline double truncated_mean_direct(const LevyModel& m, double x) {
  if (!(x > 0.0)) throw PreconditionError("truncated_mean needs x > 0");
  double a = m.gamma() + x * (m.pos_tail(x) - m.neg_tail(x));
  if (x > 1.0)
    a += partial_moment(m, 1.0, x, 1);
  else if (x < 1.0)
    a -= partial_moment(m, x, 1.0, 1);
  return a;
}

/// V(x) = sigma^2 + int_{|y|<=x} y^2 Pi(dy) = sigma^2 + 2 int_0^x y Pi_bar(y) dy - x^2 Pi_bar(x).
inline double quadratic_variation_trunc(const LevyModel& m, double x) {
  if (!(x > 0.0)) throw PreconditionError("quadratic_variation_trunc needs x > 0");
  if (m.measure().zero()) return m.sigma2();
  const double integral = detail::integrate_span(m, [&](double y) { return 2.0 * y * m.tail(y); }, 0.0, x, 1e-11);
  return std::max(0.0, m.sigma2() + integral - x * x * m.tail(x));
}

// ---------------------------------------------------------------------------
// Cumulant

namespace detail {

// Exponential tails underflow long before the weight e^{nu y} overflows, so
// a divergent integral shows up as an absurdly large finite one.
inline constexpr double kDivergent = 1e100;

inline double generic_cumulant(const LevyModel& m, double nu) {
  double psi = m.gamma() * nu + 0.5 * m.sigma2() * nu * nu;
  if (nu == 0.0 || m.measure().zero()) return psi;
  const JumpMeasure& jm = m.measure();
  if (jm.pos_support > 0.0) {
    const double near = integrate_span(m, [&](double y) { return y < 1.0 ? std::expm1(nu * y) * m.pos_tail(y) : 0.0; }, 0.0, 1.0);
    const double far = integrate_span(m, [&](double y) {
      const double t = m.pos_tail(y);
      return t == 0.0 ? 0.0 : std::exp(nu * y + std::log(t));
    }, 1.0, kInf);
    if (far > kDivergent) return kInf;
    psi += nu * (near + far + m.pos_tail(1.0));
  }
  if (jm.neg_support > 0.0) {
    const double near = integrate_span(m, [&](double z) { return z < 1.0 ? -std::expm1(-nu * z) * m.neg_tail(z) : 0.0; }, 0.0, 1.0);
    const double far = integrate_span(m, [&](double z) {
      const double t = m.neg_tail(z);
      return t == 0.0 ? 0.0 : std::exp(-nu * z + std::log(t));
    }, 1.0, kInf);
    if (far > kDivergent) return kInf;
    psi += nu * near - nu * far - nu * m.neg_tail(1.0);
  }
  if (std::isnan(psi)) return kInf;
  return psi;
}

inline double generic_cumulant_derivative(const LevyModel& m, double nu) {
  double d = m.gamma() + m.sigma2() * nu;
  if (m.measure().zero()) return d;
  const JumpMeasure& jm = m.measure();
  if (jm.pos_support > 0.0) {
    const double near = integrate_span(m, [&](double y) {
      return y < 1.0 ? (std::expm1(nu * y) + nu * y * std::exp(nu * y)) * m.pos_tail(y) : 0.0;
    }, 0.0, 1.0);
    const double far = integrate_span(m, [&](double y) {
      const double t = m.pos_tail(y);
      return t == 0.0 ? 0.0 : (1.0 + nu * y) * std::exp(nu * y + std::log(t));
    }, 1.0, kInf);
    if (std::abs(far) > kDivergent) return kInf;
    d += near + far + m.pos_tail(1.0);
  }
  if (jm.neg_support > 0.0) {
    const double near = integrate_span(m, [&](double z) {
      return z < 1.0 ? (-std::expm1(-nu * z) + nu * z * std::exp(-nu * z)) * m.neg_tail(z) : 0.0;
    }, 0.0, 1.0);
    const double far = integrate_span(m, [&](double z) {
      const double t = m.neg_tail(z);
      return t == 0.0 ? 0.0 : (nu * z - 1.0) * std::exp(-nu * z + std::log(t));
    }, 1.0, kInf);
    if (std::abs(far) > kDivergent) return far > 0 ? kInf : -kInf;
    d += near + far - m.neg_tail(1.0);
  }
  return d;
}

}  // namespace detail

/// psi(nu) = log E e^{nu X_1}; +inf when the exponential moment diverges.
inline double cumulant(const LevyModel& m, double nu) {
  if (nu == 0.0) return 0.0;
  if (m.cumulant_closed()) return m.cumulant_closed()(nu);
  return detail::generic_cumulant(m, nu);
}

/// psi'(nu) = E(X_1 e^{nu X_1}) / E e^{nu X_1}.
inline double cumulant_derivative(const LevyModel& m, double nu) {
  if (m.cumulant_derivative_closed()) return m.cumulant_derivative_closed()(nu);
  return detail::generic_cumulant_derivative(m, nu);
}

// ---------------------------------------------------------------------------
// Construction

namespace detail {

/// Inverse-tail sampling: with probability proportional to each tail at eps
/// choose a side, then solve tail(x) = U tail(eps) by bisection in log x.
inline std::function<double(Rng&, double)> inverse_tail_sampler(RealFn pos, RealFn neg, double pos_sup,
                                                                double neg_sup, std::vector<double> breaks) {
  return [pos, neg, pos_sup, neg_sup, breaks](Rng& rng, double eps) {
    const double tp = eps < pos_sup ? pos(eps) : 0.0;
    const double tn = eps < neg_sup ? neg(eps) : 0.0;
    if (!(tp + tn > 0.0)) throw ConfigurationError("no jumps larger than epsilon");
    const bool up = rng.uniform() * (tp + tn) < tp;
    const RealFn& t = up ? pos : neg;
    const double sup = up ? pos_sup : neg_sup;
    const double target = rng.uniform() * (up ? tp : tn);
    // Invariant: t(lo) > target >= t(hi).
    double lo = eps;
    double hi = std::isfinite(sup) ? sup : std::max(2.0 * eps, 1.0);
    while (!std::isfinite(sup) && t(hi) > target) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e300) break;
    }
    for (int i = 0; i < 200 && hi > lo * (1.0 + 1e-13); ++i) {
      const double mid = std::sqrt(lo * hi);
      const double v = mid < sup ? t(mid) : 0.0;
      if (v > target)
        lo = mid;
      else
        hi = mid;
    }
    for (double b : breaks)
      if (b >= lo && b <= hi) hi = b;
    return up ? hi : -hi;
  };
}

inline void check_monotone(const RealFn& t, double sup, const char* which) {
  double prev = kInf;
  const double top = std::isfinite(sup) ? sup : 1e8;
  for (double lx = -8.0; lx <= std::log10(top); lx += 0.05) {
    const double x = std::pow(10.0, lx);
    if (x >= sup) break;
    const double v = t(x);
    if (!std::isfinite(v) || v < 0.0) {
      std::ostringstream msg;
      msg << which << " tail is not a finite nonnegative number at x=" << x;
      throw MeasureEvaluationError(msg.str());
    }
    if (v > prev * (1.0 + 1e-9) + 1e-300) {
      std::ostringstream msg;
      msg << which << " tail is not nonincreasing near x=" << x;
      throw PreconditionError(msg.str());
    }
    prev = v;
  }
}

inline LevyModel finalize(LevyModel::Data d) {
  LevyModel m(std::move(d));
  const double q = quadratic_integral(m);
  if (!std::isfinite(q)) throw PreconditionError("Levy measure fails int (1 ^ x^2) Pi(dx) < inf");
  const JumpMeasure& jm = m.measure();
  const bool no_up = jm.pos_support == 0.0;
  if (m.sigma2() == 0.0 && no_up) {
    const auto dx = jm.zero() ? std::optional<double>(m.gamma()) : jm.drift_bv;
    if (dx && *dx <= 0.0)
      throw PreconditionError(jm.zero() && m.gamma() == 0.0 ? "the zero process is excluded"
                                                            : "model is the negative of a subordinator");
  }
  if (m.sigma2() < 0.0) throw PreconditionError("sigma2 must be nonnegative");
  return m;
}

/// Shared builder for compound Poisson families: X_t = drift t + sigma B_t + sum of jumps.
inline LevyModel::Data compound_poisson_data(double drift, double rate, const JumpLaw& law, double sigma2) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw PreconditionError("jump rate must be finite and nonnegative");
  if (!(sigma2 >= 0.0)) throw PreconditionError("sigma2 must be nonnegative");
  LevyModel::Data d;
  d.family = Family::CompoundPoissonDrift;
  d.name = "compound_poisson";
  d.sigma2 = sigma2;
  d.law = law;
  d.rate = rate;
  JumpMeasure& jm = d.measure;
  if (rate > 0.0) {
    jm.pos_tail = [law, rate](double x) { return rate * law.pos_tail(x); };
    jm.neg_tail = [law, rate](double x) { return rate * law.neg_tail(x); };
    jm.pos_density = [law, rate](double y) { return rate * law.pos_density(y); };
    jm.neg_density = [law, rate](double z) { return rate * law.neg_density(z); };
    for (Atom a : law.atoms()) jm.atoms.push_back({a.location, a.mass * rate});
    jm.breakpoints = law.breakpoints();
    jm.pos_support = law.pos_tail(0.0) > 0.0 || law.pos_tail(1e-300) > 0.0 ? kInf : 0.0;
    jm.neg_support = law.neg_tail(0.0) > 0.0 || law.neg_tail(1e-300) > 0.0 ? kInf : 0.0;
    if (law.kind() == JumpLaw::Kind::Uniform) {
      jm.pos_support = std::max(0.0, law.param_b());
      jm.neg_support = std::max(0.0, -law.param_a());
    }
    if (law.kind() == JumpLaw::Kind::Point) {
      jm.pos_support = std::max(0.0, law.param_a());
      jm.neg_support = std::max(0.0, -law.param_a());
    }
    jm.total_mass = rate;
    jm.exact_sampler = [law](Rng& rng) { return law.sample(rng); };
    jm.lattice = law.lattice();
  } else {
    jm.total_mass = 0.0;
  }
  d.finite_drift = drift;
  if (sigma2 == 0.0) jm.drift_bv = drift;
  d.abs_mean_finite = true;
  d.mean_closed = drift + rate * law.mean();
  d.cumulant_closed = [drift, rate, law, sigma2](double nu) {
    if (nu == 0.0) return 0.0;
    const double mg = rate > 0.0 ? law.mgf(nu) : 1.0;
    if (!std::isfinite(mg)) return kInf;
    return drift * nu + 0.5 * sigma2 * nu * nu + rate * (mg - 1.0);
  };
  d.cumulant_derivative_closed = [drift, rate, law, sigma2](double nu) {
    const double md = rate > 0.0 ? law.mgf_derivative(nu) : 0.0;
    if (!std::isfinite(md)) return kInf;
    return drift + sigma2 * nu + rate * md;
  };
  return d;
}

inline void set_gamma_from_drift(LevyModel::Data& d, double drift) {
  // gamma = drift + int_{|x|<=1} x Pi(dx)
  LevyModel tmp(d);
  d.gamma = drift + partial_moment(tmp, 0.0, 1.0, 1);
}

}  // namespace detail

/// X_t = gamma t + sigma B_t.
inline LevyModel brownian_drift(double gamma, double sigma2) {
  if (!std::isfinite(gamma) || !(sigma2 >= 0.0) || !std::isfinite(sigma2))
    throw PreconditionError("brownian_drift needs finite gamma and sigma2 >= 0");
  LevyModel::Data d;
  d.family = Family::BrownianDrift;
  d.name = "brownian_drift";
  d.gamma = gamma;
  d.sigma2 = sigma2;
  d.params = {{"gamma", gamma}, {"sigma2", sigma2}};
  d.measure.total_mass = 0.0;
  d.measure.drift_bv = gamma;
  d.finite_drift = gamma;
  d.mean_closed = gamma;
  d.abs_mean_finite = true;
  d.cumulant_closed = [gamma, sigma2](double nu) { return gamma * nu + 0.5 * sigma2 * nu * nu; };
  d.cumulant_derivative_closed = [gamma, sigma2](double nu) { return gamma + sigma2 * nu; };
  return detail::finalize(std::move(d));
}

/// X_t = drift t + sigma B_t + compound Poisson(rate, law).
inline LevyModel compound_poisson_drift(double drift, double rate, const JumpLaw& law, double sigma2 = 0.0) {
  auto d = detail::compound_poisson_data(drift, rate, law, sigma2);
  d.params = {{"drift", drift}, {"rate", rate}, {"sigma2", sigma2}};
  detail::set_gamma_from_drift(d, drift);
  return detail::finalize(std::move(d));
}

/// Claims minus premium: X_t = sum_{i<=N_t} C_i - p t with N rate lambda and C ~ Exp(alpha).
inline LevyModel cramer_lundberg(double lambda, double alpha, double premium) {
  if (!(lambda > 0.0) || !(alpha > 0.0) || !(premium > 0.0))
    throw PreconditionError("cramer_lundberg needs positive lambda, alpha and premium");
  auto d = detail::compound_poisson_data(-premium, lambda, JumpLaw::exponential(alpha, +1), 0.0);
  d.name = "cramer_lundberg";
  d.params = {{"lambda", lambda}, {"alpha", alpha}, {"p", premium}};
  detail::set_gamma_from_drift(d, -premium);
  return detail::finalize(std::move(d));
}

/// X_t = a t - N_t with N a rate-one Poisson process, a > 1.
inline LevyModel drift_minus_poisson(double a) {
  if (!(a > 1.0) || !std::isfinite(a)) throw PreconditionError("DriftMinusPoisson requires a > 1");
  auto d = detail::compound_poisson_data(a, 1.0, JumpLaw::point(-1.0), 0.0);
  d.family = Family::DriftMinusPoisson;
  d.name = "drift_minus_poisson";
  d.params = {{"a", a}};
  d.gamma = a - 1.0;
  return detail::finalize(std::move(d));
}

/// Spectrally negative: drift d, Gaussian part sigma2 and Exp(beta) downward
/// jumps at rate lambda.
inline LevyModel spectrally_negative(double drift, double sigma2, double lambda, double beta) {
  if (!(lambda >= 0.0) || !(beta > 0.0)) throw PreconditionError("spectrally_negative needs lambda >= 0, beta > 0");
  auto d = detail::compound_poisson_data(drift, lambda, JumpLaw::exponential(beta, -1), sigma2);
  d.family = Family::SpectrallyNegative;
  d.name = "spectrally_negative";
  d.params = {{"drift", drift}, {"sigma2", sigma2}, {"lambda", lambda}, {"beta", beta}};
  detail::set_gamma_from_drift(d, drift);
  return detail::finalize(std::move(d));
}

namespace detail {

struct Ce1Shape {
  double x_star;       // left end of the flat part of the negative tail
  double flat_pos;     // 2 / ln 2
  double flat_neg;     // 4 / ln 2
  double gamma;
};

inline double ce1_fpos(double x) { return 1.0 / (x * std::abs(std::log(x))); }
inline double ce1_fneg(double x) {
  const double l = std::log(x);
  return ce1_fpos(x) + std::log(2.0) / (x * l * l);
}

inline const Ce1Shape& ce1_shape() {
  static const Ce1Shape shape = [] {
    Ce1Shape s{};
    s.flat_pos = 2.0 / std::log(2.0);
    s.flat_neg = 4.0 / std::log(2.0);
    // The literal negative tail dips below its value at 1/2 before rising
    // again; the flat part starts where it first drops to that value.
    s.x_star = newton_bisect([&](double x) { return ce1_fneg(x) - s.flat_neg; }, {}, 0.01, 0.2, 1e-15).root;
    // Re-centre gamma so that A(0+) = -1 for the monotone tails.
    const double a = s.x_star;
    const double head = std::log(2.0) / std::abs(std::log(a));
    const double mid = integrate([&](double x) { return s.flat_neg - ce1_fpos(x); }, a, 0.25, 1e-14);
    const double flat = (0.5 - 0.25) * (s.flat_neg - s.flat_pos);
    s.gamma = -1.0 - (head + mid + flat);
    return s;
  }();
  return shape;
}

}  // namespace detail

/// The first appendix construction: unbounded variation, sigma = 0, with
/// Pi_bar+(x) = 1/(x|ln x|) and Pi_bar-(x) = Pi_bar+(x) + ln2/(x ln^2 x) near 0
/// and both tails vanishing from 1/2 on. A(x) -> -1 as x -> 0.
inline LevyModel make_appendix_ce1() {
  const auto& s = detail::ce1_shape();
  LevyModel::Data d;
  d.family = Family::AppendixCE1;
  d.name = "appendix_ce1";
  d.gamma = s.gamma;
  d.params = {{"x_star", s.x_star}};
  JumpMeasure& jm = d.measure;
  const double xs = s.x_star, fp = s.flat_pos, fn = s.flat_neg;
  jm.pos_tail = [fp](double x) { return x < 0.25 ? detail::ce1_fpos(x) : (x < 0.5 ? fp : 0.0); };
  jm.neg_tail = [xs, fn](double x) { return x < xs ? detail::ce1_fneg(x) : (x < 0.5 ? fn : 0.0); };
  jm.pos_density = [](double y) {
    if (y >= 0.25) return 0.0;
    const double l = -std::log(y);
    return (l - 1.0) / (y * y * l * l);
  };
  jm.neg_density = [xs](double z) {
    if (z >= xs) return 0.0;
    const double l = -std::log(z);
    return (l - 1.0) / (z * z * l * l) + std::log(2.0) * (l - 2.0) / (z * z * l * l * l);
  };
  jm.atoms = {{0.5, fp}, {-0.5, fn}};
  jm.breakpoints = {xs, 0.25, 0.5};
  jm.pos_support = 0.5;
  jm.neg_support = 0.5;
  jm.tail_sampler = detail::inverse_tail_sampler(jm.pos_tail, jm.neg_tail, 0.5, 0.5, jm.breakpoints);
  d.mean_closed = s.gamma;
  d.abs_mean_finite = true;
  return detail::finalize(std::move(d));
}

/// The second appendix construction with L(x) = exp((-log x)^beta).
/// limit_point = Zero: Pi_bar+ = -2L', Pi_bar- = -L' on (0, 1/e), gamma = 0.
/// limit_point = Infinity: rate-one compound Poisson X_t = S_{N_t} whose step
/// law has P(Y > x) = L'(x)/(3 beta), P(Y < -x) = 2 L'(x)/(3 beta) for x >= e
/// with L(x) = exp((log x)^beta), and no mass in (-e, e).
inline LevyModel make_appendix_ce2(double beta, LimitPoint limit_point) {
  if (!(beta > 0.5 && beta < 1.0)) throw PreconditionError("AppendixCE2 requires 1/2 < beta < 1");
  LevyModel::Data d;
  d.family = Family::AppendixCE2;
  d.params = {{"beta", beta}, {"limit_infinity", limit_point == LimitPoint::Infinity ? 1.0 : 0.0}};
  JumpMeasure& jm = d.measure;
  if (limit_point == LimitPoint::Zero) {
    d.name = "appendix_ce2_zero";
    const double end = std::exp(-1.0);
    auto up = [beta, end](double x) {
      if (x >= end) return 0.0;
      const double s = -std::log(x);
      return 2.0 * beta * std::pow(s, beta - 1.0) * std::exp(std::pow(s, beta) + s);
    };
    jm.pos_tail = up;
    jm.neg_tail = [up](double x) { return 0.5 * up(x); };
    auto dens = [beta, end, up](double y) {
      if (y >= end) return 0.0;
      const double s = -std::log(y);
      return up(y) * ((beta - 1.0) / s + beta * std::pow(s, beta - 1.0) + 1.0) / y;
    };
    jm.pos_density = dens;
    jm.neg_density = [dens](double z) { return 0.5 * dens(z); };
    const double top = 2.0 * beta * std::exp(2.0);
    jm.atoms = {{end, top}, {-end, 0.5 * top}};
    jm.breakpoints = {end};
    jm.pos_support = end;
    jm.neg_support = end;
    jm.tail_sampler = detail::inverse_tail_sampler(jm.pos_tail, jm.neg_tail, end, end, jm.breakpoints);
    d.gamma = 0.0;
    d.abs_mean_finite = true;
  } else {
    d.name = "appendix_ce2_infinity";
    const double e = std::exp(1.0);
    // L'(x)/beta for x >= e, equal to 1 at x = e.
    auto g = [beta](double x) {
      const double s = std::log(x);
      return std::pow(s, beta - 1.0) * std::exp(std::pow(s, beta) - s);
    };
    auto up = [g, e](double x) { return x < e ? 1.0 / 3.0 : g(x) / 3.0; };
    jm.pos_tail = up;
    jm.neg_tail = [up](double x) { return 2.0 * up(x); };
    auto dens = [beta, g, e](double y) {
      if (y <= e) return 0.0;
      const double s = std::log(y);
      return g(y) * (1.0 - (beta - 1.0) / s - beta * std::pow(s, beta - 1.0)) / (3.0 * y);
    };
    jm.pos_density = dens;
    jm.neg_density = [dens](double z) { return 2.0 * dens(z); };
    jm.breakpoints = {e};
    jm.pos_support = kInf;
    jm.neg_support = kInf;
    jm.total_mass = 1.0;
    // Magnitude: solve log g(x) = log U in s = log x >= 1.
    jm.exact_sampler = [beta](Rng& rng) {
      const bool upward = rng.uniform() < 1.0 / 3.0;
      const double target = std::log(rng.uniform());
      auto h = [beta, target](double s) { return (beta - 1.0) * std::log(s) + std::pow(s, beta) - s - target; };
      auto dh = [beta](double s) { return (beta - 1.0) / s + beta * std::pow(s, beta - 1.0) - 1.0; };
      double hi = 2.0;
      while (h(hi) > 0.0) hi *= 2.0;
      const double s = newton_bisect(h, dh, 1.0, hi, 1e-14).root;
      const double x = std::exp(s);
      return upward ? x : -x;
    };
    d.finite_drift = 0.0;
    d.gamma = 0.0;
    d.abs_mean_finite = false;
    d.mean_closed = std::numeric_limits<double>::quiet_NaN();
  }
  return detail::finalize(std::move(d));
}

/// User model from piecewise tail expressions.
inline LevyModel make_custom(double gamma, double sigma2, const PiecewiseTail& pos, const PiecewiseTail& neg,
                             const std::string& name = "custom") {
  LevyModel::Data d;
  d.family = Family::Custom;
  d.name = name;
  d.gamma = gamma;
  d.sigma2 = sigma2;
  d.params = {{"gamma", gamma}, {"sigma2", sigma2}};
  JumpMeasure& jm = d.measure;
  jm.pos_support = pos.empty() ? 0.0 : pos.support_end();
  jm.neg_support = neg.empty() ? 0.0 : neg.support_end();
  if (!pos.empty()) jm.pos_tail = [pos](double x) { return pos(x); };
  if (!neg.empty()) jm.neg_tail = [neg](double x) { return neg(x); };
  auto add_side = [&jm](const PiecewiseTail& t, int sign) {
    for (std::size_t i = 0; i < t.pieces().size(); ++i) {
      const double b = t.pieces()[i].until;
      if (!std::isfinite(b)) continue;
      jm.breakpoints.push_back(b);
      const double after = t(b);
      const double mass = t.left_limit(i) - after;
      if (mass < -1e-12 * std::max(1.0, std::abs(after)))
        throw PreconditionError("custom tail increases across a piece boundary");
      if (mass > 0.0) jm.atoms.push_back({sign * b, mass});
    }
  };
  add_side(pos, +1);
  add_side(neg, -1);
  auto numeric_density = [](PiecewiseTail t) -> RealFn {
    return [t](double y) {
      double lo = 0.0;
      for (const auto& p : t.pieces()) {
        if (y < p.until) {
          const double h = 1e-5 * y;
          const double a = std::max(y - h, lo + 0.5 * (y - lo));
          const double b = std::min(y + h, y + 0.5 * (p.until - y));
          return -(p.expr(b) - p.expr(a)) / (b - a);
        }
        lo = p.until;
      }
      return 0.0;
    };
  };
  if (!pos.empty()) jm.pos_density = numeric_density(pos);
  if (!neg.empty()) jm.neg_density = numeric_density(neg);
  if (jm.pos_tail) detail::check_monotone(jm.pos_tail, jm.pos_support, "positive");
  if (jm.neg_tail) detail::check_monotone(jm.neg_tail, jm.neg_support, "negative");
  RealFn pt = jm.pos_tail ? jm.pos_tail : RealFn([](double) { return 0.0; });
  RealFn nt = jm.neg_tail ? jm.neg_tail : RealFn([](double) { return 0.0; });
  jm.tail_sampler = detail::inverse_tail_sampler(pt, nt, jm.pos_support, jm.neg_support, jm.breakpoints);
  LevyModel probe(d);
  if (std::isfinite(bv_integral(probe))) jm.drift_bv = gamma - partial_moment(probe, 0.0, 1.0, 1);
  return detail::finalize(std::move(d));
}

// ---------------------------------------------------------------------------
// Stability classification

enum class Regime { ProbLarge, ProbSmall, ASLarge, ASSmall, MeanLarge, MeanSmall };
enum class Verdict { Yes, No, Inconclusive };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::ProbLarge: return "ProbLarge";
    case Regime::ProbSmall: return "ProbSmall";
    case Regime::ASLarge: return "ASLarge";
    case Regime::ASSmall: return "ASSmall";
    case Regime::MeanLarge: return "MeanLarge";
    case Regime::MeanSmall: return "MeanSmall";
  }
  return "";
}
inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Yes: return "yes";
    case Verdict::No: return "no";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "";
}
inline bool is_small_time(Regime r) {
  return r == Regime::ProbSmall || r == Regime::ASSmall || r == Regime::MeanSmall;
}

struct GridPoint {
  double x;
  double A;
  double x_tail;  // x * Pi_bar(x)
};

struct StabilityVerdict {
  Regime regime = Regime::ProbLarge;
  double c = std::numeric_limits<double>::quiet_NaN();
  Verdict holds = Verdict::Inconclusive;
  std::vector<GridPoint> evidence;
  double limit_A = std::numeric_limits<double>::quiet_NaN();
  std::string reason;
};

/// A grid reaching toward 0 (small) or infinity (large) in equal log steps.
inline std::vector<double> default_grid(Regime r, int points = 11) {
  std::vector<double> g;
  for (int i = 0; i < points; ++i) {
    const double e = is_small_time(r) ? -2.0 - i : 2.0 + i;
    g.push_back(std::pow(10.0, e));
  }
  return g;
}

namespace detail {

enum class Trend { Converged, ToPlusInf, ToMinusInf, Unclear };

inline Trend trend_of(const std::vector<double>& v, double tol, double& limit) {
  const std::size_t n = v.size();
  const double a = v[n - 3], b = v[n - 2], c = v[n - 1];
  const bool up = b >= a && c >= b;
  const bool down = b <= a && c <= b;
  const double mean3 = (a + b + c) / 3.0;
  const double scale = std::max(std::abs(mean3), 1e-12);
  const double spread = std::max({std::abs(a - mean3), std::abs(b - mean3), std::abs(c - mean3)});
  const double wiggle = tol * scale;
  const bool monotone_tol = up || down || (std::abs(b - a) <= wiggle && std::abs(c - b) <= wiggle);
  if ((spread <= tol * scale || (std::abs(mean3) <= 1e-9 && spread <= 1e-9)) && monotone_tol) {
    limit = c;
    return Trend::Converged;
  }
  if (std::abs(c) >= 1.5 * std::abs(a) && std::abs(c) > std::abs(b) && std::abs(b) > std::abs(a) && (up || down)) {
    limit = c > 0 ? kInf : -kInf;
    return c > 0 ? Trend::ToPlusInf : Trend::ToMinusInf;
  }
  return Trend::Unclear;
}

}  // namespace detail

/// Analytic check of the stability conditions for the chosen regime on a grid.
inline StabilityVerdict classify_stability(const LevyModel& m, Regime regime, const std::vector<double>& grid,
                                           std::optional<LadderMoments> ladder = std::nullopt) {
  if (grid.size() < 8) throw PreconditionError("classify_stability needs at least 8 grid points");
  const bool small = is_small_time(regime);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || !(grid[i - 1] > 0.0)) throw PreconditionError("grid points must be positive");
    if (small ? !(grid[i] < grid[i - 1]) : !(grid[i] > grid[i - 1]))
      throw PreconditionError(small ? "grid must decrease toward 0" : "grid must increase toward infinity");
  }
  const double decades = std::abs(std::log10(grid.back() / grid.front()));
  if (decades < 4.0 - 1e-9) throw PreconditionError("grid must span at least 4 decades");

  StabilityVerdict v;
  v.regime = regime;
  std::vector<double> as, ts;
  for (double x : grid) {
    const double a = truncated_mean(m, x);
    const double t = x * m.tail(x);
    v.evidence.push_back({x, a, t});
    as.push_back(a);
    ts.push_back(t);
  }
  const double tol = 0.05;
  double limit = 0.0;
  const auto trend = detail::trend_of(as, tol, limit);
  v.limit_A = limit;
  const std::size_t n = ts.size();
  const double t_last = ts[n - 1];
  const bool tail_vanishing = ts[n - 1] <= ts[n - 3] * (1.0 + tol) + 1e-300 &&
                              t_last <= tol * std::max(1.0, std::abs(limit));

  auto set = [&](Verdict h, double c, std::string why) {
    v.holds = h;
    v.c = c;
    v.reason = std::move(why);
    return v;
  };

  switch (regime) {
    case Regime::ProbLarge:
    case Regime::ProbSmall: {
      if (small && m.sigma2() != 0.0) return set(Verdict::No, kInf, "sigma^2 > 0 violates the small-time condition");
      if (trend == detail::Trend::ToMinusInf) return set(Verdict::No, 0.0, "A(x) diverges to -infinity");
      if (trend == detail::Trend::ToPlusInf) return set(Verdict::No, kInf, "A(x) diverges to +infinity");
      if (trend == detail::Trend::Unclear) return set(Verdict::Inconclusive, std::numeric_limits<double>::quiet_NaN(), "A(x) has no clear limit on the grid");
      if (limit <= 0.0) return set(Verdict::No, 0.0, "A(x) converges to a nonpositive limit");
      if (!tail_vanishing) return set(Verdict::Inconclusive, std::numeric_limits<double>::quiet_NaN(), "x Pi_bar(x) does not clearly vanish");
      return set(Verdict::Yes, limit, "x Pi_bar(x) -> 0 and A(x) -> c > 0");
    }
    case Regime::ASLarge:
    case Regime::MeanLarge: {
      if (!finite_abs_mean(m)) return set(Verdict::No, regime == Regime::ASLarge ? 0.0 : kInf, "E|X_1| is infinite");
      const double ex = mean(m);
      if (!(ex > 0.0)) return set(Verdict::No, 0.0, "E X_1 is not positive");
      return set(Verdict::Yes, ex, "E|X_1| < infinity and E X_1 = c > 0");
    }
    case Regime::ASSmall: {
      if (m.sigma2() != 0.0) return set(Verdict::No, kInf, "sigma^2 > 0: not of bounded variation");
      auto dx = m.drift_bv();
      if (!dx && !m.measure().zero() && std::isfinite(bv_integral(m)))
        dx = m.gamma() - partial_moment(m, 0.0, 1.0, 1);
      if (!dx) return set(Verdict::No, std::numeric_limits<double>::quiet_NaN(), "not of bounded variation");
      if (!(*dx > 0.0)) return set(Verdict::No, 0.0, "bounded variation drift is not positive");
      return set(Verdict::Yes, *dx, "bounded variation with drift d_X = c > 0");
    }
    case Regime::MeanSmall: {
      if (!ladder) return set(Verdict::Inconclusive, std::numeric_limits<double>::quiet_NaN(), "ladder moments unavailable");
      if (!std::isfinite(ladder->EL1_inv)) return set(Verdict::No, std::numeric_limits<double>::quiet_NaN(), "E L_1^{-1} is infinite");
      if (!(ladder->d_H > 0.0)) return set(Verdict::No, 0.0, "d_H = 0");
      return set(Verdict::Yes, ladder->d_H / ladder->EL1_inv, "E L_1^{-1} < infinity and d_H > 0");
    }
  }
  return v;
}

}  // namespace levy_passage
