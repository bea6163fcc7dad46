#pragma once

// Bivariate ladder exponent kappa(a, b), renewal function estimates and the
// Laplace transform identity check.
//
// Normalisation of the local time at the maximum:
//   - spectrally negative models: L = running maximum, so H_t = t and
//     kappa(a, b) = Phi(a) + b with Phi the right inverse of the cumulant;
//   - DriftMinusPoisson: L = time spent at the maximum, giving
//     kappa(a, b) = a + a_param b + 1 - E e^{-a tau_1}.
// Only normalisation-free combinations are compared across backends.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "levy_model.hpp"
#include "parallel.hpp"
#include "path_sim.hpp"
#include "roots.hpp"
#include "stats.hpp"

namespace levy_passage {

enum class LadderBackend { SpectrallyNegativeClosedForm, DriftMinusPoissonClosedForm, EmpiricalMC };

inline std::string to_string(LadderBackend b) {
  switch (b) {
    case LadderBackend::SpectrallyNegativeClosedForm: return "spectrally_negative";
    case LadderBackend::DriftMinusPoissonClosedForm: return "drift_minus_poisson";
    case LadderBackend::EmpiricalMC: return "empirical";
  }
  return "";
}

struct LadderExponent {
  LadderBackend backend = LadderBackend::EmpiricalMC;
  LocalTimeNormalization normalization = LocalTimeNormalization::Occupation;
  double q = 0.0;
  double d_L_inv = 0.0;
  double d_H = 0.0;
  std::optional<double> EL1_inv;
  std::optional<double> EH1;
  std::function<double(double, double)> eval;

  double operator()(double a, double b) const {
    if (!(a >= 0.0) || !(b >= 0.0)) throw PreconditionError("kappa needs a, b >= 0");
    return eval(a, b);
  }
  std::optional<LadderMoments> moments() const {
    if (!EL1_inv) return std::nullopt;
    return LadderMoments{d_H, *EL1_inv};
  }
};

/// Phi(q): the largest root of psi(nu) = q, for spectrally negative models.
inline double phi(const LevyModel& m, double q) {
  if (!m.spectrally_negative()) throw PreconditionError("Phi is defined here for spectrally negative models");
  if (!(q >= 0.0)) throw PreconditionError("Phi needs q >= 0");
  const auto psi = [&](double v) { return cumulant(m, v) - q; };
  const auto dpsi = [&](double v) { return cumulant_derivative(m, v); };
  double lo = 0.0;
  if (q == 0.0) {
    if (cumulant_derivative(m, 0.0) >= 0.0) return 0.0;
    // psi dips below zero before turning up; start right of its minimum.
    double hi = 1.0;
    while (dpsi(hi) < 0.0) {
      hi *= 2.0;
      if (hi > 1e12) throw NumericalError("Phi(0): cumulant never turns upward");
    }
    lo = newton_bisect(dpsi, {}, 0.0, hi, 1e-12).root;
  }
  const auto hi = expand_upper(psi, lo, std::max(1.0, 2.0 * lo), 1e15);
  if (!hi) throw NumericalError("Phi: no sign change of psi - q found up to 1e15");
  return newton_bisect(psi, dpsi, lo, *hi, 1e-12).root;
}

inline double kappa_spectrally_negative(const LevyModel& m, double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0)) throw PreconditionError("kappa needs a, b >= 0");
  return phi(m, a) + b;
}

/// Phi for X_t = a t - N_t: root of a nu + e^{-nu} - 1 = q.
inline double phi_drift_minus_poisson(double a_param, double q) {
  if (!(a_param > 1.0)) throw PreconditionError("DriftMinusPoisson requires a > 1");
  if (q == 0.0) return 0.0;
  const auto f = [&](double v) { return a_param * v + std::expm1(-v) - q; };
  const auto df = [&](double v) { return a_param - std::exp(-v); };
  return newton_bisect(f, df, 0.0, q / (a_param - 1.0) + 1.0, 1e-14).root;
}

/// E e^{-alpha tau_1} for X_t = a t - N_t, exactly e^{-Phi(alpha)}.
inline double tau1_transform(double a_param, double alpha) {
  return std::exp(-phi_drift_minus_poisson(a_param, alpha));
}

/// Monte Carlo estimate of E e^{-alpha tau_1} from simulated passages of level 1.
inline std::pair<double, double> tau1_transform_mc(double a_param, double alpha, std::size_t n,
                                                   std::uint64_t seed) {
  const LevyModel m = drift_minus_poisson(a_param);
  SimConfig c;
  c.seed = seed;
  const Dynamics dyn = simulation_dynamics(m, c);
  std::vector<double> w(n);
  parallel_for(n, [&](std::size_t r) {
    const auto rec = simulate_passage(m, dyn, c, 1.0, r);
    w[r] = rec.ruined ? std::exp(-alpha * rec.tau) : 0.0;
  });
  RunningStats s;
  for (double v : w) s.add(v);
  return {s.mean(), s.se()};
}

inline double kappa_drift_minus_poisson(double a_param, double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0)) throw PreconditionError("kappa needs a, b >= 0");
  return a + a_param * b + (1.0 - tau1_transform(a_param, a));
}

inline LadderExponent ladder_exponent_spectrally_negative(const LevyModel& m) {
  if (!m.spectrally_negative()) throw PreconditionError("model is not spectrally negative");
  LadderExponent k;
  k.backend = LadderBackend::SpectrallyNegativeClosedForm;
  k.normalization = LocalTimeNormalization::RunningMaximum;
  k.q = phi(m, 0.0);
  k.d_H = 1.0;
  const auto dx = m.drift_bv();
  k.d_L_inv = (dx && *dx > 0.0) ? 1.0 / *dx : 0.0;
  if (k.q == 0.0) {
    const double mu = cumulant_derivative(m, 0.0);
    if (mu > 0.0) k.EL1_inv = 1.0 / mu;
    k.EH1 = 1.0;
  }
  k.eval = [m](double a, double b) { return kappa_spectrally_negative(m, a, b); };
  return k;
}

inline LadderExponent ladder_exponent_drift_minus_poisson(double a_param) {
  if (!(a_param > 1.0)) throw PreconditionError("DriftMinusPoisson requires a > 1");
  LadderExponent k;
  k.backend = LadderBackend::DriftMinusPoissonClosedForm;
  k.normalization = LocalTimeNormalization::Occupation;
  k.q = 0.0;
  k.d_H = a_param;
  k.d_L_inv = 1.0;
  // E L_1^{-1} = 1 + E tau_1 and E tau_1 = 1/(a - 1) by Wald.
  k.EL1_inv = 1.0 + 1.0 / (a_param - 1.0);
  k.EH1 = a_param;
  k.eval = [a_param](double a, double b) { return kappa_drift_minus_poisson(a_param, a, b); };
  return k;
}

/// Closed-form backend for a model, if it has one.
inline LadderExponent ladder_exponent(const LevyModel& m) {
  if (m.family() == Family::DriftMinusPoisson) return ladder_exponent_drift_minus_poisson(m.param("a"));
  if (m.spectrally_negative()) return ladder_exponent_spectrally_negative(m);
  throw UnsupportedModelError("no closed-form ladder exponent for " + m.name() + "; use the empirical backend");
}

// ---------------------------------------------------------------------------
// Empirical backend

namespace detail {

/// Values of (L^{-1}, H) at local times 1, 2, ... along one occupation-time
/// ladder sample. Within an epoch the excursion comes first (instantaneous in
/// local time), then the stretch at the maximum where L^{-1} grows at rate 1
/// and H at rate d_X.
inline std::vector<std::pair<double, double>> unit_blocks(const LadderSample& s, double d_x) {
  std::vector<std::pair<double, double>> out;
  double ell = 0.0, inv = 0.0, h = 0.0;
  double prev_inv = 0.0, prev_h = 0.0;
  double next_boundary = 1.0;
  for (const auto& e : s.epochs) {
    inv += e.d_time - e.d_local;
    h += e.d_height - d_x * e.d_local;
    double remaining = e.d_local;
    while (ell + remaining >= next_boundary) {
      const double step = next_boundary - ell;
      const double bi = inv + step;
      const double bh = h + d_x * step;
      out.emplace_back(bi - prev_inv, bh - prev_h);
      prev_inv = bi;
      prev_h = bh;
      ell = next_boundary;
      inv = bi;
      h = bh;
      remaining -= step;
      next_boundary += 1.0;
    }
    ell += remaining;
    inv += remaining;
    h += d_x * remaining;
  }
  return out;
}

}  // namespace detail

/// kappa estimated from unit local-time blocks of simulated ladder paths.
/// Needs the occupation normalisation (bounded variation, positive drift)
/// and a model drifting to +inf.
inline LadderExponent ladder_exponent_empirical(const LevyModel& m, const SimConfig& c, std::size_t n_paths) {
  const LadderHooks hooks = ladder_hooks(m);
  if (hooks.normalization != LocalTimeNormalization::Occupation)
    throw UnsupportedModelError("empirical kappa needs a bounded-variation model with positive drift");
  if (!(mean(m) > 0.0)) throw UnsupportedModelError("empirical kappa needs a model drifting to +inf");
  const Dynamics dyn = simulation_dynamics(m, c);
  const double d_x = *hooks.d_H;
  std::vector<std::vector<std::pair<double, double>>> per_path(n_paths);
  parallel_for(n_paths, [&](std::size_t r) {
    per_path[r] = detail::unit_blocks(extract_ladder(m, dyn, c, r), d_x);
  });
  // Same number of blocks from every path: the block cut by the horizon is
  // length-biased, so later blocks are not used either.
  std::size_t k_blocks = std::numeric_limits<std::size_t>::max();
  for (const auto& p : per_path) k_blocks = std::min(k_blocks, p.size());
  auto blocks = std::make_shared<std::vector<std::pair<double, double>>>();
  for (auto& p : per_path) blocks->insert(blocks->end(), p.begin(), p.begin() + static_cast<std::ptrdiff_t>(k_blocks));
  if (blocks->size() < 10) throw PreconditionError("too few unit local-time blocks; raise the horizon");
  LadderExponent k;
  k.backend = LadderBackend::EmpiricalMC;
  k.normalization = LocalTimeNormalization::Occupation;
  k.q = 0.0;
  k.d_H = d_x;
  k.d_L_inv = 1.0;
  RunningStats inv, h;
  for (const auto& [a, b] : *blocks) {
    inv.add(a);
    h.add(b);
  }
  k.EL1_inv = inv.mean();
  k.EH1 = h.mean();
  k.eval = [blocks](double a, double b) {
    CompensatedSum s;
    for (const auto& [di, dh] : *blocks) s.add(std::exp(-a * di - b * dh));
    return -std::log(s.value() / static_cast<double>(blocks->size()));
  };
  return k;
}

// ---------------------------------------------------------------------------
// Renewal function

struct RenewalFunction {
  LocalTimeNormalization normalization = LocalTimeNormalization::Occupation;
  std::vector<double> u_grid;
  std::vector<double> values;  // V_H(u)
  std::vector<double> se;
  double EL1_inv = 0.0, EL1_inv_se = 0.0;
  double EH1 = 0.0, EH1_se = 0.0;
  double ell_star = 0.0;  // local time at which the moments were read
  std::size_t paths = 0;
  std::size_t killed = 0;

  /// Linear interpolation on the grid (V_H is nondecreasing).
  double operator()(double u) const {
    if (u_grid.empty()) throw PreconditionError("empty renewal function");
    if (u <= u_grid.front()) return values.front() * u / u_grid.front();
    for (std::size_t i = 1; i < u_grid.size(); ++i)
      if (u <= u_grid[i])
        return values[i - 1] + (values[i] - values[i - 1]) * (u - u_grid[i - 1]) / (u_grid[i] - u_grid[i - 1]);
    return values.back();
  }
};

namespace detail {

/// Local time accumulated by the end of the sample.
inline double final_local_time(const LadderSample& s, LocalTimeNormalization norm) {
  switch (norm) {
    case LocalTimeNormalization::Occupation: return s.total_local();
    case LocalTimeNormalization::RunningMaximum: return s.total_height();
    case LocalTimeNormalization::EpochCount: return static_cast<double>(s.epochs.size());
  }
  return 0.0;
}

/// (L^{-1}(ell), H(ell)) for ell up to final_local_time. Within an epoch the
/// excursion comes first, then the climb at the maximum, taken as linear.
inline std::pair<double, double> inverse_local_time(const LadderSample& s, double ell, LocalTimeNormalization norm,
                                                    double d_x) {
  double t = 0.0, h = 0.0, l = 0.0;
  for (const auto& e : s.epochs) {
    double d_l = 0.0;
    switch (norm) {
      case LocalTimeNormalization::Occupation: d_l = e.d_local; break;
      case LocalTimeNormalization::RunningMaximum: d_l = e.d_height; break;
      case LocalTimeNormalization::EpochCount: d_l = 1.0; break;
    }
    if (l + d_l >= ell && d_l > 0.0) {
      const double frac = (ell - l) / d_l;
      switch (norm) {
        case LocalTimeNormalization::Occupation:
          return {t + e.d_time - e.d_local + frac * e.d_local, h + e.d_height - d_x * e.d_local * (1.0 - frac)};
        case LocalTimeNormalization::RunningMaximum:
          return {t + e.d_time - e.d_local + frac * e.d_local, ell};
        case LocalTimeNormalization::EpochCount:
          return {t + e.d_time, h + e.d_height};
      }
    }
    t += e.d_time;
    h += e.d_height;
    l += d_l;
  }
  throw HorizonTooShortError("ladder sample ends before local time " + std::to_string(ell));
}

/// Local time at which the ladder height first exceeds u, or NaN if the
/// sample never gets there.
inline double local_time_at_height(const LadderSample& s, double u, LocalTimeNormalization norm, double d_x) {
  double ell = 0.0, h = 0.0;
  std::size_t count = 0;
  for (const auto& e : s.epochs) {
    switch (norm) {
      case LocalTimeNormalization::RunningMaximum:
        if (h + e.d_height > u) return u;
        break;
      case LocalTimeNormalization::EpochCount:
        if (h + e.d_height > u) return static_cast<double>(count);
        ++count;
        break;
      case LocalTimeNormalization::Occupation: {
        const double instant = e.d_height - d_x * e.d_local;
        if (h + instant > u) return ell;
        if (h + e.d_height > u) return ell + (u - h - instant) / d_x;
        ell += e.d_local;
        break;
      }
    }
    h += e.d_height;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// V_H(u) = E L_{tau_u} from ladder samples on the auxiliary stream, with the
/// moments EL_1^{-1} = E L^{-1}(ell*)/ell* and EH_1 = E H(ell*)/ell* at a common local time ell*.
inline RenewalFunction renewal_estimate(const LevyModel& m, const SimConfig& c, std::vector<double> u_grid,
                                        std::size_t n_paths) {
  if (!drifts_to_plus_infinity(m)) throw PreconditionError("renewal estimates need a model drifting to +inf");
  if (u_grid.empty()) throw PreconditionError("empty u grid");
  std::sort(u_grid.begin(), u_grid.end());
  const Dynamics dyn = simulation_dynamics(m, c);
  const LadderHooks hooks = ladder_hooks(m);
  const double d_x = hooks.d_H.value_or(0.0);
  std::vector<LadderSample> samples(n_paths);
  parallel_for(n_paths, [&](std::size_t r) { samples[r] = extract_ladder(m, dyn, c, r); });

  RenewalFunction out;
  out.normalization = hooks.normalization;
  out.u_grid = u_grid;
  out.paths = n_paths;
  // Moments at a common local time ell*, reached by every path. Ratios of
  // totals up to the horizon would drop the unfinished last excursion,
  // which is length-biased.
  double ell = kInf;
  for (const auto& s : samples) {
    if (s.killed) ++out.killed;
    ell = std::min(ell, detail::final_local_time(s, hooks.normalization));
  }
  ell *= 0.5;
  if (hooks.normalization == LocalTimeNormalization::EpochCount) ell = std::floor(ell);
  if (!(ell > 0.0)) throw HorizonTooShortError("a ladder path gathered no local time; raise the horizon");
  out.ell_star = ell;
  RunningStats inv, height;
  for (const auto& s : samples) {
    const auto [t, h] = detail::inverse_local_time(s, ell, hooks.normalization, d_x);
    inv.add(t / ell);
    height.add(h / ell);
  }
  out.EL1_inv = inv.mean();
  out.EL1_inv_se = n_paths > 1 ? inv.se() : 0.0;
  out.EH1 = height.mean();
  out.EH1_se = n_paths > 1 ? height.se() : 0.0;
  for (double u : u_grid) {
    RunningStats v;
    for (const auto& s : samples) {
      const double l = detail::local_time_at_height(s, u, hooks.normalization, d_x);
      if (std::isnan(l)) throw HorizonTooShortError("ladder path never reached height " + std::to_string(u));
      v.add(l);
    }
    out.values.push_back(v.mean());
    out.se.push_back(n_paths > 1 ? v.se() : 0.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Laplace transform identity

struct LtParams {
  double mu = 1.0;
  double rho = 0.0;
  double lambda = 0.0;
  double nu = 0.0;
  double theta = 0.0;
};

struct LtReport {
  LtParams params;
  double lhs = 0.0;
  double se = 0.0;
  double rhs = 0.0;
  double z = 0.0;
  std::size_t n = 0;
};

inline void check_lt_params(const LtParams& p) {
  if (!(p.mu > 0.0)) throw PreconditionError("mu must be positive");
  if (!(p.rho >= 0.0 && p.lambda >= 0.0 && p.nu >= 0.0 && p.theta >= 0.0))
    throw PreconditionError("rho, lambda, nu, theta must be nonnegative");
  if (p.mu + p.lambda == p.rho) throw PreconditionError("mu + lambda must differ from rho");
}

/// (kappa(theta, mu+lambda) - kappa(theta, rho)) / ((mu+lambda-rho) kappa(nu, mu)).
inline double lt_rhs(const LadderExponent& k, const LtParams& p) {
  check_lt_params(p);
  const double s = p.mu + p.lambda;
  return (k(p.theta, s) - k(p.theta, p.rho)) / ((s - p.rho) * k(p.nu, p.mu));
}

inline double lt_weight(const PassageRecord& r, const LtParams& p) {
  if (!r.ruined) return 0.0;
  return std::exp(-p.rho * r.overshoot - p.lambda * r.undershoot - p.nu * r.g_last_max -
                  p.theta * (r.tau - r.g_last_max));
}

/// Passages of an Exp(mu) level: replication r draws U from the level stream
/// and the path from the path stream.
inline std::vector<PassageRecord> lt_records(const LevyModel& m, const Dynamics& dyn, const SimConfig& c, double mu,
                                             std::size_t n) {
  if (!(mu > 0.0)) throw PreconditionError("mu must be positive");
  std::vector<PassageRecord> out(n);
  parallel_for(n, [&](std::size_t r) {
    Rng level(c.seed, r, StreamPurpose::Level);
    double u = level.exponential(mu);
    if (!(u > 0.0)) u = std::numeric_limits<double>::min();
    out[r] = simulate_passage(m, dyn, c, u, r);
  });
  return out;
}

/// LHS = (1/mu) E[weight at U], U ~ Exp(mu), which equals the u-integral.
inline LtReport lt_report(const std::vector<PassageRecord>& recs, const LadderExponent& k, const LtParams& p) {
  check_lt_params(p);
  RunningStats s;
  for (const auto& r : recs) s.add(lt_weight(r, p));
  LtReport rep;
  rep.params = p;
  rep.n = recs.size();
  rep.lhs = s.mean() / p.mu;
  rep.se = s.se() / p.mu;
  rep.rhs = lt_rhs(k, p);
  const double diff = rep.lhs - rep.rhs;
  if (rep.se > 0.0)
    rep.z = diff / rep.se;
  else
    rep.z = std::abs(diff) <= 1e-12 * std::max(1.0, std::abs(rep.rhs)) ? 0.0 : std::copysign(kInf, diff);
  return rep;
}

inline LtReport verify_lt_identity(const LevyModel& m, const LadderExponent& k, const LtParams& p, std::size_t n,
                                   const SimConfig& c) {
  check_lt_params(p);
  if (!k.eval) throw UnsupportedModelError("ladder exponent has no evaluator");
  const Dynamics dyn = simulation_dynamics(m, c);
  return lt_report(lt_records(m, dyn, c, p.mu, n), k, p);
}

}  // namespace levy_passage
