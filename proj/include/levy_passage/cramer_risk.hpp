#pragma once

// Lundberg root, Esscher tilt and importance-sampled ruin probabilities.
//
// Under the tilted law the process drifts upward, so every tilted path
// passes u and nothing is censored. For Z measurable up to tau_u,
//   E(Z; tau_u < inf) = E*(Z e^{-nu0 X_{tau_u}}).

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "fluctuation_stats.hpp"
#include "levy_model.hpp"
#include "parallel.hpp"
#include "path_sim.hpp"
#include "quadrature.hpp"
#include "roots.hpp"
#include "stats.hpp"

namespace levy_passage {

/// nu0 > 0 with psi(nu0) = 0.
inline double solve_lundberg(const LevyModel& m) {
  if (!(mean(m) < 0.0)) throw NoCramerRootError("the Cramer condition needs E X_1 < 0");
  const auto psi = [&](double v) { return cumulant(m, v); };
  double lo = 1e-6;
  if (!(psi(lo) < 0.0)) throw NoCramerRootError("psi is not negative just right of 0");
  double hi = lo;
  for (;;) {
    hi *= 2.0;
    if (hi > 1e12) throw NoCramerRootError("psi stays negative up to 1e12");
    const double f = psi(hi);
    if (!std::isfinite(f)) break;
    if (f > 0.0) return newton_bisect(psi, [&](double v) { return cumulant_derivative(m, v); }, lo, hi, 1e-13).root;
    if (f == 0.0) return hi;
    lo = hi;
  }
  // psi jumped to +inf: look for a finite positive value before the boundary.
  for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double f = psi(mid);
    if (!std::isfinite(f)) {
      hi = mid;
    } else if (f > 0.0) {
      return newton_bisect(psi, [&](double v) { return cumulant_derivative(m, v); }, lo, mid, 1e-13).root;
    } else {
      lo = mid;
    }
  }
  throw NoCramerRootError("psi stays negative up to its integrability boundary near " + std::to_string(hi));
}

struct TiltedModel {
  double nu0 = 0.0;
  LevyModel base;
  LevyModel tilted;
  double mu_star = 0.0;  // psi'(nu0), may be +inf
};

/// Esscher transform: the tilted triplet stays in the family for Brownian,
/// compound Poisson, Cramer-Lundberg and spectrally negative models.
inline TiltedModel esscher_tilt(const LevyModel& m, double nu0) {
  if (!(nu0 > 0.0)) throw PreconditionError("tilt parameter must be positive");
  const double at = cumulant(m, nu0);
  if (!std::isfinite(at)) throw TiltError("psi(nu0) is infinite");
  const double s2 = m.sigma2();
  std::optional<LevyModel> tilted;
  switch (m.family()) {
    case Family::BrownianDrift: tilted = brownian_drift(m.gamma() + s2 * nu0, s2); break;
    case Family::SpectrallyNegative: {
      const double beta = m.param("beta");
      const double lambda = m.param("lambda");
      tilted = spectrally_negative(m.param("drift") + s2 * nu0, s2, lambda * beta / (beta + nu0), beta + nu0);
      break;
    }
    case Family::CompoundPoissonDrift:
      if (m.name() == "cramer_lundberg") {
        const double alpha = m.param("alpha");
        if (!(nu0 < alpha)) throw TiltError("tilt parameter must stay below the claim rate");
        tilted = cramer_lundberg(m.param("lambda") * alpha / (alpha - nu0), alpha - nu0, m.param("p"));
        break;
      }
      [[fallthrough]];
    case Family::DriftMinusPoisson: {
      const auto& law = m.law();
      const auto drift = m.finite_drift();
      if (!law || !drift) throw UnsupportedModelError("compound Poisson model without a jump law");
      const auto tl = law->tilted(nu0);
      if (!tl) throw TiltError("jump law " + law->name() + " has no in-family tilt at nu0");
      const double rate = m.rate() * law->mgf(nu0);
      if (!std::isfinite(rate)) throw TiltError("tilted jump rate is infinite");
      tilted = compound_poisson_drift(*drift + s2 * nu0, rate, *tl, s2);
      break;
    }
    default:
      throw UnsupportedModelError("Esscher tilt is implemented for closed-form families only, not " + m.name());
  }
  TiltedModel t{nu0, m, *tilted, cumulant_derivative(m, nu0)};
  if (!(t.mu_star > 0.0)) throw TiltError("psi'(nu0) must be positive");
  return t;
}

inline TiltedModel esscher_tilt(const LevyModel& m) { return esscher_tilt(m, solve_lundberg(m)); }

struct RuinEstimate {
  double u = 0.0;
  std::size_t n = 0;
  double psi_hat = 0.0, se = 0.0;
  double cramer_scaled = 0.0, cramer_scaled_se = 0.0;
  double C_hat = std::numeric_limits<double>::quiet_NaN(), C_se = std::numeric_limits<double>::quiet_NaN();
  double cond_tau_ratio = 0.0, cond_tau_se = 0.0;
  double cond_g_ratio = 0.0, cond_g_se = 0.0;
  double cond_x_ratio = 0.0, cond_x_se = 0.0;
  double mu_star = 0.0;
  std::string warning;
  Verdict tau_verdict = Verdict::Inconclusive;
  Verdict g_verdict = Verdict::Inconclusive;
  Verdict x_verdict = Verdict::Inconclusive;
};

/// E^{(u)} Z computed two ways from tilted records: the ratio of weighted sums,
/// and e^{nu0 u} E*(Z e^{-nu0 X}) divided by the Cramer-scaled ruin estimate.
struct ConditionalMean {
  double ratio_of_sums = 0.0;
  double rescaled = 0.0;
  double se = 0.0;
};

inline ConditionalMean conditional_mean(const std::vector<PassageRecord>& recs, double nu0,
                                        const std::function<double(const PassageRecord&)>& z) {
  RatioStats rs;
  CompensatedSum num, den;
  for (const auto& r : recs) {
    const double w = std::exp(-nu0 * r.overshoot);
    rs.add(z(r) * w, w);
    num.add(z(r) * w);
    den.add(w);
  }
  const double n = static_cast<double>(recs.size());
  ConditionalMean out;
  out.ratio_of_sums = num.value() / den.value();
  out.rescaled = (num.value() / n) / (den.value() / n);
  out.se = rs.se();
  return out;
}

inline void check_tilted_records(const std::vector<PassageRecord>& recs) {
  for (const auto& r : recs)
    if (!r.ruined) throw HorizonTooShortError("a tilted path did not reach the level; raise t_max");
}

/// Importance-sampled ruin probability at level u, replication r on stream (seed, r).
inline RuinEstimate ruin_is(const TiltedModel& t, const SimConfig& c, double u, std::size_t n) {
  if (!(u > 0.0)) throw PreconditionError("level u must be positive");
  if (n < 2) throw PreconditionError("need at least two replications");
  if (!(t.mu_star > 0.0)) throw PreconditionError("tilted model must drift to +inf");
  const Dynamics dyn = simulation_dynamics(t.tilted, c);
  const auto recs = run_passages(t.tilted, dyn, c, u, n);
  check_tilted_records(recs);

  RuinEstimate e;
  e.u = u;
  e.n = n;
  e.mu_star = t.mu_star;
  RunningStats w, scaled;
  for (const auto& r : recs) {
    w.add(std::exp(-t.nu0 * r.x_at_tau));
    scaled.add(std::exp(-t.nu0 * r.overshoot));
  }
  e.psi_hat = w.mean();
  e.se = w.se();
  e.cramer_scaled = scaled.mean();
  e.cramer_scaled_se = scaled.se();
  if (!std::isfinite(t.mu_star)) {
    e.warning = "mu* is infinite: the Cramer constant is 0";
  } else if (t.tilted.measure().lattice) {
    e.warning = "lattice jumps: C_hat is not reported";
  } else {
    e.C_hat = e.cramer_scaled;
    e.C_se = e.cramer_scaled_se;
  }
  const auto tau = conditional_mean(recs, t.nu0, [u](const PassageRecord& r) { return r.tau / u; });
  const auto g = conditional_mean(recs, t.nu0, [u](const PassageRecord& r) { return r.g_last_max / u; });
  const auto x = conditional_mean(recs, t.nu0, [u](const PassageRecord& r) { return r.x_at_tau / u; });
  e.cond_tau_ratio = tau.ratio_of_sums;
  e.cond_tau_se = tau.se;
  e.cond_g_ratio = g.ratio_of_sums;
  e.cond_g_se = g.se;
  e.cond_x_ratio = x.ratio_of_sums;
  e.cond_x_se = x.se;
  return e;
}

inline RuinEstimate ruin_is(const LevyModel& m, const SimConfig& c, double u, std::size_t n) {
  return ruin_is(esscher_tilt(m), c, u, n);
}

/// Untilted ruin frequency up to the configured horizon, for cross-checks at
/// small u. Returns (estimate, se).
inline std::pair<double, double> ruin_direct(const LevyModel& m, const SimConfig& c, double u, std::size_t n) {
  if (!std::isfinite(c.end_time())) throw PreconditionError("direct ruin estimates need a finite horizon");
  const Dynamics dyn = simulation_dynamics(m, c);
  const auto recs = run_passages(m, dyn, c, u, n);
  RunningStats s;
  for (const auto& r : recs) s.add(r.ruined ? 1.0 : 0.0);
  return {s.mean(), s.se()};
}

/// Conditional limits given ruin: tau/u and G/u tend to 1/mu*, X_{tau}/u to 1.
inline std::vector<RuinEstimate> conditional_stability_experiment(const LevyModel& m, const SimConfig& c,
                                                                  const std::vector<double>& u_grid, std::size_t n) {
  check_grid(u_grid, n);
  const TiltedModel t = esscher_tilt(m);
  if (!std::isfinite(t.mu_star)) throw PreconditionError("conditional limits need mu* < inf");
  if (m.measure().lattice) throw PreconditionError("conditional limits need non-lattice jumps");
  std::vector<RuinEstimate> out;
  for (double u : u_grid) {
    RuinEstimate e = ruin_is(t, c, u, n);
    e.tau_verdict = band_verdict(e.cond_tau_ratio, e.cond_tau_se, 1.0 / t.mu_star);
    e.g_verdict = band_verdict(e.cond_g_ratio, e.cond_g_se, 1.0 / t.mu_star);
    e.x_verdict = band_verdict(e.cond_x_ratio, e.cond_x_se, 1.0);
    out.push_back(e);
  }
  return out;
}

/// Both sides of E f(X*_t) = E f(X_t) e^{nu0 X_t}, each with its standard error.
/// When E e^{2 nu0 X_1} is infinite the weight e^{nu0 X_t} has infinite
/// variance, so the equivalent pairing E f(X_t) = E f(X*_t) e^{-nu0 X*_t}
/// is used instead (mirrored = true).
struct EsscherCheck {
  bool mirrored = false;
  double plain_mean = 0.0, plain_se = 0.0;
  double weighted_mean = 0.0, weighted_se = 0.0;
  double z() const {
    return (plain_mean - weighted_mean) / std::sqrt(plain_se * plain_se + weighted_se * weighted_se);
  }
};

inline EsscherCheck esscher_identity_check(const TiltedModel& t, const std::function<double(double)>& f, double time,
                                           std::size_t n, const SimConfig& c) {
  if (!(time > 0.0)) throw PreconditionError("time must be positive");
  if (n < 2) throw PreconditionError("need at least two replications");
  SimConfig base_cfg = c;
  SimConfig tilt_cfg = c;
  tilt_cfg.seed = c.seed ^ 0x9e3779b97f4a7c15ULL;
  const Dynamics db = simulation_dynamics(t.base, base_cfg);
  const Dynamics dt = simulation_dynamics(t.tilted, tilt_cfg);
  EsscherCheck out;
  out.mirrored = !std::isfinite(cumulant(t.base, 2.0 * t.nu0));
  std::vector<double> a(n), b(n);
  parallel_for(n, [&](std::size_t r) {
    const double xs = path_snapshots(t.tilted, dt, tilt_cfg, {time}, r).front().x;
    const double x = path_snapshots(t.base, db, base_cfg, {time}, r).front().x;
    if (out.mirrored) {
      a[r] = f(x);
      b[r] = f(xs) * std::exp(-t.nu0 * xs);
    } else {
      a[r] = f(xs);
      b[r] = f(x) * std::exp(t.nu0 * x);
    }
  });
  RunningStats sa, sb;
  for (std::size_t i = 0; i < n; ++i) {
    sa.add(a[i]);
    sb.add(b[i]);
  }
  out.plain_mean = sa.mean();
  out.plain_se = sa.se();
  out.weighted_mean = sb.mean();
  out.weighted_se = sb.se();
  return out;
}

}  // namespace levy_passage
