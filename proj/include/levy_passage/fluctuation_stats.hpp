#pragma once

// Monte Carlo experiments on tau_u / u, G_{tau_u-} / u and the overshoot.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "levy_model.hpp"
#include "parallel.hpp"
#include "path_sim.hpp"
#include "stats.hpp"

namespace levy_passage {

/// Overshoot histogram: exact zeros (creeping) are counted apart from the
/// equal-width bins that cover (0, max].
struct Histogram {
  std::size_t zero_count = 0;
  std::vector<double> edges;
  std::vector<std::size_t> counts;

  std::size_t total() const {
    std::size_t s = zero_count;
    for (auto c : counts) s += c;
    return s;
  }
};

inline Histogram make_histogram(const std::vector<double>& values, int bins = 20) {
  Histogram h;
  double top = 0.0;
  for (double v : values) {
    if (v < 0.0) throw PreconditionError("histogram values must be nonnegative");
    top = std::max(top, v);
  }
  if (top == 0.0) {
    h.zero_count = values.size();
    return h;
  }
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (int i = 0; i <= bins; ++i) h.edges.push_back(top * i / bins);
  for (double v : values) {
    if (v == 0.0) {
      ++h.zero_count;
      continue;
    }
    auto k = static_cast<std::size_t>(std::ceil(v / top * bins)) - 1;
    h.counts[std::min(k, h.counts.size() - 1)]++;
  }
  return h;
}

struct WeightedMean {
  double rho = 0.0;
  double tau_mean = 0.0, tau_se = 0.0;  // E[(tau/u) e^{-rho overshoot}]
  double g_mean = 0.0, g_se = 0.0;      // E[(G/u) e^{-rho overshoot}]
};

struct ExperimentResult {
  double u = 0.0;
  std::size_t n = 0;
  std::size_t ruined = 0;
  std::size_t censored = 0;
  double mean_tau_ratio = 0.0, se_tau_ratio = 0.0;
  double median_tau_ratio = 0.0, q10_tau_ratio = 0.0, q90_tau_ratio = 0.0;
  double mean_g_ratio = 0.0, se_g_ratio = 0.0;
  double median_g_ratio = 0.0;
  double mean_overshoot = 0.0;
  Histogram overshoot_hist;
  std::vector<WeightedMean> weighted;
  double weighted_mean = 0.0;  // first configured rho
  double target = std::numeric_limits<double>::quiet_NaN();
  Verdict verdict = Verdict::Inconclusive;
};

/// n independent passages of level u; replication r uses stream (seed, r).
inline std::vector<PassageRecord> run_passages(const LevyModel& m, const Dynamics& dyn, const SimConfig& c, double u,
                                               std::size_t n) {
  std::vector<PassageRecord> out(n);
  parallel_for(n, [&](std::size_t r) { out[r] = simulate_passage(m, dyn, c, u, r); });
  return out;
}

inline ExperimentResult summarize(const std::vector<PassageRecord>& recs, double u,
                                  const std::vector<double>& rhos = {0.0}, int bins = 20) {
  if (recs.size() < 2) throw PreconditionError("need at least two records");
  ExperimentResult r;
  r.u = u;
  r.n = recs.size();
  RunningStats tau, g, over;
  std::vector<double> taus, gs, overs;
  std::vector<RunningStats> wt(rhos.size()), wg(rhos.size());
  for (const auto& p : recs) {
    if (!p.ruined) {
      ++r.censored;
      continue;
    }
    ++r.ruined;
    const double tr = p.tau / u;
    const double gr = p.g_last_max / u;
    tau.add(tr);
    g.add(gr);
    over.add(p.overshoot);
    taus.push_back(tr);
    gs.push_back(gr);
    overs.push_back(p.overshoot);
    for (std::size_t k = 0; k < rhos.size(); ++k) {
      const double w = rhos[k] == 0.0 ? 1.0 : std::exp(-rhos[k] * p.overshoot);
      wt[k].add(tr * w);
      wg[k].add(gr * w);
    }
  }
  if (r.ruined >= 2) {
    r.mean_tau_ratio = tau.mean();
    r.se_tau_ratio = tau.se();
    r.mean_g_ratio = g.mean();
    r.se_g_ratio = g.se();
    r.mean_overshoot = over.mean();
    r.median_tau_ratio = median(taus);
    r.q10_tau_ratio = quantile(taus, 0.1);
    r.q90_tau_ratio = quantile(taus, 0.9);
    r.median_g_ratio = median(gs);
    for (std::size_t k = 0; k < rhos.size(); ++k)
      r.weighted.push_back({rhos[k], wt[k].mean(), wt[k].se(), wg[k].mean(), wg[k].se()});
    if (!r.weighted.empty()) r.weighted_mean = r.weighted.front().tau_mean;
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.mean_tau_ratio = r.se_tau_ratio = r.mean_g_ratio = r.se_g_ratio = nan;
    r.median_tau_ratio = r.q10_tau_ratio = r.q90_tau_ratio = r.median_g_ratio = r.mean_overshoot = nan;
    r.weighted_mean = nan;
  }
  r.overshoot_hist = make_histogram(overs, bins);
  return r;
}

inline void check_censoring(const LevyModel& m, const ExperimentResult& r) {
  if (drifts_to_plus_infinity(m) && r.censored * 100 > r.n) {
    throw HorizonTooShortError("censored fraction " + std::to_string(double(r.censored) / double(r.n)) +
                               " exceeds 1% at u=" + std::to_string(r.u) + "; raise horizon or t_max");
  }
}

/// Mean within 3 standard errors plus a 2% allowance of the target.
inline Verdict band_verdict(double estimate, double se, double target) {
  if (!std::isfinite(target) || !std::isfinite(estimate)) return Verdict::Inconclusive;
  return std::abs(estimate - target) <= 3.0 * se + 0.02 * std::abs(target) ? Verdict::Yes : Verdict::No;
}

/// Distribution-free band for the median: order statistics at 0.5 +- 1.5/sqrt(n)
/// (three binomial standard errors) widened by 2% of the target.
inline Verdict median_verdict(std::vector<double> sample, double target) {
  if (!std::isfinite(target) || sample.size() < 10) return Verdict::Inconclusive;
  const double d = 1.5 / std::sqrt(static_cast<double>(sample.size()));
  const double lo = quantile(sample, std::max(0.0, 0.5 - d));
  const double hi = quantile(sample, std::min(1.0, 0.5 + d));
  const double slack = 0.02 * std::abs(target);
  return (target >= lo - slack && target <= hi + slack) ? Verdict::Yes : Verdict::No;
}

/// Regime of a level grid: decreasing grids, or grids inside (0, 1], probe u -> 0.
inline bool small_time_grid(const std::vector<double>& u_grid) {
  if (u_grid.empty()) throw PreconditionError("empty u grid");
  if (u_grid.size() > 1) return u_grid.back() < u_grid.front();
  return u_grid.front() < 1.0;
}

inline void check_grid(const std::vector<double>& u_grid, std::size_t n) {
  if (u_grid.empty()) throw PreconditionError("u grid is empty");
  for (std::size_t i = 0; i < u_grid.size(); ++i) {
    if (!(u_grid[i] > 0.0)) throw PreconditionError("u grid values must be positive");
    if (i > 0 && u_grid[i] == u_grid[i - 1]) throw PreconditionError("u grid must be strictly monotone");
  }
  if (n < 2) throw PreconditionError("need at least two replications");
}

/// 1/c for the in-probability regime from the analytic classifier.
inline double probability_target(const LevyModel& m, bool small) {
  const Regime regime = small ? Regime::ProbSmall : Regime::ProbLarge;
  const StabilityVerdict v = classify_stability(m, regime, default_grid(regime));
  if (v.holds != Verdict::Yes) return std::numeric_limits<double>::quiet_NaN();
  return 1.0 / v.c;
}

namespace detail {

inline std::vector<ExperimentResult> ratio_experiment(const LevyModel& m, const SimConfig& c,
                                                      const std::vector<double>& u_grid, std::size_t n, bool use_g,
                                                      const std::vector<double>& rhos) {
  check_grid(u_grid, n);
  const Dynamics dyn = simulation_dynamics(m, c);
  const bool small = small_time_grid(u_grid);
  const double target = probability_target(m, small);
  std::vector<ExperimentResult> out;
  for (double u : u_grid) {
    const auto recs = run_passages(m, dyn, c, u, n);
    ExperimentResult r = summarize(recs, u, rhos);
    check_censoring(m, r);
    r.target = target;
    if (small) {
      std::vector<double> sample;
      for (const auto& p : recs)
        if (p.ruined) sample.push_back((use_g ? p.g_last_max : p.tau) / u);
      r.verdict = median_verdict(sample, target);
    } else {
      r.verdict = use_g ? band_verdict(r.mean_g_ratio, r.se_g_ratio, target)
                        : band_verdict(r.mean_tau_ratio, r.se_tau_ratio, target);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace detail

/// Sample law of tau_u/u on a level grid. Large-u verdicts compare the mean
/// with 1/c; small-u verdicts compare the median.
inline std::vector<ExperimentResult> tau_stability_experiment(const LevyModel& m, const SimConfig& c,
                                                              const std::vector<double>& u_grid, std::size_t n,
                                                              const std::vector<double>& rhos = {0.0}) {
  return detail::ratio_experiment(m, c, u_grid, n, false, rhos);
}

/// Same for G_{tau_u-}/u.
inline std::vector<ExperimentResult> g_stability_experiment(const LevyModel& m, const SimConfig& c,
                                                            const std::vector<double>& u_grid, std::size_t n,
                                                            const std::vector<double>& rhos = {0.0}) {
  return detail::ratio_experiment(m, c, u_grid, n, true, rhos);
}

struct MeanExitResult {
  double u = 0.0;
  double ratio = 0.0;  // estimate of E tau_u / u
  double se = 0.0;
  std::size_t n = 0;
  std::size_t censored = 0;
  double target = std::numeric_limits<double>::quiet_NaN();
  Verdict verdict = Verdict::Inconclusive;
};

/// E tau_u / u against 1/EX_1 (u -> inf) or EL_1^{-1}/d_H (u -> 0, needs
/// ladder moments).
inline std::vector<MeanExitResult> mean_exit_experiment(const LevyModel& m, const SimConfig& c,
                                                        const std::vector<double>& u_grid, std::size_t n,
                                                        std::optional<LadderMoments> ladder = std::nullopt) {
  check_grid(u_grid, n);
  if (!drifts_to_plus_infinity(m)) throw PreconditionError("mean exit experiments need a model drifting to +inf");
  const Dynamics dyn = simulation_dynamics(m, c);
  const bool small = small_time_grid(u_grid);
  double target = std::numeric_limits<double>::quiet_NaN();
  if (!small) {
    const double mu = mean(m);
    if (finite_abs_mean(m) && mu > 0.0 && std::isfinite(mu)) target = 1.0 / mu;
  } else if (ladder && ladder->d_H > 0.0 && std::isfinite(ladder->EL1_inv)) {
    target = ladder->EL1_inv / ladder->d_H;
  }
  std::vector<MeanExitResult> out;
  for (double u : u_grid) {
    const auto recs = run_passages(m, dyn, c, u, n);
    const ExperimentResult s = summarize(recs, u);
    check_censoring(m, s);
    MeanExitResult r;
    r.u = u;
    r.n = n;
    r.censored = s.censored;
    r.ratio = s.mean_tau_ratio;
    r.se = s.se_tau_ratio;
    r.target = target;
    r.verdict = band_verdict(r.ratio, r.se, target);
    out.push_back(r);
  }
  return out;
}

/// E e^{-rho Y} for the limiting overshoot Y when it has a closed form:
/// Y = 0 for spectrally negative models; for drift plus upward Exp(alpha)
/// jumps, Y has an atom d/EX_1 at 0 (when d > 0) and Exp(alpha) otherwise.
inline std::optional<std::function<double(double)>> overshoot_limit_laplace(const LevyModel& m) {
  if (m.spectrally_negative()) return std::function<double(double)>([](double) { return 1.0; });
  const auto& law = m.law();
  if (law && law->kind() == JumpLaw::Kind::Exponential && law->sign() > 0 && m.sigma2() == 0.0 && m.finite_drift()) {
    const double d = *m.finite_drift();
    const double mu = mean(m);
    if (!(mu > 0.0)) return std::nullopt;
    const double alpha = law->param_a();
    const double p0 = d > 0.0 ? d / mu : 0.0;
    return std::function<double(double)>([p0, alpha](double rho) { return p0 + (1.0 - p0) * alpha / (alpha + rho); });
  }
  return std::nullopt;
}

/// Overshoot-weighted means of tau_u/u and G/u at one level, with verdicts
/// against (1/EX_1) E e^{-rho Y} when Y is known in closed form.
struct OvershootResult {
  ExperimentResult result;
  std::vector<double> targets;  // per rho
  std::vector<Verdict> verdicts;
};

inline OvershootResult overshoot_law_experiment(const LevyModel& m, const SimConfig& c, double u, std::size_t n,
                                                const std::vector<double>& rho_list) {
  const double mu = mean(m);
  if (!(finite_abs_mean(m) && mu > 0.0 && std::isfinite(mu)))
    throw PreconditionError("overshoot limits need 0 < EX_1 <= E|X_1| < inf");
  if (m.measure().lattice) throw PreconditionError("overshoot limits need a non-lattice jump law");
  if (rho_list.empty()) throw PreconditionError("rho list is empty");
  const Dynamics dyn = simulation_dynamics(m, c);
  const auto recs = run_passages(m, dyn, c, u, n);
  OvershootResult out;
  out.result = summarize(recs, u, rho_list);
  check_censoring(m, out.result);
  const auto lap = overshoot_limit_laplace(m);
  for (const auto& w : out.result.weighted) {
    const double target = lap ? (*lap)(w.rho) / mu : std::numeric_limits<double>::quiet_NaN();
    out.targets.push_back(target);
    out.verdicts.push_back(band_verdict(w.tau_mean, w.tau_se, target));
  }
  return out;
}

/// Pathwise check of almost sure stability: each path's last K ratios must
/// sit within `band` of 1/c.
struct AsStabilityResult {
  std::vector<double> levels;
  std::vector<std::vector<double>> ratios;  // per path
  double target = std::numeric_limits<double>::quiet_NaN();
  double band = 0.15;
  std::size_t k_last = 3;
  double pass_fraction = 0.0;
  Verdict verdict = Verdict::Inconclusive;
};

inline AsStabilityResult as_stability_experiment(const LevyModel& m, const SimConfig& c,
                                                 const std::vector<double>& levels, std::size_t n_paths,
                                                 double band = 0.15, double required_fraction = 0.95,
                                                 std::size_t k_last = 3) {
  check_grid(levels, n_paths);
  const Dynamics dyn = simulation_dynamics(m, c);
  const bool small = small_time_grid(levels);
  const Regime regime = small ? Regime::ASSmall : Regime::ASLarge;
  const StabilityVerdict v = classify_stability(m, regime, default_grid(regime));
  AsStabilityResult out;
  out.levels = levels;
  out.band = band;
  out.k_last = std::min(k_last, levels.size());
  if (v.holds == Verdict::Yes) out.target = 1.0 / v.c;
  out.ratios.resize(n_paths);
  parallel_for(n_paths, [&](std::size_t r) {
    const auto path = simulate_as_ratio_path(m, dyn, c, levels, r);
    for (const auto& [u, ratio] : path) out.ratios[r].push_back(ratio);
  });
  if (!std::isfinite(out.target)) return out;
  std::size_t pass = 0;
  for (const auto& path : out.ratios) {
    bool ok = true;
    for (std::size_t i = path.size() - out.k_last; i < path.size(); ++i)
      ok = ok && std::abs(path[i] - out.target) <= band * out.target;
    pass += ok ? 1 : 0;
  }
  out.pass_fraction = static_cast<double>(pass) / static_cast<double>(n_paths);
  out.verdict = out.pass_fraction >= required_fraction ? Verdict::Yes : Verdict::No;
  return out;
}

/// Quantiles of X_t/t and of the running maximum over t, one row per time.
struct TimeRatioQuantiles {
  double t = 0.0;
  std::size_t n = 0;
  double x_q10 = 0.0, x_median = 0.0, x_q90 = 0.0;
  double max_q10 = 0.0, max_median = 0.0, max_q90 = 0.0;
};

/// Each time gets its own step dt_fraction * t and, when c.epsilon is 0,
/// small-jump cutoff eps_fraction * t, so all scales are resolved alike.
inline std::vector<TimeRatioQuantiles> time_ratio_quantiles(const LevyModel& m, const SimConfig& c,
                                                            const std::vector<double>& times, std::size_t n,
                                                            double dt_fraction = 1e-3, double eps_fraction = 1e-4) {
  if (times.empty()) throw PreconditionError("time list is empty");
  if (n < 2) throw PreconditionError("need at least two paths");
  std::vector<TimeRatioQuantiles> out;
  for (double t : times) {
    if (!(t > 0.0) || !std::isfinite(t)) throw PreconditionError("times must be positive and finite");
    SimConfig ct = c;
    ct.dt = std::min(c.dt, dt_fraction * t);
    if (c.epsilon == 0.0 && !m.measure().finite_activity()) ct.epsilon = eps_fraction * t;
    ct.t_max = std::max(c.t_max, t);
    const Dynamics dyn = simulation_dynamics(m, ct);
    std::vector<double> x(n), mx(n);
    parallel_for(n, [&](std::size_t r) {
      const auto s = path_snapshots(m, dyn, ct, {t}, r).front();
      x[r] = s.x / t;
      mx[r] = s.running_max / t;
    });
    TimeRatioQuantiles q;
    q.t = t;
    q.n = n;
    q.x_q10 = quantile(x, 0.1);
    q.x_median = quantile(x, 0.5);
    q.x_q90 = quantile(x, 0.9);
    q.max_q10 = quantile(mx, 0.1);
    q.max_median = quantile(mx, 0.5);
    q.max_q90 = quantile(mx, 0.9);
    out.push_back(q);
  }
  return out;
}

}  // namespace levy_passage
