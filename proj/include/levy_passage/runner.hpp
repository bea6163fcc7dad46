#pragma once

// Executes an ExperimentSpec and writes its result files plus a manifest.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "cramer_risk.hpp"
#include "fluctuation_stats.hpp"
#include "ladder_exponent.hpp"
#include "report.hpp"
#include "version.hpp"

namespace levy_passage {

struct RunResult {
  ExperimentKind experiment = ExperimentKind::Classify;
  std::vector<StatRow> rows;
  Json detail = Json::array();
  std::vector<RecordRow> records;  // simulate only
  std::vector<Verdict> verdicts;
  std::vector<std::string> warnings;

  Verdict overall() const {
    bool any_inconclusive = false;
    for (Verdict v : verdicts) {
      if (v == Verdict::No) return Verdict::No;
      any_inconclusive = any_inconclusive || v == Verdict::Inconclusive;
    }
    return any_inconclusive ? Verdict::Inconclusive : Verdict::Yes;
  }
};

/// 0 on pass or inconclusive, 2 on fail.
inline int exit_status(const RunResult& r) { return r.overall() == Verdict::No ? 2 : 0; }

namespace detail {

inline std::optional<LadderMoments> ladder_moments_if_known(const LevyModel& m) {
  try {
    return ladder_exponent(m).moments();
  } catch (const UnsupportedModelError&) {
    return std::nullopt;
  } catch (const PreconditionError&) {
    return std::nullopt;
  }
}

inline void add_warnings(RunResult& out, const std::vector<std::string>& ws) {
  for (const auto& w : ws)
    if (std::find(out.warnings.begin(), out.warnings.end(), w) == out.warnings.end()) out.warnings.push_back(w);
}

inline void ratio_rows(RunResult& out, const ExperimentResult& r) {
  const double u = r.u;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.rows.push_back({u, "ruined_fraction", static_cast<double>(r.ruined) / static_cast<double>(r.n), nan});
  out.rows.push_back({u, "mean_tau_ratio", r.mean_tau_ratio, r.se_tau_ratio});
  out.rows.push_back({u, "median_tau_ratio", r.median_tau_ratio, nan});
  out.rows.push_back({u, "q10_tau_ratio", r.q10_tau_ratio, nan});
  out.rows.push_back({u, "q90_tau_ratio", r.q90_tau_ratio, nan});
  out.rows.push_back({u, "mean_g_ratio", r.mean_g_ratio, r.se_g_ratio});
  out.rows.push_back({u, "median_g_ratio", r.median_g_ratio, nan});
  out.rows.push_back({u, "mean_overshoot", r.mean_overshoot, nan});
  for (const auto& w : r.weighted) {
    const std::string tag = "[rho=" + format_number(w.rho) + "]";
    out.rows.push_back({u, "weighted_tau" + tag, w.tau_mean, w.tau_se});
    out.rows.push_back({u, "weighted_g" + tag, w.g_mean, w.g_se});
  }
  out.rows.push_back({u, "target", r.target, nan});
  out.rows.push_back({u, "verdict", verdict_code(r.verdict), nan});
}

inline void ruin_rows(RunResult& out, const RuinEstimate& e, bool with_verdicts) {
  const double u = e.u;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.rows.push_back({u, "psi_hat", e.psi_hat, e.se});
  out.rows.push_back({u, "cramer_scaled", e.cramer_scaled, e.cramer_scaled_se});
  out.rows.push_back({u, "C_hat", e.C_hat, e.C_se});
  out.rows.push_back({u, "cond_tau_ratio", e.cond_tau_ratio, e.cond_tau_se});
  out.rows.push_back({u, "cond_g_ratio", e.cond_g_ratio, e.cond_g_se});
  out.rows.push_back({u, "cond_x_ratio", e.cond_x_ratio, e.cond_x_se});
  out.rows.push_back({u, "mu_star", e.mu_star, nan});
  if (with_verdicts) {
    out.rows.push_back({u, "tau_verdict", verdict_code(e.tau_verdict), nan});
    out.rows.push_back({u, "g_verdict", verdict_code(e.g_verdict), nan});
    out.rows.push_back({u, "x_verdict", verdict_code(e.x_verdict), nan});
  }
  if (!e.warning.empty()) add_warnings(out, {e.warning});
}

}  // namespace detail

inline RunResult run(const ExperimentSpec& spec) {
  validate_spec(spec);
  const LevyModel m = build_model(spec.model);
  const SimConfig& c = spec.sim;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  RunResult out;
  out.experiment = spec.experiment;
  const bool mc = needs_monte_carlo(spec.experiment) && spec.experiment != ExperimentKind::LtIdentity &&
                  spec.experiment != ExperimentKind::AppendixDemo;
  if (mc) detail::add_warnings(out, simulation_dynamics(m, c).warnings);

  switch (spec.experiment) {
    case ExperimentKind::Classify: {
      const Regime regime = spec.regime.value_or(Regime::ProbLarge);
      const auto grid = spec.grid.empty() ? default_grid(regime) : spec.grid;
      std::optional<LadderMoments> lm;
      if (regime == Regime::MeanSmall) lm = detail::ladder_moments_if_known(m);
      const StabilityVerdict v = classify_stability(m, regime, grid, lm);
      for (const auto& g : v.evidence) {
        out.rows.push_back({g.x, "A", g.A, nan});
        out.rows.push_back({g.x, "x_tail", g.x_tail, nan});
      }
      out.rows.push_back({nan, "limit_A", v.limit_A, nan});
      out.rows.push_back({nan, "c", v.c, nan});
      out.rows.push_back({nan, "verdict", verdict_code(v.holds), nan});
      out.detail.push_back(encode(v));
      out.verdicts.push_back(v.holds);
      break;
    }
    case ExperimentKind::Simulate: {
      const Dynamics dyn = simulation_dynamics(m, c);
      for (double u : spec.u_grid) {
        const auto recs = run_passages(m, dyn, c, u, spec.n);
        for (std::size_t r = 0; r < recs.size(); ++r) out.records.push_back({recs[r], c.seed, r});
        const ExperimentResult s = summarize(recs, u, spec.rho);
        detail::ratio_rows(out, s);
        out.detail.push_back(encode(s));
      }
      break;
    }
    case ExperimentKind::Stability:
    case ExperimentKind::LastMax: {
      const bool g = spec.experiment == ExperimentKind::LastMax;
      const auto res = g ? g_stability_experiment(m, c, spec.u_grid, spec.n, spec.rho)
                         : tau_stability_experiment(m, c, spec.u_grid, spec.n, spec.rho);
      for (const auto& r : res) {
        detail::ratio_rows(out, r);
        out.detail.push_back(encode(r));
        out.verdicts.push_back(r.verdict);
      }
      break;
    }
    case ExperimentKind::AsStability: {
      const auto r = as_stability_experiment(m, c, spec.u_grid, spec.n, spec.as.band, spec.as.required_fraction,
                                             spec.as.k_last);
      for (std::size_t i = 0; i < r.levels.size(); ++i) {
        std::vector<double> col;
        for (const auto& path : r.ratios) col.push_back(path[i]);
        out.rows.push_back({r.levels[i], "median_tau_ratio", quantile(col, 0.5), nan});
        out.rows.push_back({r.levels[i], "q10_tau_ratio", quantile(col, 0.1), nan});
        out.rows.push_back({r.levels[i], "q90_tau_ratio", quantile(col, 0.9), nan});
      }
      out.rows.push_back({nan, "target", r.target, nan});
      out.rows.push_back({nan, "pass_fraction", r.pass_fraction, nan});
      out.rows.push_back({nan, "verdict", verdict_code(r.verdict), nan});
      out.detail.push_back(encode(r));
      out.verdicts.push_back(r.verdict);
      break;
    }
    case ExperimentKind::MeanExit: {
      const auto res = mean_exit_experiment(m, c, spec.u_grid, spec.n, detail::ladder_moments_if_known(m));
      for (const auto& r : res) {
        out.rows.push_back({r.u, "mean_tau_ratio", r.ratio, r.se});
        out.rows.push_back({r.u, "target", r.target, nan});
        out.rows.push_back({r.u, "verdict", verdict_code(r.verdict), nan});
        out.detail.push_back(encode(r));
        out.verdicts.push_back(r.verdict);
      }
      break;
    }
    case ExperimentKind::Overshoot: {
      for (double u : spec.u_grid) {
        const auto r = overshoot_law_experiment(m, c, u, spec.n, spec.rho);
        out.rows.push_back({u, "mean_overshoot", r.result.mean_overshoot, nan});
        out.rows.push_back({u, "creep_fraction",
                            static_cast<double>(r.result.overshoot_hist.zero_count) /
                                static_cast<double>(std::max<std::size_t>(1, r.result.ruined)),
                            nan});
        for (std::size_t k = 0; k < r.targets.size(); ++k) {
          const auto& w = r.result.weighted[k];
          const std::string tag = "[rho=" + format_number(w.rho) + "]";
          out.rows.push_back({u, "weighted_tau" + tag, w.tau_mean, w.tau_se});
          out.rows.push_back({u, "target" + tag, r.targets[k], nan});
          out.rows.push_back({u, "verdict" + tag, verdict_code(r.verdicts[k]), nan});
          out.verdicts.push_back(r.verdicts[k]);
        }
        out.detail.push_back(encode(r));
      }
      break;
    }
    case ExperimentKind::LtIdentity: {
      const LadderExponent k = ladder_exponent(m);
      detail::add_warnings(out, simulation_dynamics(m, c).warnings);
      for (std::size_t i = 0; i < spec.lt.size(); ++i) {
        const auto rep = verify_lt_identity(m, k, spec.lt[i], spec.n, c);
        const std::string tag = "[" + std::to_string(i) + "]";
        out.rows.push_back({rep.params.mu, "lhs" + tag, rep.lhs, rep.se});
        out.rows.push_back({rep.params.mu, "rhs" + tag, rep.rhs, nan});
        out.rows.push_back({rep.params.mu, "z" + tag, rep.z, nan});
        const Verdict v = std::abs(rep.z) <= 3.0 ? Verdict::Yes : Verdict::No;
        out.rows.push_back({rep.params.mu, "verdict" + tag, verdict_code(v), nan});
        out.detail.push_back(encode(rep));
        out.verdicts.push_back(v);
      }
      break;
    }
    case ExperimentKind::Ruin: {
      const TiltedModel t = esscher_tilt(m);
      for (double u : spec.u_grid) {
        const auto e = ruin_is(t, c, u, spec.n);
        detail::ruin_rows(out, e, false);
        out.detail.push_back(encode(e));
      }
      break;
    }
    case ExperimentKind::Conditional: {
      for (const auto& e : conditional_stability_experiment(m, c, spec.u_grid, spec.n)) {
        detail::ruin_rows(out, e, true);
        out.detail.push_back(encode(e));
        out.verdicts.insert(out.verdicts.end(), {e.tau_verdict, e.g_verdict, e.x_verdict});
      }
      break;
    }
    case ExperimentKind::AppendixDemo: {
      const auto qs = time_ratio_quantiles(m, c, spec.times, spec.n, spec.demo.dt_fraction, spec.demo.eps_fraction);
      for (const auto& q : qs) {
        out.rows.push_back({q.t, "x_q10", q.x_q10, nan});
        out.rows.push_back({q.t, "x_median", q.x_median, nan});
        out.rows.push_back({q.t, "x_q90", q.x_q90, nan});
        out.rows.push_back({q.t, "max_q10", q.max_q10, nan});
        out.rows.push_back({q.t, "max_median", q.max_median, nan});
        out.rows.push_back({q.t, "max_q90", q.max_q90, nan});
        out.detail.push_back(encode(q));
      }
      // Qualitative only: no finite-sample verdict exists.
      out.verdicts.push_back(Verdict::Inconclusive);
      break;
    }
  }
  return out;
}

inline Json results_json(const ExperimentSpec& spec, const RunResult& r) {
  Json j;
  j["format"] = kResultsFormat;
  j["experiment"] = to_string(spec.experiment);
  j["model"] = spec.model.family;
  j["verdict"] = to_string(r.overall());
  j["warnings"] = r.warnings;
  j["results"] = r.detail;
  return j;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

/// Writes results.csv or results.json, records.csv for simulate, and
/// manifest.json into the output directory. Returns the files written.
inline std::vector<std::string> write_outputs(const ExperimentSpec& spec, const RunResult& r, double wall_seconds) {
  namespace fs = std::filesystem;
  const fs::path dir(spec.output_path);
  fs::create_directories(dir);
  std::vector<std::string> files;
  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error("cannot write '" + (dir / name).string() + "'");
    files.push_back(name);
    return f;
  };
  if (spec.format == OutputFormat::Csv) {
    auto f = open("results.csv");
    write_long_csv(f, to_string(spec.experiment), r.rows);
  } else {
    auto f = open("results.json");
    f << results_json(spec, r).dump(2) << '\n';
  }
  if (!r.records.empty()) {
    auto f = open("records.csv");
    write_records_csv(f, r.records);
  }
  Json man;
  man["format"] = kManifestFormat;
  man["spec"] = encode(spec);
  man["version"] = kVersion;
  man["timestamp"] = utc_timestamp();
  man["wall_time_seconds"] = wall_seconds;
  man["verdict"] = to_string(r.overall());
  man["exit_status"] = exit_status(r);
  man["warnings"] = r.warnings;
  man["files"] = files;
  {
    std::ofstream f(dir / "manifest.json", std::ios::binary);
    if (!f) throw Error("cannot write manifest");
    f << man.dump(2) << '\n';
  }
  files.push_back("manifest.json");
  return files;
}

}  // namespace levy_passage
