#pragma once

// Serialisation of results: long-format CSV, raw record CSV and JSON.
// Every result struct lists its fields once in visit_fields; the JSON writer
// and reader both walk that list.

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"

#include "config.hpp"
#include "cramer_risk.hpp"
#include "fluctuation_stats.hpp"
#include "ladder_exponent.hpp"
#include "levy_model.hpp"
#include "path_sim.hpp"

namespace levy_passage {

inline constexpr const char* kResultsFormat = "levy_passage.results/1";
inline constexpr const char* kManifestFormat = "levy_passage.manifest/1";

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Field lists

template <class V> void visit_fields(Histogram& x, V&& v) {
  v("zero_count", x.zero_count);
  v("edges", x.edges);
  v("counts", x.counts);
}
template <class V> void visit_fields(WeightedMean& x, V&& v) {
  v("rho", x.rho);
  v("tau_mean", x.tau_mean);
  v("tau_se", x.tau_se);
  v("g_mean", x.g_mean);
  v("g_se", x.g_se);
}
template <class V> void visit_fields(ExperimentResult& x, V&& v) {
  v("u", x.u);
  v("n", x.n);
  v("ruined", x.ruined);
  v("censored", x.censored);
  v("mean_tau_ratio", x.mean_tau_ratio);
  v("se_tau_ratio", x.se_tau_ratio);
  v("median_tau_ratio", x.median_tau_ratio);
  v("q10_tau_ratio", x.q10_tau_ratio);
  v("q90_tau_ratio", x.q90_tau_ratio);
  v("mean_g_ratio", x.mean_g_ratio);
  v("se_g_ratio", x.se_g_ratio);
  v("median_g_ratio", x.median_g_ratio);
  v("mean_overshoot", x.mean_overshoot);
  v("overshoot_hist", x.overshoot_hist);
  v("weighted", x.weighted);
  v("weighted_mean", x.weighted_mean);
  v("target", x.target);
  v("verdict", x.verdict);
}
template <class V> void visit_fields(MeanExitResult& x, V&& v) {
  v("u", x.u);
  v("ratio", x.ratio);
  v("se", x.se);
  v("n", x.n);
  v("censored", x.censored);
  v("target", x.target);
  v("verdict", x.verdict);
}
template <class V> void visit_fields(OvershootResult& x, V&& v) {
  v("result", x.result);
  v("targets", x.targets);
  v("verdicts", x.verdicts);
}
template <class V> void visit_fields(AsStabilityResult& x, V&& v) {
  v("levels", x.levels);
  v("ratios", x.ratios);
  v("target", x.target);
  v("band", x.band);
  v("k_last", x.k_last);
  v("pass_fraction", x.pass_fraction);
  v("verdict", x.verdict);
}
template <class V> void visit_fields(LtParams& x, V&& v) {
  v("mu", x.mu);
  v("rho", x.rho);
  v("lambda", x.lambda);
  v("nu", x.nu);
  v("theta", x.theta);
}
template <class V> void visit_fields(LtReport& x, V&& v) {
  v("params", x.params);
  v("lhs", x.lhs);
  v("se", x.se);
  v("rhs", x.rhs);
  v("z", x.z);
  v("n", x.n);
}
template <class V> void visit_fields(RuinEstimate& x, V&& v) {
  v("u", x.u);
  v("n", x.n);
  v("psi_hat", x.psi_hat);
  v("se", x.se);
  v("cramer_scaled", x.cramer_scaled);
  v("cramer_scaled_se", x.cramer_scaled_se);
  v("C_hat", x.C_hat);
  v("C_se", x.C_se);
  v("cond_tau_ratio", x.cond_tau_ratio);
  v("cond_tau_se", x.cond_tau_se);
  v("cond_g_ratio", x.cond_g_ratio);
  v("cond_g_se", x.cond_g_se);
  v("cond_x_ratio", x.cond_x_ratio);
  v("cond_x_se", x.cond_x_se);
  v("mu_star", x.mu_star);
  v("warning", x.warning);
  v("tau_verdict", x.tau_verdict);
  v("g_verdict", x.g_verdict);
  v("x_verdict", x.x_verdict);
}
template <class V> void visit_fields(GridPoint& x, V&& v) {
  v("x", x.x);
  v("A", x.A);
  v("x_tail", x.x_tail);
}
template <class V> void visit_fields(StabilityVerdict& x, V&& v) {
  v("regime", x.regime);
  v("c", x.c);
  v("holds", x.holds);
  v("evidence", x.evidence);
  v("limit_A", x.limit_A);
  v("reason", x.reason);
}
template <class V> void visit_fields(TimeRatioQuantiles& x, V&& v) {
  v("t", x.t);
  v("n", x.n);
  v("x_q10", x.x_q10);
  v("x_median", x.x_median);
  v("x_q90", x.x_q90);
  v("max_q10", x.max_q10);
  v("max_median", x.max_median);
  v("max_q90", x.max_q90);
}
template <class V> void visit_fields(PassageRecord& x, V&& v) {
  v("u", x.u);
  v("tau", x.tau);
  v("x_at_tau", x.x_at_tau);
  v("overshoot", x.overshoot);
  v("undershoot", x.undershoot);
  v("g_last_max", x.g_last_max);
  v("ruined", x.ruined);
}
template <class V> void visit_fields(SimConfig& x, V&& v) {
  v("epsilon", x.epsilon);
  v("dt", x.dt);
  v("horizon", x.horizon);
  v("t_max", x.t_max);
  v("seed", x.seed);
  v("bridge_correction", x.bridge_correction);
  v("rate_cap", x.rate_cap);
}
template <class V> void visit_fields(JumpSpec& x, V&& v) {
  v("law", x.law);
  v("params", x.params);
}
template <class V> void visit_fields(TailPieceSpec& x, V&& v) {
  v("until", x.until);
  v("expr", x.expr);
}
template <class V> void visit_fields(ModelSpec& x, V&& v) {
  v("family", x.family);
  v("params", x.params);
  v("jumps", x.jumps);
  v("limit", x.limit);
  v("pos_tail", x.pos_tail);
  v("neg_tail", x.neg_tail);
  v("name", x.name);
}
template <class V> void visit_fields(AsStabilitySettings& x, V&& v) {
  v("band", x.band);
  v("required_fraction", x.required_fraction);
  v("k_last", x.k_last);
}
template <class V> void visit_fields(DemoSettings& x, V&& v) {
  v("dt_fraction", x.dt_fraction);
  v("eps_fraction", x.eps_fraction);
}
template <class V> void visit_fields(ExperimentSpec& x, V&& v) {
  v("experiment", x.experiment);
  v("model", x.model);
  v("regime", x.regime);
  v("grid", x.grid);
  v("u_grid", x.u_grid);
  v("n", x.n);
  v("sim", x.sim);
  v("rho", x.rho);
  v("lt", x.lt);
  v("times", x.times);
  v("as_stability", x.as);
  v("demo", x.demo);
  v("output_path", x.output_path);
  v("format", x.format);
}

template <class T>
concept Visitable = requires(T& t) { visit_fields(t, [](const char*, auto&) {}); };

// ---------------------------------------------------------------------------
// JSON encode / decode

/// Non-finite doubles become the strings "nan", "inf", "-inf".
inline Json encode(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}
inline Json encode(bool x) { return x; }
inline Json encode(const std::string& x) { return x; }
inline Json encode(Verdict x) { return to_string(x); }
inline Json encode(Regime x) { return to_string(x); }
inline Json encode(ExperimentKind x) { return to_string(x); }
inline Json encode(OutputFormat x) { return to_string(x); }
template <class T>
  requires std::is_integral_v<T>
Json encode(T x) {
  return x;
}
template <class T> Json encode(const std::vector<T>& xs);
template <class T> Json encode(const std::optional<T>& x);
template <class T> Json encode(const std::map<std::string, T>& xs);
template <Visitable T> Json encode(const T& x);

template <class T> Json encode(const std::vector<T>& xs) {
  Json j = Json::array();
  for (const auto& x : xs) j.push_back(encode(x));
  return j;
}
template <class T> Json encode(const std::optional<T>& x) { return x ? encode(*x) : Json(nullptr); }
template <class T> Json encode(const std::map<std::string, T>& xs) {
  Json j = Json::object();
  for (const auto& [k, x] : xs) j[k] = encode(x);
  return j;
}
template <Visitable T> Json encode(const T& x) {
  Json j = Json::object();
  visit_fields(const_cast<T&>(x), [&](const char* key, const auto& field) { j[key] = encode(field); });
  return j;
}

class JsonFormatError : public Error {
 public:
  using Error::Error;
};

inline void decode(const Json& j, double& x) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan")
      x = std::numeric_limits<double>::quiet_NaN();
    else if (s == "inf")
      x = kInf;
    else if (s == "-inf")
      x = -kInf;
    else
      throw JsonFormatError("bad number '" + s + "'");
    return;
  }
  if (!j.is_number()) throw JsonFormatError("expected a number");
  x = j.get<double>();
}
inline void decode(const Json& j, bool& x) { x = j.get<bool>(); }
inline void decode(const Json& j, std::string& x) { x = j.get<std::string>(); }
inline void decode(const Json& j, Verdict& x) {
  const auto s = j.get<std::string>();
  for (Verdict v : {Verdict::Yes, Verdict::No, Verdict::Inconclusive})
    if (to_string(v) == s) {
      x = v;
      return;
    }
  throw JsonFormatError("bad verdict '" + s + "'");
}
inline void decode(const Json& j, Regime& x) {
  auto r = parse_regime(j.get<std::string>());
  if (!r) throw JsonFormatError("bad regime");
  x = *r;
}
inline void decode(const Json& j, ExperimentKind& x) {
  auto k = parse_experiment(j.get<std::string>());
  if (!k) throw JsonFormatError("bad experiment");
  x = *k;
}
inline void decode(const Json& j, OutputFormat& x) {
  x = j.get<std::string>() == "json" ? OutputFormat::Json : OutputFormat::Csv;
}
template <class T>
  requires std::is_integral_v<T>
void decode(const Json& j, T& x) {
  x = j.get<T>();
}
template <class T> void decode(const Json& j, std::vector<T>& xs);
template <class T> void decode(const Json& j, std::optional<T>& x);
template <class T> void decode(const Json& j, std::map<std::string, T>& xs);
template <Visitable T> void decode(const Json& j, T& x);

template <class T> void decode(const Json& j, std::vector<T>& xs) {
  if (!j.is_array()) throw JsonFormatError("expected an array");
  xs.clear();
  for (const auto& e : j) {
    T x{};
    decode(e, x);
    xs.push_back(std::move(x));
  }
}
template <class T> void decode(const Json& j, std::optional<T>& x) {
  if (j.is_null()) {
    x.reset();
    return;
  }
  T v{};
  decode(j, v);
  x = std::move(v);
}
template <class T> void decode(const Json& j, std::map<std::string, T>& xs) {
  xs.clear();
  for (auto it = j.begin(); it != j.end(); ++it) decode(it.value(), xs[it.key()]);
}
template <Visitable T> void decode(const Json& j, T& x) {
  if (!j.is_object()) throw JsonFormatError("expected an object");
  visit_fields(x, [&](const char* key, auto& field) {
    if (!j.contains(key)) throw JsonFormatError(std::string("missing field '") + key + "'");
    decode(j.at(key), field);
  });
}

template <class T> T from_json(const Json& j) {
  T x{};
  decode(j, x);
  return x;
}

// ---------------------------------------------------------------------------
// CSV

/// 17 significant digits; non-finite values as nan / inf / -inf.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double verdict_code(Verdict v) {
  switch (v) {
    case Verdict::Yes: return 1.0;
    case Verdict::No: return 0.0;
    case Verdict::Inconclusive: break;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

struct StatRow {
  double u = std::numeric_limits<double>::quiet_NaN();
  std::string statistic;
  double value = 0.0;
  double se = std::numeric_limits<double>::quiet_NaN();
};

inline void write_long_csv(std::ostream& out, const std::string& experiment, const std::vector<StatRow>& rows) {
  out << "experiment,u,statistic,value,se\n";
  for (const auto& r : rows)
    out << experiment << ',' << format_number(r.u) << ',' << r.statistic << ',' << format_number(r.value) << ','
        << format_number(r.se) << '\n';
}

/// One row per record; replication is the index within its level.
struct RecordRow {
  PassageRecord record;
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;
};

inline void write_records_csv(std::ostream& out, const std::vector<RecordRow>& rows) {
  out << "u,tau,x_at_tau,overshoot,undershoot,g_last_max,ruined,seed,replication\n";
  for (const auto& row : rows) {
    const auto& r = row.record;
    out << format_number(r.u) << ',' << format_number(r.tau) << ',' << format_number(r.x_at_tau) << ','
        << format_number(r.overshoot) << ',' << format_number(r.undershoot) << ',' << format_number(r.g_last_max)
        << ',' << (r.ruined ? 1 : 0) << ',' << row.seed << ',' << row.replication << '\n';
  }
}

}  // namespace levy_passage
