#pragma once

// Experiment files: YAML in, ExperimentSpec out. Needs yaml-cpp at link time.

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "expression.hpp"
#include "jump_law.hpp"
#include "ladder_exponent.hpp"
#include "levy_model.hpp"
#include "path_sim.hpp"

namespace levy_passage {

enum class ExperimentKind {
  Classify,
  Simulate,
  Stability,
  AsStability,
  MeanExit,
  LastMax,
  Overshoot,
  LtIdentity,
  Ruin,
  Conditional,
  AppendixDemo,
};

enum class OutputFormat { Csv, Json };

inline const std::vector<std::pair<ExperimentKind, std::string>>& experiment_names() {
  static const std::vector<std::pair<ExperimentKind, std::string>> names = {
      {ExperimentKind::Classify, "classify"},       {ExperimentKind::Simulate, "simulate"},
      {ExperimentKind::Stability, "stability"},     {ExperimentKind::AsStability, "as-stability"},
      {ExperimentKind::MeanExit, "mean-exit"},      {ExperimentKind::LastMax, "last-max"},
      {ExperimentKind::Overshoot, "overshoot"},     {ExperimentKind::LtIdentity, "lt-identity"},
      {ExperimentKind::Ruin, "ruin"},               {ExperimentKind::Conditional, "conditional"},
      {ExperimentKind::AppendixDemo, "appendix-demo"},
  };
  return names;
}

inline std::string to_string(ExperimentKind k) {
  for (const auto& [kind, name] : experiment_names())
    if (kind == k) return name;
  return "unknown";
}

inline std::optional<ExperimentKind> parse_experiment(const std::string& s) {
  for (const auto& [kind, name] : experiment_names())
    if (name == s) return kind;
  return std::nullopt;
}

inline std::string to_string(OutputFormat f) { return f == OutputFormat::Csv ? "csv" : "json"; }

inline std::optional<Regime> parse_regime(const std::string& s) {
  for (Regime r : {Regime::ProbLarge, Regime::ProbSmall, Regime::ASLarge, Regime::ASSmall, Regime::MeanLarge,
                   Regime::MeanSmall})
    if (to_string(r) == s) return r;
  return std::nullopt;
}

/// Everything needed to rebuild a model, kept so it can be echoed back.
struct JumpSpec {
  std::string law;  // exponential | normal | double_exponential | uniform | point
  std::map<std::string, double> params;
};

struct TailPieceSpec {
  double until = 0.0;
  std::string expr;
};

struct ModelSpec {
  std::string family;
  std::map<std::string, double> params;
  std::optional<JumpSpec> jumps;
  std::string limit;  // appendix_ce2: zero | infinity
  std::vector<TailPieceSpec> pos_tail, neg_tail;
  std::string name;
};

struct AsStabilitySettings {
  double band = 0.15;
  double required_fraction = 0.95;
  std::size_t k_last = 3;
};

struct DemoSettings {
  double dt_fraction = 1e-3;
  double eps_fraction = 1e-4;
};

struct ExperimentSpec {
  ExperimentKind experiment = ExperimentKind::Classify;
  ModelSpec model;
  std::optional<Regime> regime;
  std::vector<double> grid;  // classify only; empty means default_grid(regime)
  std::vector<double> u_grid;
  std::size_t n = 1000;
  SimConfig sim;
  std::vector<double> rho = {0.0};
  std::vector<LtParams> lt;
  std::vector<double> times;
  AsStabilitySettings as;
  DemoSettings demo;
  std::string output_path = "results";
  OutputFormat format = OutputFormat::Csv;
};

inline bool needs_monte_carlo(ExperimentKind k) { return k != ExperimentKind::Classify; }

// ---------------------------------------------------------------------------
// Model construction

namespace detail {

inline double need(const std::map<std::string, double>& p, const std::string& key, const std::string& family) {
  auto it = p.find(key);
  if (it == p.end()) throw ConfigParseError("model.params." + key, 0, "family '" + family + "' needs '" + key + "'");
  return it->second;
}

inline double get_or(const std::map<std::string, double>& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

inline JumpLaw build_jump_law(const JumpSpec& j) {
  const auto& p = j.params;
  const std::string f = "jumps." + j.law;
  if (j.law == "exponential") return JumpLaw::exponential(need(p, "rate", f), static_cast<int>(get_or(p, "sign", 1.0)));
  if (j.law == "normal") return JumpLaw::normal(need(p, "mean", f), need(p, "sd", f));
  if (j.law == "double_exponential")
    return JumpLaw::double_exponential(need(p, "p_up", f), need(p, "rate_up", f), need(p, "rate_down", f));
  if (j.law == "uniform") return JumpLaw::uniform(need(p, "lo", f), need(p, "hi", f));
  if (j.law == "point") return JumpLaw::point(need(p, "value", f));
  throw ConfigParseError("model.jumps.law", 0, "unknown jump law '" + j.law + "'");
}

inline PiecewiseTail build_tail(const std::vector<TailPieceSpec>& pieces) {
  std::vector<PiecewiseTail::Piece> out;
  for (const auto& p : pieces) out.push_back({p.until, Expression::parse(p.expr)});
  return PiecewiseTail(std::move(out));
}

}  // namespace detail

inline LevyModel build_model(const ModelSpec& s) {
  const auto& p = s.params;
  const std::string& f = s.family;
  using detail::need;
  if (f == "brownian_drift") return brownian_drift(need(p, "gamma", f), detail::get_or(p, "sigma2", 0.0));
  if (f == "compound_poisson") {
    if (!s.jumps) throw ConfigParseError("model.jumps", 0, "compound_poisson needs a 'jumps' block");
    return compound_poisson_drift(need(p, "drift", f), need(p, "rate", f), detail::build_jump_law(*s.jumps),
                                  detail::get_or(p, "sigma2", 0.0));
  }
  if (f == "cramer_lundberg") return cramer_lundberg(need(p, "lambda", f), need(p, "alpha", f), need(p, "p", f));
  if (f == "drift_minus_poisson") return drift_minus_poisson(need(p, "a", f));
  if (f == "spectrally_negative")
    return spectrally_negative(need(p, "drift", f), detail::get_or(p, "sigma2", 0.0), need(p, "lambda", f),
                               need(p, "beta", f));
  if (f == "appendix_ce1") return make_appendix_ce1();
  if (f == "appendix_ce2") {
    LimitPoint lp;
    if (s.limit == "zero")
      lp = LimitPoint::Zero;
    else if (s.limit == "infinity")
      lp = LimitPoint::Infinity;
    else
      throw ConfigParseError("model.limit", 0, "appendix_ce2 needs limit: zero | infinity");
    return make_appendix_ce2(need(p, "beta", f), lp);
  }
  if (f == "custom") {
    if (s.pos_tail.empty() && s.neg_tail.empty())
      throw ConfigParseError("model.pos_tail", 0, "custom family needs pos_tail and/or neg_tail");
    return make_custom(detail::get_or(p, "gamma", 0.0), detail::get_or(p, "sigma2", 0.0),
                       detail::build_tail(s.pos_tail), detail::build_tail(s.neg_tail),
                       s.name.empty() ? "custom" : s.name);
  }
  throw ConfigParseError("model.family", 0, "unknown family '" + f + "'");
}

// ---------------------------------------------------------------------------
// YAML parsing

namespace detail {

inline int line_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().line + 1; }

struct Reader {
  static double number(const YAML::Node& n, const std::string& field) {
    if (!n.IsScalar()) throw ConfigParseError(field, line_of(n), "expected a number");
    const std::string s = n.Scalar();
    if (s == "inf" || s == ".inf" || s == "infinity") return kInf;
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigParseError(field, line_of(n), "'" + s + "' is not a number");
    }
  }

  static std::string text(const YAML::Node& n, const std::string& field) {
    if (!n.IsScalar()) throw ConfigParseError(field, line_of(n), "expected a string");
    return n.Scalar();
  }

  static std::uint64_t count(const YAML::Node& n, const std::string& field) {
    const double v = number(n, field);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1.8e19)
      throw ConfigParseError(field, line_of(n), "expected a nonnegative integer");
    return static_cast<std::uint64_t>(v);
  }

  static bool flag(const YAML::Node& n, const std::string& field) {
    const std::string s = text(n, field);
    if (s == "true" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "no" || s == "off") return false;
    throw ConfigParseError(field, line_of(n), "expected true or false");
  }

  static std::vector<double> numbers(const YAML::Node& n, const std::string& field) {
    if (!n.IsSequence()) throw ConfigParseError(field, line_of(n), "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(number(n[i], field + "[" + std::to_string(i) + "]"));
    return out;
  }

  static std::map<std::string, double> number_map(const YAML::Node& n, const std::string& field) {
    if (!n.IsMap()) throw ConfigParseError(field, line_of(n), "expected a mapping");
    std::map<std::string, double> out;
    for (const auto& kv : n) {
      const std::string key = kv.first.as<std::string>();
      out[key] = number(kv.second, field + "." + key);
    }
    return out;
  }

  static void only_keys(const YAML::Node& n, const std::string& field, const std::vector<std::string>& allowed) {
    if (!n.IsMap()) throw ConfigParseError(field, line_of(n), "expected a mapping");
    for (const auto& kv : n) {
      const std::string key = kv.first.as<std::string>();
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        throw ConfigParseError(field.empty() ? key : field + "." + key, line_of(kv.first), "unknown key");
    }
  }
};

inline std::vector<TailPieceSpec> tail_pieces(const YAML::Node& n, const std::string& field) {
  if (!n.IsSequence()) throw ConfigParseError(field, line_of(n), "expected a list of {until, expr}");
  std::vector<TailPieceSpec> out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const std::string f = field + "[" + std::to_string(i) + "]";
    Reader::only_keys(n[i], f, {"until", "expr"});
    if (!n[i]["until"] || !n[i]["expr"]) throw ConfigParseError(f, line_of(n[i]), "needs 'until' and 'expr'");
    TailPieceSpec p{Reader::number(n[i]["until"], f + ".until"), Reader::text(n[i]["expr"], f + ".expr")};
    try {
      (void)Expression::parse(p.expr);
    } catch (const ExpressionError& e) {
      throw ConfigParseError(f + ".expr", line_of(n[i]["expr"]), e.what());
    }
    out.push_back(p);
  }
  return out;
}

inline ModelSpec parse_model(const YAML::Node& n) {
  Reader::only_keys(n, "model", {"family", "params", "jumps", "limit", "pos_tail", "neg_tail", "name"});
  if (!n["family"]) throw ConfigParseError("model.family", line_of(n), "missing");
  ModelSpec s;
  s.family = Reader::text(n["family"], "model.family");
  if (n["params"]) s.params = Reader::number_map(n["params"], "model.params");
  if (n["jumps"]) {
    const auto& j = n["jumps"];
    if (!j.IsMap() || !j["law"]) throw ConfigParseError("model.jumps.law", line_of(j), "missing");
    JumpSpec js;
    js.law = Reader::text(j["law"], "model.jumps.law");
    for (const auto& kv : j) {
      const std::string key = kv.first.as<std::string>();
      if (key != "law") js.params[key] = Reader::number(kv.second, "model.jumps." + key);
    }
    s.jumps = js;
  }
  if (n["limit"]) s.limit = Reader::text(n["limit"], "model.limit");
  if (n["pos_tail"]) s.pos_tail = tail_pieces(n["pos_tail"], "model.pos_tail");
  if (n["neg_tail"]) s.neg_tail = tail_pieces(n["neg_tail"], "model.neg_tail");
  if (n["name"]) s.name = Reader::text(n["name"], "model.name");
  return s;
}

inline LtParams parse_lt_point(const YAML::Node& n, const std::string& field) {
  Reader::only_keys(n, field, {"mu", "rho", "lambda", "nu", "theta"});
  LtParams p;
  if (n["mu"]) p.mu = Reader::number(n["mu"], field + ".mu");
  if (n["rho"]) p.rho = Reader::number(n["rho"], field + ".rho");
  if (n["lambda"]) p.lambda = Reader::number(n["lambda"], field + ".lambda");
  if (n["nu"]) p.nu = Reader::number(n["nu"], field + ".nu");
  if (n["theta"]) p.theta = Reader::number(n["theta"], field + ".theta");
  return p;
}

}  // namespace detail

/// Checks the invariants that do not need a model.
inline void validate_spec(const ExperimentSpec& s, int u_line = 0, int n_line = 0) {
  const auto k = s.experiment;
  const bool uses_u = k == ExperimentKind::Simulate || k == ExperimentKind::Stability ||
                      k == ExperimentKind::AsStability || k == ExperimentKind::MeanExit ||
                      k == ExperimentKind::LastMax || k == ExperimentKind::Overshoot || k == ExperimentKind::Ruin ||
                      k == ExperimentKind::Conditional;
  if (uses_u) {
    if (s.u_grid.empty()) throw ConfigParseError("u_grid", u_line, "u_grid must be nonempty");
    for (double u : s.u_grid)
      if (!(u > 0.0) || !std::isfinite(u)) throw ConfigParseError("u_grid", u_line, "levels must be positive and finite");
    if (s.u_grid.size() > 1) {
      const bool up = s.u_grid[1] > s.u_grid[0];
      for (std::size_t i = 1; i < s.u_grid.size(); ++i)
        if (up ? !(s.u_grid[i] > s.u_grid[i - 1]) : !(s.u_grid[i] < s.u_grid[i - 1]))
          throw ConfigParseError("u_grid", u_line, "u_grid must be strictly monotone");
    }
  }
  if (needs_monte_carlo(k) && s.n < 100) throw ConfigParseError("n", n_line, "n must be at least 100");
  if (k == ExperimentKind::LtIdentity && s.lt.empty())
    throw ConfigParseError("lt", 0, "lt-identity needs at least one parameter point");
  if (k == ExperimentKind::AppendixDemo && s.times.empty())
    throw ConfigParseError("times", 0, "appendix-demo needs a nonempty times list");
  if (k == ExperimentKind::Overshoot && s.rho.empty()) throw ConfigParseError("rho", 0, "rho list is empty");
  if (s.output_path.empty()) throw ConfigParseError("output.path", 0, "output path is empty");
}

inline ExperimentSpec parse_spec(const YAML::Node& root) {
  using detail::line_of;
  using detail::Reader;
  if (!root.IsMap()) throw ConfigParseError("", line_of(root), "top level must be a mapping");
  Reader::only_keys(root, "",
                    {"experiment", "model", "regime", "grid", "u_grid", "n", "seed", "sim", "rho", "lt", "times",
                     "as_stability", "demo", "output"});
  ExperimentSpec s;
  if (!root["experiment"]) throw ConfigParseError("experiment", 0, "missing");
  {
    const std::string e = Reader::text(root["experiment"], "experiment");
    auto k = parse_experiment(e);
    if (!k) throw ConfigParseError("experiment", line_of(root["experiment"]), "unknown experiment '" + e + "'");
    s.experiment = *k;
  }
  if (!root["model"]) throw ConfigParseError("model", 0, "missing");
  s.model = detail::parse_model(root["model"]);
  if (root["regime"]) {
    const std::string r = Reader::text(root["regime"], "regime");
    auto reg = parse_regime(r);
    if (!reg) throw ConfigParseError("regime", line_of(root["regime"]), "unknown regime '" + r + "'");
    s.regime = *reg;
  }
  if (root["grid"]) s.grid = Reader::numbers(root["grid"], "grid");
  int u_line = 0, n_line = 0;
  if (root["u_grid"]) {
    u_line = line_of(root["u_grid"]);
    s.u_grid = Reader::numbers(root["u_grid"], "u_grid");
  }
  if (root["n"]) {
    n_line = line_of(root["n"]);
    s.n = Reader::count(root["n"], "n");
  }
  if (root["seed"]) s.sim.seed = Reader::count(root["seed"], "seed");
  if (root["sim"]) {
    const auto& n = root["sim"];
    Reader::only_keys(n, "sim", {"dt", "epsilon", "horizon", "t_max", "bridge_correction", "rate_cap"});
    if (n["dt"]) s.sim.dt = Reader::number(n["dt"], "sim.dt");
    if (n["epsilon"]) s.sim.epsilon = Reader::number(n["epsilon"], "sim.epsilon");
    if (n["horizon"]) s.sim.horizon = Reader::number(n["horizon"], "sim.horizon");
    if (n["t_max"]) s.sim.t_max = Reader::number(n["t_max"], "sim.t_max");
    if (n["bridge_correction"]) s.sim.bridge_correction = Reader::flag(n["bridge_correction"], "sim.bridge_correction");
    if (n["rate_cap"]) s.sim.rate_cap = Reader::number(n["rate_cap"], "sim.rate_cap");
    try {
      s.sim.validate();
    } catch (const PreconditionError& e) {
      throw ConfigParseError("sim", line_of(n), e.what());
    }
  }
  if (root["rho"]) s.rho = Reader::numbers(root["rho"], "rho");
  if (root["lt"]) {
    const auto& n = root["lt"];
    if (n.IsSequence()) {
      for (std::size_t i = 0; i < n.size(); ++i)
        s.lt.push_back(detail::parse_lt_point(n[i], "lt[" + std::to_string(i) + "]"));
    } else {
      s.lt.push_back(detail::parse_lt_point(n, "lt"));
    }
  }
  if (root["times"]) s.times = Reader::numbers(root["times"], "times");
  if (root["as_stability"]) {
    const auto& n = root["as_stability"];
    Reader::only_keys(n, "as_stability", {"band", "required_fraction", "k_last"});
    if (n["band"]) s.as.band = Reader::number(n["band"], "as_stability.band");
    if (n["required_fraction"])
      s.as.required_fraction = Reader::number(n["required_fraction"], "as_stability.required_fraction");
    if (n["k_last"]) s.as.k_last = Reader::count(n["k_last"], "as_stability.k_last");
  }
  if (root["demo"]) {
    const auto& n = root["demo"];
    Reader::only_keys(n, "demo", {"dt_fraction", "eps_fraction"});
    if (n["dt_fraction"]) s.demo.dt_fraction = Reader::number(n["dt_fraction"], "demo.dt_fraction");
    if (n["eps_fraction"]) s.demo.eps_fraction = Reader::number(n["eps_fraction"], "demo.eps_fraction");
  }
  if (root["output"]) {
    const auto& n = root["output"];
    Reader::only_keys(n, "output", {"path", "format"});
    if (n["path"]) s.output_path = Reader::text(n["path"], "output.path");
    if (n["format"]) {
      const std::string f = Reader::text(n["format"], "output.format");
      if (f == "csv")
        s.format = OutputFormat::Csv;
      else if (f == "json")
        s.format = OutputFormat::Json;
      else
        throw ConfigParseError("output.format", line_of(n["format"]), "expected csv or json");
    }
  }
  validate_spec(s, u_line, n_line);
  // Surface model errors now, with the model block's line.
  try {
    (void)build_model(s.model);
  } catch (const ConfigParseError& e) {
    throw ConfigParseError(e.field(), e.line() > 0 ? e.line() : line_of(root["model"]),
                           std::string(e.what()).substr(std::string(e.what()).find(": ") + 2));
  } catch (const Error& e) {
    throw ConfigParseError("model", line_of(root["model"]), e.what());
  }
  return s;
}

inline ExperimentSpec parse_spec_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigParseError("", e.mark.is_null() ? 0 : e.mark.line + 1, e.msg);
  }
  return parse_spec(root);
}

inline ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigParseError("", 0, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spec_text(buf.str());
}

}  // namespace levy_passage
