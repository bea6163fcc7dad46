// Batch runner: levy_passage <subcommand> [--config FILE] [flags]

#include <chrono>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "levy_passage/runner.hpp"

using namespace levy_passage;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<std::string> out;
  std::optional<std::string> format;

  std::optional<std::string> family;
  std::vector<std::string> params;
  std::optional<std::string> limit;
  std::vector<double> u;
  std::optional<std::string> regime;
  std::vector<double> rho;
  std::vector<double> times;
  std::optional<double> dt, t_max, epsilon;

  std::optional<double> mu, lt_rho, lambda, nu, theta;
};

std::pair<std::string, double> split_param(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigParseError("--param", 0, "expected key=value, got '" + kv + "'");
  try {
    return {kv.substr(0, eq), std::stod(kv.substr(eq + 1))};
  } catch (const std::exception&) {
    throw ConfigParseError("--param", 0, "bad number in '" + kv + "'");
  }
}

ExperimentSpec build_spec(ExperimentKind kind, const Flags& f) {
  ExperimentSpec s;
  if (!f.config.empty()) {
    s = load_spec(f.config);
  } else {
    if (!f.family) throw ConfigParseError("model.family", 0, "give --config or --family");
    s.n = 1000;
  }
  s.experiment = kind;
  if (f.family) {
    s.model = ModelSpec{};
    s.model.family = *f.family;
  }
  for (const auto& kv : f.params) {
    auto [k, v] = split_param(kv);
    s.model.params[k] = v;
  }
  if (f.limit) s.model.limit = *f.limit;
  if (!f.u.empty()) s.u_grid = f.u;
  if (f.regime) {
    auto r = parse_regime(*f.regime);
    if (!r) throw ConfigParseError("--regime", 0, "unknown regime '" + *f.regime + "'");
    s.regime = *r;
  }
  if (!f.rho.empty()) s.rho = f.rho;
  if (!f.times.empty()) s.times = f.times;
  if (f.dt) s.sim.dt = *f.dt;
  if (f.t_max) s.sim.t_max = *f.t_max;
  if (f.epsilon) s.sim.epsilon = *f.epsilon;
  if (f.seed) s.sim.seed = *f.seed;
  if (f.reps) s.n = *f.reps;
  if (f.out) s.output_path = *f.out;
  if (f.format) s.format = *f.format == "json" ? OutputFormat::Json : OutputFormat::Csv;
  if (f.mu || f.lt_rho || f.lambda || f.nu || f.theta) {
    LtParams p;
    p.mu = f.mu.value_or(1.0);
    p.rho = f.lt_rho.value_or(0.0);
    p.lambda = f.lambda.value_or(0.0);
    p.nu = f.nu.value_or(0.0);
    p.theta = f.theta.value_or(0.0);
    s.lt = {p};
  }
  s.sim.validate();
  validate_spec(s);
  return s;
}

void print_summary(const ExperimentSpec& spec, const RunResult& r, const std::vector<std::string>& files) {
  for (const auto& w : r.warnings) std::cout << "warning: " << w << '\n';
  if (spec.experiment == ExperimentKind::Classify && !r.detail.empty()) {
    const auto v = from_json<StabilityVerdict>(r.detail.front());
    std::cout << "regime " << to_string(v.regime) << ": verdict " << to_string(v.holds) << ", c = " << format_number(v.c)
              << '\n';
    if (!v.reason.empty()) std::cout << "  " << v.reason << '\n';
  }
  const Verdict overall = r.overall();
  std::cout << to_string(spec.experiment) << ": verdict " << to_string(overall) << '\n';
  if (overall == Verdict::Inconclusive) std::cout << "warning: verdict inconclusive, treated as success\n";
  for (const auto& f : files) std::cout << "wrote " << spec.output_path << '/' << f << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"First-passage stability experiments for Levy processes"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("--config", f.config, "experiment YAML file");
  app.add_option("--seed", f.seed, "64-bit seed");
  app.add_option("--reps", f.reps, "replications (overrides n)");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  std::map<CLI::App*, ExperimentKind> kinds;
  for (const auto& [kind, name] : experiment_names()) {
    auto* sub = app.add_subcommand(name);
    kinds[sub] = kind;
    sub->fallthrough();
    sub->add_option("--family", f.family, "model family");
    sub->add_option("--param", f.params, "model parameter key=value (repeatable)");
    sub->add_option("--limit", f.limit, "appendix_ce2 limit point: zero | infinity");
    sub->add_option("--u", f.u, "level grid")->delimiter(',');
    sub->add_option("--rho", f.rho, "overshoot weights")->delimiter(',');
    sub->add_option("--dt", f.dt, "skeleton step");
    sub->add_option("--t-max", f.t_max, "time cap");
    sub->add_option("--epsilon", f.epsilon, "small-jump cutoff");
    if (kind == ExperimentKind::Classify) sub->add_option("--regime", f.regime, "ProbLarge, ProbSmall, ...");
    if (kind == ExperimentKind::AppendixDemo) sub->add_option("--times", f.times, "time grid")->delimiter(',');
    if (kind == ExperimentKind::LtIdentity) {
      sub->add_option("--mu", f.mu);
      sub->add_option("--lt-rho", f.lt_rho);
      sub->add_option("--lambda", f.lambda);
      sub->add_option("--nu", f.nu);
      sub->add_option("--theta", f.theta);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const ExperimentKind kind = kinds.at(app.get_subcommands().front());
    const ExperimentSpec spec = build_spec(kind, f);
    const auto t0 = std::chrono::steady_clock::now();
    const RunResult r = run(spec);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto files = write_outputs(spec, r, wall);
    print_summary(spec, r, files);
    return exit_status(r);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
