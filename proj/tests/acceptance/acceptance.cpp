// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <array>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "levy_passage/levy_passage.hpp"
#include "levy_passage/report.hpp"

using namespace levy_passage;

namespace {

void note(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void note(const char* fmt, ...) {
  std::printf("    ");
  va_list ap;
  va_start(ap, fmt);
  std::vprintf(fmt, ap);
  va_end(ap);
  std::printf("\n");
}

// Records a sub-check and prints it.
struct Checks {
  bool ok = true;
  void operator()(bool cond, const std::string& what) {
    note("[%s] %s", cond ? "ok" : "FAILED", what.c_str());
    ok = ok && cond;
  }
};

std::string fmt(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

SimConfig sim(std::uint64_t seed, double dt = 1e-3) {
  SimConfig c;
  c.seed = seed;
  c.dt = dt;
  return c;
}

// 1. Drift minus Poisson, a = 2, at small levels.
bool drift_minus_poisson_small_levels() {
  Checks check;
  const double a = 2.0;
  const auto m = drift_minus_poisson(a);
  const Dynamics dyn = simulation_dynamics(m, sim(101));
  const double u = 0.01;

  const auto recs = run_passages(m, dyn, sim(101), u, 10000);
  std::size_t exact = 0;
  for (const auto& r : recs) exact += (r.ruined && r.tau == u / a) ? 1 : 0;
  const double frac = static_cast<double>(exact) / static_cast<double>(recs.size());
  const double floor = std::exp(-0.005) - 0.01;
  check(frac >= floor, "P(tau_u = u/2) at u = 0.01: " + fmt(frac) + " >= " + fmt(floor));

  // Independent oracle for E tau_1, then E tau_u / u against (1 + E tau_1)/a.
  const auto oracle = run_passages(m, simulation_dynamics(m, sim(102)), sim(102), 1.0, 100000);
  RunningStats t1;
  for (const auto& r : oracle) t1.add(r.tau);
  const double target = (1.0 + t1.mean()) / a;
  const auto big = run_passages(m, dyn, sim(103), u, 100000);
  RunningStats ratio;
  for (const auto& r : big) {
    if (!r.ruined) throw HorizonTooShortError("censored passage");
    ratio.add(r.tau / u);
  }
  check(std::abs(ratio.mean() - target) <= 3.0 * ratio.se(),
        "E tau_u/u = " + fmt(ratio.mean()) + " +- " + fmt(ratio.se()) + " vs (1+E tau_1)/2 = " + fmt(target) +
            " (E tau_1 = " + fmt(t1.mean()) + ")");

  const LadderHooks h = ladder_hooks(m);
  check(h.d_H && *h.d_H == 2.0, "d_H = " + (h.d_H ? fmt(*h.d_H, 17) : std::string("none")));
  check(h.d_L_inv && *h.d_L_inv == 1.0, "d_{L^-1} = " + (h.d_L_inv ? fmt(*h.d_L_inv, 17) : std::string("none")));
  return check.ok;
}

// 2. Inverse Gaussian passage time for Brownian motion with drift.
bool inverse_gaussian_oracle() {
  Checks check;
  const double gamma = 1.0, sigma2 = 1.0, u = 20.0;
  const auto m = brownian_drift(gamma, sigma2);
  const SimConfig c = sim(201, 1e-2);
  const auto recs = run_passages(m, simulation_dynamics(m, c), c, u, 100000);
  RunningStats s;
  for (const auto& r : recs) s.add(r.tau);
  const double var_target = u * sigma2 / (gamma * gamma * gamma);
  check(std::abs(s.mean() - u / gamma) <= 0.01 * u / gamma, "mean tau = " + fmt(s.mean()) + " within 1% of 20");
  check(std::abs(s.variance() - var_target) <= 0.10 * var_target,
        "var tau = " + fmt(s.variance()) + " within 10% of " + fmt(var_target));
  return check.ok;
}

// 3. Classifier table (docs/verdicts.md).
bool classifier_table() {
  Checks check;
  struct Row {
    std::string label;
    LevyModel model;
    Regime regime;
    Verdict expected;
    double c;  // NaN when no constant is expected
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::vector<Row> table = {
      {"BrownianDrift(1,1) large", brownian_drift(1.0, 1.0), Regime::ProbLarge, Verdict::Yes, 1.0},
      {"BrownianDrift(1,1) small", brownian_drift(1.0, 1.0), Regime::ProbSmall, Verdict::No, nan},
      {"DriftMinusPoisson(2) large", drift_minus_poisson(2.0), Regime::ProbLarge, Verdict::Yes, 1.0},
      {"DriftMinusPoisson(2) small", drift_minus_poisson(2.0), Regime::ProbSmall, Verdict::Yes, 2.0},
      {"AppendixCE1 small", make_appendix_ce1(), Regime::ProbSmall, Verdict::No, nan},
      {"AppendixCE2(0.75, L=0) small", make_appendix_ce2(0.75, LimitPoint::Zero), Regime::ProbSmall, Verdict::No,
       nan},
      {"AppendixCE2(0.75, L=inf) large", make_appendix_ce2(0.75, LimitPoint::Infinity), Regime::ProbLarge,
       Verdict::No, nan},
  };
  for (const auto& row : table) {
    const auto v = classify_stability(row.model, row.regime, default_grid(row.regime));
    bool ok = v.holds == row.expected;
    if (!std::isnan(row.c)) ok = ok && std::abs(v.c - row.c) <= 0.02 * row.c;
    check(ok, row.label + " " + to_string(row.regime) + ": " + to_string(v.holds) + ", c = " + fmt(v.c) + " (" +
                  v.reason + ")");
  }
  return check.ok;
}

// 4. LT identity on a 12-point lattice for both closed-form backends.
bool lt_identity_lattice() {
  Checks check;
  struct Backend {
    std::string label;
    LevyModel model;
  };
  const std::vector<Backend> backends = {{"spectrally negative", spectrally_negative(2.0, 0.0, 1.0, 1.0)},
                                         {"drift minus Poisson", drift_minus_poisson(2.0)}};
  // (rho, lambda, nu, theta); each mu shares one set of paths.
  const std::vector<std::array<double, 4>> tuples = {
      {0.0, 0.0, 0.0, 1.0}, {0.0, 1.0, 0.0, 0.0}, {0.0, 0.0, 1.0, 0.0}, {0.25, 0.5, 0.5, 0.5}};
  for (const auto& b : backends) {
    const LadderExponent k = ladder_exponent(b.model);
    const SimConfig c = sim(401);
    const Dynamics dyn = simulation_dynamics(b.model, c);
    double worst = 0.0;
    for (double mu : {0.5, 1.0, 2.0}) {
      const auto recs = lt_records(b.model, dyn, c, mu, 100000);
      for (const auto& t : tuples) {
        const LtParams p{mu, t[0], t[1], t[2], t[3]};
        const LtReport rep = lt_report(recs, k, p);
        worst = std::max(worst, std::abs(rep.z));
        if (!(std::abs(rep.z) <= 3.0))
          check(false, b.label + " mu=" + fmt(mu) + " (" + fmt(t[0]) + "," + fmt(t[1]) + "," + fmt(t[2]) + "," +
                           fmt(t[3]) + "): lhs " + fmt(rep.lhs) + " rhs " + fmt(rep.rhs) + " z " + fmt(rep.z));
      }
    }
    check(worst <= 3.0, b.label + " (" + to_string(k.backend) + "): 12 points, max |z| = " + fmt(worst, 3));
  }
  return check.ok;
}

// 5. kappa ratio for the bounded-variation spectrally negative model with drift 2.
bool kappa_ratio() {
  Checks check;
  const auto k = ladder_exponent(spectrally_negative(2.0, 0.0, 1.0, 1.0));
  const double x = 1e4;
  for (double xi : {0.5, 1.0, 2.0}) {
    const double r = k(x, 0.0) / k(x, xi * x);
    const double target = 1.0 / (1.0 + 2.0 * xi);
    check(std::abs(r - target) <= 0.02, "xi = " + fmt(xi) + ": " + fmt(r) + " vs " + fmt(target));
  }
  return check.ok;
}

// 6. E tau_u = E L_1^{-1} V_H(u) against the direct estimate.
bool renewal_identity() {
  Checks check;
  const auto m = drift_minus_poisson(2.0);
  const std::vector<double> levels = {1.0, 5.0, 20.0};
  SimConfig c = sim(601);
  c.horizon = 400.0;
  const auto v = renewal_estimate(m, c, levels, 4000);
  RunningStats direct[3];
  const SimConfig cd = sim(602);
  const Dynamics dyn = simulation_dynamics(m, cd);
  for (std::size_t i = 0; i < levels.size(); ++i)
    for (const auto& r : run_passages(m, dyn, cd, levels[i], 10000)) direct[i].add(r.tau);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const double u = v.u_grid[i];
    const double lhs = v.EL1_inv * v.values[i];
    const double lhs_se = std::hypot(v.EL1_inv_se * v.values[i], v.EL1_inv * v.se[i]);
    const double se = std::hypot(lhs_se, direct[i].se());
    check(std::abs(lhs - direct[i].mean()) <= 3.0 * se, "u = " + fmt(u) + ": renewal " + fmt(lhs) + " vs direct " +
                                                            fmt(direct[i].mean()) + " (3 se = " + fmt(3 * se) + ")");
  }
  return check.ok;
}

// 7. Cramer-Lundberg lambda = 1, alpha = 2, premium 1.
bool cramer_suite() {
  Checks check;
  const auto m = cramer_lundberg(1.0, 2.0, 1.0);
  const double nu0 = solve_lundberg(m);
  check(std::abs(nu0 - 1.0) <= 1e-10, "nu0 = " + fmt(nu0, 17));
  const TiltedModel t = esscher_tilt(m, nu0);
  std::uint64_t seed = 701;
  for (double u : {1.0, 2.0, 5.0}) {
    const auto e = ruin_is(t, sim(seed++), u, 100000);
    const double exact = 0.5 * std::exp(-u);
    check(std::abs(e.psi_hat - exact) <= 3.0 * e.se,
          "psi(" + fmt(u) + ") = " + fmt(e.psi_hat) + " +- " + fmt(e.se) + " vs " + fmt(exact));
  }
  const auto res = conditional_stability_experiment(m, sim(710), {50.0}, 100000);
  const auto& e = res.front();
  const double target = 1.0 / t.mu_star;
  auto in_band = [](double est, double se, double tgt) { return std::abs(est - tgt) <= 3.0 * se + 0.02 * tgt; };
  check(in_band(e.cond_tau_ratio, e.cond_tau_se, target),
        "cond tau/u = " + fmt(e.cond_tau_ratio) + " +- " + fmt(e.cond_tau_se) + " vs " + fmt(target));
  check(in_band(e.cond_g_ratio, e.cond_g_se, target),
        "cond G/u = " + fmt(e.cond_g_ratio) + " +- " + fmt(e.cond_g_se) + " vs " + fmt(target));
  check(in_band(e.cond_x_ratio, e.cond_x_se, 1.0),
        "cond X/u = " + fmt(e.cond_x_ratio) + " +- " + fmt(e.cond_x_se) + " vs 1");
  return check.ok;
}

// 8. Appendix counterexamples, qualitative.
bool appendix_counterexamples() {
  Checks check;
  SimConfig c1 = sim(801);
  c1.rate_cap = 1e13;
  const auto q1 = time_ratio_quantiles(make_appendix_ce1(), c1, {1e-4, 1e-5, 1e-6}, 2000, 1e-3, 1e-4);
  for (std::size_t i = 0; i < q1.size(); ++i) {
    const auto& q = q1[i];
    note("CE1 t=%-8s median X/t %-10s q10 max/t %-10s median max/t %s", fmt(q.t).c_str(), fmt(q.x_median).c_str(),
         fmt(q.max_q10).c_str(), fmt(q.max_median).c_str());
    check(q.x_median <= -0.5, "CE1 median X_t/t <= -0.5 at t = " + fmt(q.t));
    check(q.max_q10 >= -0.1, "CE1 q10 of running max/t >= -0.1 at t = " + fmt(q.t));
    check(q.max_median >= 0.0, "CE1 median running max/t >= 0 at t = " + fmt(q.t));
    if (i > 0)
      check(std::abs(q.x_median + 1.0) < std::abs(q1[i - 1].x_median + 1.0),
            "CE1 median X_t/t closer to -1 at t = " + fmt(q.t));
  }
  SimConfig c2 = sim(802);
  c2.t_max = 2e4;
  const auto q2 = time_ratio_quantiles(make_appendix_ce2(0.75, LimitPoint::Infinity), c2, {1e2, 1e3, 1e4}, 1000);
  for (std::size_t i = 0; i < q2.size(); ++i) {
    const auto& q = q2[i];
    note("CE2 t=%-8s median X/t %-10s median max/t %s", fmt(q.t).c_str(), fmt(q.x_median).c_str(),
         fmt(q.max_median).c_str());
    if (i > 0) {
      check(q.max_median > q2[i - 1].max_median, "CE2 median running max/t increases at t = " + fmt(q.t));
      check(q.x_median < q2[i - 1].x_median, "CE2 median X_t/t decreases at t = " + fmt(q.t));
    }
  }
  return check.ok;
}

// 9. Property suites.
bool property_suites() {
  Checks check;
  const std::vector<LevyModel> models = {brownian_drift(1.0, 1.0),
                                         brownian_drift(-1.0, 2.0),
                                         drift_minus_poisson(2.0),
                                         cramer_lundberg(1.0, 2.0, 1.0),
                                         spectrally_negative(2.0, 0.0, 1.0, 1.0),
                                         compound_poisson_drift(0.3, 2.0, JumpLaw::normal(0.2, 1.5), 0.5),
                                         compound_poisson_drift(-0.1, 1.5, JumpLaw::double_exponential(0.4, 3.0, 2.0)),
                                         make_appendix_ce1(),
                                         make_appendix_ce2(0.75, LimitPoint::Zero),
                                         make_appendix_ce2(0.75, LimitPoint::Infinity)};

  {  // pathwise inclusion
    const std::vector<LevyModel> pm = {brownian_drift(0.5, 1.0), drift_minus_poisson(2.0),
                                       cramer_lundberg(1.0, 2.0, 1.0), spectrally_negative(1.0, 1.0, 1.0, 2.0)};
    std::mt19937_64 gen(901);
    std::size_t queries = 0, violations = 0;
    for (const auto& m : pm) {
      SimConfig c = sim(902, 1e-2);
      c.horizon = 20.0;
      for (std::uint64_t r = 0; r < 5; ++r) {
        const SamplePath path = simulate_path(m, c, r);
        std::uniform_real_distribution<double> ut(0.0, path.end_time());
        std::uniform_real_distribution<double> uu(1e-3, std::max(1e-2, 1.2 * path.running_max(path.end_time())));
        for (int q = 0; q < 500; ++q) {
          const double t = ut(gen), u = uu(gen);
          const double tau = path.first_passage(u);
          const double mx = path.running_max(t);
          if ((tau > t && mx > u) || (mx <= u && tau < t)) ++violations;
          ++queries;
        }
      }
    }
    check(queries == 10000 && violations == 0,
          "pathwise inclusion: " + std::to_string(queries) + " queries, " + std::to_string(violations) + " violations");
  }
  {  // seed determinism, byte for byte
    auto dump = [] {
      const auto m = spectrally_negative(2.0, 0.5, 1.0, 1.5);
      const SimConfig c = sim(903);
      const Dynamics dyn = simulation_dynamics(m, c);
      std::vector<RecordRow> rows;
      for (double u : {0.5, 3.0}) {
        const auto recs = run_passages(m, dyn, c, u, 500);
        for (std::size_t r = 0; r < recs.size(); ++r) rows.push_back({recs[r], c.seed, r});
      }
      std::ostringstream s;
      write_records_csv(s, rows);
      return s.str();
    };
    const std::string a = dump(), b = dump();
    check(a == b && a.size() > 1000, "seed determinism: " + std::to_string(a.size()) + " bytes identical");
  }
  {  // A(x) two ways
    double worst = 0.0;
    for (const auto& m : models)
      for (int e = -12; e <= 12; ++e) {
        const double x = std::pow(10.0, 0.5 * e);
        const double a1 = truncated_mean(m, x), a2 = truncated_mean_direct(m, x);
        worst = std::max(worst, std::abs(a1 - a2) / (1.0 + std::abs(a1)));
      }
    check(worst <= 1e-6, "A(x) dual forms: max relative gap " + fmt(worst, 3));
  }
  {  // psi convex where finite
    double worst = 0.0;
    for (const auto& m : models) {
      std::vector<double> v;
      for (int i = -40; i <= 40; ++i) v.push_back(cumulant(m, 0.05 * i));
      for (std::size_t i = 1; i + 1 < v.size(); ++i)
        if (std::isfinite(v[i - 1]) && std::isfinite(v[i]) && std::isfinite(v[i + 1]))
          worst = std::min(worst, v[i - 1] - 2.0 * v[i] + v[i + 1]);
    }
    check(worst >= -1e-9, "psi convexity: min second difference " + fmt(worst, 3));
  }
  {  // overshoot weights monotone in rho
    const auto m = compound_poisson_drift(1.0, 1.0, JumpLaw::exponential(2.0, +1));
    const auto r = overshoot_law_experiment(m, sim(904), 20.0, 4000, {0.0, 0.5, 1.0, 2.0, 4.0, 8.0});
    bool mono = true;
    for (std::size_t k = 1; k < r.result.weighted.size(); ++k)
      mono = mono && r.result.weighted[k].tau_mean <= r.result.weighted[k - 1].tau_mean &&
             r.result.weighted[k].g_mean <= r.result.weighted[k - 1].g_mean;
    check(mono, "overshoot weights nonincreasing in rho over 6 values");
  }
  {  // Wald and ladder drift cross-checks
    const auto m = drift_minus_poisson(2.0);
    SimConfig c = sim(905);
    c.horizon = 200.0;
    const auto v = renewal_estimate(m, c, {1.0, 5.0}, 2000);
    const double ex1 = mean(m);
    check(std::abs(v.EH1 - ex1 * v.EL1_inv) <= 3.0 * ex1 * v.EL1_inv_se + 1e-12,
          "Wald: E H_1 = " + fmt(v.EH1) + " vs E X_1 E L_1^{-1} = " + fmt(ex1 * v.EL1_inv));
    for (const auto& bv : {drift_minus_poisson(2.0), spectrally_negative(2.0, 0.0, 1.0, 1.0),
                           compound_poisson_drift(1.0, 1.0, JumpLaw::exponential(2.0, -1))}) {
      const LadderHooks h = ladder_hooks(bv);
      const double dx = *bv.drift_bv();
      const bool ok = h.d_H && h.d_L_inv && std::abs(*h.d_L_inv * dx - *h.d_H) <= 1e-12 * *h.d_H;
      check(ok, bv.name() + ": d_{L^-1} d_X = " + (h.d_L_inv ? fmt(*h.d_L_inv * dx) : std::string("none")) +
                    ", d_H = " + (h.d_H ? fmt(*h.d_H) : std::string("none")));
    }
  }
  return check.ok;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<bool()> body;
  };
  const std::vector<Criterion> criteria = {
      {1, "drift minus Poisson small-level reproduction", drift_minus_poisson_small_levels},
      {2, "inverse Gaussian oracle", inverse_gaussian_oracle},
      {3, "stability classifier table", classifier_table},
      {4, "LT identity lattice", lt_identity_lattice},
      {5, "kappa ratio criterion", kappa_ratio},
      {6, "renewal identity", renewal_identity},
      {7, "Cramer suite", cramer_suite},
      {8, "appendix counterexamples", appendix_counterexamples},
      {9, "property suites", property_suites},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    std::printf("criterion %d: %s\n", c.id, c.name);
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = c.body();
    } catch (const std::exception& e) {
      note("error: %s", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d (%s) [%.1fs]\n", ok ? "PASS" : "FAIL", c.id, c.name, secs);
    std::fflush(stdout);
    failed += ok ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
