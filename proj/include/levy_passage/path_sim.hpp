#pragma once

// Path simulation and first-passage detection.
//
// A path is produced as a sequence of segments. Each segment ends at the next
// simulated jump, the next point of the dt skeleton (only when there is a
// Gaussian part), a checkpoint, or the end of the horizon. Between those
// times the path is drift plus Brownian motion, so the endpoint is drawn
// exactly and the segment maximum is drawn exactly from the Brownian bridge.
// Jumps of modulus at most epsilon are replaced by Brownian motion with the
// same variance and a compensating drift when the measure has infinite
// activity; finite-activity models are simulated without truncation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "levy_model.hpp"
#include "rng.hpp"

namespace levy_passage {

struct SimConfig {
  double epsilon = 0.0;  // small-jump threshold; 0 selects one automatically
  double dt = 1e-3;
  double horizon = kInf;  // kInf means "until t_max"
  double t_max = 1e4;
  std::uint64_t seed = 1;
  bool bridge_correction = true;
  double rate_cap = 1e7;

  double end_time() const { return std::min(horizon, t_max); }
  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw PreconditionError("dt must be positive and finite");
    if (!(horizon > 0.0)) throw PreconditionError("horizon must be positive");
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw PreconditionError("t_max must be positive and finite");
    if (!(epsilon >= 0.0)) throw PreconditionError("epsilon must be nonnegative");
    if (!(rate_cap > 0.0)) throw PreconditionError("rate_cap must be positive");
  }
};

/// Parameters the generator actually simulates with.
struct Dynamics {
  double drift = 0.0;   // slope between jumps
  double sigma2 = 0.0;  // Gaussian variance rate, substituted small jumps included
  double rate = 0.0;    // intensity of simulated jumps
  double epsilon = 0.0; // 0 when nothing is truncated
  bool exact = true;
  std::vector<std::string> warnings;
};

namespace detail {

inline double substituted_variance(const LevyModel& m, double eps) {
  return std::max(0.0, quadratic_variation_trunc(m, eps) - m.sigma2());
}

inline double auto_epsilon(const LevyModel& m, double rate_cap, std::vector<std::string>& warnings) {
  const double target = 1e-8 * quadratic_variation_trunc(m, 1.0);
  double chosen = 0.0;
  for (int k = 1; k <= 15; ++k) {
    const double eps = std::pow(10.0, -k);
    if (m.tail(eps) > rate_cap) break;
    chosen = eps;
    if (substituted_variance(m, eps) <= target) return eps;
  }
  if (chosen == 0.0) throw ConfigurationError("jump rate exceeds rate_cap even at epsilon = 0.1; raise rate_cap");
  warnings.push_back("rate_cap limits epsilon to " + std::to_string(chosen) +
                     "; substituted small-jump variance exceeds 1e-8 V(1)");
  return chosen;
}

}  // namespace detail

inline Dynamics simulation_dynamics(const LevyModel& m, const SimConfig& c) {
  c.validate();
  Dynamics d;
  const JumpMeasure& jm = m.measure();
  if (jm.zero()) {
    d.drift = m.gamma();
    d.sigma2 = m.sigma2();
    return d;
  }
  if (jm.finite_activity() && m.finite_drift()) {
    d.drift = *m.finite_drift();
    d.sigma2 = m.sigma2();
    d.rate = jm.total_mass;
    if (d.rate > c.rate_cap) throw ConfigurationError("jump rate exceeds rate_cap");
    return d;
  }
  d.exact = false;
  d.epsilon = c.epsilon > 0.0 ? c.epsilon : detail::auto_epsilon(m, c.rate_cap, d.warnings);
  d.rate = m.tail(d.epsilon);
  if (d.rate > c.rate_cap) {
    std::ostringstream msg;
    msg << "jump rate " << d.rate << " above epsilon=" << d.epsilon << " exceeds rate_cap " << c.rate_cap
        << "; use a larger epsilon";
    throw ConfigurationError(msg.str());
  }
  const double e = d.epsilon;
  // Keeping only jumps above epsilon moves int_{e<|x|<=1} x Pi(dx) into the drift.
  d.drift = truncated_mean(m, e) - e * (m.pos_tail(e) - m.neg_tail(e));
  d.sigma2 = quadratic_variation_trunc(m, e);
  return d;
}

/// One piece of a path: drift plus Brownian motion on [t0, t1), then an
/// optional jump at t1.
struct Segment {
  double t0 = 0.0, t1 = 0.0;
  double x0 = 0.0, x1 = 0.0;  // value at t0 and left limit at t1
  double peak = 0.0;          // maximum on [t0, t1] before the jump
  double t_peak = 0.0;
  double slope = 0.0;
  bool diffusive = false;
  double jump = 0.0;

  double x_after() const { return x1 + jump; }

  /// Running maximum of the segment alone at time t in [t0, t1]. Linear
  /// segments are exact; for diffusive ones the rise to the sampled peak is
  /// interpolated by a square-root profile.
  double envelope(double t) const {
    if (t <= t0) return x0;
    if (!diffusive) return slope > 0.0 ? x0 + slope * (std::min(t, t1) - t0) : x0;
    if (t >= t_peak || t_peak <= t0) return peak;
    return x0 + (peak - x0) * std::sqrt((t - t0) / (t_peak - t0));
  }

  /// First time the envelope exceeds u, for x0 <= u < peak.
  double first_exceed(double u) const {
    if (!diffusive) return t0 + (u - x0) / slope;
    const double r = (u - x0) / (peak - x0);
    return t0 + (t_peak - t0) * r * r;
  }
};

class PathGenerator {
 public:
  PathGenerator(const LevyModel& m, const Dynamics& dyn, const SimConfig& cfg, Rng rng,
                std::vector<double> checkpoints = {})
      : model_(m), dyn_(dyn), cfg_(cfg), rng_(std::move(rng)), end_(cfg.end_time()),
        checkpoints_(std::move(checkpoints)) {
    std::sort(checkpoints_.begin(), checkpoints_.end());
    next_jump_ = dyn_.rate > 0.0 ? rng_.exponential(dyn_.rate) : kInf;
  }

  double time() const { return t_; }
  double value() const { return x_; }
  bool finished() const { return t_ >= end_; }

  bool next(Segment& s) {
    if (t_ >= end_) return false;
    double t1 = std::min(next_jump_, end_);
    if (dyn_.sigma2 > 0.0) {
      const double grid = static_cast<double>(grid_index_ + 1) * cfg_.dt;
      t1 = std::min(t1, grid);
    }
    while (cp_index_ < checkpoints_.size() && checkpoints_[cp_index_] <= t_) ++cp_index_;
    if (cp_index_ < checkpoints_.size()) t1 = std::min(t1, checkpoints_[cp_index_]);
    if (!(t1 > t_)) t1 = std::nextafter(t_, kInf);

    const double h = t1 - t_;
    s.t0 = t_;
    s.t1 = t1;
    s.x0 = x_;
    s.slope = dyn_.drift;
    s.jump = 0.0;
    if (dyn_.sigma2 > 0.0) {
      s.diffusive = true;
      const double sd = std::sqrt(dyn_.sigma2 * h);
      s.x1 = x_ + dyn_.drift * h + sd * rng_.normal();
      if (cfg_.bridge_correction) {
        const double d = s.x1 - s.x0;
        const double w = std::log(rng_.uniform());
        s.peak = 0.5 * (s.x0 + s.x1 + std::sqrt(d * d - 2.0 * dyn_.sigma2 * h * w));
        const double a = (s.peak - s.x0) * (s.peak - s.x0);
        const double b = (s.peak - s.x1) * (s.peak - s.x1);
        s.t_peak = a + b > 0.0 ? s.t0 + h * a / (a + b) : s.t0;
      } else {
        s.peak = std::max(s.x0, s.x1);
        s.t_peak = s.x1 > s.x0 ? t1 : s.t0;
      }
    } else {
      s.diffusive = false;
      s.x1 = x_ + dyn_.drift * h;
      s.peak = dyn_.drift > 0.0 ? s.x1 : s.x0;
      s.t_peak = dyn_.drift > 0.0 ? t1 : s.t0;
    }
    if (dyn_.sigma2 > 0.0 && t1 == static_cast<double>(grid_index_ + 1) * cfg_.dt) ++grid_index_;
    if (t1 == next_jump_ && t1 <= end_) {
      s.jump = model_.measure().sample(rng_, dyn_.epsilon);
      next_jump_ = t1 + rng_.exponential(dyn_.rate);
    }
    t_ = t1;
    x_ = s.x_after();
    return true;
  }

 private:
  LevyModel model_;
  Dynamics dyn_;
  SimConfig cfg_;
  Rng rng_;
  double end_;
  std::vector<double> checkpoints_;
  std::size_t cp_index_ = 0;
  double t_ = 0.0;
  double x_ = 0.0;
  double next_jump_ = kInf;
  std::uint64_t grid_index_ = 0;
};

struct PassageRecord {
  double u = 0.0;
  double tau = kInf;
  double x_at_tau = std::numeric_limits<double>::quiet_NaN();
  double overshoot = std::numeric_limits<double>::quiet_NaN();
  double undershoot = std::numeric_limits<double>::quiet_NaN();
  double g_last_max = std::numeric_limits<double>::quiet_NaN();
  bool ruined = false;
};

/// Runs the generator until every level is crossed or the horizon ends.
/// `levels` must be sorted ascending; records come back in the same order.
inline std::vector<PassageRecord> passages_on_path(PathGenerator& gen, const std::vector<double>& levels) {
  std::vector<PassageRecord> out(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) out[i].u = levels[i];
  double running_max = 0.0;
  double t_max = 0.0;
  std::size_t next = 0;
  Segment s;
  while (next < levels.size() && gen.next(s)) {
    while (next < levels.size() && s.peak > levels[next]) {
      PassageRecord& r = out[next];
      r.tau = std::max(s.t0, s.first_exceed(r.u));
      r.x_at_tau = r.u;
      r.overshoot = 0.0;
      r.undershoot = 0.0;
      r.g_last_max = r.tau;
      r.ruined = true;
      ++next;
    }
    if (s.peak > running_max) {
      running_max = s.peak;
      t_max = s.t_peak;
    }
    const double xa = s.x_after();
    while (next < levels.size() && xa > levels[next]) {
      PassageRecord& r = out[next];
      r.tau = s.t1;
      r.x_at_tau = xa;
      r.overshoot = xa - r.u;
      r.undershoot = r.u - running_max;
      r.g_last_max = t_max;
      r.ruined = true;
      ++next;
    }
    if (xa > running_max) {
      running_max = xa;
      t_max = s.t1;
    }
  }
  return out;
}

inline Rng path_rng(const SimConfig& c, std::uint64_t replication) {
  return Rng(c.seed, replication, StreamPurpose::Path);
}

inline PassageRecord simulate_passage(const LevyModel& m, const Dynamics& dyn, const SimConfig& c, double u,
                                      std::uint64_t replication = 0) {
  if (!(u > 0.0)) throw PreconditionError("level u must be positive");
  PathGenerator gen(m, dyn, c, path_rng(c, replication));
  return passages_on_path(gen, {u}).front();
}

inline PassageRecord simulate_passage(const LevyModel& m, const SimConfig& c, double u, std::uint64_t replication = 0) {
  const Dynamics dyn = simulation_dynamics(m, c);
  return simulate_passage(m, dyn, c, u, replication);
}

/// First passages of several levels along one path, returned in the order
/// the levels were given.
inline std::vector<PassageRecord> first_passage_records(const LevyModel& m, const Dynamics& dyn, const SimConfig& c,
                                                        const std::vector<double>& levels,
                                                        std::uint64_t replication = 0) {
  std::vector<std::size_t> order(levels.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (!(levels[i] > 0.0)) throw PreconditionError("levels must be positive");
    order[i] = i;
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return levels[a] < levels[b]; });
  std::vector<double> sorted;
  for (std::size_t i : order) sorted.push_back(levels[i]);
  PathGenerator gen(m, dyn, c, path_rng(c, replication));
  const auto recs = passages_on_path(gen, sorted);
  std::vector<PassageRecord> out(levels.size());
  for (std::size_t k = 0; k < order.size(); ++k) out[order[k]] = recs[k];
  return out;
}

/// tau_u / u along a single path for a monotone grid of levels.
inline std::vector<std::pair<double, double>> simulate_as_ratio_path(const LevyModel& m, const Dynamics& dyn,
                                                                     const SimConfig& c,
                                                                     const std::vector<double>& levels,
                                                                     std::uint64_t replication = 0) {
  if (levels.empty()) throw PreconditionError("empty level grid");
  bool up = true, down = true;
  for (std::size_t i = 1; i < levels.size(); ++i) {
    up = up && levels[i] > levels[i - 1];
    down = down && levels[i] < levels[i - 1];
  }
  if (!up && !down) throw PreconditionError("levels must be strictly monotone");
  const auto recs = first_passage_records(m, dyn, c, levels, replication);
  std::vector<std::pair<double, double>> out;
  for (const auto& r : recs) out.emplace_back(r.u, r.tau / r.u);
  return out;
}

inline std::vector<std::pair<double, double>> simulate_as_ratio_path(const LevyModel& m, const SimConfig& c,
                                                                     const std::vector<double>& levels,
                                                                     std::uint64_t replication = 0) {
  const Dynamics dyn = simulation_dynamics(m, c);
  return simulate_as_ratio_path(m, dyn, c, levels, replication);
}

// ---------------------------------------------------------------------------
// Stored paths

/// A whole simulated path up to the horizon.
class SamplePath {
 public:
  SamplePath() = default;
  explicit SamplePath(std::vector<Segment> segs) : segs_(std::move(segs)) {
    double m = 0.0;
    for (const auto& s : segs_) {
      max_before_.push_back(m);
      m = std::max({m, s.peak, s.x_after()});
    }
    final_max_ = m;
  }

  const std::vector<Segment>& segments() const { return segs_; }
  double end_time() const { return segs_.empty() ? 0.0 : segs_.back().t1; }

  /// X_t at a segment boundary; inside a diffusive segment the value is a
  /// linear interpolation of the endpoints.
  double value_at(double t) const {
    if (segs_.empty() || t <= 0.0) return 0.0;
    const std::size_t i = locate(t);
    if (i == segs_.size()) return segs_.back().x_after();
    const Segment& s = segs_[i];
    if (t == s.t0) return s.x0;
    return s.x0 + (s.x1 - s.x0) * (t - s.t0) / (s.t1 - s.t0);
  }

  /// Running supremum up to and including t.
  double running_max(double t) const {
    if (segs_.empty() || t <= 0.0) return 0.0;
    const std::size_t i = locate(t);
    if (i == segs_.size()) return final_max_;
    return std::max(max_before_[i], segs_[i].envelope(t));
  }

  /// inf{t : running_max(t) > u} under the same rule as passages_on_path.
  double first_passage(double u) const {
    for (std::size_t i = 0; i < segs_.size(); ++i) {
      const Segment& s = segs_[i];
      if (max_before_[i] > u) break;
      if (s.peak > u) return std::max(s.t0, s.first_exceed(u));
      if (s.x_after() > u) return s.t1;
    }
    return kInf;
  }

  void write_csv(std::ostream& os) const {
    os << "t,x,running_max\n" << std::setprecision(17);
    os << 0.0 << ',' << 0.0 << ',' << 0.0 << '\n';
    double m = 0.0;
    for (const auto& s : segs_) {
      m = std::max(m, s.peak);
      if (s.jump != 0.0) os << s.t1 << ',' << s.x1 << ',' << m << '\n';
      m = std::max(m, s.x_after());
      os << s.t1 << ',' << s.x_after() << ',' << m << '\n';
    }
  }

 private:
  // Index of the segment with t0 <= t < t1, or size() past the end.
  std::size_t locate(double t) const {
    auto it = std::upper_bound(segs_.begin(), segs_.end(), t, [](double v, const Segment& s) { return v < s.t1; });
    return static_cast<std::size_t>(it - segs_.begin());
  }

  std::vector<Segment> segs_;
  std::vector<double> max_before_;
  double final_max_ = 0.0;
};

inline SamplePath simulate_path(const LevyModel& m, const Dynamics& dyn, const SimConfig& c,
                                std::uint64_t replication = 0, std::vector<double> checkpoints = {}) {
  PathGenerator gen(m, dyn, c, path_rng(c, replication), std::move(checkpoints));
  std::vector<Segment> segs;
  Segment s;
  while (gen.next(s)) segs.push_back(s);
  return SamplePath(std::move(segs));
}

inline SamplePath simulate_path(const LevyModel& m, const SimConfig& c, std::uint64_t replication = 0,
                                std::vector<double> checkpoints = {}) {
  if (!std::isfinite(c.end_time())) throw PreconditionError("stored paths need a finite horizon");
  const Dynamics dyn = simulation_dynamics(m, c);
  return simulate_path(m, dyn, c, replication, std::move(checkpoints));
}

/// X_t and sup_{s<=t} X_s at the given times along one path, without storing it.
struct PathSnapshot {
  double t;
  double x;
  double running_max;
};

inline std::vector<PathSnapshot> path_snapshots(const LevyModel& m, const Dynamics& dyn, const SimConfig& c,
                                                std::vector<double> times, std::uint64_t replication = 0) {
  std::sort(times.begin(), times.end());
  SimConfig cc = c;
  cc.horizon = times.empty() ? c.horizon : std::min(c.end_time(), times.back());
  PathGenerator gen(m, dyn, cc, path_rng(c, replication), times);
  std::vector<PathSnapshot> out;
  std::size_t k = 0;
  double running_max = 0.0;
  while (k < times.size() && times[k] <= 0.0) out.push_back({times[k++], 0.0, 0.0});
  Segment s;
  while (k < times.size() && gen.next(s)) {
    running_max = std::max({running_max, s.peak, s.x_after()});
    while (k < times.size() && times[k] <= s.t1) out.push_back({times[k++], s.x_after(), running_max});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ladder extraction

/// Normalisation of the local time at the maximum used for a model.
enum class LocalTimeNormalization {
  Occupation,     // L_t = time spent at the maximum (bounded variation, positive drift)
  RunningMaximum, // L_t = running maximum (spectrally negative)
  EpochCount,     // one unit of local time per new maximum
};

struct LadderHooks {
  LocalTimeNormalization normalization = LocalTimeNormalization::EpochCount;
  std::optional<double> d_H;
  std::optional<double> d_L_inv;
};

/// Analytic ladder drifts available from the model alone.
inline LadderHooks ladder_hooks(const LevyModel& m) {
  LadderHooks h;
  const auto dx = m.drift_bv();
  if (m.family() == Family::DriftMinusPoisson || (dx && *dx > 0.0 && m.family() != Family::SpectrallyNegative &&
                                                   m.family() != Family::BrownianDrift)) {
    h.normalization = LocalTimeNormalization::Occupation;
    h.d_L_inv = 1.0;
    h.d_H = *dx;
    return h;
  }
  if (m.spectrally_negative()) {
    h.normalization = LocalTimeNormalization::RunningMaximum;
    h.d_H = 1.0;
    h.d_L_inv = (dx && *dx > 0.0) ? 1.0 / *dx : 0.0;
    return h;
  }
  return h;
}

struct LadderEpoch {
  double d_time = 0.0;       // increment of the inverse local time
  double d_height = 0.0;     // increment of the ladder height
  double d_local = 0.0;      // local time spent at the maximum (occupation normalisation)
  double jump_height = 0.0;  // part of d_height produced by a jump
};

struct LadderSample {
  std::vector<LadderEpoch> epochs;
  bool killed = false;
  double horizon = 0.0;
  LadderHooks hooks;

  double total_time() const {
    double s = 0.0;
    for (const auto& e : epochs) s += e.d_time;
    return s;
  }
  double total_height() const {
    double s = 0.0;
    for (const auto& e : epochs) s += e.d_height;
    return s;
  }
  double total_local() const {
    double s = 0.0;
    for (const auto& e : epochs) s += e.d_local;
    return s;
  }
};

/// Walks one path to the horizon and records every strict increase of the
/// running maximum. A path is flagged killed when its maximum did not move
/// during the second half of the horizon.
inline LadderSample extract_ladder(const LevyModel& m, const Dynamics& dyn, const SimConfig& c,
                                   std::uint64_t replication = 0,
                                   StreamPurpose purpose = StreamPurpose::Auxiliary) {
  if (!std::isfinite(c.end_time())) throw PreconditionError("ladder extraction needs a finite horizon");
  LadderSample out;
  out.hooks = ladder_hooks(m);
  out.horizon = c.end_time();
  PathGenerator gen(m, dyn, c, Rng(c.seed, replication, purpose));
  double running_max = 0.0;
  double t_record = 0.0;
  Segment s;
  while (gen.next(s)) {
    if (s.peak > running_max) {
      LadderEpoch e;
      e.d_height = s.peak - running_max;
      e.d_time = s.t_peak - t_record;
      if (!s.diffusive && s.slope > 0.0) {
        const double t_cross = std::max(s.t0, s.t0 + (running_max - s.x0) / s.slope);
        e.d_local = s.t1 - t_cross;
      }
      out.epochs.push_back(e);
      running_max = s.peak;
      t_record = s.t_peak;
    }
    const double xa = s.x_after();
    if (xa > running_max) {
      LadderEpoch e;
      e.d_height = xa - running_max;
      e.jump_height = e.d_height;
      e.d_time = s.t1 - t_record;
      out.epochs.push_back(e);
      running_max = xa;
      t_record = s.t1;
    }
  }
  out.killed = t_record < 0.5 * out.horizon;
  return out;
}

inline LadderSample extract_ladder(const LevyModel& m, const SimConfig& c, std::uint64_t replication = 0) {
  const Dynamics dyn = simulation_dynamics(m, c);
  return extract_ladder(m, dyn, c, replication);
}

}  // namespace levy_passage
