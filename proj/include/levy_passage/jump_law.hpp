#pragma once

// Jump-size distributions for the compound Poisson families.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace levy_passage {

struct Atom {
  double location;  // signed jump size
  double mass;
};

class JumpLaw {
 public:
  enum class Kind { Exponential, Normal, DoubleExponential, Uniform, Point };

  /// sign * Exp(rate); sign is +1 (upward jumps) or -1.
  static JumpLaw exponential(double rate, int sign = +1) {
    if (!(rate > 0.0)) throw PreconditionError("exponential jump rate must be positive");
    if (sign != 1 && sign != -1) throw PreconditionError("exponential jump sign must be +1 or -1");
    JumpLaw j(Kind::Exponential);
    j.a_ = rate;
    j.sign_ = sign;
    return j;
  }
  static JumpLaw normal(double mean, double sd) {
    if (!(sd > 0.0)) throw PreconditionError("normal jump sd must be positive");
    JumpLaw j(Kind::Normal);
    j.a_ = mean;
    j.b_ = sd;
    return j;
  }
  /// Up with probability p_up and size Exp(rate_up), else down with Exp(rate_down).
  static JumpLaw double_exponential(double p_up, double rate_up, double rate_down) {
    if (!(p_up >= 0.0 && p_up <= 1.0) || !(rate_up > 0.0) || !(rate_down > 0.0))
      throw PreconditionError("double exponential needs p_up in [0,1] and positive rates");
    JumpLaw j(Kind::DoubleExponential);
    j.p_ = p_up;
    j.a_ = rate_up;
    j.b_ = rate_down;
    return j;
  }
  static JumpLaw uniform(double lo, double hi) {
    if (!(hi > lo)) throw PreconditionError("uniform jump law needs lo < hi");
    JumpLaw j(Kind::Uniform);
    j.a_ = lo;
    j.b_ = hi;
    return j;
  }
  static JumpLaw point(double value) {
    if (value == 0.0 || !std::isfinite(value)) throw PreconditionError("point jump must be finite and nonzero");
    JumpLaw j(Kind::Point);
    j.a_ = value;
    return j;
  }

  Kind kind() const { return kind_; }
  std::string name() const {
    switch (kind_) {
      case Kind::Exponential: return "exponential";
      case Kind::Normal: return "normal";
      case Kind::DoubleExponential: return "double_exponential";
      case Kind::Uniform: return "uniform";
      case Kind::Point: return "point";
    }
    return "";
  }
  double param_a() const { return a_; }
  double param_b() const { return b_; }
  double param_p() const { return p_; }
  int sign() const { return sign_; }
  bool lattice() const { return kind_ == Kind::Point; }

  /// P(J > x) for x > 0.
  double pos_tail(double x) const {
    switch (kind_) {
      case Kind::Exponential: return sign_ > 0 ? std::exp(-a_ * x) : 0.0;
      case Kind::Normal: return 0.5 * std::erfc((x - a_) / (b_ * std::sqrt(2.0)));
      case Kind::DoubleExponential: return p_ * std::exp(-a_ * x);
      case Kind::Uniform: return clamp01((b_ - std::max(x, a_)) / (b_ - a_));
      case Kind::Point: return a_ > x ? 1.0 : 0.0;
    }
    return 0.0;
  }
  /// P(J < -x) for x > 0.
  double neg_tail(double x) const {
    switch (kind_) {
      case Kind::Exponential: return sign_ < 0 ? std::exp(-a_ * x) : 0.0;
      case Kind::Normal: return 0.5 * std::erfc((x + a_) / (b_ * std::sqrt(2.0)));
      case Kind::DoubleExponential: return (1.0 - p_) * std::exp(-b_ * x);
      case Kind::Uniform: return clamp01((std::min(-x, b_) - a_) / (b_ - a_));
      case Kind::Point: return a_ < -x ? 1.0 : 0.0;
    }
    return 0.0;
  }
  /// Density of J at +y (y > 0), excluding atoms.
  double pos_density(double y) const {
    switch (kind_) {
      case Kind::Exponential: return sign_ > 0 ? a_ * std::exp(-a_ * y) : 0.0;
      case Kind::Normal: return normal_pdf(y);
      case Kind::DoubleExponential: return p_ * a_ * std::exp(-a_ * y);
      case Kind::Uniform: return (y > a_ && y < b_) ? 1.0 / (b_ - a_) : 0.0;
      case Kind::Point: return 0.0;
    }
    return 0.0;
  }
  /// Density of J at -z (z > 0), excluding atoms.
  double neg_density(double z) const {
    switch (kind_) {
      case Kind::Exponential: return sign_ < 0 ? a_ * std::exp(-a_ * z) : 0.0;
      case Kind::Normal: return normal_pdf(-z);
      case Kind::DoubleExponential: return (1.0 - p_) * b_ * std::exp(-b_ * z);
      case Kind::Uniform: return (-z > a_ && -z < b_) ? 1.0 / (b_ - a_) : 0.0;
      case Kind::Point: return 0.0;
    }
    return 0.0;
  }
  std::vector<Atom> atoms() const {
    if (kind_ == Kind::Point) return {{a_, 1.0}};
    return {};
  }
  /// Points where tails or densities are not smooth (absolute values).
  std::vector<double> breakpoints() const {
    std::vector<double> out;
    if (kind_ == Kind::Uniform) {
      if (a_ != 0.0) out.push_back(std::abs(a_));
      if (b_ != 0.0) out.push_back(std::abs(b_));
    } else if (kind_ == Kind::Point) {
      out.push_back(std::abs(a_));
    }
    return out;
  }

  double mean() const {
    switch (kind_) {
      case Kind::Exponential: return sign_ / a_;
      case Kind::Normal: return a_;
      case Kind::DoubleExponential: return p_ / a_ - (1.0 - p_) / b_;
      case Kind::Uniform: return 0.5 * (a_ + b_);
      case Kind::Point: return a_;
    }
    return 0.0;
  }

  /// E e^{nu J}; +inf when it diverges.
  double mgf(double nu) const {
    const double inf = std::numeric_limits<double>::infinity();
    switch (kind_) {
      case Kind::Exponential: {
        const double s = sign_ * nu;
        return s < a_ ? a_ / (a_ - s) : inf;
      }
      case Kind::Normal: return std::exp(nu * a_ + 0.5 * nu * nu * b_ * b_);
      case Kind::DoubleExponential: {
        if (nu >= a_ || -nu >= b_) return inf;
        return p_ * a_ / (a_ - nu) + (1.0 - p_) * b_ / (b_ + nu);
      }
      case Kind::Uniform:
        if (nu == 0.0) return 1.0;
        return (std::exp(nu * b_) - std::exp(nu * a_)) / (nu * (b_ - a_));
      case Kind::Point: return std::exp(nu * a_);
    }
    return inf;
  }

  /// d/dnu E e^{nu J} = E J e^{nu J}.
  double mgf_derivative(double nu) const {
    const double inf = std::numeric_limits<double>::infinity();
    switch (kind_) {
      case Kind::Exponential: {
        const double s = sign_ * nu;
        return s < a_ ? sign_ * a_ / ((a_ - s) * (a_ - s)) : inf;
      }
      case Kind::Normal: return (a_ + nu * b_ * b_) * mgf(nu);
      case Kind::DoubleExponential:
        if (nu >= a_ || -nu >= b_) return inf;
        return p_ * a_ / ((a_ - nu) * (a_ - nu)) - (1.0 - p_) * b_ / ((b_ + nu) * (b_ + nu));
      case Kind::Uniform: {
        if (nu == 0.0) return mean();
        const double w = b_ - a_;
        return (b_ * std::exp(nu * b_) - a_ * std::exp(nu * a_)) / (nu * w) -
               (std::exp(nu * b_) - std::exp(nu * a_)) / (nu * nu * w);
      }
      case Kind::Point: return a_ * std::exp(nu * a_);
    }
    return inf;
  }

  /// Law of J under the exponential tilt e^{nu J}/E e^{nu J}, when it stays
  /// in the family.
  std::optional<JumpLaw> tilted(double nu) const {
    if (!std::isfinite(mgf(nu))) return std::nullopt;
    switch (kind_) {
      case Kind::Exponential: return exponential(a_ - sign_ * nu, sign_);
      case Kind::Normal: return normal(a_ + nu * b_ * b_, b_);
      case Kind::DoubleExponential: {
        const double wu = p_ * a_ / (a_ - nu);
        const double wd = (1.0 - p_) * b_ / (b_ + nu);
        return double_exponential(wu / (wu + wd), a_ - nu, b_ + nu);
      }
      case Kind::Point: return *this;
      case Kind::Uniform: return std::nullopt;
    }
    return std::nullopt;
  }

  double sample(Rng& rng) const {
    switch (kind_) {
      case Kind::Exponential: return sign_ * rng.exponential(a_);
      case Kind::Normal: return a_ + b_ * rng.normal();
      case Kind::DoubleExponential: return rng.uniform() < p_ ? rng.exponential(a_) : -rng.exponential(b_);
      case Kind::Uniform: return a_ + (b_ - a_) * rng.uniform();
      case Kind::Point: return a_;
    }
    return 0.0;
  }

 private:
  explicit JumpLaw(Kind k) : kind_(k) {}
  static double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }
  double normal_pdf(double y) const {
    const double z = (y - a_) / b_;
    return std::exp(-0.5 * z * z) / (b_ * std::sqrt(2.0 * M_PI));
  }

  Kind kind_;
  double a_ = 0.0;
  double b_ = 0.0;
  double p_ = 0.0;
  int sign_ = 1;
};

}  // namespace levy_passage
