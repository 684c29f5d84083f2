#ifndef BRANCHLAB_INTERACTION_HPP
#define BRANCHLAB_INTERACTION_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "branchlab/errors.hpp"

namespace branchlab {

// Interaction drift f with f(0) = 0 and the sub-linearity bound
// f(x+y) - f(x) <= beta * y. Positive increments of f act as extra births,
// negative increments as extra deaths.
class InteractionFunction {
 public:
  enum class Kind { zero, linear, logistic, clipped_logistic, table };

  InteractionFunction() = default;

  static InteractionFunction zero() { return {}; }

  static InteractionFunction linear(double a) {
    InteractionFunction f;
    f.kind_ = Kind::linear;
    f.a_ = a;
    f.beta_ = std::max(a, 0.0);
    f.derivative_bound_ = std::fabs(a);
    return f;
  }

  static InteractionFunction logistic(double a, double b) {
    if (b < 0.0) throw domain_error("logistic interaction needs b >= 0");
    InteractionFunction f;
    f.kind_ = Kind::logistic;
    f.a_ = a;
    f.b_ = b;
    f.beta_ = std::max(a, 0.0);
    return f;  // derivative a - 2bx is unbounded below
  }

  // Logistic with the downward slope clipped at slope_min (< 0), so the
  // derivative stays in [slope_min, a].
  static InteractionFunction clipped_logistic(double a, double b, double slope_min) {
    if (!(b > 0.0)) throw domain_error("clipped logistic needs b > 0");
    if (!(slope_min < a)) throw domain_error("clipped logistic needs slope_min < a");
    InteractionFunction f;
    f.kind_ = Kind::clipped_logistic;
    f.a_ = a;
    f.b_ = b;
    f.slope_min_ = slope_min;
    f.x_clip_ = (a - slope_min) / (2.0 * b);
    f.beta_ = std::max(a, 0.0);
    f.derivative_bound_ = std::max(std::fabs(a), std::fabs(slope_min));
    return f;
  }

  // Piecewise-linear table on [0, x_back]; continued with the last slope.
  static InteractionFunction table(std::vector<double> xs, std::vector<double> values,
                                   double beta) {
    if (xs.size() != values.size() || xs.size() < 2)
      throw domain_error("interaction table needs matching xs/values of size >= 2");
    if (xs.front() != 0.0 || values.front() != 0.0)
      throw domain_error("interaction table must start at (0, 0)");
    for (std::size_t i = 1; i < xs.size(); ++i)
      if (!(xs[i] > xs[i - 1])) throw domain_error("interaction table xs must increase");
    InteractionFunction f;
    f.kind_ = Kind::table;
    f.xs_ = std::move(xs);
    f.values_ = std::move(values);
    f.beta_ = beta;
    double max_slope = 0.0;
    for (std::size_t i = 1; i < f.xs_.size(); ++i)
      max_slope = std::max(max_slope,
                           std::fabs((f.values_[i] - f.values_[i - 1]) / (f.xs_[i] - f.xs_[i - 1])));
    f.derivative_bound_ = max_slope;
    f.validate_h2();
    return f;
  }

  double operator()(double x) const {
    switch (kind_) {
      case Kind::zero:
        return 0.0;
      case Kind::linear:
        return a_ * x;
      case Kind::logistic:
        return a_ * x - b_ * x * x;
      case Kind::clipped_logistic:
        if (x <= x_clip_) return a_ * x - b_ * x * x;
        return a_ * x_clip_ - b_ * x_clip_ * x_clip_ + slope_min_ * (x - x_clip_);
      case Kind::table: {
        if (x <= 0.0) return 0.0;
        auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        std::size_t i = std::min<std::size_t>(it - xs_.begin(), xs_.size() - 1);
        const double slope = (values_[i] - values_[i - 1]) / (xs_[i] - xs_[i - 1]);
        return values_[i - 1] + slope * (x - xs_[i - 1]);
      }
    }
    return 0.0;
  }

  Kind kind() const { return kind_; }
  bool is_zero() const { return kind_ == Kind::zero; }
  double beta() const { return beta_; }
  void set_beta(double beta) { beta_ = beta; }
  std::optional<double> derivative_bound() const { return derivative_bound_; }

  // Spot-check (H2) on a grid; throws on violation.
  void validate_h2(double x_max = 10.0, int steps = 64) const {
    for (int i = 0; i <= steps; ++i) {
      const double x = x_max * i / steps;
      for (int j = 1; j <= steps; ++j) {
        const double y = x_max * j / steps;
        if ((*this)(x + y) - (*this)(x) > beta_ * y + 1e-9)
          throw domain_error("interaction function violates the growth bound");
      }
    }
    if (std::fabs((*this)(0.0)) > 0.0) throw domain_error("interaction must vanish at 0");
  }

 private:
  Kind kind_ = Kind::zero;
  double a_ = 0.0;
  double b_ = 0.0;
  double slope_min_ = 0.0;
  double x_clip_ = 0.0;
  double beta_ = 0.0;
  std::optional<double> derivative_bound_ = 0.0;
  std::vector<double> xs_;
  std::vector<double> values_;
};

// Increment table of f on the lattice {i/N} with prefix sums of the positive
// and negative parts. The simulators read the interaction birth/death rate
// sums in O(1) per event from these prefixes, which also keeps the telescoping
// identity sum_plus - sum_minus = N f(k/N) exact.
class InteractionGrid {
 public:
  InteractionGrid(const InteractionFunction& f, int n) : f_(&f), n_(n) {
    f_values_ = {0.0};
    prefix_plus_ = {0.0};
    prefix_minus_ = {0.0};
  }

  int scale() const { return n_; }

  double f_at(int k) const {
    ensure(k);
    return f_values_[std::size_t(k)];
  }

  // sum_{i=1..k} (f(i/N) - f((i-1)/N))^+, and the negative-part sibling
  double prefix_plus(int k) const {
    ensure(k);
    return prefix_plus_[std::size_t(k)];
  }

  double prefix_minus(int k) const {
    ensure(k);
    return prefix_minus_[std::size_t(k)];
  }

  // N * sum of positive increments over positions (lo, hi]
  double rate_plus(int lo, int hi) const { return n_ * (prefix_plus(hi) - prefix_plus(lo)); }
  double rate_minus(int lo, int hi) const { return n_ * (prefix_minus(hi) - prefix_minus(lo)); }

  // f(i/N) - f((i-1)/N)
  double delta(int i) const {
    ensure(i);
    return f_values_[std::size_t(i)] - f_values_[std::size_t(i - 1)];
  }

 private:
  void ensure(int k) const {
    while (int(f_values_.size()) <= k) {
      const int i = int(f_values_.size());
      const double fi = (*f_)(double(i) / n_);
      const double d = fi - f_values_.back();
      f_values_.push_back(fi);
      prefix_plus_.push_back(prefix_plus_.back() + std::max(d, 0.0));
      prefix_minus_.push_back(prefix_minus_.back() + std::max(-d, 0.0));
    }
  }

  const InteractionFunction* f_;
  int n_;
  mutable std::vector<double> f_values_;
  mutable std::vector<double> prefix_plus_;
  mutable std::vector<double> prefix_minus_;
};

}  // namespace branchlab

#endif
