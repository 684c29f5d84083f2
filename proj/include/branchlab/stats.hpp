#ifndef BRANCHLAB_STATS_HPP
#define BRANCHLAB_STATS_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "branchlab/errors.hpp"

namespace branchlab {

// Two-sample Kolmogorov-Smirnov statistic, sup |F_a - F_b|. Tie-safe: both
// pointers move past each distinct value before the gap is measured, which
// matters for lattice-valued Monte Carlo samples.
inline double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw domain_error("ks_two_sample: empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = double(sa.size()), nb = double(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= x) ++i;
    while (j < sb.size() && sb[j] <= x) ++j;
    d = std::max(d, std::fabs(double(i) / na - double(j) / nb));
  }
  return d;
}

// Asymptotic two-sample critical value: c(alpha) * sqrt((n+m)/(n m)) with
// c(alpha) = sqrt(-ln(alpha/2)/2).
inline double ks_critical_value(std::size_t n, std::size_t m, double alpha) {
  const double c = std::sqrt(-std::log(alpha / 2.0) / 2.0);
  return c * std::sqrt(double(n + m) / (double(n) * double(m)));
}

struct MomentStats {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased, n-1 divisor
  double p_moment = 0.0;  // mean of |x|^p
  double se_mean = 0.0;
  double se_variance = 0.0;
  double se_p_moment = 0.0;
};

// Streaming single-pass raw-moment accumulator.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(double p = 1.5) : p_(p) {}

  void add(double x) {
    ++n_;
    s1_ += x;
    const double x2 = x * x;
    s2_ += x2;
    s3_ += x2 * x;
    s4_ += x2 * x2;
    const double xp = std::pow(std::fabs(x), p_);
    sp_ += xp;
    sp2_ += xp * xp;
  }

  MomentStats finish() const {
    if (n_ == 0) throw domain_error("moment_stats: empty sample");
    MomentStats r;
    r.n = n_;
    const double n = double(n_);
    const double m = s1_ / n;
    r.mean = m;
    const double mu2 = std::max(0.0, s2_ / n - m * m);
    r.variance = n_ > 1 ? mu2 * n / (n - 1.0) : 0.0;
    r.p_moment = sp_ / n;
    r.se_mean = std::sqrt(mu2 / n);
    const double mu4 = std::max(
        0.0, s4_ / n - 4.0 * m * s3_ / n + 6.0 * m * m * s2_ / n - 3.0 * m * m * m * m);
    r.se_variance = std::sqrt(std::max(0.0, mu4 - mu2 * mu2) / n);
    const double pvar = std::max(0.0, sp2_ / n - r.p_moment * r.p_moment);
    r.se_p_moment = std::sqrt(pvar / n);
    return r;
  }

 private:
  double p_;
  std::size_t n_ = 0;
  double s1_ = 0.0, s2_ = 0.0, s3_ = 0.0, s4_ = 0.0;
  double sp_ = 0.0, sp2_ = 0.0;
};

inline MomentStats moment_stats(std::span<const double> sample, double p = 1.5) {
  MomentAccumulator acc(p);
  for (double x : sample) acc.add(x);
  return acc.finish();
}

inline double sample_mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / double(xs.size());
}

inline double sample_se(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = sample_mean(xs);
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  return std::sqrt(v / double(xs.size() - 1) / double(xs.size()));
}

}  // namespace branchlab

#endif
