#ifndef BRANCHLAB_OFFSPRING_HPP
#define BRANCHLAB_OFFSPRING_HPP

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "branchlab/errors.hpp"
#include "branchlab/jump_measure.hpp"
#include "branchlab/rng.hpp"

namespace branchlab {

// Walker/Vose alias table for O(1) draws from a finite law.
class AliasTable {
 public:
  AliasTable() = default;

  explicit AliasTable(const std::vector<double>& probs) : prob_(probs.size()), alias_(probs.size()) {
    const std::size_t n = probs.size();
    std::vector<std::size_t> small, large;
    small.reserve(n);
    large.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      prob_[i] = probs[i] * double(n);
      (prob_[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back();
      const std::size_t l = large.back();
      small.pop_back();
      large.pop_back();
      alias_[s] = l;
      prob_[l] -= 1.0 - prob_[s];
      (prob_[l] < 1.0 ? small : large).push_back(l);
    }
    for (std::size_t i : small) prob_[i] = 1.0;
    for (std::size_t i : large) prob_[i] = 1.0;
    for (std::size_t i = 0; i < n; ++i)
      if (prob_[i] >= 1.0) alias_[i] = i;
  }

  std::size_t sample(Rng& rng) const {
    const double u = rng.uniform() * double(prob_.size());
    std::size_t i = static_cast<std::size_t>(u);
    if (i >= prob_.size()) i = prob_.size() - 1;
    return (u - double(i)) < prob_[i] ? i : alias_[i];
  }

  bool empty() const { return prob_.empty(); }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

// Finite-precision probability law on {offset, offset+1, ...}. Weights are
// renormalized after truncation; the discarded mass is kept for audit.
struct OffspringLaw {
  std::vector<double> weights;  // weights[i] = P(offset + i)
  int support_offset = 0;
  double truncation_tail = 0.0;

  AliasTable alias;

  double prob(int k) const {
    const int i = k - support_offset;
    if (i < 0 || std::size_t(i) >= weights.size()) return 0.0;
    return weights[std::size_t(i)];
  }

  int max_value() const { return support_offset + int(weights.size()) - 1; }

  double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i)
      m += double(support_offset + int(i)) * weights[i];
    return m;
  }

  // sum_k (k-1) P(k); zero for every centered reproduction law here.
  double centered_mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i)
      m += double(support_offset + int(i) - 1) * weights[i];
    return m;
  }

  int sample(Rng& rng) const { return support_offset + int(alias.sample(rng)); }

  void finalize() {
    double s = 0.0;
    for (double w : weights) s += w;
    truncation_tail = std::max(0.0, 1.0 - s);
    if (s <= 0.0) throw invalid_law_error("offspring law has zero total mass");
    for (double& w : weights) w /= s;
    alias = AliasTable(weights);
  }
};

// Reproduction measure nu of the unscaled model: total event rate per
// individual and the normalized offspring law (nu(1) = 0 required).
struct UnscaledReproduction {
  OffspringLaw law;
  double total_rate = 0.0;
};

// Model constants shared by the population and contour simulators.
struct ModelConstants {
  int big_n = 1;       // N
  double c = 1.0;      // binary branching scale
  double alpha_minus = 0.0;
  double alpha_plus = 0.0;
  double d1 = 0.0;     // alpha_minus + alpha_plus
  double d2 = 0.0;     // 2cN
  double dN = 0.0;     // d1 + d2
  double q0_1 = 0.0;   // P(natural offspring event has 0 children)
  double m1 = 0.0;     // mean reflection count E[Lambda]
  double gamma0 = 0.0; // d1 q0_1 + cN   (death-event rate per individual)
  double gamma1 = 0.0; // d1 (1 - q0_1)  (multi-birth event rate per individual)
  double gammaN = 0.0; // gamma1 + cN    (birth-event rate per individual)
  double aN = 0.0;     // N + q0_1 d1 / c (renormalized contour slope / 2)
};

namespace detail {

// Internal truncation threshold. Tighter than the audited 1e-12 bound so that
// centered moments of the truncated law stay below 1e-10 even for K ~ 10^3.
inline constexpr double kTailCut = 1e-14;
inline constexpr int kMaxSupport = 200000;

inline OffspringLaw build_side_law(const JumpMeasure& mu, int n, bool big) {
  const double alpha = big ? mu.alpha_big(n) : mu.alpha_small(n);
  if (!(alpha > 0.0))
    throw inactive_component_error(big ? "big-jump component inactive"
                                       : "small-jump component inactive");
  const double scale = 1.0 / (double(n) * alpha);
  OffspringLaw law;
  law.weights.push_back((big ? mu.levy_big(double(n)) : mu.levy_small(double(n))) * scale);
  law.weights.push_back(0.0);
  double cum = law.weights[0];
  for (int k = 2; k < kMaxSupport; ++k) {
    const double w =
        (big ? mu.poisson_weight_big(double(n), k) : mu.poisson_weight_small(double(n), k)) * scale;
    law.weights.push_back(w);
    cum += w;
    if (cum >= 1.0 - kTailCut) break;
  }
  law.finalize();
  return law;
}

}  // namespace detail

// pi^{-,N}: offspring law of the small-jump reproduction events.
inline OffspringLaw small_jump_law(const JumpMeasure& mu, int n) {
  return detail::build_side_law(mu, n, false);
}

// pi^{+,N}: offspring law of the big-jump reproduction events.
inline OffspringLaw big_jump_law(const JumpMeasure& mu, int n) {
  return detail::build_side_law(mu, n, true);
}

// nu^{1,N}: the alpha-weighted mixture of the two jump laws.
inline OffspringLaw natural_law(const JumpMeasure& mu, int n) {
  const double am = mu.alpha_small(n);
  const double ap = mu.alpha_big(n);
  const double d1 = am + ap;
  if (!(d1 > 0.0)) throw inactive_component_error("natural component inactive (d1 = 0)");
  OffspringLaw minus, plus;
  if (am > 0.0) minus = small_jump_law(mu, n);
  if (ap > 0.0) plus = big_jump_law(mu, n);
  const std::size_t size = std::max(minus.weights.size(), plus.weights.size());
  OffspringLaw law;
  law.weights.assign(size, 0.0);
  for (std::size_t i = 0; i < size; ++i) {
    const int k = int(i);
    law.weights[i] = (minus.prob(k) * am + plus.prob(k) * ap) / d1;
  }
  law.truncation_tail = std::max(minus.truncation_tail, plus.truncation_tail);
  law.finalize();
  return law;
}

// nu^{2,N}: the critical binary law {0: 1/2, 2: 1/2}.
inline OffspringLaw binary_law() {
  OffspringLaw law;
  law.weights = {0.5, 0.0, 0.5};
  law.finalize();
  return law;
}

// pi_N: mixture of the natural and binary laws with weights d1/dN, d2/dN.
inline OffspringLaw total_offspring_law(const JumpMeasure& mu, int n, double c) {
  const double d1 = mu.alpha_small(n) + mu.alpha_big(n);
  const double d2 = 2.0 * c * double(n);
  const double dN = d1 + d2;
  OffspringLaw nu2 = binary_law();
  if (!(d1 > 0.0)) return nu2;
  OffspringLaw nu1 = natural_law(mu, n);
  const std::size_t size = std::max(nu1.weights.size(), nu2.weights.size());
  OffspringLaw law;
  law.weights.assign(size, 0.0);
  for (std::size_t i = 0; i < size; ++i) {
    const int k = int(i);
    law.weights[i] = (nu1.prob(k) * d1 + nu2.prob(k) * d2) / dN;
  }
  law.truncation_tail = nu1.truncation_tail * d1 / dN;
  law.finalize();
  return law;
}

// Lambda^{1,N}: number of extra branches spawned by a natural reproduction
// event, i.e. the law of (offspring count - 1) conditioned on being positive.
inline OffspringLaw reflection_count_law(const JumpMeasure& mu, int n) {
  OffspringLaw nu1 = natural_law(mu, n);
  const double q0 = nu1.prob(0);
  if (!(q0 < 1.0)) throw invalid_law_error("reflection count law degenerate (q0 = 1)");
  OffspringLaw law;
  law.support_offset = 1;
  for (int k = 2; k <= nu1.max_value(); ++k) law.weights.push_back(nu1.prob(k) / (1.0 - q0));
  law.truncation_tail = nu1.truncation_tail;
  law.finalize();
  return law;
}

inline ModelConstants model_constants(const JumpMeasure& mu, int n, double c) {
  ModelConstants k;
  k.big_n = n;
  k.c = c;
  k.alpha_minus = mu.alpha_small(n);
  k.alpha_plus = mu.alpha_big(n);
  k.d1 = k.alpha_minus + k.alpha_plus;
  k.d2 = 2.0 * c * double(n);
  k.dN = k.d1 + k.d2;
  if (k.d1 > 0.0) {
    k.q0_1 = mu.levy_total(double(n)) / (double(n) * k.d1);
    k.m1 = reflection_count_law(mu, n).mean();
  } else {
    k.q0_1 = 0.0;
    k.m1 = 0.0;
  }
  k.gamma0 = k.d1 * k.q0_1 + c * double(n);
  k.gamma1 = k.d1 * (1.0 - k.q0_1);
  k.gammaN = k.gamma1 + c * double(n);
  k.aN = double(n) + k.q0_1 * k.d1 / c;
  return k;
}

// All laws and constants for one (mu, N, c) triple, built once and shared
// read-only across simulation workers.
struct ModelSet {
  JumpMeasure mu;
  ModelConstants k;
  OffspringLaw pi_minus;  // empty when the small side is inactive
  OffspringLaw pi_plus;   // empty when the big side is inactive
  OffspringLaw nu1;       // empty when d1 = 0
  OffspringLaw nu2;
  OffspringLaw pi_total;
  OffspringLaw lambda1;   // empty when d1 = 0

  bool has_small() const { return !pi_minus.weights.empty(); }
  bool has_big() const { return !pi_plus.weights.empty(); }
  bool has_natural() const { return !nu1.weights.empty(); }
};

inline ModelSet build_model(const JumpMeasure& mu, int n, double c) {
  ModelSet m;
  m.mu = mu;
  m.k = model_constants(mu, n, c);
  if (m.k.alpha_minus > 0.0) m.pi_minus = small_jump_law(mu, n);
  if (m.k.alpha_plus > 0.0) m.pi_plus = big_jump_law(mu, n);
  if (m.k.d1 > 0.0) {
    m.nu1 = natural_law(mu, n);
    m.lambda1 = reflection_count_law(mu, n);
  }
  m.nu2 = binary_law();
  m.pi_total = total_offspring_law(mu, n, c);
  return m;
}

}  // namespace branchlab

#endif
