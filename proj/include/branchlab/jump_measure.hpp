#ifndef BRANCHLAB_JUMP_MEASURE_HPP
#define BRANCHLAB_JUMP_MEASURE_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "branchlab/errors.hpp"
#include "branchlab/quadrature.hpp"
#include "branchlab/rng.hpp"

namespace branchlab {

// e^{-x} - 1 + x, accurate near 0 where the two leading terms cancel.
inline double expm1px(double x) {
  if (x >= 0.5) return std::expm1(-x) + x;
  double term = 0.5 * x * x;
  double sum = term;
  for (int n = 3; n < 40; ++n) {
    term *= -x / n;
    sum += term;
    if (std::fabs(term) < 1e-20 * std::fabs(sum)) break;
  }
  return sum;
}

struct TailStats {
  double mass = 0.0;                 // mu([delta, inf))
  double mean = 0.0;                 // int_[delta,inf) z mu(dz)
  double second_moment_below = 0.0;  // int_(0,delta) z^2 mu(dz)
};

// Sigma-finite jump measure on (0, inf) with the integrability
// int (z^p ^ z^2) mu(dz) < inf for a declared p in (1,2).
//
// Three families: finite atoms, power density C z^{-1-a} on (0, z_max],
// and tempered power C z^{-1-a} e^{-theta z} on (0, inf).
class JumpMeasure {
 public:
  enum class Family { atoms, power, tempered };

  struct Atom {
    double z;
    double w;
  };

  // Default-constructed measure is the zero measure.
  JumpMeasure() = default;

  static JumpMeasure atoms(std::vector<Atom> atom_list, double p = 1.5) {
    JumpMeasure m;
    m.family_ = Family::atoms;
    m.p_ = p;
    m.atoms_ = std::move(atom_list);
    m.validate();
    return m;
  }

  static JumpMeasure power(double c_scale, double alpha, double z_max,
                           double p = std::numeric_limits<double>::quiet_NaN(),
                           int quadrature_nodes = 64) {
    JumpMeasure m;
    m.family_ = Family::power;
    m.c_scale_ = c_scale;
    m.alpha_ = alpha;
    m.z_max_ = z_max;
    m.nodes_ = quadrature_nodes;
    m.p_ = std::isnan(p) ? (std::isfinite(z_max) ? 1.5 : 0.5 * (1.0 + alpha)) : p;
    m.validate();
    return m;
  }

  static JumpMeasure tempered(double c_scale, double alpha, double theta, double p = 1.5,
                              int quadrature_nodes = 64) {
    JumpMeasure m;
    m.family_ = Family::tempered;
    m.c_scale_ = c_scale;
    m.alpha_ = alpha;
    m.theta_ = theta;
    m.nodes_ = quadrature_nodes;
    m.p_ = p;
    m.validate();
    return m;
  }

  static JumpMeasure zero() { return atoms({}); }

  Family family() const { return family_; }
  double p_exponent() const { return p_; }

  bool has_small() const { return mass_below_one_ > 0.0; }
  bool has_big() const { return mass_above_one_ > 0.0; }
  bool is_zero() const { return !has_small() && !has_big(); }

  // L^{1,-}(u) = int_(0,1] (e^{-uz} - 1 + uz) mu(dz)
  double levy_small(double u) const {
    require_nonneg(u);
    return memo(MemoFn::levy_small, u, [&] { return levy_small_raw(u); });
  }

  // L^{1,+}(u), same integrand over (1, inf)
  double levy_big(double u) const {
    require_nonneg(u);
    return memo(MemoFn::levy_big, u, [&] { return levy_big_raw(u); });
  }

  double levy_total(double u) const { return levy_small(u) + levy_big(u); }

  // int_(0,1] z (1 - e^{-Nz}) mu(dz)
  double alpha_small(double n) const {
    return memo(MemoFn::alpha_small, n, [&] { return alpha_small_raw(n); });
  }

  // int_(1,inf) z (1 - e^{-Nz}) mu(dz)
  double alpha_big(double n) const {
    return memo(MemoFn::alpha_big, n, [&] { return alpha_big_raw(n); });
  }

  // int pois(k; Nz) mu(dz) over (0,1], with pois(k; x) = x^k e^{-x} / k!.
  // These are the k>=2 offspring weights before the 1/(N alpha) factor.
  double poisson_weight_small(double n, int k) const {
    switch (family_) {
      case Family::atoms: {
        double s = 0.0;
        for (const auto& a : atoms_)
          if (a.z <= 1.0) s += a.w * pois_pdf(k, n * a.z);
        return s;
      }
      case Family::power:
      case Family::tempered:
        return small_part([&](double z) { return pois_pdf(k, n * z); });
    }
    return 0.0;
  }

  double poisson_weight_big(double n, int k) const {
    switch (family_) {
      case Family::atoms: {
        double s = 0.0;
        for (const auto& a : atoms_)
          if (a.z > 1.0) s += a.w * pois_pdf(k, n * a.z);
        return s;
      }
      case Family::power:
      case Family::tempered: {
        if (!has_big()) return 0.0;
        // Integrand peaks near z = k/N; restrict to where it is non-negligible.
        const double peak = (k + 40.0 * std::sqrt(double(k)) + 60.0) / n;
        double hi = std::max(2.0, peak);
        if (std::isfinite(z_max_)) hi = std::min(hi, z_max_);
        return integrate([&](double z) { return pois_pdf(k, n * z) * density(z); }, 1.0, hi);
      }
    }
    return 0.0;
  }

  TailStats tail_stats(double delta) const {
    if (!(delta > 0.0)) throw domain_error("tail_stats: delta must be > 0");
    TailStats t;
    switch (family_) {
      case Family::atoms:
        for (const auto& a : atoms_) {
          if (a.z >= delta) {
            t.mass += a.w;
            t.mean += a.w * a.z;
          } else {
            t.second_moment_below += a.w * a.z * a.z;
          }
        }
        break;
      case Family::power: {
        const double zm = z_max_;
        if (delta < zm) {
          t.mass = std::isfinite(zm)
                       ? c_scale_ * (std::pow(delta, -alpha_) - std::pow(zm, -alpha_)) / alpha_
                       : c_scale_ * std::pow(delta, -alpha_) / alpha_;
          t.mean = std::isfinite(zm)
                       ? c_scale_ * (std::pow(delta, 1.0 - alpha_) - std::pow(zm, 1.0 - alpha_)) /
                             (alpha_ - 1.0)
                       : c_scale_ * std::pow(delta, 1.0 - alpha_) / (alpha_ - 1.0);
        }
        const double dcut = std::min(delta, zm);
        t.second_moment_below = c_scale_ * std::pow(dcut, 2.0 - alpha_) / (2.0 - alpha_);
        break;
      }
      case Family::tempered: {
        const double hi = delta + 800.0 / theta_;
        t.mass = integrate([&](double z) { return density(z); }, delta, hi);
        t.mean = integrate([&](double z) { return z * density(z); }, delta, hi);
        // int_(0,delta) z^2 C z^{-1-a} e^{-theta z} dz via the singularity
        // substitution z = t^{1/(2-a)}.
        const double q = 2.0 - alpha_;
        t.second_moment_below =
            (c_scale_ / q) *
            integrate([&](double t_) { return std::exp(-theta_ * std::pow(t_, 1.0 / q)); }, 0.0,
                      std::pow(delta, q));
        break;
      }
    }
    return t;
  }

  // int_(0,1] z^2 mu(dz); the small-jump variance coefficient.
  double moment2_small() const {
    switch (family_) {
      case Family::atoms: {
        double s = 0.0;
        for (const auto& a : atoms_)
          if (a.z <= 1.0) s += a.w * a.z * a.z;
        return s;
      }
      case Family::power: {
        const double s1 = std::min(1.0, z_max_);
        return c_scale_ * std::pow(s1, 2.0 - alpha_) / (2.0 - alpha_);
      }
      case Family::tempered:
        return small_part_g([](double) { return 1.0; });
    }
    return 0.0;
  }

  // Draw from mu restricted to [delta, inf), normalized.
  double sample_jump_ge(double delta, Rng& rng) const {
    if (!(delta > 0.0)) throw domain_error("sample_jump_ge: delta must be > 0");
    switch (family_) {
      case Family::atoms: {
        double total = 0.0;
        for (const auto& a : atoms_)
          if (a.z >= delta) total += a.w;
        if (total <= 0.0) throw empty_tail_error("sample_jump_ge: no mass at or above delta");
        double u = rng.uniform() * total;
        for (const auto& a : atoms_) {
          if (a.z >= delta) {
            u -= a.w;
            if (u <= 0.0) return a.z;
          }
        }
        return atoms_.back().z;
      }
      case Family::power: {
        if (delta >= z_max_) throw empty_tail_error("sample_jump_ge: no mass at or above delta");
        const double lo = std::pow(delta, -alpha_);
        const double hi = std::isfinite(z_max_) ? std::pow(z_max_, -alpha_) : 0.0;
        const double u = rng.uniform();
        return std::pow(lo - u * (lo - hi), -1.0 / alpha_);
      }
      case Family::tempered: {
        // Exact rejection; the proposal depends on how deep in the tail we are.
        if (theta_ * delta <= 1.0) {
          for (long it = 0; it < 10'000'000; ++it) {
            const double z = delta * std::pow(rng.uniform(), -1.0 / alpha_);
            if (rng.uniform() <= std::exp(-theta_ * (z - delta))) return z;
          }
        } else {
          for (long it = 0; it < 10'000'000; ++it) {
            const double z = delta + rng.exponential(theta_);
            if (rng.uniform() <= std::pow(z / delta, -1.0 - alpha_)) return z;
          }
        }
        throw empty_tail_error("sample_jump_ge: rejection sampler failed to accept");
      }
    }
    throw empty_tail_error("sample_jump_ge: unreachable");
  }

  const std::vector<Atom>& atom_list() const { return atoms_; }
  double power_alpha() const { return alpha_; }
  double power_scale() const { return c_scale_; }
  double power_zmax() const { return z_max_; }
  double tempered_theta() const { return theta_; }

 private:
  enum class MemoFn : int { levy_small = 0, levy_big, alpha_small, alpha_big };

  static double pois_pdf(int k, double x) {
    if (x <= 0.0) return 0.0;
    static const std::vector<double> lfact = [] {
      std::vector<double> t(4096);
      t[0] = 0.0;
      for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] + std::log(double(i));
      return t;
    }();
    const double lf = k < int(lfact.size()) ? lfact[k] : std::lgamma(double(k) + 1.0);
    return std::exp(k * std::log(x) - x - lf);
  }

  static void require_nonneg(double u) {
    if (u < 0.0) throw domain_error("levy functional: argument must be >= 0");
  }

  void validate() {
    switch (family_) {
      case Family::atoms:
        for (const auto& a : atoms_) {
          if (!(a.z > 0.0)) throw domain_error("atom location must be > 0");
          if (!(a.w > 0.0)) throw domain_error("atom weight must be > 0");
        }
        break;
      case Family::power:
      case Family::tempered:
        if (!(alpha_ > 1.0 && alpha_ < 2.0))
          throw domain_error("density exponent alpha must lie in (1,2)");
        if (!(c_scale_ > 0.0)) throw domain_error("density scale must be > 0");
        if (family_ == Family::power && !(z_max_ > 0.0))
          throw domain_error("z_max must be > 0");
        if (family_ == Family::tempered && !(theta_ > 0.0))
          throw domain_error("theta must be > 0");
        break;
    }
    if (!(p_ > 1.0 && p_ < 2.0)) throw domain_error("p must lie in (1,2)");
    // (H1): the z^2 part is finite iff alpha < 2 (checked above); the z^p tail
    // needs p < alpha when the power density extends to infinity.
    if (family_ == Family::power && !std::isfinite(z_max_) && !(p_ < alpha_))
      throw domain_error("power density on (0,inf) requires p < alpha for integrability");
    mass_below_one_ = raw_mass_below_one();
    mass_above_one_ = raw_mass_above_one();
  }

  double raw_mass_below_one() const {
    switch (family_) {
      case Family::atoms: {
        double s = 0.0;
        for (const auto& a : atoms_)
          if (a.z <= 1.0) s += a.w;
        return s;
      }
      case Family::power:
        return std::min(1.0, z_max_) > 0.0 ? 1.0 : 0.0;  // infinite mass near 0
      case Family::tempered:
        return 1.0;
    }
    return 0.0;
  }

  double raw_mass_above_one() const {
    switch (family_) {
      case Family::atoms: {
        double s = 0.0;
        for (const auto& a : atoms_)
          if (a.z > 1.0) s += a.w;
        return s;
      }
      case Family::power:
        return z_max_ > 1.0 ? 1.0 : 0.0;
      case Family::tempered:
        return 1.0;
    }
    return 0.0;
  }

  double density(double z) const {
    const double base = c_scale_ * std::pow(z, -1.0 - alpha_);
    return family_ == Family::tempered ? base * std::exp(-theta_ * z) : base;
  }

  // int_(0,s1] g(z) z^2 dens(z) dz for smooth g = h(z)/z^2, via z = t^{1/(2-a)}.
  // After the substitution the power singularity cancels exactly.
  template <class G>
  double small_part_g(const G& g) const {
    const double s1 = family_ == Family::power ? std::min(1.0, z_max_) : 1.0;
    const double q = 2.0 - alpha_;
    const double tmax = std::pow(s1, q);
    const int panels = std::max(1, nodes_ / 15);
    double acc = 0.0;
    for (int i = 0; i < panels; ++i) {
      const double a = tmax * i / panels;
      const double b = tmax * (i + 1) / panels;
      acc += integrate(
          [&](double t) {
            const double z = std::pow(t, 1.0 / q);
            const double damp = family_ == Family::tempered ? std::exp(-theta_ * z) : 1.0;
            return g(z) * damp;
          },
          a, b);
    }
    return (c_scale_ / q) * acc;
  }

  // int_(0,s1] h(z) mu(dz) where h(z)/z^2 is bounded; density families only.
  template <class H>
  double small_part(const H& h) const {
    return small_part_g([&](double z) { return h(z) / (z * z); });
  }

  double big_cut(double u) const {
    // Beyond this point e^{-uz} (or the tempering) underflows.
    double cut = std::numeric_limits<double>::infinity();
    if (family_ == Family::tempered) cut = 1.0 + 800.0 / theta_;
    if (u > 0.0) cut = std::min(cut, 1.0 + 800.0 / u);
    if (std::isfinite(z_max_)) cut = std::min(cut, z_max_);
    return cut;
  }

  double levy_small_raw(double u) const {
    if (u == 0.0) return 0.0;
    switch (family_) {
      case Family::atoms: {
        double s = 0.0;
        for (const auto& a : atoms_)
          if (a.z <= 1.0) s += a.w * expm1px(u * a.z);
        return s;
      }
      case Family::power:
      case Family::tempered:
        return small_part_g([&](double z) {
          const double x = u * z;
          return expm1px(x) / (z * z);
        });
    }
    return 0.0;
  }

  double levy_big_raw(double u) const {
    if (u == 0.0) return 0.0;
    switch (family_) {
      case Family::atoms: {
        double s = 0.0;
        for (const auto& a : atoms_)
          if (a.z > 1.0) s += a.w * expm1px(u * a.z);
        return s;
      }
      case Family::power: {
        if (!has_big()) return 0.0;
        if (std::isfinite(z_max_))
          return integrate([&](double z) { return expm1px(u * z) * density(z); }, 1.0, z_max_);
        // Split: (e^{-uz}-1+uz) = uz - (1-e^{-uz}); both pieces closed or decaying.
        const double linear = c_scale_ * u / (alpha_ - 1.0);
        const double one_part = -c_scale_ / alpha_;
        const double exp_part =
            integrate([&](double z) { return std::exp(-u * z) * density(z); }, 1.0, big_cut(u));
        return linear + one_part + exp_part;
      }
      case Family::tempered:
        return integrate([&](double z) { return expm1px(u * z) * density(z); }, 1.0, big_cut(u));
    }
    return 0.0;
  }

  double alpha_small_raw(double n) const {
    if (n == 0.0) return 0.0;
    switch (family_) {
      case Family::atoms: {
        double s = 0.0;
        for (const auto& a : atoms_)
          if (a.z <= 1.0) s += a.w * a.z * (-std::expm1(-n * a.z));
        return s;
      }
      case Family::power:
      case Family::tempered:
        return small_part_g([&](double z) { return -std::expm1(-n * z) / z; });
    }
    return 0.0;
  }

  double alpha_big_raw(double n) const {
    if (n == 0.0) return 0.0;
    switch (family_) {
      case Family::atoms: {
        double s = 0.0;
        for (const auto& a : atoms_)
          if (a.z > 1.0) s += a.w * a.z * (-std::expm1(-n * a.z));
        return s;
      }
      case Family::power: {
        if (!has_big()) return 0.0;
        const double full = std::isfinite(z_max_)
                                ? c_scale_ * (1.0 - std::pow(z_max_, 1.0 - alpha_)) / (alpha_ - 1.0)
                                : c_scale_ / (alpha_ - 1.0);
        const double damped =
            integrate([&](double z) { return z * std::exp(-n * z) * density(z); }, 1.0, big_cut(n));
        return full - damped;
      }
      case Family::tempered: {
        return integrate([&](double z) { return z * (-std::expm1(-n * z)) * density(z); }, 1.0,
                         big_cut(0.0));
      }
    }
    return 0.0;
  }

  template <class Make>
  double memo(MemoFn fn, double arg, const Make& make) const {
    const auto key = std::make_pair(static_cast<int>(fn), std::bit_cast<std::uint64_t>(arg));
    {
      std::lock_guard<std::mutex> lock(memo_->mutex);
      auto it = memo_->values.find(key);
      if (it != memo_->values.end()) return it->second;
    }
    const double v = make();
    std::lock_guard<std::mutex> lock(memo_->mutex);
    memo_->values.emplace(key, v);
    return v;
  }

  struct Memo {
    std::mutex mutex;
    std::map<std::pair<int, std::uint64_t>, double> values;
  };

  Family family_ = Family::atoms;
  double p_ = 1.5;
  std::vector<Atom> atoms_;
  double c_scale_ = 0.0;
  double alpha_ = 1.5;
  double z_max_ = std::numeric_limits<double>::infinity();
  double theta_ = 0.0;
  int nodes_ = 64;
  double mass_below_one_ = 0.0;
  double mass_above_one_ = 0.0;
  std::shared_ptr<Memo> memo_ = std::make_shared<Memo>();
};

}  // namespace branchlab

#endif
