#ifndef BRANCHLAB_POPULATION_HPP
#define BRANCHLAB_POPULATION_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "branchlab/errors.hpp"
#include "branchlab/interaction.hpp"
#include "branchlab/offspring.hpp"
#include "branchlab/piecewise_path.hpp"
#include "branchlab/rng.hpp"

namespace branchlab {

struct SimOptions {
  std::int64_t event_budget = 100'000'000;
  bool keep_event_log = false;
};

struct ScaledPath {
  PiecewisePath path;          // mass process, values k/N
  std::vector<PathEvent> log;  // per-event record when requested
  bool has_log = false;
};

// Continuous-time chain of section-2 type: natural reproduction at rate
// nu(Z+) per head plus interaction births/deaths from the increments of f.
inline PiecewisePath simulate_unscaled(int m, const UnscaledReproduction& nu,
                                       const InteractionFunction& f, double horizon, Rng& rng,
                                       const SimOptions& opts = {}) {
  if (nu.total_rate > 0.0 && nu.law.prob(1) != 0.0)
    throw invalid_law_error("unscaled reproduction law must put no mass at 1");
  InteractionGrid grid(f, 1);
  PiecewisePath path;
  path.kind = PiecewisePath::Kind::constant;
  path.horizon = horizon;
  int k = m;
  double t = 0.0;
  path.append(0.0, double(k));
  std::int64_t events = 0;
  while (k > 0) {
    const double r_nat = nu.total_rate * k;
    const double r_birth = grid.rate_plus(0, k);
    const double r_death = grid.rate_minus(0, k);
    const double total = r_nat + r_birth + r_death;
    if (total <= 0.0) break;
    t += rng.exponential(total);
    if (t >= horizon) break;
    if (++events > opts.event_budget) throw budget_exceeded_error("unscaled path event budget");
    double u = rng.uniform() * total;
    if ((u -= r_nat) < 0.0) {
      k += nu.law.sample(rng) - 1;
    } else if ((u -= r_birth) < 0.0) {
      k += 1;
    } else {
      k -= 1;
    }
    path.append(t, double(k));
  }
  return path;
}

// Renormalized mass process of the interacting model: jumps (l-1)/N at rate
// d_N q_l^N k plus +-1/N interaction events; absorbing at zero.
inline ScaledPath simulate_scaled(const ModelSet& model, double x, const InteractionFunction& f,
                                  double horizon, Rng& rng, const SimOptions& opts = {}) {
  const int n = model.k.big_n;
  InteractionGrid grid(f, n);
  ScaledPath out;
  out.has_log = opts.keep_event_log;
  out.path.kind = PiecewisePath::Kind::constant;
  out.path.horizon = horizon;

  long k = long(std::floor(double(n) * x + 1e-9));
  double t = 0.0;
  out.path.append(0.0, double(k) / n);
  std::int64_t events = 0;
  const double am = model.k.alpha_minus;
  const double ap = model.k.alpha_plus;
  const double d2 = model.k.d2;
  while (k > 0) {
    const double r_small = am * double(k);
    const double r_big = ap * double(k);
    const double r_bin = d2 * double(k);
    const double r_birth = grid.rate_plus(0, int(k));
    const double r_death = grid.rate_minus(0, int(k));
    const double total = r_small + r_big + r_bin + r_birth + r_death;
    if (total <= 0.0) break;
    t += rng.exponential(total);
    if (t >= horizon) break;
    if (++events > opts.event_budget) throw budget_exceeded_error("scaled path event budget");

    double u = rng.uniform() * total;
    EventKind kind;
    int offspring = 0;
    if ((u -= r_small) < 0.0) {
      kind = EventKind::natural_small;
      offspring = model.pi_minus.sample(rng);
      k += offspring - 1;
    } else if ((u -= r_big) < 0.0) {
      kind = EventKind::natural_big;
      offspring = model.pi_plus.sample(rng);
      k += offspring - 1;
    } else if ((u -= r_bin) < 0.0) {
      kind = EventKind::binary;
      offspring = model.nu2.sample(rng);
      k += offspring - 1;
    } else if ((u -= r_birth) < 0.0) {
      kind = EventKind::interaction_birth;
      k += 1;
    } else {
      kind = EventKind::interaction_death;
      k -= 1;
    }
    out.path.append(t, double(k) / n);
    if (opts.keep_event_log) out.log.push_back({t, kind, offspring});
  }
  return out;
}

// Coupled system over increasing ancestral masses. Component 0 carries
// Z^{N,x_1}; component i >= 1 carries the increment between x_i and x_{i+1}.
// Each increment feels f shifted by the total mass of the components below
// it, which is what makes the partial sums a monotone coupling.
inline std::vector<PiecewisePath> simulate_coupled(const ModelSet& model,
                                                   const std::vector<double>& xs,
                                                   const InteractionFunction& f, double horizon,
                                                   Rng& rng, const SimOptions& opts = {}) {
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] >= xs[i - 1])) throw domain_error("coupled masses must be non-decreasing");
  const int n = model.k.big_n;
  InteractionGrid grid(f, n);
  const std::size_t parts = xs.size();
  std::vector<long> count(parts);
  long prev = 0;
  for (std::size_t i = 0; i < parts; ++i) {
    const long ni = long(std::floor(double(n) * xs[i] + 1e-9));
    count[i] = ni - prev;
    prev = ni;
  }

  std::vector<PiecewisePath> sums(parts);
  long running = 0;
  for (std::size_t i = 0; i < parts; ++i) {
    running += count[i];
    sums[i].kind = PiecewisePath::Kind::constant;
    sums[i].horizon = horizon;
    sums[i].append(0.0, double(running) / n);
  }

  const double am = model.k.alpha_minus;
  const double ap = model.k.alpha_plus;
  const double d2 = model.k.d2;
  const double per_head = am + ap + d2;
  double t = 0.0;
  std::int64_t events = 0;
  std::vector<double> rate(parts);
  while (true) {
    double total = 0.0;
    long below = 0;
    for (std::size_t i = 0; i < parts; ++i) {
      const long ki = count[i];
      double r = per_head * double(ki);
      if (ki > 0) {
        r += grid.rate_plus(int(below), int(below + ki));
        r += grid.rate_minus(int(below), int(below + ki));
      }
      rate[i] = r;
      total += r;
      below += ki;
    }
    if (total <= 0.0) break;
    t += rng.exponential(total);
    if (t >= horizon) break;
    if (++events > opts.event_budget) throw budget_exceeded_error("coupled path event budget");

    double u = rng.uniform() * total;
    std::size_t comp = parts - 1;
    for (std::size_t i = 0; i < parts; ++i) {
      if (u < rate[i]) {
        comp = i;
        break;
      }
      u -= rate[i];
    }
    long lo = 0;
    for (std::size_t i = 0; i < comp; ++i) lo += count[i];
    const long ki = count[comp];
    const double r_small = am * double(ki);
    const double r_big = ap * double(ki);
    const double r_bin = d2 * double(ki);
    const double r_birth = grid.rate_plus(int(lo), int(lo + ki));
    if ((u -= r_small) < 0.0) {
      count[comp] += model.pi_minus.sample(rng) - 1;
    } else if ((u -= r_big) < 0.0) {
      count[comp] += model.pi_plus.sample(rng) - 1;
    } else if ((u -= r_bin) < 0.0) {
      count[comp] += model.nu2.sample(rng) - 1;
    } else if ((u -= r_birth) < 0.0) {
      count[comp] += 1;
    } else {
      count[comp] -= 1;
    }
    long part = 0;
    for (std::size_t i = 0; i < parts; ++i) {
      part += count[i];
      if (i >= comp) sums[i].append(t, double(part) / n);
    }
  }
  return sums;
}

struct QvReport {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n_paths = 0;
};

// Realized quadratic variation of the small-jump + binary + interaction
// martingale part minus its predictable compensator
//   int { (2c + int_(0,1] z^2 mu) Z_r + ||f||_{N,0,Z_r} / N } dr,
// averaged over the ensemble. Zero in expectation.
inline QvReport empirical_qv(std::span<const ScaledPath> ensemble, const ModelSet& model,
                             const InteractionFunction& f) {
  const int n = model.k.big_n;
  InteractionGrid grid(f, n);
  const double m2 = model.mu.moment2_small();
  const double c2 = 2.0 * model.k.c + m2;
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& sp : ensemble) {
    if (!sp.has_log) throw missing_log_error("empirical_qv needs event logs");
    double realized = 0.0;
    for (const auto& ev : sp.log) {
      switch (ev.kind) {
        case EventKind::natural_small:
        case EventKind::binary: {
          const double jump = double(ev.offspring - 1) / n;
          realized += jump * jump;
          break;
        }
        case EventKind::interaction_birth:
        case EventKind::interaction_death:
          realized += 1.0 / (double(n) * n);
          break;
        case EventKind::natural_big:
          break;  // carried by the big-jump martingale, not this bracket
      }
    }
    double compensator = 0.0;
    const auto& ev = sp.path.events;
    for (std::size_t i = 0; i < ev.size(); ++i) {
      const double t0 = ev[i].first;
      const double t1 = i + 1 < ev.size() ? ev[i + 1].first : sp.path.horizon;
      const int k = int(std::llround(ev[i].second * n));
      const double norm_f = grid.prefix_plus(k) + grid.prefix_minus(k);
      compensator += (c2 * double(k) / n + norm_f / n) * (t1 - t0);
    }
    const double d = realized - compensator;
    sum += d;
    sum_sq += d * d;
  }
  QvReport r;
  r.n_paths = ensemble.size();
  if (r.n_paths > 0) {
    r.mean = sum / double(r.n_paths);
    const double var = std::max(0.0, sum_sq / double(r.n_paths) - r.mean * r.mean);
    r.se = std::sqrt(var / double(r.n_paths));
  }
  return r;
}

}  // namespace branchlab

#endif
