#ifndef BRANCHLAB_LIMIT_SDE_HPP
#define BRANCHLAB_LIMIT_SDE_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "branchlab/errors.hpp"
#include "branchlab/interaction.hpp"
#include "branchlab/jump_measure.hpp"
#include "branchlab/rng.hpp"

namespace branchlab {

// Explicit scheme for the limit jump diffusion: left-endpoint coefficients,
// thinned big jumps above delta with exact compensation, and the small-jump
// part folded into the Gaussian step with matched variance (or dropped).
struct SdeScheme {
  enum class SmallJumpMode { diffusion_surrogate, drop };

  double dt = 0.01;
  double delta_jump = 0.0;  // <= 0 requests the automatic choice
  SmallJumpMode small_jump_mode = SmallJumpMode::diffusion_surrogate;
};

struct SdePath {
  struct Jump {
    double t;
    double z;
  };

  double dt = 0.0;
  double delta = 0.0;
  std::vector<double> values;  // values[i] at time i*dt
  std::vector<Jump> jumps;

  double horizon() const { return values.empty() ? 0.0 : dt * double(values.size() - 1); }

  double value_at(double t) const {
    if (values.empty()) return 0.0;
    const std::size_t i =
        std::min(values.size() - 1, std::size_t(std::max(0.0, std::floor(t / dt + 1e-9))));
    return values[i];
  }

  double final_value() const { return values.empty() ? 0.0 : values.back(); }
};

// Pick delta so the expected number of thinned jumps per step at mass x stays
// below 0.1, going as small as that allows.
inline double choose_delta(const JumpMeasure& mu, double x, double dt) {
  if (mu.is_zero()) return 1.0;
  auto rate = [&](double d) { return x * mu.tail_stats(d).mass * dt; };
  double delta = 1.0;
  int it = 0;
  while (rate(delta) > 0.1 && it++ < 60) delta *= 2.0;
  while (delta > 0x1p-40 && rate(delta * 0.5) <= 0.1) {
    delta *= 0.5;
    ++it;
    if (it > 120) break;
  }
  return delta;
}

inline SdePath simulate_csbp(double x, double c, const JumpMeasure& mu,
                             const InteractionFunction& f, double horizon,
                             const SdeScheme& scheme, Rng& rng) {
  if (!(scheme.dt > 0.0)) throw domain_error("sde scheme: dt must be > 0");
  if (x < 0.0) throw domain_error("sde: start mass must be >= 0");
  const std::size_t n_steps = std::size_t(std::ceil(horizon / scheme.dt - 1e-9));
  const double h = horizon / double(n_steps);

  SdePath path;
  path.dt = h;
  path.delta = scheme.delta_jump > 0.0 ? scheme.delta_jump : choose_delta(mu, x, h);
  path.values.reserve(n_steps + 1);
  path.values.push_back(x);

  const bool any_jumps = !mu.is_zero() && mu.tail_stats(path.delta).mass > 0.0;
  double tail_mass = 0.0, tail_mean = 0.0, small_var = 0.0;
  if (!mu.is_zero()) {
    const auto t = mu.tail_stats(path.delta);
    tail_mass = t.mass;
    tail_mean = t.mean;
    if (scheme.small_jump_mode == SdeScheme::SmallJumpMode::diffusion_surrogate)
      small_var = t.second_moment_below;
  }

  double z = x;
  for (std::size_t i = 0; i < n_steps; ++i) {
    if (z <= 0.0) {
      path.values.push_back(0.0);
      continue;
    }
    double next = z + f(z) * h;
    const double gvar = (2.0 * c + small_var) * z * h;
    if (gvar > 0.0) next += std::sqrt(gvar) * rng.normal();
    if (any_jumps) {
      const std::uint64_t nj = rng.poisson(z * tail_mass * h);
      for (std::uint64_t j = 0; j < nj; ++j) {
        const double size = mu.sample_jump_ge(path.delta, rng);
        next += size;
        path.jumps.push_back({double(i) * h, size});
      }
      next -= z * tail_mean * h;
    }
    z = std::max(0.0, next);
    path.values.push_back(z);
  }
  return path;
}

// Coupled pair (Z^x, Z^x + V) with independent drivers for the increment;
// the increment drift is f(Z+V) - f(Z).
inline std::pair<SdePath, SdePath> simulate_pair(double x, double y, double c,
                                                 const JumpMeasure& mu,
                                                 const InteractionFunction& f, double horizon,
                                                 const SdeScheme& scheme, Rng& rng) {
  if (!(scheme.dt > 0.0)) throw domain_error("sde scheme: dt must be > 0");
  if (!(0.0 <= x && x <= y)) throw domain_error("simulate_pair needs 0 <= x <= y");
  const std::size_t n_steps = std::size_t(std::ceil(horizon / scheme.dt - 1e-9));
  const double h = horizon / double(n_steps);

  SdePath base, total;
  base.dt = total.dt = h;
  const double delta = scheme.delta_jump > 0.0 ? scheme.delta_jump : choose_delta(mu, y, h);
  base.delta = total.delta = delta;
  base.values.push_back(x);
  total.values.push_back(y);

  double tail_mass = 0.0, tail_mean = 0.0, small_var = 0.0;
  if (!mu.is_zero()) {
    const auto t = mu.tail_stats(delta);
    tail_mass = t.mass;
    tail_mean = t.mean;
    if (scheme.small_jump_mode == SdeScheme::SmallJumpMode::diffusion_surrogate)
      small_var = t.second_moment_below;
  }

  double z = x, v = y - x;
  for (std::size_t i = 0; i < n_steps; ++i) {
    double nz = z, nv = v;
    if (z > 0.0) {
      nz = z + f(z) * h;
      const double gvar = (2.0 * c + small_var) * z * h;
      if (gvar > 0.0) nz += std::sqrt(gvar) * rng.normal();
      if (tail_mass > 0.0) {
        const std::uint64_t nj = rng.poisson(z * tail_mass * h);
        for (std::uint64_t j = 0; j < nj; ++j) {
          const double size = mu.sample_jump_ge(delta, rng);
          nz += size;
          base.jumps.push_back({double(i) * h, size});
        }
        nz -= z * tail_mean * h;
      }
      nz = std::max(0.0, nz);
    }
    if (v > 0.0) {
      nv = v + (f(z + v) - f(z)) * h;
      const double gvar = (2.0 * c + small_var) * v * h;
      if (gvar > 0.0) nv += std::sqrt(gvar) * rng.normal();
      if (tail_mass > 0.0) {
        const std::uint64_t nj = rng.poisson(v * tail_mass * h);
        for (std::uint64_t j = 0; j < nj; ++j) {
          const double size = mu.sample_jump_ge(delta, rng);
          nv += size;
          total.jumps.push_back({double(i) * h, size});
        }
        nv -= v * tail_mean * h;
      }
      nv = std::max(0.0, nv);
    }
    z = nz;
    v = nv;
    base.values.push_back(z);
    total.values.push_back(z + v);
  }
  return {std::move(base), std::move(total)};
}

struct MpReport {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n_paths = 0;
  double dt = 0.0;
  double delta = 0.0;
};

// Residual of the martingale problem for F(z) = e^{-lambda z} along an
// ensemble of simulated paths. The generator term uses the closed form
// int (F(z+u)-F(z)-uF'(z)) mu(du) = e^{-lambda z} L(lambda).
inline MpReport martingale_residual(double lambda, std::span<const SdePath> ensemble, double c,
                                    const JumpMeasure& mu, const InteractionFunction& f) {
  if (lambda < 0.0) throw domain_error("martingale residual: lambda must be >= 0");
  const double levy = mu.levy_total(lambda);
  double sum = 0.0, sum2 = 0.0;
  for (const auto& path : ensemble) {
    const double h = path.dt;
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < path.values.size(); ++i) {
      const double z = path.values[i];
      const double e = std::exp(-lambda * z);
      const double gen =
          -lambda * e * f(z) + c * lambda * lambda * e * z + z * e * levy;
      integral += gen * h;
    }
    const double r = std::exp(-lambda * path.final_value()) -
                     std::exp(-lambda * path.values.front()) - integral;
    sum += r;
    sum2 += r * r;
  }
  MpReport rep;
  rep.n_paths = ensemble.size();
  if (rep.n_paths > 0) {
    rep.mean = sum / double(rep.n_paths);
    rep.se = std::sqrt(
        std::max(0.0, sum2 / double(rep.n_paths) - rep.mean * rep.mean) / double(rep.n_paths));
    rep.dt = ensemble.front().dt;
    rep.delta = ensemble.front().delta;
  }
  return rep;
}

}  // namespace branchlab

#endif
