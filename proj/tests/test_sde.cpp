#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "branchlab/limit_sde.hpp"
#include "branchlab/stats.hpp"

using namespace branchlab;

namespace {

template <class F>
std::vector<double> ensemble_finals(int n_paths, std::uint64_t seed, const char* tag, F&& run) {
  std::vector<double> out;
  out.reserve(n_paths);
  for (int i = 0; i < n_paths; ++i) {
    Rng rng = Rng::for_path(seed, tag, std::uint64_t(i));
    out.push_back(run(rng));
  }
  return out;
}

}  // namespace

TEST_CASE("sde: zero start stays at zero") {
  SdeScheme scheme;
  Rng rng(30, 0);
  auto path = simulate_csbp(0.0, 1.0, JumpMeasure::atoms({{2.0, 1.0}}),
                            InteractionFunction::zero(), 1.0, scheme, rng);
  for (double v : path.values) CHECK(v == 0.0);
  CHECK(path.jumps.empty());
}

TEST_CASE("sde: invalid step size") {
  SdeScheme scheme;
  scheme.dt = 0.0;
  Rng rng(30, 1);
  CHECK_THROWS_AS(simulate_csbp(1.0, 1.0, JumpMeasure::zero(), InteractionFunction::zero(), 1.0,
                                scheme, rng),
                  branchlab::domain_error);
}

TEST_CASE("sde: driftless process is a martingale") {
  auto mu = JumpMeasure::atoms({{2.0, 1.0}});
  SdeScheme scheme;
  scheme.dt = 0.01;
  auto finals = ensemble_finals(10000, 31, "sde-mart", [&](Rng& rng) {
    return simulate_csbp(1.0, 1.0, mu, InteractionFunction::zero(), 1.0, scheme, rng)
        .final_value();
  });
  auto st = moment_stats(finals);
  CHECK(std::fabs(st.mean - 1.0) <= 4.0 * st.se_mean);
}

TEST_CASE("sde: Feller diffusion second moment") {
  // No jumps, no drift: m2' = 2 c m1, so Var(Z_T) = 2 c x T.
  SdeScheme scheme;
  scheme.dt = 0.005;
  const double x = 1.0, c = 1.0, T = 1.0;
  auto finals = ensemble_finals(10000, 32, "sde-feller", [&](Rng& rng) {
    return simulate_csbp(x, c, JumpMeasure::zero(), InteractionFunction::zero(), T, scheme, rng)
        .final_value();
  });
  auto st = moment_stats(finals);
  CHECK(std::fabs(st.variance - 2.0 * c * x * T) <= 4.0 * st.se_variance);
}

TEST_CASE("sde: refinement consistency") {
  auto mu = JumpMeasure::atoms({{2.0, 1.0}});
  auto run = [&](double dt, const char* tag) {
    SdeScheme scheme;
    scheme.dt = dt;
    auto finals = ensemble_finals(6000, 33, tag, [&](Rng& rng) {
      return simulate_csbp(1.0, 1.0, mu, InteractionFunction::logistic(1.0, 1.0), 1.0, scheme, rng)
          .final_value();
    });
    return moment_stats(finals);
  };
  auto coarse = run(0.02, "sde-refine-a");
  auto fine = run(0.01, "sde-refine-b");
  const double se = std::hypot(coarse.se_mean, fine.se_mean);
  CHECK(std::fabs(coarse.mean - fine.mean) <= 4.0 * se);
}

TEST_CASE("sde: jump counts match the thinning rate") {
  auto mu = JumpMeasure::atoms({{2.0, 1.0}});
  SdeScheme scheme;
  scheme.dt = 0.01;
  scheme.delta_jump = 1.0;
  const int n_paths = 4000;
  double count_sum = 0.0, count_sq = 0.0, mass_integral = 0.0;
  for (int i = 0; i < n_paths; ++i) {
    Rng rng = Rng::for_path(34, "sde-jumps", std::uint64_t(i));
    auto path = simulate_csbp(1.0, 1.0, mu, InteractionFunction::zero(), 1.0, scheme, rng);
    count_sum += double(path.jumps.size());
    count_sq += double(path.jumps.size()) * double(path.jumps.size());
    double zint = 0.0;
    for (std::size_t s = 0; s + 1 < path.values.size(); ++s) zint += path.values[s] * path.dt;
    mass_integral += zint;
  }
  const double mean_count = count_sum / n_paths;
  const double se =
      std::sqrt(std::max(0.0, count_sq / n_paths - mean_count * mean_count) / n_paths);
  const double expected = mu.tail_stats(1.0).mass * mass_integral / n_paths;
  CHECK(std::fabs(mean_count - expected) <= 4.0 * se);
}

TEST_CASE("sde pair: equal starts give identical paths") {
  auto mu = JumpMeasure::atoms({{2.0, 1.0}});
  SdeScheme scheme;
  Rng rng(35, 0);
  auto [base, total] =
      simulate_pair(1.0, 1.0, 1.0, mu, InteractionFunction::logistic(1.0, 1.0), 1.0, scheme, rng);
  REQUIRE(base.values.size() == total.values.size());
  for (std::size_t i = 0; i < base.values.size(); ++i) CHECK(base.values[i] == total.values[i]);
}

TEST_CASE("sde pair: monotone and additive in law without interaction") {
  auto mu = JumpMeasure::atoms({{2.0, 1.0}});
  SdeScheme scheme;
  scheme.dt = 0.01;
  const int n_paths = 4000;
  std::vector<double> summed, direct;
  for (int i = 0; i < n_paths; ++i) {
    Rng rng = Rng::for_path(36, "sde-pair", std::uint64_t(i));
    auto [base, total] =
        simulate_pair(0.6, 1.4, 1.0, mu, InteractionFunction::zero(), 1.0, scheme, rng);
    for (std::size_t s = 0; s < base.values.size(); ++s)
      REQUIRE(base.values[s] <= total.values[s] + 1e-12);
    summed.push_back(total.final_value());
  }
  for (int i = 0; i < n_paths; ++i) {
    Rng rng = Rng::for_path(37, "sde-direct", std::uint64_t(i));
    direct.push_back(
        simulate_csbp(1.4, 1.0, mu, InteractionFunction::zero(), 1.0, scheme, rng).final_value());
  }
  CHECK(ks_two_sample(summed, direct) < ks_critical_value(n_paths, n_paths, 0.001));
}

TEST_CASE("martingale residual") {
  auto mu = JumpMeasure::atoms({{2.0, 1.0}});
  SdeScheme scheme;
  scheme.dt = 0.01;

  SECTION("constant test function gives zero residual") {
    std::vector<SdePath> paths;
    for (int i = 0; i < 50; ++i) {
      Rng rng = Rng::for_path(38, "mp-const", std::uint64_t(i));
      paths.push_back(simulate_csbp(1.0, 1.0, mu, InteractionFunction::zero(), 1.0, scheme, rng));
    }
    auto rep = martingale_residual(0.0, paths, 1.0, mu, InteractionFunction::zero());
    CHECK(rep.mean == 0.0);
  }

  SECTION("zero paths give zero residual") {
    std::vector<SdePath> paths;
    Rng rng(38, 99);
    paths.push_back(simulate_csbp(0.0, 1.0, mu, InteractionFunction::zero(), 1.0, scheme, rng));
    auto rep = martingale_residual(1.0, paths, 1.0, mu, InteractionFunction::zero());
    CHECK(rep.mean == 0.0);
  }

  SECTION("negative lambda is rejected") {
    std::vector<SdePath> paths;
    CHECK_THROWS_AS(martingale_residual(-1.0, paths, 1.0, mu, InteractionFunction::zero()),
                    branchlab::domain_error);
  }

  SECTION("exponential family residual is near zero") {
    auto run = [&](double dt, const char* tag) {
      SdeScheme s;
      s.dt = dt;
      std::vector<SdePath> paths;
      for (int i = 0; i < 8000; ++i) {
        Rng rng = Rng::for_path(39, tag, std::uint64_t(i));
        paths.push_back(simulate_csbp(1.0, 1.0, mu, InteractionFunction::zero(), 1.0, s, rng));
      }
      return martingale_residual(1.0, paths, 1.0, mu, InteractionFunction::zero());
    };
    auto rep = run(0.01, "mp-exp");
    auto rep_half = run(0.005, "mp-exp-half");
    const double bias_allowance = std::fabs(rep.mean - rep_half.mean);
    CHECK(std::fabs(rep.mean) <= 4.0 * rep.se + bias_allowance);
  }
}

TEST_CASE("automatic delta keeps the per-step jump rate small") {
  auto mu = JumpMeasure::power(1.0, 1.5, std::numeric_limits<double>::infinity());
  const double delta = choose_delta(mu, 1.0, 0.01);
  CHECK(mu.tail_stats(delta).mass * 0.01 <= 0.1);
  CHECK(mu.tail_stats(delta * 0.5).mass * 0.01 > 0.1);
}
