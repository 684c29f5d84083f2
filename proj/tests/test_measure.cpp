#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "branchlab/jump_measure.hpp"

using branchlab::JumpMeasure;
using branchlab::Rng;

namespace {

// Independent oracle for the density families: composite Simpson on a log
// grid, far away from the Gauss-Legendre path used by the implementation.
double simpson_log(const std::function<double(double)>& f, double a, double b, int n = 40001) {
  const double la = std::log(a), lb = std::log(b);
  const double h = (lb - la) / (n - 1);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = la + i * h;
    const double z = std::exp(y);
    const double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    s += w * f(z) * z;  // dz = z dy
  }
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("levy functionals vanish at zero") {
  auto mu = JumpMeasure::atoms({{2.0, 1.0}});
  CHECK(mu.levy_small(0.0) == 0.0);
  CHECK(mu.levy_big(0.0) == 0.0);
  CHECK(mu.levy_total(0.0) == 0.0);
}

TEST_CASE("single atom closed forms") {
  auto mu = JumpMeasure::atoms({{2.0, 1.0}});
  CHECK_THAT(mu.levy_big(1.0), Catch::Matchers::WithinAbs(std::exp(-2.0) - 1.0 + 2.0, 1e-14));
  CHECK(mu.levy_small(1.0) == 0.0);

  for (double n : {1.0, 2.0, 5.0}) {
    CHECK_THAT(mu.alpha_big(n), Catch::Matchers::WithinRel(2.0 * (1.0 - std::exp(-2.0 * n)), 1e-13));
    CHECK(mu.alpha_small(n) == 0.0);
  }
}

TEST_CASE("atom below one: small side carries everything") {
  auto mu = JumpMeasure::atoms({{0.5, 1.0}});
  for (double u : {0.1, 1.0, 10.0}) {
    CHECK(mu.levy_big(u) == 0.0);
    CHECK_THAT(mu.levy_small(u) - mu.levy_total(u), Catch::Matchers::WithinAbs(0.0, 1e-15));
  }
  CHECK_THAT(mu.alpha_small(2.0),
             Catch::Matchers::WithinRel(0.5 * (1.0 - std::exp(-1.0)), 1e-13));
}

TEST_CASE("tail stats on atoms") {
  auto mu2 = JumpMeasure::atoms({{2.0, 1.0}});
  auto t = mu2.tail_stats(1.0);
  CHECK(t.mass == 1.0);
  CHECK(t.mean == 2.0);
  CHECK(t.second_moment_below == 0.0);

  auto mu05 = JumpMeasure::atoms({{0.5, 1.0}});
  t = mu05.tail_stats(1.0);
  CHECK(t.mass == 0.0);
  CHECK(t.mean == 0.0);
  CHECK(t.second_moment_below == 0.25);

  // tail exhaustion: delta above every atom
  t = mu2.tail_stats(1e9);
  CHECK(t.mass == 0.0);
  CHECK(t.mean == 0.0);
  CHECK_THAT(t.second_moment_below, Catch::Matchers::WithinRel(4.0, 1e-15));
}

TEST_CASE("domain errors") {
  auto mu = JumpMeasure::atoms({{2.0, 1.0}});
  CHECK_THROWS_AS(mu.levy_small(-1.0), branchlab::domain_error);
  CHECK_THROWS_AS(mu.tail_stats(0.0), branchlab::domain_error);
  CHECK_THROWS_AS(JumpMeasure::atoms({{-1.0, 1.0}}), branchlab::domain_error);
  CHECK_THROWS_AS(JumpMeasure::power(1.0, 2.5, 1.0), branchlab::domain_error);
}

TEST_CASE("power family against Simpson oracle") {
  const double C = 1.0, alpha = 1.5;
  auto mu = JumpMeasure::power(C, alpha, 1.0);

  auto dens = [&](double z) { return C * std::pow(z, -1.0 - alpha); };
  const double eps = 1e-12;
  // Head of the integral below eps, leading order: integrand ~ u^2 z^2 / 2.
  auto head = [&](double coeff) { return coeff * C * std::pow(eps, 2.0 - alpha) / (2.0 - alpha); };
  for (double u : {0.5, 1.0, 4.0}) {
    const double oracle = simpson_log(
        [&](double z) { return branchlab::expm1px(u * z) * dens(z); }, eps, 1.0) +
        head(0.5 * u * u);
    CHECK_THAT(mu.levy_small(u), Catch::Matchers::WithinRel(oracle, 1e-9));
  }
  const double a_or = simpson_log(
      [&](double z) { return z * (1.0 - std::exp(-3.0 * z)) * dens(z); }, eps, 1.0) + head(3.0);
  CHECK_THAT(mu.alpha_small(3.0), Catch::Matchers::WithinRel(a_or, 1e-9));

  CHECK_THAT(mu.moment2_small(), Catch::Matchers::WithinRel(C / (2.0 - alpha), 1e-12));
  auto t = mu.tail_stats(0.25);
  CHECK_THAT(t.mass, Catch::Matchers::WithinRel(C * (std::pow(0.25, -alpha) - 1.0) / alpha, 1e-12));
  CHECK_THAT(t.mean, Catch::Matchers::WithinRel(
                         C * (std::pow(0.25, 1.0 - alpha) - 1.0) / (alpha - 1.0), 1e-12));
}

TEST_CASE("power family with infinite support") {
  const double C = 0.7, alpha = 1.6;
  const double zc = 2000.0;
  auto mu = JumpMeasure::power(C, alpha, std::numeric_limits<double>::infinity());
  auto dens = [&](double z) { return C * std::pow(z, -1.0 - alpha); };
  // Beyond zc the exponential is dead; the remainder of the integrand is
  // (uz - 1) dens with closed-form integral.
  auto remainder = [&](double u) {
    return C * u * std::pow(zc, 1.0 - alpha) / (alpha - 1.0) - C * std::pow(zc, -alpha) / alpha;
  };
  const double oracle = simpson_log(
      [&](double z) { return branchlab::expm1px(1.0 * z) * dens(z); }, 1.0, zc) + remainder(1.0);
  CHECK_THAT(mu.levy_big(1.0), Catch::Matchers::WithinRel(oracle, 1e-8));
  const double a_or =
      simpson_log([&](double z) { return z * (1.0 - std::exp(-2.0 * z)) * dens(z); }, 1.0, zc) +
      C * std::pow(zc, 1.0 - alpha) / (alpha - 1.0);
  CHECK_THAT(mu.alpha_big(2.0), Catch::Matchers::WithinRel(a_or, 1e-8));
}

TEST_CASE("tempered family against Simpson oracle") {
  const double C = 1.2, alpha = 1.5, theta = 2.0;
  auto mu = JumpMeasure::tempered(C, alpha, theta);
  auto dens = [&](double z) { return C * std::pow(z, -1.0 - alpha) * std::exp(-theta * z); };
  const double oracle = simpson_log(
                            [&](double z) { return branchlab::expm1px(2.0 * z) * dens(z); }, 1e-12,
                            1.0, 160001) +
                        2.0 * C * std::pow(1e-12, 2.0 - alpha) / (2.0 - alpha);
  CHECK_THAT(mu.levy_small(2.0), Catch::Matchers::WithinRel(oracle, 1e-8));
  auto t = mu.tail_stats(0.5);
  const double mass_or = simpson_log(dens, 0.5, 400.0);
  CHECK_THAT(t.mass, Catch::Matchers::WithinRel(mass_or, 1e-9));
}

TEST_CASE("small jump bound and monotonicity") {
  std::vector<JumpMeasure> measures = {
      JumpMeasure::atoms({{0.5, 1.0}, {2.0, 1.0}}),
      JumpMeasure::power(1.0, 1.5, 1.0),
      JumpMeasure::tempered(1.0, 1.3, 1.0),
  };
  for (const auto& mu : measures) {
    const double m2 = mu.moment2_small();
    double prev_alpha = 0.0;
    for (double u : {0.1, 0.5, 1.0, 3.0, 10.0}) {
      CHECK(mu.levy_small(u) >= 0.0);
      CHECK(mu.levy_small(u) <= 0.5 * u * u * m2 * (1.0 + 1e-12));
      // additivity under split tolerance
      CHECK_THAT(mu.levy_small(u) + mu.levy_big(u) - mu.levy_total(u),
                 Catch::Matchers::WithinAbs(0.0, 1e-9));
      const double a = mu.alpha_small(u);
      CHECK(a >= prev_alpha - 1e-12);
      prev_alpha = a;
    }
  }
}

TEST_CASE("tail sampler matches tail stats") {
  SECTION("single atom is deterministic") {
    auto mu = JumpMeasure::atoms({{2.0, 1.0}});
    Rng rng(42, 0);
    for (int i = 0; i < 100; ++i) CHECK(mu.sample_jump_ge(1.0, rng) == 2.0);
  }
  SECTION("two atoms split evenly") {
    auto mu = JumpMeasure::atoms({{1.0, 1.0}, {3.0, 1.0}});
    Rng rng(42, 1);
    const int n = 100000;
    int low = 0;
    for (int i = 0; i < n; ++i)
      if (mu.sample_jump_ge(0.5, rng) == 1.0) ++low;
    const double se = std::sqrt(0.25 / n);
    CHECK(std::fabs(low / double(n) - 0.5) <= 4.0 * se);
  }
  SECTION("empty tail throws") {
    auto mu = JumpMeasure::atoms({{0.5, 1.0}});
    Rng rng(42, 2);
    CHECK_THROWS_AS(mu.sample_jump_ge(1.0, rng), branchlab::empty_tail_error);
  }
  SECTION("power tail empirical mean") {
    auto mu = JumpMeasure::power(1.0, 1.5, std::numeric_limits<double>::infinity());
    auto t = mu.tail_stats(0.5);
    Rng rng(42, 3);
    const int n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double z = mu.sample_jump_ge(0.5, rng);
      sum += z;
      sum2 += z * z;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(std::max(0.0, sum2 / n - mean * mean));
    // Heavy tail (alpha=1.5 has infinite variance): use a generous allowance.
    CHECK(std::fabs(mean - t.mean / t.mass) <= 20.0 * sd / std::sqrt(double(n)));
  }
  SECTION("tempered tail empirical mean, both proposal branches") {
    auto mu = JumpMeasure::tempered(1.0, 1.5, 2.0);
    for (double delta : {0.2, 1.5}) {
      auto t = mu.tail_stats(delta);
      Rng rng(42, 4);
      const int n = 100000;
      double sum = 0.0, sum2 = 0.0;
      for (int i = 0; i < n; ++i) {
        double z = mu.sample_jump_ge(delta, rng);
        sum += z;
        sum2 += z * z;
      }
      const double mean = sum / n;
      const double sd = std::sqrt(std::max(0.0, sum2 / n - mean * mean));
      CHECK(std::fabs(mean - t.mean / t.mass) <= 4.0 * sd / std::sqrt(double(n)));
    }
  }
}

TEST_CASE("zero measure is legal and inert") {
  auto mu = JumpMeasure::zero();
  CHECK(mu.is_zero());
  CHECK(mu.levy_total(3.0) == 0.0);
  CHECK(mu.alpha_small(5.0) == 0.0);
  auto t = mu.tail_stats(0.1);
  CHECK(t.mass == 0.0);
}
