#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "dndm/analytics.hpp"
#include "dndm/schedule.hpp"

using namespace dndm;
using Catch::Matchers::WithinAbs;

TEST_CASE("linear schedule values") {
  AlphaSchedule sched = build_linear(4);
  REQUIRE(sched.alphas == std::vector<double>{1.0, 0.75, 0.5, 0.25, 0.0});
  REQUIRE(build_linear(1).alphas == std::vector<double>{1.0, 0.0});
  REQUIRE_THAT(build_linear(50).alphas[25], WithinAbs(0.5, 1e-15));
  REQUIRE_THROWS_AS(build_linear(0), std::invalid_argument);
}

TEST_CASE("cosine schedule values") {
  AlphaSchedule sched = build_cosine(2, 0.0);
  REQUIRE_THAT(sched.alphas[0], WithinAbs(1.0, 1e-15));
  REQUIRE_THAT(sched.alphas[1], WithinAbs(std::cos(std::numbers::pi / 4), 1e-12));
  REQUIRE(sched.alphas[2] == 0.0);
  REQUIRE_THROWS_AS(build_cosine(10, -0.1), std::invalid_argument);

  AlphaSchedule big = build_cosine(1000, 0.008);
  for (std::size_t t = 1; t < big.alphas.size(); ++t) {
    REQUIRE(big.alphas[t] < big.alphas[t - 1]);
    REQUIRE(big.alphas[t] >= 0.0);
    REQUIRE(big.alphas[t] <= 1.0);
  }
}

TEST_CASE("cosine squared schedule values") {
  AlphaSchedule sched = build_cosine_squared(2, 0.0);
  REQUIRE_THAT(sched.alphas[1], WithinAbs(0.5, 1e-12));
  REQUIRE(sched.alphas[0] == 1.0);
  REQUIRE(sched.alphas[2] == 0.0);
  for (int steps : {1, 3, 17, 200}) {
    AlphaSchedule any = build_cosine_squared(steps);
    for (std::size_t t = 1; t < any.alphas.size(); ++t)
      REQUIRE(any.alphas[t] <= any.alphas[t - 1]);
  }
}

TEST_CASE("schedule builders satisfy the endpoint invariants") {
  for (int steps : {1, 2, 5, 50, 1000}) {
    for (const AlphaSchedule& sched :
         {build_linear(steps), build_cosine(steps), build_cosine_squared(steps)}) {
      REQUIRE(sched.alphas.front() == 1.0);
      REQUIRE(sched.alphas.back() == 0.0);
      for (int t = 1; t <= steps; ++t) {
        REQUIRE(sched.alphas[t] <= sched.alphas[t - 1]);
        double beta = sched.beta(t);
        REQUIRE(beta >= 0.0);
        REQUIRE(beta <= 1.0);
      }
    }
  }
  REQUIRE_THROWS_AS(AlphaSchedule::discrete({1.0, 0.2, 0.5, 0.0}),
                    std::invalid_argument);
}

TEST_CASE("transition distribution is the alpha difference") {
  TransitionTimeDistribution uniform =
      transition_distribution(build_linear(4));
  for (double p : uniform.pmf) REQUIRE_THAT(p, WithinAbs(0.25, 1e-12));

  TransitionTimeDistribution cos2 =
      transition_distribution(build_cosine_squared(2, 0.0));
  REQUIRE_THAT(cos2.pmf[0], WithinAbs(0.5, 1e-12));
  REQUIRE_THAT(cos2.pmf[1], WithinAbs(0.5, 1e-12));

  for (int steps : {1, 7, 64}) {
    for (const AlphaSchedule& sched :
         {build_linear(steps), build_cosine(steps), build_cosine_squared(steps)}) {
      TransitionTimeDistribution dist = transition_distribution(sched);
      double sum = 0.0;
      for (double p : dist.pmf) sum += p;
      REQUIRE_THAT(sum, WithinAbs(1.0, 1e-9));
    }
  }
}

TEST_CASE("continuous transition density integrates to 1 and inverts") {
  for (const AlphaSchedule& sched :
       {build_linear_continuous(), build_cosine_continuous(),
        build_cosine_squared_continuous()}) {
    TransitionTimeDistribution dist = transition_distribution(sched);
    // midpoint quadrature of -alpha'(t)
    const int bins = 20000;
    double integral = 0.0;
    for (int i = 0; i < bins; ++i)
      integral += dist.density_fn((i + 0.5) / bins) / bins;
    REQUIRE_THAT(integral, WithinAbs(1.0, 1e-6));
    for (double u : {0.05, 0.3, 0.77, 0.99}) {
      double t = dist.quantile_fn(u);
      REQUIRE_THAT(1.0 - sched.alpha(t), WithinAbs(u, 1e-9));
    }
  }
}

TEST_CASE("beta discretization uses exact CDF bins with fold rules") {
  // Beta(1,1) is uniform: bins [0,0.375), [0.375,0.625), [0.625,0.875), [0.875,1]
  TransitionTimeDistribution dist = beta_transition_distribution(1.0, 1.0, 4);
  REQUIRE_THAT(dist.pmf[0], WithinAbs(0.375, 1e-12));
  REQUIRE_THAT(dist.pmf[1], WithinAbs(0.25, 1e-12));
  REQUIRE_THAT(dist.pmf[2], WithinAbs(0.25, 1e-12));
  REQUIRE_THAT(dist.pmf[3], WithinAbs(0.125, 1e-12));

  // Monte Carlo oracle: round T*u of uniform draws, 0 folded into bin 1.
  RngStream rng(5, 0);
  std::vector<long> counts(4, 0);
  const long draws = 1000000;
  for (long i = 0; i < draws; ++i) {
    int t = static_cast<int>(std::lround(4.0 * rng.next_double()));
    t = std::clamp(t, 1, 4);
    ++counts[t - 1];
  }
  for (int t = 0; t < 4; ++t)
    REQUIRE_THAT(static_cast<double>(counts[t]) / draws,
                 WithinAbs(dist.pmf[t], 0.002));

  REQUIRE_THROWS_AS(beta_transition_distribution(0.0, 1.0, 4),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(beta_transition_distribution(1.0, -2.0, 4),
                    std::invalid_argument);
}

TEST_CASE("beta discretization normalizes and peaks at the mode") {
  for (auto [a, b] : {std::pair{3.0, 3.0}, {17.0, 4.0}, {0.5, 0.5}, {1.0, 9.0}}) {
    for (int steps : {1, 4, 100}) {
      TransitionTimeDistribution dist = beta_transition_distribution(a, b, steps);
      double sum = 0.0;
      for (double p : dist.pmf) sum += p;
      REQUIRE_THAT(sum, WithinAbs(1.0, 1e-9));
    }
  }
  TransitionTimeDistribution sym = beta_transition_distribution(3.0, 3.0, 1000);
  auto argmax =
      std::max_element(sym.pmf.begin(), sym.pmf.end()) - sym.pmf.begin() + 1;
  REQUIRE(argmax >= 490);
  REQUIRE(argmax <= 510);
}

TEST_CASE("transition set sampling") {
  RngStream rng(21, 0);
  TransitionTimeDistribution uniform = transition_distribution(build_linear(4));

  TransitionSet single = sample_transition_set(uniform, 1, rng);
  REQUIRE(single.distinct_count() == 1);

  // Exhaustive oracle: E|T| over all 16 (tau1, tau2) pairs = 1.75.
  double expected = 0.0;
  for (int a = 1; a <= 4; ++a)
    for (int b = 1; b <= 4; ++b) expected += (a == b ? 1.0 : 2.0) / 16.0;
  REQUIRE_THAT(expected, WithinAbs(1.75, 1e-15));
  double mean = 0.0;
  const long trials = 100000;
  for (long i = 0; i < trials; ++i)
    mean += static_cast<double>(sample_transition_set(uniform, 2, rng).distinct_count());
  REQUIRE_THAT(mean / trials, WithinAbs(1.75, 0.01));

  TransitionTimeDistribution beta = beta_transition_distribution_continuous(17.0, 4.0);
  TransitionSet cont = sample_transition_set(beta, 20, rng);
  REQUIRE(cont.distinct_count() == 20);
  for (double t : cont.times_real) {
    REQUIRE(t > 0.0);
    REQUIRE(t < 1.0);
  }
}

TEST_CASE("distinct transition times never exceed min(N, T)") {
  RngStream rng(22, 0);
  for (int steps : {1, 3, 10, 50}) {
    TransitionTimeDistribution dist = transition_distribution(build_cosine(steps));
    for (int n : {1, 2, 7, 40}) {
      for (int rep = 0; rep < 200; ++rep) {
        TransitionSet set = sample_transition_set(dist, n, rng);
        REQUIRE(set.distinct_count() >= 1);
        REQUIRE(set.distinct_count() <=
                static_cast<std::size_t>(std::min(n, steps)));
        for (int t : set.times)
          REQUIRE(std::binary_search(set.distinct_times.begin(),
                                     set.distinct_times.end(), t));
      }
    }
  }
}

TEST_CASE("sampled transition histogram passes chi-square against the pmf") {
  TransitionTimeDistribution dist = transition_distribution(build_linear(50));
  RngStream rng(23, 0);
  std::vector<long> counts(50, 0);
  for (int i = 0; i < 100000; ++i)
    ++counts[sample_transition_set(dist, 1, rng).times[0] - 1];
  REQUIRE(chi_square_gof(counts, dist.pmf, 1e-4).passed);
}

TEST_CASE("position-biased transition order") {
  RngStream rng(24, 0);
  TransitionTimeDistribution dist = transition_distribution(build_linear(20));
  TransitionSet set = sample_transition_set(dist, 8, rng);
  TransitionSet ltr = apply_position_bias(set, TransitionOrder::LeftToRight);
  TransitionSet rtl = apply_position_bias(set, TransitionOrder::RightToLeft);
  for (std::size_t n = 1; n < ltr.times.size(); ++n) {
    REQUIRE(ltr.times[n] <= ltr.times[n - 1]);  // left tokens commit earlier
    REQUIRE(rtl.times[n] >= rtl.times[n - 1]);
  }
  REQUIRE(ltr.distinct_times == set.distinct_times);
}
