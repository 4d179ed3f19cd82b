#include <catch2/catch_amalgamated.hpp>

#include "dndm/analytics.hpp"

using namespace dndm;
using Catch::Matchers::WithinAbs;

TEST_CASE("closed-form expected nfe for uniform transition laws") {
  // uniform T=4, N=2: E = 1.75
  TransitionTimeDistribution uniform4 =
      transition_distribution(build_linear(4));
  NfeReport r42 = expected_nfe(uniform4, 2);
  REQUIRE_THAT(r42.expected_nfe, WithinAbs(1.75, 1e-12));
  // uniform T=4, N=4: C = 0.31640625, E = 2.734375
  NfeReport r44 = expected_nfe(uniform4, 4);
  REQUIRE_THAT(r44.c_constant, WithinAbs(0.31640625, 1e-12));
  REQUIRE_THAT(r44.expected_nfe, WithinAbs(2.734375, 1e-12));
  // N=1 always costs exactly one call
  REQUIRE_THAT(expected_nfe(uniform4, 1).expected_nfe, WithinAbs(1.0, 1e-12));
}

TEST_CASE("uniform law attains the lower bound on the saved fraction") {
  TransitionTimeDistribution uniform4 =
      transition_distribution(build_linear(4));
  double bound = nfe_lower_bound_uniform(4, 3);
  REQUIRE_THAT(expected_nfe(uniform4, 3).c_constant, WithinAbs(bound, 1e-12));

  TransitionTimeDistribution skewed;
  skewed.mode = TransitionTimeDistribution::Mode::DiscretePmf;
  skewed.pmf = {0.7, 0.1, 0.1, 0.1};
  // C = (0.3^3 + 3 * 0.9^3) / 4 = 0.55350 > (3/4)^3 = 0.421875
  NfeReport skew_report = expected_nfe(skewed, 3);
  REQUIRE_THAT(skew_report.c_constant,
               WithinAbs((std::pow(0.3, 3) + 3 * std::pow(0.9, 3)) / 4, 1e-12));
  REQUIRE(skew_report.c_constant > bound);
  // Savings always exist for finite T: E < N whenever collisions can happen.
  REQUIRE(expected_nfe(uniform4, 8).expected_nfe < 8.0);
}

TEST_CASE("measured nfe matches the closed form") {
  RngStream rng(21, 0);
  for (int steps : {4, 50}) {
    for (int tokens : {2, 25}) {
      TransitionTimeDistribution dist =
          transition_distribution(build_linear(steps));
      NfeReport report = measure_nfe(dist, tokens, 20000, rng);
      double se = report.empirical_stddev / std::sqrt(20000.0);
      REQUIRE(std::abs(report.empirical_mean - report.expected_nfe) <=
              std::max(3 * se, 1e-9));
    }
  }
}

TEST_CASE("total variation distance basics") {
  REQUIRE_THAT(tv_distance({0.5, 0.5}, {0.5, 0.5}), WithinAbs(0.0, 1e-15));
  REQUIRE_THAT(tv_distance({1.0, 0.0}, {0.0, 1.0}), WithinAbs(1.0, 1e-15));
  REQUIRE_THAT(tv_distance({0.5, 0.5}, {0.25, 0.75}), WithinAbs(0.25, 1e-15));
  REQUIRE_THROWS_AS(tv_distance({1.0}, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("chi-square goodness of fit accepts the true law") {
  // Counts exactly proportional to the pmf give statistic 0.
  GofResult exact = chi_square_gof({250, 250, 250, 250},
                                   {0.25, 0.25, 0.25, 0.25}, 1e-4);
  REQUIRE_THAT(exact.statistic, WithinAbs(0.0, 1e-12));
  REQUIRE_THAT(exact.p_value, WithinAbs(1.0, 1e-12));
  REQUIRE(exact.passed);

  // Large sample from the true uniform law passes.
  RngStream rng(22, 0);
  std::vector<long> counts(10, 0);
  CategoricalDist uniform(std::vector<double>(10, 0.1));
  for (long i = 0; i < 100000; ++i)
    ++counts[sample_categorical(uniform, rng)];
  GofResult good = chi_square_gof(counts, uniform.probs, 1e-4);
  REQUIRE(good.passed);

  // A shifted pmf at TV distance 0.1 fails decisively at this sample size.
  std::vector<double> shifted(10, 0.1);
  shifted[0] = 0.2;
  shifted[1] = 0.0;
  GofResult bad = chi_square_gof(counts, shifted, 1e-4);
  REQUIRE_FALSE(bad.passed);
}

TEST_CASE("chi-square pools sparse bins") {
  // Second bin expects 1 count; it must pool with a neighbor, not divide by
  // a tiny expectation.
  GofResult pooled =
      chi_square_gof({95, 2, 3}, {0.95, 0.01, 0.04}, 1e-4);
  REQUIRE(pooled.dof == 1);
  REQUIRE(pooled.passed);
}

TEST_CASE("analytics input validation") {
  TransitionTimeDistribution cont =
      transition_distribution(build_linear_continuous());
  REQUIRE_THROWS_AS(expected_nfe(cont, 2), std::invalid_argument);
  TransitionTimeDistribution uniform4 =
      transition_distribution(build_linear(4));
  REQUIRE_THROWS_AS(expected_nfe(uniform4, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(nfe_lower_bound_uniform(0, 1), std::invalid_argument);
}
