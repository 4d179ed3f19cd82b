#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "dndm/analytics.hpp"
#include "dndm/forward.hpp"

using namespace dndm;
using Catch::Matchers::WithinAbs;

TEST_CASE("markov forward keeps tokens while beta is 1") {
  // beta_t = 1 for t < T, so nothing changes until the final step.
  AlphaSchedule sched = AlphaSchedule::discrete({1.0, 1.0, 1.0, 0.0});
  VocabSpec vocab(3, true);
  NoiseModel noise = NoiseModel::absorbing(vocab);
  RngStream rng(1, 0);
  Sequence x0{0, 2, 1};
  ForwardTrajectory traj = markov_forward(x0, sched, noise, rng);
  REQUIRE(traj.state_at(0) == x0);
  REQUIRE(traj.state_at(1) == x0);
  REQUIRE(traj.state_at(2) == x0);
  REQUIRE(traj.state_at(3) == Sequence{3, 3, 3});
}

TEST_CASE("markov forward absorbs immediately when beta_1 = 0") {
  AlphaSchedule sched = AlphaSchedule::discrete({1.0, 0.0, 0.0, 0.0});
  VocabSpec vocab(2, true);
  NoiseModel noise = NoiseModel::absorbing(vocab);
  RngStream rng(2, 0);
  ForwardTrajectory traj = markov_forward({0, 1}, sched, noise, rng);
  for (int t = 1; t <= 3; ++t) REQUIRE(traj.state_at(t) == Sequence{2, 2});
}

TEST_CASE("markov forward matches the analytic keep probability") {
  // Eq. 3 marginal plus the uniform collision term:
  // P(x_25 = x_0) = alpha + (1 - alpha)/K = 0.5 + 0.1 = 0.6 for K=5.
  AlphaSchedule sched = build_linear(50);
  VocabSpec vocab(5, false);
  NoiseModel noise = NoiseModel::uniform(vocab);
  long hits = 0;
  const long trials = 100000;
  for (long trial = 0; trial < trials; ++trial) {
    RngStream rng(7, substream_id(trial, 0));
    ForwardTrajectory traj = markov_forward({2}, sched, noise, rng);
    hits += traj.state_at(25)[0] == 2;
  }
  REQUIRE_THAT(static_cast<double>(hits) / trials, WithinAbs(0.6, 0.01));
}

TEST_CASE("non-markov trajectory follows the indicator form") {
  AlphaSchedule sched = build_linear(10);
  VocabSpec vocab(3, true);
  NoiseModel noise = NoiseModel::absorbing(vocab);
  for (long trial = 0; trial < 500; ++trial) {
    RngStream rng(8, substream_id(trial, 0));
    ForwardTrajectory traj = nonmarkov_forward({0, 1, 2}, sched, noise, rng);
    for (std::size_t n = 0; n < 3; ++n) {
      int tau = traj.transition_set.times[n];
      for (int t = 0; t <= 10; ++t) {
        Token expect = t < tau ? traj.x0[n] : traj.noise_tokens[n];
        REQUIRE(traj.state_at(t)[n] == expect);
      }
    }
  }
}

TEST_CASE("non-markov path never reverts after its transition") {
  AlphaSchedule sched = build_cosine(20);
  VocabSpec vocab(4, false);
  NoiseModel noise = NoiseModel::uniform(vocab);
  for (long trial = 0; trial < 300; ++trial) {
    RngStream rng(9, substream_id(trial, 0));
    ForwardTrajectory traj = nonmarkov_forward({1, 3}, sched, noise, rng);
    for (std::size_t n = 0; n < 2; ++n) {
      bool transitioned = false;
      for (int t = 0; t <= 20; ++t) {
        bool is_noise = t >= traj.transition_set.times[n];
        if (transitioned) REQUIRE(is_noise);
        transitioned = is_noise;
      }
    }
  }
}

TEST_CASE("non-markov marginal matches the analytic mixture") {
  AlphaSchedule sched = build_linear(10);
  VocabSpec vocab(3, false);
  NoiseModel noise = NoiseModel::uniform(vocab);
  std::vector<long> counts(3, 0);
  const long trials = 100000;
  for (long trial = 0; trial < trials; ++trial) {
    RngStream rng(10, substream_id(trial, 0));
    ForwardTrajectory traj = nonmarkov_forward({1}, sched, noise, rng);
    ++counts[traj.state_at(5)[0]];
  }
  CategoricalDist truth = marginal_at(1, 5, sched, noise);
  std::vector<double> empirical(3);
  for (int i = 0; i < 3; ++i)
    empirical[i] = static_cast<double>(counts[i]) / trials;
  REQUIRE(tv_distance(empirical, truth.probs) < 0.01);
}

TEST_CASE("marginal_at mixes the point mass with the noise") {
  AlphaSchedule sched = build_linear(2);
  VocabSpec vocab(4, false);
  NoiseModel noise = NoiseModel::uniform(vocab);

  CategoricalDist start = marginal_at(2, 0, sched, noise);  // alpha = 1
  REQUIRE(start.probs == std::vector<double>{0.0, 0.0, 1.0, 0.0});

  CategoricalDist end = marginal_at(2, 2, sched, noise);  // alpha = 0
  REQUIRE(end.probs == noise.dist().probs);

  CategoricalDist mid = marginal_at(2, 1, sched, noise);  // alpha = 0.5
  REQUIRE_THAT(mid.probs[0], WithinAbs(0.125, 1e-12));
  REQUIRE_THAT(mid.probs[1], WithinAbs(0.125, 1e-12));
  REQUIRE_THAT(mid.probs[2], WithinAbs(0.625, 1e-12));
  REQUIRE_THAT(mid.probs[3], WithinAbs(0.125, 1e-12));

  REQUIRE_THROWS_AS(marginal_at(2, 3, sched, noise), std::invalid_argument);
}

TEST_CASE("markov forward rejects continuous schedules") {
  VocabSpec vocab(2, true);
  NoiseModel noise = NoiseModel::absorbing(vocab);
  RngStream rng(1, 0);
  REQUIRE_THROWS_AS(markov_forward({0}, build_linear_continuous(), noise, rng),
                    std::invalid_argument);
}

// For absorbing noise the two forward processes define the same distribution
// over whole trajectories. K=2, N=1, T=3: enumerate both exactly.
TEST_CASE("absorbing trajectories are identical in distribution") {
  AlphaSchedule sched = build_linear(3);
  // Markov: at each step keep with beta_t, else jump to mask (and stay).
  // Trajectory is determined by the first failure step s (or none).
  std::map<int, double> markov_law;  // first mask time, 4 = never
  double stay = 1.0;
  for (int t = 1; t <= 3; ++t) {
    double beta = sched.beta(t);
    markov_law[t] = stay * (1.0 - beta);
    stay *= beta;
  }
  markov_law[4] = stay;
  // Non-Markov: tau pmf alpha_{t-1} - alpha_t, trajectory masks from tau on.
  TransitionTimeDistribution dist = transition_distribution(sched);
  double tv = 0.0;
  for (int t = 1; t <= 3; ++t)
    tv += std::abs(markov_law[t] - dist.pmf[t - 1]);
  tv += std::abs(markov_law[4] - 0.0);
  REQUIRE(tv / 2.0 < 1e-12);
}
