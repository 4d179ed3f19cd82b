#pragma once

#include <stdexcept>
#include <vector>

#include "dndm/core.hpp"
#include "dndm/rng.hpp"
#include "dndm/schedule.hpp"

namespace dndm {

// One corruption run. Markov trajectories materialize every step; non-Markov
// trajectories are fully determined by (x0, w, tau) and evaluate states on
// demand: x_t[n] = x0[n] if t < tau_n else w[n].
struct ForwardTrajectory {
  bool markov = true;
  int steps = 0;
  Sequence x0;
  std::vector<Sequence> states;  // Markov mode: states[0..T]
  Sequence noise_tokens;         // non-Markov mode: w per position
  TransitionSet transition_set;  // non-Markov mode

  Sequence state_at(double t) const {
    if (markov) {
      int idx = static_cast<int>(t);
      if (t < 0 || idx > steps || idx != t)
        throw std::invalid_argument("ForwardTrajectory: t out of range");
      return states[idx];
    }
    Sequence out(x0.size());
    for (std::size_t n = 0; n < x0.size(); ++n) {
      double tau = transition_set.discrete
                       ? static_cast<double>(transition_set.times[n])
                       : transition_set.times_real[n];
      out[n] = t < tau ? x0[n] : noise_tokens[n];
    }
    return out;
  }

  std::vector<Sequence> all_states() const {
    if (markov) return states;
    std::vector<Sequence> out;
    out.reserve(steps + 1);
    for (int t = 0; t <= steps; ++t) out.push_back(state_at(t));
    return out;
  }
};

// Markov corruption, Bernoulli(beta_t) keep per step per token with fresh
// noise on each failure.
inline ForwardTrajectory markov_forward(const Sequence& x0,
                                        const AlphaSchedule& schedule,
                                        const NoiseModel& noise,
                                        RngStream& rng) {
  if (!schedule.is_discrete())
    throw std::invalid_argument("markov_forward: discrete schedule required");
  check_sequence(x0, noise.vocab);
  ForwardTrajectory traj;
  traj.markov = true;
  traj.steps = schedule.steps();
  traj.x0 = x0;
  traj.states.resize(traj.steps + 1);
  traj.states[0] = x0;
  for (int t = 1; t <= traj.steps; ++t) {
    const Sequence& prev = traj.states[t - 1];
    Sequence cur(prev.size());
    double beta = schedule.beta(t);
    for (std::size_t n = 0; n < prev.size(); ++n)
      cur[n] = sample_bernoulli(beta, rng) ? prev[n] : sample_noise(noise, rng);
    traj.states[t] = std::move(cur);
  }
  return traj;
}

// Non-Markov corruption: one noise token w and one transition time tau per
// position; all states follow from the indicator form.
inline ForwardTrajectory nonmarkov_forward(const Sequence& x0,
                                           const AlphaSchedule& schedule,
                                           const NoiseModel& noise,
                                           RngStream& rng) {
  check_sequence(x0, noise.vocab);
  ForwardTrajectory traj;
  traj.markov = false;
  traj.steps = schedule.is_discrete() ? schedule.steps() : 1;
  traj.x0 = x0;
  traj.noise_tokens.resize(x0.size());
  for (std::size_t n = 0; n < x0.size(); ++n)
    traj.noise_tokens[n] = sample_noise(noise, rng);
  auto dist = transition_distribution(schedule);
  traj.transition_set =
      sample_transition_set(dist, static_cast<int>(x0.size()), rng);
  return traj;
}

// Analytic per-token marginal: alpha_t on the data token, 1 - alpha_t spread
// as q_noise.
inline CategoricalDist marginal_at(Token x0_token, double t,
                                   const AlphaSchedule& schedule,
                                   const NoiseModel& noise) {
  if (!noise.vocab.valid_token(x0_token))
    throw std::invalid_argument("marginal_at: token out of range");
  double alpha = schedule.alpha(t);
  CategoricalDist dist = noise.dist();
  for (double& p : dist.probs) p *= 1.0 - alpha;
  dist.probs[x0_token] += alpha;
  return dist;
}

}  // namespace dndm
