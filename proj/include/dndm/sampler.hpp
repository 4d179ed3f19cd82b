#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dndm/core.hpp"
#include "dndm/datamodel.hpp"
#include "dndm/rng.hpp"
#include "dndm/schedule.hpp"

namespace dndm {

struct TraceEvent {
  double time = 0.0;
  std::vector<int> positions;  // positions committed/overwritten at this call
};

// Full record of one reverse-sampling run. nfe counts denoiser calls, one
// per event.
struct SampleTrace {
  Sequence final;
  int nfe = 0;
  std::vector<TraceEvent> events;
  std::string sampler_id;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

struct SamplerConfig {
  std::optional<TransitionTimeDistribution> transition_dist;
  TransitionOrder order = TransitionOrder::Random;
};

namespace detail {

inline Sequence init_from_noise(const NoiseModel& noise, int num_tokens,
                                RngStream& rng) {
  Sequence seq(num_tokens);
  for (Token& tok : seq) tok = sample_noise(noise, rng);
  return seq;
}

inline TransitionSet draw_transitions(const AlphaSchedule& schedule,
                                      const SamplerConfig& config,
                                      int num_tokens, RngStream& rng) {
  TransitionTimeDistribution dist =
      config.transition_dist ? *config.transition_dist
                             : transition_distribution(schedule);
  TransitionSet set = sample_transition_set(dist, num_tokens, rng);
  return apply_position_bias(std::move(set), config.order);
}

inline void stamp(SampleTrace& trace, const RngStream& rng) {
  trace.seed = rng.seed();
  trace.stream_id = rng.stream_id();
}

}  // namespace detail

// D3PM-Absorb reverse kernel: one denoiser call per step; each still-masked
// position flips to x0_hat with probability (alpha_{t-1} - alpha_t)/(1 - alpha_t).
inline SampleTrace baseline_absorb_sample(const Denoiser& denoiser,
                                          const AlphaSchedule& schedule,
                                          const NoiseModel& noise,
                                          int num_tokens, RngStream& rng) {
  if (!schedule.is_discrete())
    throw std::invalid_argument("baseline_absorb_sample: discrete schedule required");
  if (noise.kind != NoiseKind::Absorbing)
    throw std::invalid_argument("baseline_absorb_sample: absorbing noise required");
  for (int t = 1; t <= schedule.steps(); ++t)
    if (schedule.alphas[t] >= 1.0)
      throw std::invalid_argument("baseline_absorb_sample: alpha_t = 1 at t >= 1");
  SampleTrace trace;
  trace.sampler_id = "baseline-absorb";
  detail::stamp(trace, rng);
  Token mask = noise.vocab.mask_index();
  Sequence x(num_tokens, mask);
  for (int t = schedule.steps(); t >= 1; --t) {
    Prediction pred = denoiser.predict(x, t, rng);
    ++trace.nfe;
    TraceEvent event{static_cast<double>(t), {}};
    double flip = (schedule.alphas[t - 1] - schedule.alphas[t]) /
                  (1.0 - schedule.alphas[t]);
    for (int n = 0; n < num_tokens; ++n) {
      if (x[n] != mask) continue;
      if (sample_bernoulli(flip, rng)) {
        x[n] = pred.x0_hat[n];
        event.positions.push_back(n);
      }
    }
    trace.events.push_back(std::move(event));
  }
  trace.final = std::move(x);
  return trace;
}

// Per-position posterior product for the multinomial baseline:
// theta_post over the K real categories, x_t one-hot against x0_hat one-hot.
inline std::vector<double> multinomial_posterior(Token xt, Token x0_hat,
                                                 double beta_t,
                                                 double alpha_prev, int k) {
  std::vector<double> probs(k);
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    double left = (i == xt ? beta_t : 0.0) + (1.0 - beta_t) / k;
    double right = (i == x0_hat ? alpha_prev : 0.0) + (1.0 - alpha_prev) / k;
    probs[i] = left * right;
    total += probs[i];
  }
  if (!(total > 0.0))
    throw std::runtime_error("multinomial_posterior: zero normalizer");
  for (double& p : probs) p /= total;
  return probs;
}

// Markov multinomial reverse sampler (one call per step).
inline SampleTrace baseline_multinomial_sample(const Denoiser& denoiser,
                                               const AlphaSchedule& schedule,
                                               const NoiseModel& noise,
                                               int num_tokens, RngStream& rng) {
  if (!schedule.is_discrete())
    throw std::invalid_argument(
        "baseline_multinomial_sample: discrete schedule required");
  if (noise.kind != NoiseKind::UniformMultinomial)
    throw std::invalid_argument(
        "baseline_multinomial_sample: uniform noise required");
  SampleTrace trace;
  trace.sampler_id = "baseline-multi";
  detail::stamp(trace, rng);
  int k = noise.vocab.base_size;
  Sequence x = detail::init_from_noise(noise, num_tokens, rng);
  for (int t = schedule.steps(); t >= 1; --t) {
    Prediction pred = denoiser.predict(x, t, rng);
    ++trace.nfe;
    TraceEvent event{static_cast<double>(t), {}};
    double beta_t = schedule.beta(t);
    double alpha_prev = schedule.alphas[t - 1];
    for (int n = 0; n < num_tokens; ++n) {
      CategoricalDist dist{
          multinomial_posterior(x[n], pred.x0_hat[n], beta_t, alpha_prev, k)};
      Token next = sample_categorical(dist, rng);
      if (next != x[n]) event.positions.push_back(n);
      x[n] = next;
    }
    trace.events.push_back(std::move(event));
  }
  trace.final = std::move(x);
  return trace;
}

// DNDM reverse sampling: one denoiser call per distinct transition time;
// positions with tau_n = t are committed to x0_hat, everything else is
// copied unchanged.
inline SampleTrace dndm_sample(const Denoiser& denoiser,
                               const AlphaSchedule& schedule,
                               const NoiseModel& noise, int num_tokens,
                               const SamplerConfig& config, RngStream& rng) {
  SampleTrace trace;
  trace.sampler_id = "dndm";
  detail::stamp(trace, rng);
  Sequence x = detail::init_from_noise(noise, num_tokens, rng);
  TransitionSet set = detail::draw_transitions(schedule, config, num_tokens, rng);
  if (!set.discrete)
    throw std::invalid_argument("dndm_sample: discrete transition times required");
  for (auto it = set.distinct_times.rbegin(); it != set.distinct_times.rend();
       ++it) {
    int t = *it;
    Prediction pred = denoiser.predict(x, t, rng);
    ++trace.nfe;
    TraceEvent event{static_cast<double>(t), {}};
    for (int n = 0; n < num_tokens; ++n) {
      if (set.times[n] == t) {
        x[n] = pred.x0_hat[n];
        event.positions.push_back(n);
      }
    }
    trace.events.push_back(std::move(event));
  }
  trace.final = std::move(x);
  return trace;
}

// Version 2: identical call pattern, but every position with tau_n >= t is
// overwritten at each call, so tokens may be revised several times.
inline SampleTrace dndm_v2_sample(const Denoiser& denoiser,
                                  const AlphaSchedule& schedule,
                                  const NoiseModel& noise, int num_tokens,
                                  const SamplerConfig& config, RngStream& rng) {
  SampleTrace trace;
  trace.sampler_id = "dndm-v2";
  detail::stamp(trace, rng);
  Sequence x = detail::init_from_noise(noise, num_tokens, rng);
  TransitionSet set = detail::draw_transitions(schedule, config, num_tokens, rng);
  if (!set.discrete)
    throw std::invalid_argument("dndm_v2_sample: discrete transition times required");
  for (auto it = set.distinct_times.rbegin(); it != set.distinct_times.rend();
       ++it) {
    int t = *it;
    Prediction pred = denoiser.predict(x, t, rng);
    ++trace.nfe;
    TraceEvent event{static_cast<double>(t), {}};
    for (int n = 0; n < num_tokens; ++n) {
      if (set.times[n] >= t) {
        x[n] = pred.x0_hat[n];
        event.positions.push_back(n);
      }
    }
    trace.events.push_back(std::move(event));
  }
  trace.final = std::move(x);
  return trace;
}

// Top-k transition: the transition set only fixes how many positions are
// committed by each step; which positions are committed is decided by the
// denoiser's confidence scores. K_s = #{n : tau_n > s} is the committed
// count in x_s, so a call happens at step t exactly when some tau_n = t.
// Score ties break by ascending position index.
inline SampleTrace dndm_topk_sample(const Denoiser& denoiser,
                                    const AlphaSchedule& schedule,
                                    const NoiseModel& noise, int num_tokens,
                                    const SamplerConfig& config,
                                    RngStream& rng) {
  SampleTrace trace;
  trace.sampler_id = "dndm-topk";
  detail::stamp(trace, rng);
  Sequence x = detail::init_from_noise(noise, num_tokens, rng);
  TransitionSet set = detail::draw_transitions(schedule, config, num_tokens, rng);
  if (!set.discrete)
    throw std::invalid_argument("dndm_topk_sample: discrete transition times required");
  auto committed_target = [&](int s) {
    int count = 0;
    for (int tau : set.times) count += tau > s;
    return count;
  };
  int max_t = *std::max_element(set.times.begin(), set.times.end());
  std::vector<char> updated(num_tokens, 0);
  for (int t = max_t; t >= 1; --t) {
    int target_prev = committed_target(t - 1);
    int target_cur = committed_target(t);
    if (target_prev <= target_cur) continue;
    Prediction pred = denoiser.predict(x, t, rng);
    ++trace.nfe;
    TraceEvent event{static_cast<double>(t), {}};
    std::vector<int> ranked(num_tokens);
    for (int n = 0; n < num_tokens; ++n) ranked[n] = n;
    std::stable_sort(ranked.begin(), ranked.end(), [&](int a, int b) {
      return pred.scores[a] > pred.scores[b];
    });
    for (int i = 0; i < target_prev; ++i) {
      int n = ranked[i];
      if (updated[n]) continue;
      x[n] = pred.x0_hat[n];
      updated[n] = 1;
      event.positions.push_back(n);
    }
    trace.events.push_back(std::move(event));
  }
  trace.final = std::move(x);
  return trace;
}

// Continuous-time DNDM: real-valued transition times, sorted descending;
// positions sharing a (numerically equal) time are committed by one call.
// nfe <= N, with equality when all times are distinct.
inline SampleTrace dndm_continuous_sample(const Denoiser& denoiser,
                                          const AlphaSchedule& schedule,
                                          const NoiseModel& noise,
                                          int num_tokens,
                                          const SamplerConfig& config,
                                          RngStream& rng) {
  SampleTrace trace;
  trace.sampler_id = "dndm-c";
  detail::stamp(trace, rng);
  Sequence x = detail::init_from_noise(noise, num_tokens, rng);
  TransitionTimeDistribution dist =
      config.transition_dist ? *config.transition_dist
                             : transition_distribution(schedule);
  if (dist.is_discrete())
    throw std::invalid_argument(
        "dndm_continuous_sample: continuous transition times required");
  TransitionSet set = sample_transition_set(dist, num_tokens, rng);
  set = apply_position_bias(std::move(set), config.order);
  set.rebuild_distinct();
  for (auto it = set.distinct_times_real.rbegin();
       it != set.distinct_times_real.rend(); ++it) {
    double tau = *it;
    Prediction pred = denoiser.predict(x, tau, rng);
    ++trace.nfe;
    TraceEvent event{tau, {}};
    for (int n = 0; n < num_tokens; ++n) {
      if (set.times_real[n] == tau) {
        x[n] = pred.x0_hat[n];
        event.positions.push_back(n);
      }
    }
    trace.events.push_back(std::move(event));
  }
  trace.final = std::move(x);
  return trace;
}

}  // namespace dndm
