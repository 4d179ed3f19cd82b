#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "dndm/core.hpp"
#include "dndm/rng.hpp"

namespace dndm {

// Decreasing noise schedule: alpha_t is the probability a token is still
// uncorrupted at time t. Discrete schedules hold alpha_0..alpha_T with
// alpha_0 = 1 and alpha_T = 0; continuous schedules map [0,1] -> [0,1]
// with alpha(0) = 1 and alpha(1) = 0.
struct AlphaSchedule {
  enum class Mode { Discrete, Continuous };

  Mode mode = Mode::Discrete;
  std::vector<double> alphas;                       // Discrete
  std::function<double(double)> alpha_fn;           // Continuous
  std::function<double(double)> alpha_derivative_fn;

  static AlphaSchedule discrete(std::vector<double> alphas) {
    AlphaSchedule sched;
    sched.mode = Mode::Discrete;
    sched.alphas = std::move(alphas);
    sched.validate();
    return sched;
  }

  static AlphaSchedule continuous(std::function<double(double)> alpha,
                                  std::function<double(double)> alpha_deriv) {
    AlphaSchedule sched;
    sched.mode = Mode::Continuous;
    sched.alpha_fn = std::move(alpha);
    sched.alpha_derivative_fn = std::move(alpha_deriv);
    sched.validate();
    return sched;
  }

  bool is_discrete() const { return mode == Mode::Discrete; }

  int steps() const {
    if (!is_discrete())
      throw std::logic_error("AlphaSchedule: steps() on continuous schedule");
    return static_cast<int>(alphas.size()) - 1;
  }

  double alpha(double t) const {
    if (is_discrete()) {
      auto idx = static_cast<std::size_t>(std::llround(t));
      if (std::abs(t - static_cast<double>(idx)) > 1e-9 || idx >= alphas.size())
        throw std::invalid_argument("AlphaSchedule: time index out of range");
      return alphas[idx];
    }
    if (t < 0.0 || t > 1.0)
      throw std::invalid_argument("AlphaSchedule: continuous time outside [0,1]");
    return alpha_fn(t);
  }

  // beta_t = alpha_t / alpha_{t-1}; 0 once the schedule has hit zero.
  double beta(int t) const {
    if (!is_discrete() || t < 1 || t > steps())
      throw std::invalid_argument("AlphaSchedule: bad beta index");
    return alphas[t - 1] == 0.0 ? 0.0 : alphas[t] / alphas[t - 1];
  }

  void validate() const {
    if (is_discrete()) {
      if (alphas.size() < 2)
        throw std::invalid_argument("AlphaSchedule: need alpha_0..alpha_T");
      if (std::abs(alphas.front() - 1.0) > 1e-12)
        throw std::invalid_argument("AlphaSchedule: alpha_0 must be 1");
      if (std::abs(alphas.back()) > 1e-12)
        throw std::invalid_argument("AlphaSchedule: alpha_T must be 0");
      for (std::size_t t = 1; t < alphas.size(); ++t) {
        if (alphas[t] > alphas[t - 1] + 1e-12)
          throw std::invalid_argument("AlphaSchedule: increasing segment");
      }
    } else {
      if (!alpha_fn || !alpha_derivative_fn)
        throw std::invalid_argument("AlphaSchedule: missing continuous functions");
      if (std::abs(alpha_fn(0.0) - 1.0) > 1e-9 || std::abs(alpha_fn(1.0)) > 1e-9)
        throw std::invalid_argument("AlphaSchedule: alpha(0)=1, alpha(1)=0 required");
    }
  }
};

inline AlphaSchedule build_linear(int steps) {
  if (steps < 1) throw std::invalid_argument("build_linear: T must be >= 1");
  std::vector<double> alphas(steps + 1);
  for (int t = 0; t <= steps; ++t)
    alphas[t] = 1.0 - static_cast<double>(t) / steps;
  alphas.back() = 0.0;
  return AlphaSchedule::discrete(std::move(alphas));
}

// alpha_t = f(t)/f(0) with f(t) = cos((s + t/T)/(1 + s) * pi/2),
// final entry clamped to exactly 0.
inline AlphaSchedule build_cosine(int steps, double offset = 0.008) {
  if (steps < 1) throw std::invalid_argument("build_cosine: T must be >= 1");
  if (offset < 0.0) throw std::invalid_argument("build_cosine: negative offset");
  auto f = [&](double t) {
    return std::cos((offset + t / steps) / (1.0 + offset) * std::numbers::pi / 2.0);
  };
  std::vector<double> alphas(steps + 1);
  for (int t = 0; t <= steps; ++t) alphas[t] = f(t) / f(0.0);
  alphas.back() = 0.0;
  return AlphaSchedule::discrete(std::move(alphas));
}

inline AlphaSchedule build_cosine_squared(int steps, double offset = 0.008) {
  if (steps < 1)
    throw std::invalid_argument("build_cosine_squared: T must be >= 1");
  if (offset < 0.0)
    throw std::invalid_argument("build_cosine_squared: negative offset");
  auto f = [&](double t) {
    double c =
        std::cos((offset + t / steps) / (1.0 + offset) * std::numbers::pi / 2.0);
    return c * c;
  };
  std::vector<double> alphas(steps + 1);
  for (int t = 0; t <= steps; ++t) alphas[t] = f(t) / f(0.0);
  alphas.back() = 0.0;
  return AlphaSchedule::discrete(std::move(alphas));
}

inline AlphaSchedule build_linear_continuous() {
  return AlphaSchedule::continuous([](double t) { return 1.0 - t; },
                                   [](double) { return -1.0; });
}

// Continuous limits of the cosine schedules (offset-free so alpha(1) = 0
// exactly).
inline AlphaSchedule build_cosine_continuous() {
  constexpr double half_pi = std::numbers::pi / 2.0;
  return AlphaSchedule::continuous(
      [=](double t) { return std::cos(t * half_pi); },
      [=](double t) { return -half_pi * std::sin(t * half_pi); });
}

inline AlphaSchedule build_cosine_squared_continuous() {
  constexpr double half_pi = std::numbers::pi / 2.0;
  return AlphaSchedule::continuous(
      [=](double t) {
        double c = std::cos(t * half_pi);
        return c * c;
      },
      [=](double t) {
        return -2.0 * half_pi * std::cos(t * half_pi) * std::sin(t * half_pi);
      });
}

// Law of the per-token transition time tau. Discrete: pmf over t = 1..T.
// Continuous: density on (0,1) plus a quantile function used for sampling.
struct TransitionTimeDistribution {
  enum class Mode { DiscretePmf, Continuous };

  Mode mode = Mode::DiscretePmf;
  std::vector<double> pmf;  // pmf[i] = P(tau = i+1)
  std::function<double(double)> density_fn;
  std::function<double(double)> quantile_fn;

  bool is_discrete() const { return mode == Mode::DiscretePmf; }

  int steps() const {
    if (!is_discrete())
      throw std::logic_error("TransitionTimeDistribution: continuous has no T");
    return static_cast<int>(pmf.size());
  }

  void validate() const {
    if (is_discrete()) {
      double sum = 0.0;
      for (double p : pmf) {
        if (!(p >= 0.0))
          throw std::invalid_argument("TransitionTimeDistribution: negative pmf");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("TransitionTimeDistribution: pmf must sum to 1");
    } else if (!density_fn || !quantile_fn) {
      throw std::invalid_argument("TransitionTimeDistribution: missing functions");
    }
  }
};

// P(tau = t) = alpha_{t-1} - alpha_t (discrete) or density -alpha'(t)
// (continuous). Continuous sampling inverts the monotone CDF
// 1 - alpha(t) by bisection.
inline TransitionTimeDistribution transition_distribution(
    const AlphaSchedule& schedule) {
  schedule.validate();
  TransitionTimeDistribution dist;
  if (schedule.is_discrete()) {
    dist.mode = TransitionTimeDistribution::Mode::DiscretePmf;
    dist.pmf.resize(schedule.steps());
    for (int t = 1; t <= schedule.steps(); ++t)
      dist.pmf[t - 1] = schedule.alphas[t - 1] - schedule.alphas[t];
  } else {
    dist.mode = TransitionTimeDistribution::Mode::Continuous;
    auto alpha = schedule.alpha_fn;
    auto deriv = schedule.alpha_derivative_fn;
    dist.density_fn = [deriv](double t) { return -deriv(t); };
    dist.quantile_fn = [alpha](double u) {
      // Solve alpha(t) = 1 - u on [0,1].
      double lo = 0.0, hi = 1.0, target = 1.0 - u;
      while (hi - lo > 1e-12) {
        double mid = 0.5 * (lo + hi);
        if (alpha(mid) > target)
          lo = mid;
        else
          hi = mid;
      }
      return 0.5 * (lo + hi);
    };
  }
  dist.validate();
  return dist;
}

// Discretized Beta(a, b) transition times: bin the round-to-nearest map
// t = round(T * x) with exact regularized-incomplete-beta CDF differences.
// Mass rounding to 0 folds into t = 1; mass above T folds into t = T.
inline TransitionTimeDistribution beta_transition_distribution(double a,
                                                               double b,
                                                               int steps) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::invalid_argument("beta_transition_distribution: a, b must be > 0");
  if (steps < 1)
    throw std::invalid_argument("beta_transition_distribution: T must be >= 1");
  auto cdf = [&](double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return boost::math::ibeta(a, b, x);
  };
  TransitionTimeDistribution dist;
  dist.mode = TransitionTimeDistribution::Mode::DiscretePmf;
  dist.pmf.resize(steps);
  for (int t = 1; t <= steps; ++t) {
    double lo = (t == 1) ? 0.0 : (t - 0.5) / steps;
    double hi = (t == steps) ? 1.0 : (t + 0.5) / steps;
    dist.pmf[t - 1] = cdf(hi) - cdf(lo);
  }
  dist.validate();
  return dist;
}

// Continuous Beta(a, b) transition times (the T = infinity case).
inline TransitionTimeDistribution beta_transition_distribution_continuous(
    double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::invalid_argument(
        "beta_transition_distribution_continuous: a, b must be > 0");
  TransitionTimeDistribution dist;
  dist.mode = TransitionTimeDistribution::Mode::Continuous;
  dist.density_fn = [a, b](double t) {
    return boost::math::ibeta_derivative(a, b, t);
  };
  dist.quantile_fn = [a, b](double u) { return boost::math::ibeta_inv(a, b, u); };
  dist.validate();
  return dist;
}

// Per-token transition times plus their sorted deduplicated values.
struct TransitionSet {
  bool discrete = true;
  std::vector<int> times;            // discrete mode
  std::vector<double> times_real;    // continuous mode
  std::vector<int> distinct_times;
  std::vector<double> distinct_times_real;

  std::size_t size() const {
    return discrete ? times.size() : times_real.size();
  }
  std::size_t distinct_count() const {
    return discrete ? distinct_times.size() : distinct_times_real.size();
  }

  void rebuild_distinct() {
    if (discrete) {
      distinct_times = times;
      std::sort(distinct_times.begin(), distinct_times.end());
      distinct_times.erase(
          std::unique(distinct_times.begin(), distinct_times.end()),
          distinct_times.end());
    } else {
      distinct_times_real = times_real;
      std::sort(distinct_times_real.begin(), distinct_times_real.end());
      distinct_times_real.erase(
          std::unique(distinct_times_real.begin(), distinct_times_real.end()),
          distinct_times_real.end());
    }
  }
};

inline TransitionSet sample_transition_set(const TransitionTimeDistribution& dist,
                                           int num_tokens, RngStream& rng) {
  if (num_tokens < 1)
    throw std::invalid_argument("sample_transition_set: N must be >= 1");
  dist.validate();
  TransitionSet set;
  set.discrete = dist.is_discrete();
  if (set.discrete) {
    set.times.resize(num_tokens);
    for (int n = 0; n < num_tokens; ++n) {
      double u = rng.next_double();
      double acc = 0.0;
      int drawn = dist.steps();
      for (int t = 1; t <= dist.steps(); ++t) {
        acc += dist.pmf[t - 1];
        if (u < acc) {
          drawn = t;
          break;
        }
      }
      set.times[n] = drawn;
    }
  } else {
    set.times_real.resize(num_tokens);
    for (int n = 0; n < num_tokens; ++n)
      set.times_real[n] = dist.quantile_fn(rng.next_double());
  }
  set.rebuild_distinct();
  return set;
}

enum class TransitionOrder { Random, LeftToRight, RightToLeft };

// Reassigns sampled times to positions by order. Left-to-right commits left
// tokens earlier in the reverse pass, i.e. gives them the larger times.
inline TransitionSet apply_position_bias(TransitionSet set, TransitionOrder order) {
  if (order == TransitionOrder::Random) return set;
  if (set.discrete) {
    std::sort(set.times.begin(), set.times.end());
    if (order == TransitionOrder::LeftToRight)
      std::reverse(set.times.begin(), set.times.end());
  } else {
    std::sort(set.times_real.begin(), set.times_real.end());
    if (order == TransitionOrder::LeftToRight)
      std::reverse(set.times_real.begin(), set.times_real.end());
  }
  return set;
}

}  // namespace dndm
