#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "dndm/schedule.hpp"

namespace dndm {

// Closed-form NFE prediction for a discrete transition-time law:
// E[|T|] = sum_i [1 - (1 - p_i)^N] = (1 - C) * T with
// C = (sum_i (1 - p_i)^N) / T.
struct NfeReport {
  int steps = 0;
  int num_tokens = 0;
  double expected_nfe = 0.0;
  double c_constant = 0.0;
  double empirical_mean = 0.0;
  double empirical_stddev = 0.0;
  long n_trials = 0;
};

inline NfeReport expected_nfe(const TransitionTimeDistribution& dist,
                              int num_tokens) {
  if (!dist.is_discrete())
    throw std::invalid_argument("expected_nfe: discrete pmf required");
  if (num_tokens < 1)
    throw std::invalid_argument("expected_nfe: N must be >= 1");
  dist.validate();
  NfeReport report;
  report.steps = dist.steps();
  report.num_tokens = num_tokens;
  double c_sum = 0.0;
  for (double p : dist.pmf) c_sum += std::pow(1.0 - p, num_tokens);
  report.c_constant = c_sum / report.steps;
  report.expected_nfe = (1.0 - report.c_constant) * report.steps;
  return report;
}

// Lower bound on C, attained exactly by the uniform law.
inline double nfe_lower_bound_uniform(int steps, int num_tokens) {
  if (steps < 1 || num_tokens < 1)
    throw std::invalid_argument("nfe_lower_bound_uniform: T, N must be >= 1");
  return std::pow(1.0 - 1.0 / steps, num_tokens);
}

// Adds Monte Carlo statistics of |distinct transition times| to a report.
inline NfeReport measure_nfe(const TransitionTimeDistribution& dist,
                             int num_tokens, long trials, RngStream& rng) {
  NfeReport report = expected_nfe(dist, num_tokens);
  double sum = 0.0, sum_sq = 0.0;
  for (long i = 0; i < trials; ++i) {
    TransitionSet set = sample_transition_set(dist, num_tokens, rng);
    double nfe = static_cast<double>(set.distinct_count());
    sum += nfe;
    sum_sq += nfe * nfe;
  }
  report.n_trials = trials;
  report.empirical_mean = sum / trials;
  report.empirical_stddev =
      std::sqrt(std::max(0.0, sum_sq / trials -
                                  report.empirical_mean * report.empirical_mean));
  return report;
}

inline double tv_distance(const std::vector<double>& a,
                          const std::vector<double>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("tv_distance: support mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return 0.5 * sum;
}

struct GofResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int dof = 0;
  bool passed = true;
};

// Pearson chi-square goodness of fit. Bins with expected count below 5 are
// pooled with their right neighbor (the tail pools leftwards).
inline GofResult chi_square_gof(const std::vector<long>& counts,
                                const std::vector<double>& expected_pmf,
                                double significance) {
  if (counts.size() != expected_pmf.size())
    throw std::invalid_argument("chi_square_gof: size mismatch");
  long total = 0;
  for (long c : counts) total += c;
  if (total <= 0) throw std::invalid_argument("chi_square_gof: empty histogram");

  std::vector<double> pooled_expected;
  std::vector<long> pooled_counts;
  double acc_e = 0.0;
  long acc_c = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    acc_e += expected_pmf[i] * total;
    acc_c += counts[i];
    if (acc_e >= 5.0) {
      pooled_expected.push_back(acc_e);
      pooled_counts.push_back(acc_c);
      acc_e = 0.0;
      acc_c = 0;
    }
  }
  if (acc_e > 0.0 || acc_c > 0) {
    if (pooled_expected.empty()) {
      pooled_expected.push_back(acc_e);
      pooled_counts.push_back(acc_c);
    } else {
      pooled_expected.back() += acc_e;
      pooled_counts.back() += acc_c;
    }
  }

  GofResult result;
  result.dof = static_cast<int>(pooled_expected.size()) - 1;
  for (std::size_t i = 0; i < pooled_expected.size(); ++i) {
    double diff = pooled_counts[i] - pooled_expected[i];
    result.statistic += diff * diff / pooled_expected[i];
  }
  result.p_value =
      result.dof <= 0
          ? 1.0
          : boost::math::gamma_q(result.dof / 2.0, result.statistic / 2.0);
  result.passed = result.p_value >= significance;
  return result;
}

}  // namespace dndm
