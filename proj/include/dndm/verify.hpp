#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dndm/analytics.hpp"
#include "dndm/core.hpp"
#include "dndm/datamodel.hpp"
#include "dndm/forward.hpp"
#include "dndm/rng.hpp"
#include "dndm/sampler.hpp"
#include "dndm/schedule.hpp"

namespace dndm {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyConfig {
  long trials = 100000;
  std::uint64_t seed = 12345;
  double significance = 1e-4;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  VerifyConfig config;

  bool all_passed() const {
    for (const auto& check : checks)
      if (!check.passed) return false;
    return true;
  }
};

namespace verify_detail {

inline std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

inline std::vector<double> normalize_counts(const std::vector<long>& counts,
                                            long total) {
  std::vector<double> out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    out[i] = static_cast<double>(counts[i]) / total;
  return out;
}

// Exhaustive per-position forward kernel evolution. Independent route for the
// Bayes-posterior check: evolves the explicit keep/resample step kernel
// instead of using the closed-form alpha mixture.
inline std::vector<double> evolve_token_kernel(Token x0, int t,
                                               const AlphaSchedule& schedule,
                                               const NoiseModel& noise) {
  int states = noise.vocab.total_states();
  std::vector<double> probs(states, 0.0);
  probs[x0] = 1.0;
  for (int s = 1; s <= t; ++s) {
    double beta = schedule.beta(s);
    std::vector<double> next(states, 0.0);
    for (int i = 0; i < states; ++i) {
      if (probs[i] == 0.0) continue;
      next[i] += beta * probs[i];
      for (int j = 0; j < states; ++j)
        next[j] += (1.0 - beta) * noise.prob(j) * probs[i];
    }
    probs = std::move(next);
  }
  return probs;
}

inline ToyDataModel chain_fixture() {
  VocabSpec vocab(3, true);
  std::vector<double> initial{0.5, 0.3, 0.2};
  std::vector<std::vector<double>> transition{
      {0.6, 0.3, 0.1}, {0.2, 0.5, 0.3}, {0.1, 0.2, 0.7}};
  return ToyDataModel::chain(vocab, 2, initial, transition);
}

inline ToyDataModel single_token_fixture() {
  VocabSpec vocab(3, true);
  return ToyDataModel::from_support(vocab, {{0}, {1}, {2}}, {0.5, 0.3, 0.2});
}

inline std::map<Sequence, double> enumerate_q_data(const ToyDataModel& model) {
  std::map<Sequence, double> out;
  for (std::size_t i = 0; i < model.support().size(); ++i)
    out[model.support()[i]] = model.weights()[i];
  return out;
}

inline double support_tv(const std::map<Sequence, long>& counts, long total,
                         const ToyDataModel& model) {
  double tv = 0.0;
  auto q_data = enumerate_q_data(model);
  std::map<Sequence, double> merged = q_data;
  for (const auto& [seq, count] : counts)
    merged[seq];  // include any off-support output with q_data mass 0
  for (const auto& [seq, unused] : merged) {
    double empirical = 0.0;
    if (auto it = counts.find(seq); it != counts.end())
      empirical = static_cast<double>(it->second) / total;
    double truth = 0.0;
    if (auto it = q_data.find(seq); it != q_data.end()) truth = it->second;
    tv += std::abs(empirical - truth);
  }
  return 0.5 * tv;
}

}  // namespace verify_detail

// Criterion 1: Markov and non-Markov forward processes both match the
// analytic marginal (TV < 0.01) for K=5, N=3, linear T=50, both noise kinds.
inline CheckResult check_forward_equivalence(const VerifyConfig& config) {
  namespace vd = verify_detail;
  CheckResult result{"forward-marginal-equivalence"};
  const int steps = 50;
  const Sequence x0{0, 1, 2};
  const std::vector<int> probe_times{10, 25, 40};
  AlphaSchedule schedule = build_linear(steps);
  double worst = 0.0;
  for (bool absorbing : {false, true}) {
    VocabSpec vocab(5, absorbing);
    NoiseModel noise = absorbing ? NoiseModel::absorbing(vocab)
                                 : NoiseModel::uniform(vocab);
    int states = vocab.total_states();
    // counts[process][time][position][state]
    std::vector counts(2, std::vector(probe_times.size(),
                                      std::vector(x0.size(),
                                                  std::vector<long>(states, 0))));
    for (long trial = 0; trial < config.trials; ++trial) {
      RngStream rng_markov(config.seed, substream_id(trial, absorbing ? 1 : 0));
      RngStream rng_nonmarkov(config.seed,
                              substream_id(trial, absorbing ? 3 : 2));
      ForwardTrajectory markov = markov_forward(x0, schedule, noise, rng_markov);
      ForwardTrajectory nonmarkov =
          nonmarkov_forward(x0, schedule, noise, rng_nonmarkov);
      for (std::size_t ti = 0; ti < probe_times.size(); ++ti) {
        Sequence sm = markov.state_at(probe_times[ti]);
        Sequence sn = nonmarkov.state_at(probe_times[ti]);
        for (std::size_t n = 0; n < x0.size(); ++n) {
          ++counts[0][ti][n][sm[n]];
          ++counts[1][ti][n][sn[n]];
        }
      }
    }
    for (std::size_t ti = 0; ti < probe_times.size(); ++ti) {
      for (std::size_t n = 0; n < x0.size(); ++n) {
        CategoricalDist truth =
            marginal_at(x0[n], probe_times[ti], schedule, noise);
        for (int process = 0; process < 2; ++process) {
          auto empirical =
              vd::normalize_counts(counts[process][ti][n], config.trials);
          worst = std::max(worst, tv_distance(empirical, truth.probs));
        }
      }
    }
  }
  result.passed = worst < 0.01;
  result.detail = "max TV = " + vd::fmt(worst) + " (limit 0.01)";
  return result;
}

// Criterion 2: sampled transition times match alpha_{t-1} - alpha_t by
// chi-square GOF for linear/cosine/cosine^2 at T=50.
inline CheckResult check_transition_time_law(const VerifyConfig& config) {
  namespace vd = verify_detail;
  CheckResult result{"transition-time-law"};
  const int steps = 50;
  std::vector<std::pair<std::string, AlphaSchedule>> schedules;
  schedules.emplace_back("linear", build_linear(steps));
  schedules.emplace_back("cosine", build_cosine(steps));
  schedules.emplace_back("cosine2", build_cosine_squared(steps));
  double min_p = 1.0;
  result.passed = true;
  std::uint64_t substream = 0;
  for (const auto& [name, schedule] : schedules) {
    TransitionTimeDistribution dist = transition_distribution(schedule);
    RngStream rng(config.seed, substream_id(1, substream++));
    std::vector<long> counts(steps, 0);
    for (long i = 0; i < config.trials; ++i) {
      TransitionSet set = sample_transition_set(dist, 1, rng);
      ++counts[set.times[0] - 1];
    }
    GofResult gof = chi_square_gof(counts, dist.pmf, config.significance);
    min_p = std::min(min_p, gof.p_value);
    if (!gof.passed) result.passed = false;
  }
  result.detail = "min p-value = " + vd::fmt(min_p) + " (significance " +
                  vd::fmt(config.significance) + ")";
  return result;
}

// Criterion 3: E[|T|] formula vs Monte Carlo over the (T, N, law) grid, plus
// the exhaustive-enumeration oracle for uniform T=4, N=2.
inline CheckResult check_expected_nfe(const VerifyConfig& config) {
  namespace vd = verify_detail;
  CheckResult result{"expected-nfe-closed-form"};
  result.passed = true;
  double worst_sigma = 0.0;
  std::uint64_t substream = 0;
  for (int steps : {4, 50, 1000}) {
    for (int num_tokens : {2, 25}) {
      for (bool use_beta : {false, true}) {
        TransitionTimeDistribution dist =
            use_beta ? beta_transition_distribution(3.0, 3.0, steps)
                     : transition_distribution(build_linear(steps));
        RngStream rng(config.seed, substream_id(2, substream++));
        NfeReport report = measure_nfe(dist, num_tokens, config.trials, rng);
        double stderr_mean =
            report.empirical_stddev / std::sqrt(static_cast<double>(report.n_trials));
        double sigma = stderr_mean > 0.0
                           ? std::abs(report.empirical_mean - report.expected_nfe) /
                                 stderr_mean
                           : 0.0;
        worst_sigma = std::max(worst_sigma, sigma);
        if (sigma > 3.0) result.passed = false;
      }
    }
  }
  // Exhaustive oracle: all 16 (tau_1, tau_2) pairs for uniform T=4, N=2.
  double enumerated = 0.0;
  for (int a = 1; a <= 4; ++a)
    for (int b = 1; b <= 4; ++b) enumerated += (a == b ? 1.0 : 2.0) / 16.0;
  NfeReport small = expected_nfe(transition_distribution(build_linear(4)), 2);
  if (std::abs(enumerated - 1.75) > 1e-12 ||
      std::abs(small.expected_nfe - 1.75) > 1e-12)
    result.passed = false;
  result.detail = "max |mean - E| = " + vd::fmt(worst_sigma) +
                  " stderr units (limit 3); enumeration E = " +
                  vd::fmt(enumerated);
  return result;
}

// Criterion 4: 1 <= |T| <= min(N, T) on every draw, and the worst-case
// uniform T=N=4 expectation 2.734375 <= 0.7 T.
inline CheckResult check_nfe_bounds(const VerifyConfig& config) {
  namespace vd = verify_detail;
  CheckResult result{"nfe-lower-bound"};
  result.passed = true;
  struct Config {
    int steps, num_tokens;
    bool use_beta;
  };
  std::vector<Config> grid{{4, 2, false}, {4, 4, false},  {50, 25, false},
                           {4, 2, true},  {50, 25, true}, {1000, 25, true}};
  long draws_per_config = 1000000 / static_cast<long>(grid.size());
  std::uint64_t substream = 0;
  for (const auto& cell : grid) {
    TransitionTimeDistribution dist =
        cell.use_beta ? beta_transition_distribution(3.0, 3.0, cell.steps)
                      : transition_distribution(build_linear(cell.steps));
    RngStream rng(config.seed, substream_id(3, substream++));
    std::size_t max_allowed = std::min(cell.num_tokens, cell.steps);
    for (long i = 0; i < draws_per_config; ++i) {
      TransitionSet set = sample_transition_set(dist, cell.num_tokens, rng);
      if (set.distinct_count() < 1 || set.distinct_count() > max_allowed) {
        result.passed = false;
        break;
      }
    }
  }
  NfeReport worst_case = expected_nfe(transition_distribution(build_linear(4)), 4);
  if (std::abs(worst_case.expected_nfe - 2.734375) > 1e-12 ||
      worst_case.expected_nfe > 0.7 * 4)
    result.passed = false;
  result.detail = "uniform T=N=4: E = " + vd::fmt(worst_case.expected_nfe) +
                  " <= 2.8; bounds held on 1e6 draws";
  return result;
}

// Criterion 5: DNDM variants never call the denoiser outside the distinct
// transition times of their sampled sets.
inline CheckResult check_copy_steps_free(const VerifyConfig& config) {
  namespace vd = verify_detail;
  CheckResult result{"copy-steps-need-no-evaluation"};
  result.passed = true;
  const int steps = 12;
  const int num_tokens = 5;
  AlphaSchedule schedule = build_linear(steps);
  VocabSpec vocab(3, true);
  NoiseModel noise = NoiseModel::absorbing(vocab);
  ToyDataModel model = ToyDataModel::factorized(
      vocab, std::vector<std::vector<double>>(num_tokens,
                                              {0.5, 0.3, 0.2}));
  OracleDenoiser oracle(model, schedule, noise);
  SamplerConfig sampler_config;
  long runs = std::min<long>(config.trials, 10000);
  for (long run = 0; run < runs && result.passed; ++run) {
    for (int variant = 0; variant < 3; ++variant) {
      RngStream rng(config.seed, substream_id(4, run * 3 + variant));
      // Replay the sampler's own draws to recover its transition set.
      RngStream replica(config.seed, substream_id(4, run * 3 + variant));
      detail::init_from_noise(noise, num_tokens, replica);
      TransitionSet set =
          detail::draw_transitions(schedule, sampler_config, num_tokens, replica);
      CountingDenoiser counter(oracle);
      SampleTrace trace =
          variant == 0
              ? dndm_sample(counter, schedule, noise, num_tokens, sampler_config, rng)
              : variant == 1
                    ? dndm_v2_sample(counter, schedule, noise, num_tokens,
                                     sampler_config, rng)
                    : dndm_topk_sample(counter, schedule, noise, num_tokens,
                                       sampler_config, rng);
      if (counter.call_count() != set.distinct_count() ||
          trace.nfe != static_cast<int>(set.distinct_count())) {
        result.passed = false;
        break;
      }
      for (double t : counter.call_times()) {
        int ti = static_cast<int>(t);
        if (!std::binary_search(set.distinct_times.begin(),
                                set.distinct_times.end(), ti)) {
          result.passed = false;
          break;
        }
      }
    }
  }
  result.detail = result.passed
                      ? "nfe = |distinct times| and no stray calls over " +
                            std::to_string(runs) + " runs x 3 variants"
                      : "denoiser called outside transition set";
  return result;
}

// Criterion 6: DNDM-C with joint oracle over a chain model reproduces q_data.
inline CheckResult check_continuous_exactness(const VerifyConfig& config) {
  namespace vd = verify_detail;
  CheckResult result{"dndm-c-oracle-exactness"};
  ToyDataModel model = vd::chain_fixture();
  NoiseModel noise = NoiseModel::absorbing(model.vocab());
  AlphaSchedule schedule = build_linear_continuous();
  OracleDenoiser oracle(model, schedule, noise, /*joint=*/true);
  SamplerConfig sampler_config;
  std::map<Sequence, long> counts;
  for (long run = 0; run < config.trials; ++run) {
    RngStream rng(config.seed, substream_id(5, run));
    SampleTrace trace =
        dndm_continuous_sample(oracle, schedule, noise, 2, sampler_config, rng);
    ++counts[trace.final];
  }
  double tv = vd::support_tv(counts, config.trials, model);
  result.passed = tv < 0.02;
  result.detail = "TV(empirical, q_data) = " + vd::fmt(tv) + " (limit 0.02)";
  return result;
}

// Criterion 7: every sampler reproduces q_data for a single-token model
// under absorbing noise with the joint oracle.
inline CheckResult check_single_token_equivalence(const VerifyConfig& config) {
  namespace vd = verify_detail;
  CheckResult result{"single-token-sampler-equivalence"};
  result.passed = true;
  ToyDataModel model = vd::single_token_fixture();
  NoiseModel noise = NoiseModel::absorbing(model.vocab());
  AlphaSchedule schedule = build_linear(8);
  AlphaSchedule cont = build_linear_continuous();
  OracleDenoiser oracle(model, schedule, noise, /*joint=*/true);
  OracleDenoiser oracle_cont(model, cont, noise, /*joint=*/true);
  SamplerConfig sampler_config;
  double worst = 0.0;
  for (int sampler = 0; sampler < 5; ++sampler) {
    std::map<Sequence, long> counts;
    for (long run = 0; run < config.trials; ++run) {
      RngStream rng(config.seed, substream_id(6 + sampler, run));
      SampleTrace trace;
      switch (sampler) {
        case 0:
          trace = baseline_absorb_sample(oracle, schedule, noise, 1, rng);
          break;
        case 1:
          trace = dndm_sample(oracle, schedule, noise, 1, sampler_config, rng);
          break;
        case 2:
          trace = dndm_v2_sample(oracle, schedule, noise, 1, sampler_config, rng);
          break;
        case 3:
          trace =
              dndm_topk_sample(oracle, schedule, noise, 1, sampler_config, rng);
          break;
        default:
          trace = dndm_continuous_sample(oracle_cont, cont, noise, 1,
                                         sampler_config, rng);
      }
      ++counts[trace.final];
    }
    worst = std::max(worst, vd::support_tv(counts, config.trials, model));
  }
  result.passed = worst < 0.01;
  result.detail = "max TV over 5 samplers = " + vd::fmt(worst) + " (limit 0.01)";
  return result;
}

// Criterion 8: exact_posterior equals the exhaustively enumerated conditional
// for K=2, N=2, T=3, absorbing noise, for every reachable x_t.
inline CheckResult check_bayes_brute_force(const VerifyConfig&) {
  namespace vd = verify_detail;
  CheckResult result{"bayes-posterior-brute-force"};
  result.passed = true;
  VocabSpec vocab(2, true);
  NoiseModel noise = NoiseModel::absorbing(vocab);
  AlphaSchedule schedule = build_linear(3);
  ToyDataModel model = ToyDataModel::from_support(
      vocab, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {0.4, 0.1, 0.2, 0.3});
  double worst = 0.0;
  for (int t = 1; t <= 3; ++t) {
    // Independent oracle: per-position kernel evolution, positions independent
    // given x0, prior from the model.
    std::vector<std::vector<std::vector<double>>> kernel;  // [support][pos][state]
    for (const Sequence& x0 : model.support()) {
      std::vector<std::vector<double>> rows;
      for (Token tok : x0)
        rows.push_back(vd::evolve_token_kernel(tok, t, schedule, noise));
      kernel.push_back(std::move(rows));
    }
    int states = vocab.total_states();
    for (int s0 = 0; s0 < states; ++s0) {
      for (int s1 = 0; s1 < states; ++s1) {
        Sequence xt{s0, s1};
        std::vector<double> joint(model.support().size());
        double total = 0.0;
        for (std::size_t i = 0; i < model.support().size(); ++i) {
          joint[i] = model.weights()[i] * kernel[i][0][s0] * kernel[i][1][s1];
          total += joint[i];
        }
        if (total <= 0.0) continue;  // unreachable x_t
        for (double& w : joint) w /= total;
        Posterior post = exact_posterior(xt, t, model, schedule, noise);
        for (std::size_t i = 0; i < joint.size(); ++i)
          worst = std::max(worst, std::abs(joint[i] - post.weights[i]));
      }
    }
  }
  result.passed = worst < 1e-9;
  result.detail = "max |posterior - enumerated| = " + vd::fmt(worst) +
                  " (limit 1e-9)";
  return result;
}

// Criterion 9: theta_post arithmetic and teacher-denoiser convergence of the
// multinomial baseline.
inline CheckResult check_multinomial_kernel(const VerifyConfig& config) {
  namespace vd = verify_detail;
  CheckResult result{"baseline-multinomial-kernel"};
  result.passed = true;
  std::vector<double> probs = multinomial_posterior(0, 1, 0.5, 0.5, 2);
  if (std::abs(probs[0] - 0.5) > 1e-12 || std::abs(probs[1] - 0.5) > 1e-12)
    result.passed = false;
  VocabSpec vocab(4, false);
  NoiseModel noise = NoiseModel::uniform(vocab);
  AlphaSchedule schedule = build_linear(6);
  Sequence x0_true{2, 0, 3};
  TeacherDenoiser teacher(x0_true);
  for (long run = 0; run < std::min<long>(config.trials, 500); ++run) {
    RngStream rng(config.seed, substream_id(11, run));
    SampleTrace trace = baseline_multinomial_sample(
        teacher, schedule, noise, static_cast<int>(x0_true.size()), rng);
    if (trace.final != x0_true) {
      result.passed = false;
      break;
    }
  }
  result.detail = result.passed
                      ? "theta_post exact to 1e-12; teacher runs converge to x0"
                      : "kernel arithmetic or teacher convergence failed";
  return result;
}

// Criterion 10: Beta(3,3) expected NFE stays below T and reaches the <= N
// regime at T=1000.
inline CheckResult check_nfe_reduction_trend(const VerifyConfig&) {
  namespace vd = verify_detail;
  CheckResult result{"nfe-reduction-trend"};
  result.passed = true;
  const int num_tokens = 25;
  std::string values;
  for (int steps : {25, 50, 1000}) {
    NfeReport report =
        expected_nfe(beta_transition_distribution(3.0, 3.0, steps), num_tokens);
    values += " T=" + std::to_string(steps) + ":" + vd::fmt(report.expected_nfe);
    if (!(report.expected_nfe < steps)) result.passed = false;
    if (steps == 1000 && !(report.expected_nfe <= num_tokens))
      result.passed = false;
  }
  result.detail = "expected NFE" + values + " (each < T; T=1000 <= 25)";
  return result;
}

inline VerifyReport verify_suite(const VerifyConfig& config) {
  VerifyReport report;
  report.config = config;
  report.checks.push_back(check_forward_equivalence(config));
  report.checks.push_back(check_transition_time_law(config));
  report.checks.push_back(check_expected_nfe(config));
  report.checks.push_back(check_nfe_bounds(config));
  report.checks.push_back(check_copy_steps_free(config));
  report.checks.push_back(check_continuous_exactness(config));
  report.checks.push_back(check_single_token_equivalence(config));
  report.checks.push_back(check_bayes_brute_force(config));
  report.checks.push_back(check_multinomial_kernel(config));
  report.checks.push_back(check_nfe_reduction_trend(config));
  return report;
}

}  // namespace dndm
