// Command-line front end: schedules, simulate-forward, sample, nfe-analysis,
// verify. All randomness is seeded; identical flags give identical output.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dndm/analytics.hpp"
#include "dndm/core.hpp"
#include "dndm/datamodel.hpp"
#include "dndm/forward.hpp"
#include "dndm/rng.hpp"
#include "dndm/sampler.hpp"
#include "dndm/schedule.hpp"
#include "dndm/verify.hpp"

namespace {

using json = nlohmann::json;

constexpr std::uint64_t kDefaultSeed = 20240;

dndm::AlphaSchedule make_schedule(const std::string& name, int steps,
                                  double offset, bool continuous) {
  if (continuous) {
    if (name == "linear") return dndm::build_linear_continuous();
    if (name == "cosine") return dndm::build_cosine_continuous();
    if (name == "cosine2") return dndm::build_cosine_squared_continuous();
  } else {
    if (name == "linear") return dndm::build_linear(steps);
    if (name == "cosine") return dndm::build_cosine(steps, offset);
    if (name == "cosine2") return dndm::build_cosine_squared(steps, offset);
  }
  throw std::invalid_argument("unknown schedule '" + name + "'");
}

// --tau accepts "schedule" or "beta:a,b".
std::optional<std::pair<double, double>> parse_beta_tau(const std::string& spec) {
  if (spec == "schedule") return std::nullopt;
  if (spec.rfind("beta:", 0) == 0) {
    std::string args = spec.substr(5);
    auto comma = args.find(',');
    if (comma != std::string::npos) {
      double a = std::stod(args.substr(0, comma));
      double b = std::stod(args.substr(comma + 1));
      return std::make_pair(a, b);
    }
  }
  throw std::invalid_argument("--tau expects 'schedule' or 'beta:a,b'");
}

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(12) << v;
  return out.str();
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw std::runtime_error("cannot open output path " + path);
  return file;
}

json tokens_json(const dndm::Sequence& seq) {
  return json(std::vector<int>(seq.begin(), seq.end()));
}

int run_schedules(const std::string& schedule_name, int steps, double offset,
                  const std::string& tau_spec, const std::string& out_path) {
  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  dndm::AlphaSchedule schedule = make_schedule(schedule_name, steps, offset, false);
  auto beta_params = parse_beta_tau(tau_spec);
  dndm::TransitionTimeDistribution dist =
      beta_params ? dndm::beta_transition_distribution(beta_params->first,
                                                       beta_params->second, steps)
                  : dndm::transition_distribution(schedule);
  out << "t,alpha,p_tau\n";
  out << "0," << format_double(schedule.alphas[0]) << ",0\n";
  for (int t = 1; t <= steps; ++t)
    out << t << ',' << format_double(schedule.alphas[t]) << ','
        << format_double(dist.pmf[t - 1]) << '\n';
  return 0;
}

int run_simulate_forward(const std::string& mode, const std::string& noise_name,
                         const std::string& schedule_name, int steps,
                         double offset, const std::string& x0_spec,
                         const std::string& model_path, int probe_t, long trials,
                         std::uint64_t seed, const std::string& out_path) {
  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  dndm::AlphaSchedule schedule = make_schedule(schedule_name, steps, offset, false);
  bool absorbing = noise_name == "absorbing";

  std::optional<dndm::ToyDataModel> model;
  dndm::Sequence fixed_x0;
  if (!x0_spec.empty()) {
    std::istringstream in(x0_spec);
    std::string item;
    while (std::getline(in, item, ',')) fixed_x0.push_back(std::stoi(item));
  } else if (!model_path.empty()) {
    model = dndm::load_data_model(model_path, absorbing);
  } else {
    throw std::invalid_argument("simulate-forward needs --x0 or --model");
  }

  int base_size = model ? model->vocab().base_size
                        : 1 + *std::max_element(fixed_x0.begin(), fixed_x0.end());
  base_size = std::max(base_size, 2);
  dndm::VocabSpec vocab(base_size, absorbing);
  dndm::NoiseModel noise =
      absorbing ? dndm::NoiseModel::absorbing(vocab) : dndm::NoiseModel::uniform(vocab);

  for (long trial = 0; trial < trials; ++trial) {
    dndm::RngStream rng(seed, dndm::substream_id(trial, 0));
    dndm::Sequence x0 = fixed_x0;
    if (model) {
      dndm::CategoricalDist weights{model->weights()};
      // weights() sums to 1 over the support list
      x0 = model->support()[dndm::sample_categorical(weights, rng)];
    }
    json record{{"schema", "forward-sim"}, {"trial", trial}, {"t", probe_t}};
    if (mode == "markov") {
      auto traj = dndm::markov_forward(x0, schedule, noise, rng);
      record["tokens"] = tokens_json(traj.state_at(probe_t));
    } else if (mode == "nonmarkov") {
      auto traj = dndm::nonmarkov_forward(x0, schedule, noise, rng);
      record["tokens"] = tokens_json(traj.state_at(probe_t));
      record["tau"] = traj.transition_set.times;
    } else {
      throw std::invalid_argument("--mode must be markov or nonmarkov");
    }
    out << record.dump() << '\n';
  }
  return 0;
}

struct SampleFlags {
  std::string sampler = "dndm";
  std::string steps = "50";
  std::string schedule_name = "linear";
  double offset = 0.008;
  std::string tau_spec = "schedule";
  std::string model_path;
  std::string noise_name = "absorbing";
  std::string decode = "sample";
  bool joint = false;
  std::string order = "random";
  long runs = 1;
  std::uint64_t seed = kDefaultSeed;
  int parallelism = 1;
  std::string out_path;     // JSONL traces
  std::string summary_path; // CSV summary (default stdout)
};

int run_sample(const SampleFlags& flags) {
  bool continuous = flags.steps == "inf";
  int steps = continuous ? 0 : std::stoi(flags.steps);
  if (!continuous && steps < 1)
    throw std::invalid_argument("--steps must be a positive integer or 'inf'");

  bool absorbing;
  if (flags.sampler == "baseline-absorb")
    absorbing = true;
  else if (flags.sampler == "baseline-multi")
    absorbing = false;
  else
    absorbing = flags.noise_name == "absorbing";

  if (flags.sampler == "dndm-c" && !continuous)
    throw std::invalid_argument("dndm-c requires --steps inf");
  if (flags.sampler != "dndm-c" && continuous)
    throw std::invalid_argument("--steps inf is only valid with dndm-c");

  dndm::ToyDataModel model = dndm::load_data_model(flags.model_path, absorbing);
  dndm::NoiseModel noise = absorbing ? dndm::NoiseModel::absorbing(model.vocab())
                                     : dndm::NoiseModel::uniform(model.vocab());
  dndm::AlphaSchedule schedule =
      make_schedule(flags.schedule_name, steps, flags.offset, continuous);

  dndm::SamplerConfig config;
  auto beta_params = parse_beta_tau(flags.tau_spec);
  if (beta_params) {
    config.transition_dist =
        continuous ? dndm::beta_transition_distribution_continuous(
                         beta_params->first, beta_params->second)
                   : dndm::beta_transition_distribution(beta_params->first,
                                                        beta_params->second, steps);
  }
  if (flags.order == "ltr")
    config.order = dndm::TransitionOrder::LeftToRight;
  else if (flags.order == "rtl")
    config.order = dndm::TransitionOrder::RightToLeft;
  else if (flags.order != "random")
    throw std::invalid_argument("--order must be random, ltr, or rtl");

  dndm::DecodeMode decode = flags.decode == "argmax" ? dndm::DecodeMode::Argmax
                                                     : dndm::DecodeMode::Sample;
  dndm::OracleDenoiser oracle(model, schedule, noise, flags.joint, decode);
  int num_tokens = static_cast<int>(model.length());

  struct RunResult {
    dndm::SampleTrace trace;
    long long wall_ns = 0;
  };
  std::vector<RunResult> results(flags.runs);

  auto run_one = [&](long run) {
    dndm::RngStream rng(flags.seed, dndm::substream_id(run, 0));
    auto start = std::chrono::steady_clock::now();
    dndm::SampleTrace trace;
    if (flags.sampler == "baseline-absorb")
      trace = dndm::baseline_absorb_sample(oracle, schedule, noise, num_tokens, rng);
    else if (flags.sampler == "baseline-multi")
      trace = dndm::baseline_multinomial_sample(oracle, schedule, noise,
                                                num_tokens, rng);
    else if (flags.sampler == "dndm")
      trace = dndm::dndm_sample(oracle, schedule, noise, num_tokens, config, rng);
    else if (flags.sampler == "dndm-v2")
      trace = dndm::dndm_v2_sample(oracle, schedule, noise, num_tokens, config, rng);
    else if (flags.sampler == "dndm-topk")
      trace = dndm::dndm_topk_sample(oracle, schedule, noise, num_tokens, config, rng);
    else if (flags.sampler == "dndm-c")
      trace = dndm::dndm_continuous_sample(oracle, schedule, noise, num_tokens,
                                           config, rng);
    else
      throw std::invalid_argument("unknown sampler '" + flags.sampler + "'");
    auto stop = std::chrono::steady_clock::now();
    results[run].trace = std::move(trace);
    results[run].wall_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count();
  };

  int workers = std::max(1, flags.parallelism);
  if (workers == 1) {
    for (long run = 0; run < flags.runs; ++run) run_one(run);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (long run = w; run < flags.runs; run += workers) run_one(run);
      });
    }
    for (auto& thread : pool) thread.join();
  }

  if (!flags.out_path.empty()) {
    std::ofstream traces(flags.out_path);
    if (!traces) throw std::runtime_error("cannot open " + flags.out_path);
    for (long run = 0; run < flags.runs; ++run) {
      const auto& trace = results[run].trace;
      json events = json::array();
      for (const auto& event : trace.events)
        events.push_back({{"time", event.time}, {"positions", event.positions}});
      json record{{"schema", "sample-trace"},
                  {"run", run},
                  {"sampler", trace.sampler_id},
                  {"seed", trace.seed},
                  {"nfe", trace.nfe},
                  {"final", tokens_json(trace.final)},
                  {"events", events},
                  {"wall_ns", results[run].wall_ns}};
      traces << record.dump() << '\n';
    }
  }

  std::ofstream summary_file;
  std::ostream& summary = open_output(summary_file, flags.summary_path);
  summary << "run,nfe,final_tokens,wall_ns\n";
  for (long run = 0; run < flags.runs; ++run) {
    const auto& trace = results[run].trace;
    summary << run << ',' << trace.nfe << ',';
    for (std::size_t n = 0; n < trace.final.size(); ++n)
      summary << (n ? " " : "") << trace.final[n];
    summary << ',' << results[run].wall_ns << '\n';
  }
  return 0;
}

int run_nfe_analysis(const std::vector<int>& step_values,
                     const std::vector<int>& length_values,
                     const std::string& dist_spec, long trials,
                     std::uint64_t seed, const std::string& out_path) {
  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  auto beta_params = parse_beta_tau(dist_spec == "uniform" ? "schedule" : dist_spec);
  out << "T,N,dist,expected_nfe,c_constant,empirical_mean,stderr\n";
  std::uint64_t substream = 0;
  for (int steps : step_values) {
    dndm::TransitionTimeDistribution dist =
        beta_params ? dndm::beta_transition_distribution(beta_params->first,
                                                         beta_params->second, steps)
                    : dndm::transition_distribution(dndm::build_linear(steps));
    for (int num_tokens : length_values) {
      dndm::RngStream rng(seed, dndm::substream_id(0, substream++));
      dndm::NfeReport report = dndm::measure_nfe(dist, num_tokens, trials, rng);
      double stderr_mean =
          report.empirical_stddev / std::sqrt(static_cast<double>(trials));
      out << steps << ',' << num_tokens << ',' << dist_spec << ','
          << format_double(report.expected_nfe) << ','
          << format_double(report.c_constant) << ','
          << format_double(report.empirical_mean) << ','
          << format_double(stderr_mean) << '\n';
    }
  }
  return 0;
}

int run_verify(long trials, std::uint64_t seed, const std::string& json_path) {
  dndm::VerifyConfig config;
  config.trials = trials;
  config.seed = seed;
  dndm::VerifyReport report = dndm::verify_suite(config);
  for (const auto& check : report.checks)
    std::cout << (check.passed ? "[PASS] " : "[FAIL] ") << check.name << " — "
              << check.detail << '\n';
  std::cout << (report.all_passed() ? "all checks passed" : "CHECK FAILURES")
            << " (trials=" << trials << ", seed=" << seed << ")\n";
  if (!json_path.empty()) {
    json checks = json::array();
    for (const auto& check : report.checks)
      checks.push_back({{"name", check.name},
                        {"passed", check.passed},
                        {"detail", check.detail}});
    json doc{{"schema", "verify-report"},
             {"seed", seed},
             {"trials", trials},
             {"all_passed", report.all_passed()},
             {"checks", checks}};
    std::ofstream out(json_path);
    if (!out) throw std::runtime_error("cannot open " + json_path);
    out << doc.dump(2) << '\n';
  }
  return report.all_passed() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete non-Markov diffusion sampling toolkit"};
  app.require_subcommand(1);

  // schedules
  auto* schedules_cmd =
      app.add_subcommand("schedules", "Dump an alpha schedule and its transition-time pmf as CSV");
  std::string sched_name = "linear", sched_tau = "schedule", sched_out;
  int sched_steps = 50;
  double sched_offset = 0.008;
  schedules_cmd->add_option("--schedule", sched_name, "linear|cosine|cosine2");
  schedules_cmd->add_option("--steps", sched_steps, "number of steps T")->required();
  schedules_cmd->add_option("--offset", sched_offset, "cosine offset s");
  schedules_cmd->add_option("--tau", sched_tau, "schedule | beta:a,b");
  schedules_cmd->add_option("--output", sched_out, "output path (default stdout)");

  // simulate-forward
  auto* forward_cmd =
      app.add_subcommand("simulate-forward", "Run forward corruption trials, one JSONL record per trial");
  std::string fwd_mode = "nonmarkov", fwd_noise = "absorbing",
              fwd_schedule = "linear", fwd_x0, fwd_model, fwd_out;
  int fwd_steps = 50, fwd_t = 25;
  double fwd_offset = 0.008;
  long fwd_trials = 10;
  std::uint64_t fwd_seed = kDefaultSeed;
  forward_cmd->add_option("--mode", fwd_mode, "markov|nonmarkov");
  forward_cmd->add_option("--noise", fwd_noise, "uniform|absorbing");
  forward_cmd->add_option("--schedule", fwd_schedule, "linear|cosine|cosine2");
  forward_cmd->add_option("--steps", fwd_steps, "number of steps T");
  forward_cmd->add_option("--offset", fwd_offset, "cosine offset s");
  forward_cmd->add_option("--x0", fwd_x0, "comma-separated data tokens");
  forward_cmd->add_option("--model", fwd_model, "data-model file (x0 drawn per trial)");
  forward_cmd->add_option("--t", fwd_t, "time index to report");
  forward_cmd->add_option("--trials", fwd_trials, "number of trials");
  forward_cmd->add_option("--seed", fwd_seed, "rng seed");
  forward_cmd->add_option("--output", fwd_out, "output path (default stdout)");

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "Run reverse samplers with the exact-posterior oracle denoiser");
  SampleFlags sample_flags;
  sample_cmd->add_option("--sampler", sample_flags.sampler,
                         "baseline-absorb|baseline-multi|dndm|dndm-v2|dndm-topk|dndm-c");
  sample_cmd->add_option("--steps", sample_flags.steps, "T or 'inf'");
  sample_cmd->add_option("--schedule", sample_flags.schedule_name,
                         "linear|cosine|cosine2");
  sample_cmd->add_option("--offset", sample_flags.offset, "cosine offset s");
  sample_cmd->add_option("--tau", sample_flags.tau_spec, "schedule | beta:a,b");
  sample_cmd->add_option("--model", sample_flags.model_path, "data-model file")
      ->required();
  sample_cmd->add_option("--noise", sample_flags.noise_name, "uniform|absorbing");
  sample_cmd->add_option("--decode", sample_flags.decode, "sample|argmax");
  sample_cmd->add_flag("--joint", sample_flags.joint,
                       "sample x0_hat jointly from the posterior");
  sample_cmd->add_option("--order", sample_flags.order, "random|ltr|rtl");
  sample_cmd->add_option("--runs", sample_flags.runs, "number of runs");
  sample_cmd->add_option("--seed", sample_flags.seed, "rng seed");
  sample_cmd->add_option("--parallel", sample_flags.parallelism, "worker threads");
  sample_cmd->add_option("--out", sample_flags.out_path, "JSONL trace output path");
  sample_cmd->add_option("--summary", sample_flags.summary_path,
                         "CSV summary path (default stdout)");

  // nfe-analysis
  auto* nfe_cmd = app.add_subcommand("nfe-analysis", "Expected vs empirical NFE as CSV");
  std::vector<int> nfe_steps{4, 50, 1000};
  std::vector<int> nfe_lengths{2, 25};
  std::string nfe_dist = "uniform", nfe_out;
  long nfe_trials = 100000;
  std::uint64_t nfe_seed = kDefaultSeed;
  nfe_cmd->add_option("--steps", nfe_steps, "T values");
  nfe_cmd->add_option("--lengths", nfe_lengths, "N values");
  nfe_cmd->add_option("--dist", nfe_dist, "uniform | beta:a,b");
  nfe_cmd->add_option("--trials", nfe_trials, "Monte Carlo trials per cell");
  nfe_cmd->add_option("--seed", nfe_seed, "rng seed");
  nfe_cmd->add_option("--output", nfe_out, "output path (default stdout)");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "Run the statistical verification battery");
  long verify_trials = 100000;
  std::uint64_t verify_seed = kDefaultSeed;
  std::string verify_json;
  verify_cmd->add_option("--trials", verify_trials, "trials per statistical check");
  verify_cmd->add_option("--seed", verify_seed, "rng seed");
  verify_cmd->add_option("--json", verify_json, "machine-readable report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (schedules_cmd->parsed())
      return run_schedules(sched_name, sched_steps, sched_offset, sched_tau,
                           sched_out);
    if (forward_cmd->parsed())
      return run_simulate_forward(fwd_mode, fwd_noise, fwd_schedule, fwd_steps,
                                  fwd_offset, fwd_x0, fwd_model, fwd_t,
                                  fwd_trials, fwd_seed, fwd_out);
    if (sample_cmd->parsed()) return run_sample(sample_flags);
    if (nfe_cmd->parsed())
      return run_nfe_analysis(nfe_steps, nfe_lengths, nfe_dist, nfe_trials,
                              nfe_seed, nfe_out);
    if (verify_cmd->parsed())
      return run_verify(verify_trials, verify_seed, verify_json);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
