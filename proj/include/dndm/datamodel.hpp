#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dndm/core.hpp"
#include "dndm/forward.hpp"
#include "dndm/schedule.hpp"

namespace dndm {

// Enumerable toy data distribution q_data over fixed-length token sequences.
// Built from an explicit weighted support, per-position factorized marginals,
// or a first-order chain; all forms are expanded to an explicit support
// (bounded at 4096 sequences) so that posteriors can be computed exactly.
class ToyDataModel {
 public:
  static constexpr std::size_t kMaxSupport = 4096;

  static ToyDataModel from_support(const VocabSpec& vocab,
                                   std::vector<Sequence> sequences,
                                   std::vector<double> weights) {
    if (sequences.empty() || sequences.size() != weights.size())
      throw std::invalid_argument("ToyDataModel: bad support");
    ToyDataModel model;
    model.vocab_ = vocab;
    model.length_ = sequences.front().size();
    double sum = 0.0;
    for (std::size_t i = 0; i < sequences.size(); ++i) {
      const Sequence& seq = sequences[i];
      if (seq.size() != model.length_)
        throw std::invalid_argument("ToyDataModel: ragged support");
      for (Token tok : seq)
        if (tok < 0 || tok >= vocab.base_size)
          throw std::invalid_argument(
              "ToyDataModel: support contains non-data token");
      if (!(weights[i] > 0.0))
        throw std::invalid_argument("ToyDataModel: non-positive weight");
      sum += weights[i];
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("ToyDataModel: weights must sum to 1");
    model.support_ = std::move(sequences);
    model.weights_ = std::move(weights);
    return model;
  }

  static ToyDataModel factorized(const VocabSpec& vocab,
                                 const std::vector<std::vector<double>>& marginals) {
    if (marginals.empty())
      throw std::invalid_argument("ToyDataModel: empty factorized form");
    auto weight_of = [&](const Sequence& seq) {
      double w = 1.0;
      for (std::size_t n = 0; n < seq.size(); ++n) w *= marginals[n][seq[n]];
      return w;
    };
    for (const auto& row : marginals) check_row(row, vocab.base_size);
    return enumerate(vocab, marginals.size(), weight_of);
  }

  static ToyDataModel chain(const VocabSpec& vocab, std::size_t length,
                            const std::vector<double>& initial,
                            const std::vector<std::vector<double>>& transition) {
    check_row(initial, vocab.base_size);
    if (transition.size() != static_cast<std::size_t>(vocab.base_size))
      throw std::invalid_argument("ToyDataModel: chain needs K transition rows");
    for (const auto& row : transition) check_row(row, vocab.base_size);
    auto weight_of = [&](const Sequence& seq) {
      double w = initial[seq[0]];
      for (std::size_t n = 1; n < seq.size(); ++n)
        w *= transition[seq[n - 1]][seq[n]];
      return w;
    };
    return enumerate(vocab, length, weight_of);
  }

  const VocabSpec& vocab() const { return vocab_; }
  std::size_t length() const { return length_; }
  const std::vector<Sequence>& support() const { return support_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  static void check_row(const std::vector<double>& row, int k) {
    if (row.size() != static_cast<std::size_t>(k))
      throw std::invalid_argument("ToyDataModel: row has wrong arity");
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0))
        throw std::invalid_argument("ToyDataModel: negative probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("ToyDataModel: row must sum to 1");
  }

  template <class WeightFn>
  static ToyDataModel enumerate(const VocabSpec& vocab, std::size_t length,
                                WeightFn weight_of) {
    if (length < 1) throw std::invalid_argument("ToyDataModel: length >= 1");
    double count = std::pow(vocab.base_size, static_cast<double>(length));
    if (count > static_cast<double>(kMaxSupport))
      throw std::invalid_argument("ToyDataModel: support too large");
    ToyDataModel model;
    model.vocab_ = vocab;
    model.length_ = length;
    Sequence seq(length, 0);
    while (true) {
      double w = weight_of(seq);
      if (w > 0.0) {
        model.support_.push_back(seq);
        model.weights_.push_back(w);
      }
      std::size_t n = 0;
      while (n < length && ++seq[n] == vocab.base_size) seq[n++] = 0;
      if (n == length) break;
    }
    double sum = 0.0;
    for (double w : model.weights_) sum += w;
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("ToyDataModel: weights must sum to 1");
    return model;
  }

  VocabSpec vocab_;
  std::size_t length_ = 0;
  std::vector<Sequence> support_;
  std::vector<double> weights_;
};

// Posterior q(x_0 | x_t) over the model support at time t,
// q(x_0 | x_t) proportional to q_data(x_0) * prod_n q(x_t[n] | x_0[n]).
struct Posterior {
  const ToyDataModel* model = nullptr;
  std::vector<double> weights;  // aligned with model->support()

  std::vector<std::vector<double>> position_marginals() const {
    std::size_t length = model->length();
    std::vector<std::vector<double>> out(
        length, std::vector<double>(model->vocab().base_size, 0.0));
    for (std::size_t i = 0; i < weights.size(); ++i)
      for (std::size_t n = 0; n < length; ++n)
        out[n][model->support()[i][n]] += weights[i];
    return out;
  }
};

inline Posterior exact_posterior(const Sequence& xt, double t,
                                 const ToyDataModel& model,
                                 const AlphaSchedule& schedule,
                                 const NoiseModel& noise) {
  if (xt.size() != model.length())
    throw std::invalid_argument("exact_posterior: length mismatch");
  check_sequence(xt, noise.vocab);
  double alpha = schedule.alpha(t);
  Posterior post;
  post.model = &model;
  post.weights.resize(model.support().size());
  double total = 0.0;
  for (std::size_t i = 0; i < model.support().size(); ++i) {
    const Sequence& x0 = model.support()[i];
    double lik = 1.0;
    for (std::size_t n = 0; n < xt.size(); ++n) {
      double match = xt[n] == x0[n] ? alpha : 0.0;
      lik *= match + (1.0 - alpha) * noise.prob(xt[n]);
    }
    post.weights[i] = model.weights()[i] * lik;
    total += post.weights[i];
  }
  if (!(total > 0.0))
    throw std::runtime_error("exact_posterior: x_t impossible under the model");
  for (double& w : post.weights) w /= total;
  return post;
}

enum class DecodeMode { Sample, Argmax };

struct Prediction {
  Sequence x0_hat;
  std::vector<double> scores;
};

// The x0-predictor interface. Oracle implementations stand in for a trained
// network; scores are per-position confidences used by top-k transition.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Prediction predict(const Sequence& xt, double t,
                             RngStream& rng) const = 0;
  virtual bool factorized() const { return true; }
};

// Exact Bayes-posterior denoiser. joint=true draws a whole support sequence
// from the posterior; joint=false draws each position independently from its
// posterior marginal, mimicking a parallel-decoding network. Score at
// position n is the maximum posterior marginal there.
class OracleDenoiser : public Denoiser {
 public:
  OracleDenoiser(const ToyDataModel& model, AlphaSchedule schedule,
                 NoiseModel noise, bool joint = false,
                 DecodeMode decode = DecodeMode::Sample)
      : model_(&model),
        schedule_(std::move(schedule)),
        noise_(std::move(noise)),
        joint_(joint),
        decode_(decode) {}

  Prediction predict(const Sequence& xt, double t, RngStream& rng) const override {
    Posterior post = exact_posterior(xt, t, *model_, schedule_, noise_);
    auto marginals = post.position_marginals();
    Prediction pred;
    pred.scores.resize(xt.size());
    for (std::size_t n = 0; n < xt.size(); ++n)
      pred.scores[n] =
          *std::max_element(marginals[n].begin(), marginals[n].end());
    if (joint_) {
      std::size_t idx = decode_ == DecodeMode::Argmax
                            ? argmax(post.weights)
                            : draw(post.weights, rng);
      pred.x0_hat = model_->support()[idx];
    } else {
      pred.x0_hat.resize(xt.size());
      for (std::size_t n = 0; n < xt.size(); ++n)
        pred.x0_hat[n] = decode_ == DecodeMode::Argmax
                             ? static_cast<Token>(argmax(marginals[n]))
                             : static_cast<Token>(draw(marginals[n], rng));
    }
    return pred;
  }

  bool factorized() const override { return !joint_; }

 private:
  static std::size_t argmax(const std::vector<double>& weights) {
    return std::max_element(weights.begin(), weights.end()) - weights.begin();
  }
  static std::size_t draw(const std::vector<double>& weights, RngStream& rng) {
    double u = rng.next_double();
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] > 0.0) last = i;
      acc += weights[i];
      if (u < acc) return i;
    }
    return last;
  }

  const ToyDataModel* model_;
  AlphaSchedule schedule_;
  NoiseModel noise_;
  bool joint_;
  DecodeMode decode_;
};

// Always predicts the fixed ground-truth sequence with full confidence.
class TeacherDenoiser : public Denoiser {
 public:
  explicit TeacherDenoiser(Sequence x0_true) : x0_true_(std::move(x0_true)) {}

  Prediction predict(const Sequence&, double, RngStream&) const override {
    return {x0_true_, std::vector<double>(x0_true_.size(), 1.0)};
  }

 private:
  Sequence x0_true_;
};

// Wraps another denoiser and records the times at which it was invoked.
class CountingDenoiser : public Denoiser {
 public:
  explicit CountingDenoiser(const Denoiser& inner) : inner_(&inner) {}

  Prediction predict(const Sequence& xt, double t, RngStream& rng) const override {
    call_times_.push_back(t);
    return inner_->predict(xt, t, rng);
  }
  bool factorized() const override { return inner_->factorized(); }

  const std::vector<double>& call_times() const { return call_times_; }
  std::size_t call_count() const { return call_times_.size(); }
  void reset() { call_times_.clear(); }

 private:
  const Denoiser* inner_;
  mutable std::vector<double> call_times_;
};

// Line-oriented data-model file:
//   vocab K N kind            kind in {support, factorized, chain}
//   support:    lines "weight tok tok ..."
//   factorized: N lines of K probabilities
//   chain:      one line of K initial probabilities, then K rows of K
inline ToyDataModel load_data_model(std::istream& in, bool has_absorbing) {
  std::string header, word;
  if (!std::getline(in, header))
    throw std::runtime_error("load_data_model: empty file");
  std::istringstream head(header);
  int k = 0;
  std::size_t length = 0;
  std::string kind;
  if (!(head >> word >> k >> length >> kind) || word != "vocab")
    throw std::runtime_error("load_data_model: bad header");
  VocabSpec vocab(k, has_absorbing);

  auto read_row = [&](std::size_t arity) {
    std::vector<double> row(arity);
    for (double& v : row)
      if (!(in >> v)) throw std::runtime_error("load_data_model: truncated row");
    return row;
  };

  if (kind == "support") {
    std::vector<Sequence> sequences;
    std::vector<double> weights;
    double weight;
    while (in >> weight) {
      Sequence seq(length);
      for (Token& tok : seq)
        if (!(in >> tok))
          throw std::runtime_error("load_data_model: truncated sequence");
      sequences.push_back(std::move(seq));
      weights.push_back(weight);
    }
    return ToyDataModel::from_support(vocab, std::move(sequences),
                                      std::move(weights));
  }
  if (kind == "factorized") {
    std::vector<std::vector<double>> marginals;
    for (std::size_t n = 0; n < length; ++n) marginals.push_back(read_row(k));
    return ToyDataModel::factorized(vocab, marginals);
  }
  if (kind == "chain") {
    std::vector<double> initial = read_row(k);
    std::vector<std::vector<double>> transition;
    for (int i = 0; i < k; ++i) transition.push_back(read_row(k));
    return ToyDataModel::chain(vocab, length, initial, transition);
  }
  throw std::runtime_error("load_data_model: unknown kind '" + kind + "'");
}

inline ToyDataModel load_data_model(const std::string& path, bool has_absorbing) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_data_model: cannot open " + path);
  return load_data_model(in, has_absorbing);
}

}  // namespace dndm
