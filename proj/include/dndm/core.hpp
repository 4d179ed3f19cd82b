#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "dndm/rng.hpp"

namespace dndm {

using Token = int;

// Vocabulary of K real categories, optionally extended by one absorbing
// (mask) state at index K. The mask never appears in data distributions.
struct VocabSpec {
  int base_size = 2;
  bool has_absorbing = false;

  VocabSpec() = default;
  VocabSpec(int k, bool absorbing) : base_size(k), has_absorbing(absorbing) {
    if (k < 2) throw std::invalid_argument("VocabSpec: base_size must be >= 2");
  }

  int total_states() const { return base_size + (has_absorbing ? 1 : 0); }
  int mask_index() const {
    if (!has_absorbing)
      throw std::logic_error("VocabSpec: no absorbing state");
    return base_size;
  }
  bool valid_token(Token tok) const { return tok >= 0 && tok < total_states(); }
};

using Sequence = std::vector<Token>;

inline void check_sequence(const Sequence& seq, const VocabSpec& vocab) {
  if (seq.empty()) throw std::invalid_argument("Sequence: length must be >= 1");
  for (Token tok : seq)
    if (!vocab.valid_token(tok))
      throw std::invalid_argument("Sequence: token out of range");
}

// Probability vector over the full state space.
struct CategoricalDist {
  std::vector<double> probs;

  void validate() const {
    double sum = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0))
        throw std::invalid_argument("CategoricalDist: negative entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("CategoricalDist: entries must sum to 1");
  }
};

enum class NoiseKind { UniformMultinomial, Absorbing };

// The stationary noise distribution q_noise: uniform over the K real
// categories, or a point mass on the mask state.
struct NoiseModel {
  NoiseKind kind = NoiseKind::UniformMultinomial;
  VocabSpec vocab;

  static NoiseModel uniform(const VocabSpec& vocab) {
    return {NoiseKind::UniformMultinomial, vocab};
  }
  static NoiseModel absorbing(const VocabSpec& vocab) {
    if (!vocab.has_absorbing)
      throw std::invalid_argument("NoiseModel: vocab has no absorbing state");
    return {NoiseKind::Absorbing, vocab};
  }

  double prob(Token tok) const {
    if (kind == NoiseKind::Absorbing)
      return tok == vocab.mask_index() ? 1.0 : 0.0;
    return tok < vocab.base_size ? 1.0 / vocab.base_size : 0.0;
  }

  CategoricalDist dist() const {
    CategoricalDist d;
    d.probs.resize(vocab.total_states());
    for (int i = 0; i < vocab.total_states(); ++i) d.probs[i] = prob(i);
    return d;
  }
};

inline Token sample_categorical(const CategoricalDist& dist, RngStream& rng) {
  dist.validate();
  double u = rng.next_double();
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < dist.probs.size(); ++i) {
    if (dist.probs[i] > 0.0) last_positive = static_cast<int>(i);
    acc += dist.probs[i];
    if (u < acc) return static_cast<Token>(i);
  }
  // u landed in the (<=1e-9) normalization slack; return the last live state.
  if (last_positive < 0)
    throw std::invalid_argument("sample_categorical: empty distribution");
  return last_positive;
}

inline int sample_bernoulli(double p, RngStream& rng) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("sample_bernoulli: p outside [0,1]");
  return rng.next_double() < p ? 1 : 0;
}

inline Token sample_noise(const NoiseModel& noise, RngStream& rng) {
  if (noise.kind == NoiseKind::Absorbing) return noise.vocab.mask_index();
  int k = noise.vocab.base_size;
  int tok = static_cast<int>(rng.next_double() * k);
  return tok < k ? tok : k - 1;
}

}  // namespace dndm
