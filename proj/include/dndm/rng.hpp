#pragma once

#include <cstdint>

namespace dndm {

// Counter-based deterministic random stream. Two streams constructed with the
// same (seed, stream_id) produce identical draw sequences regardless of
// platform or thread interleaving; disjoint stream_ids give independent
// streams. Substream convention for batched work:
//   stream_id = trial * 2^32 + position.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id) {
    state_ = mix(seed + 0x9e3779b97f4a7c15ULL);
    state_ = mix(state_ ^ mix(stream_id + 0xbf58476d1ce4e5b9ULL));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // xorshift-multiply generator over a splitmix-derived state.
  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Uniform double in [0, 1), 53 bits of precision.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t state_;
};

// stream_id for (trial, position) substreams.
inline std::uint64_t substream_id(std::uint64_t trial, std::uint64_t position) {
  return (trial << 32) + position;
}

}  // namespace dndm
