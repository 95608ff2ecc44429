#pragma once

#include <cstdint>
#include <string_view>

namespace specdeconf {

/// Counter-based 64-bit generator. Output k of a stream with key `key` is
/// splitmix64_mix(key + k * golden_gamma), so any draw is addressable by
/// (key, k) and streams with distinct keys never share state.
///
/// Sub-stream keys are derived as
///   mix(seed) ^ mix(fnv1a(tag)) ^ mix(replicate + golden_gamma)
/// followed by a final mix, see `stream_key`.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() noexcept;
  bool bernoulli(double prob) noexcept { return uniform() < prob; }
  /// Uniform integer on [0, bound) by rejection (bound > 0).
  std::uint64_t below(std::uint64_t bound) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

std::uint64_t splitmix64_mix(std::uint64_t z) noexcept;
std::uint64_t stream_key(std::uint64_t seed, std::string_view tag,
                         std::uint64_t replicate = 0) noexcept;

inline CounterRng make_stream(std::uint64_t seed, std::string_view tag,
                              std::uint64_t replicate = 0) noexcept {
  return CounterRng(stream_key(seed, tag, replicate));
}

}  // namespace specdeconf
