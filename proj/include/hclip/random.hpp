// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>

namespace hclip {

/// SplitMix64 bit generator. Small state, cheap to construct, so a fresh
/// stream can be derived for every (agent, iteration) pair.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t state = 0) noexcept : state_(state) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept;

  bool operator==(const Stream&) const = default;

 private:
  std::uint64_t state_;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

/// Substream domains keep unrelated uses of the same (seed, a, b) apart.
enum class StreamDomain : std::uint64_t {
  gradient_noise = 1,
  gradient_noise_aux = 2,
  initial_state = 3,
  synthetic_data = 4,
  monte_carlo = 5,
  bootstrap = 6,
  schedule_generator = 7,
};

/// Counter-based split: the result depends only on the key, never on how
/// many draws were taken from any other stream.
Stream substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                 StreamDomain domain) noexcept;

}  // namespace hclip
