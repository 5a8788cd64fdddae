// SPDX-License-Identifier: Apache-2.0
#include "hclip/random.hpp"

namespace hclip {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

Stream::result_type Stream::operator()() noexcept {
  state_ += 0x9e3779b97f4a7c15ULL;
  return mix64(state_);
}

double Stream::uniform() noexcept {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

Stream substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                 StreamDomain domain) noexcept {
  std::uint64_t h = mix64(seed + 0x632be59bd9b4e019ULL);
  h = mix64(h ^ (a + 0x8cb92ba72f3d8dd7ULL));
  h = mix64(h ^ (b + 0xa0761d6478bd642fULL));
  h = mix64(h ^ (static_cast<std::uint64_t>(domain) + 0xe7037ed1a0b428dbULL));
  return Stream(h);
}

}  // namespace hclip
