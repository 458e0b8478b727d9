#include "moebius/random.hpp"

#include "moebius/errors.hpp"

namespace moebius {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng derive_rng(std::uint64_t seed, std::int64_t round, std::int64_t instruction,
               std::int64_t sample, Stream stream) {
  if (round < 0 || instruction < 0 || sample < 0) {
    throw DomainError("derive_rng: indices must be non-negative");
  }
  std::uint64_t state = splitmix64(seed);
  for (std::uint64_t part : {static_cast<std::uint64_t>(stream), static_cast<std::uint64_t>(round),
                             static_cast<std::uint64_t>(instruction),
                             static_cast<std::uint64_t>(sample)}) {
    state = splitmix64(state ^ splitmix64(part));
  }
  return Rng(state);
}

}  // namespace moebius
