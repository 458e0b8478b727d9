#pragma once

#include <cstdint>
#include <random>

namespace moebius {

// Purpose tag mixed into every derived stream so that, e.g., validation
// instance seeds can never alias training draws with the same indices.
enum class Stream : std::uint64_t {
  kRollout = 1,
  kCoach = 2,
  kValidation = 3,
  kInstance = 4,
  kEvaluation = 5,
  kTrainingRollout = 6,
  kKlEstimate = 7,
};

// Thin wrapper over mt19937_64 with fixed, platform-independent conversions
// (the <random> distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(engine_()) * bound) >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Stream fully determined by (seed, round, instruction, sample, purpose).
// Negative indices throw DomainError.
Rng derive_rng(std::uint64_t seed, std::int64_t round, std::int64_t instruction,
               std::int64_t sample, Stream stream = Stream::kRollout);

// The first three coordinates of a derivation; per-sample streams hang off it.
struct StreamKey {
  std::uint64_t seed = 0;
  std::int64_t round = 0;
  std::int64_t instruction = 0;
  Stream stream = Stream::kRollout;

  Rng at(std::int64_t sample) const { return derive_rng(seed, round, instruction, sample, stream); }
};

}  // namespace moebius
