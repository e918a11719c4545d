#pragma once

#include <cstdint>
#include <random>

namespace duelsearch {

/// Deterministic random stream keyed by (base_seed, stream_id).
///
/// Streams with distinct keys are statistically independent; identical keys
/// reproduce identical draws on every platform (the engine is mt19937_64 and
/// all variates are derived from raw engine output, never from the
/// implementation-defined std distributions).
class RngStream {
 public:
  RngStream(std::uint64_t base_seed, std::uint64_t stream_id);

  std::uint64_t base_seed() const { return base_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Derived stream for nested work (e.g. a replicate inside an experiment).
  RngStream child(std::uint64_t child_id) const;

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::uint64_t base_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer, used to turn (seed, id) pairs into engine seeds.
std::uint64_t mix64(std::uint64_t x);

}  // namespace duelsearch
