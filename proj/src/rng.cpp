#include "duelsearch/rng.hpp"

namespace duelsearch {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t base_seed, std::uint64_t stream_id)
    : base_seed_(base_seed),
      stream_id_(stream_id),
      engine_(mix64(mix64(base_seed) ^ (stream_id * 0xd1b54a32d192ed03ULL + 1))) {}

RngStream RngStream::child(std::uint64_t child_id) const {
  return RngStream(mix64(base_seed_ ^ mix64(stream_id_)), child_id);
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  // Rejection sampling on the top of the range keeps the result unbiased.
  const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % n + 1) % n;
  std::uint64_t r = engine_();
  while (r > limit) r = engine_();
  return r % n;
}

}  // namespace duelsearch
