#pragma once

#include <atomic>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace chamberwalk {

/// Deterministic random stream addressed by (master seed, stream index).
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream);

  std::uint64_t master_seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next() { return engine_(); }
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);

  /// Independent child stream; same (seed, stream, index) gives the same child.
  RngStream child(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Samples are cut into fixed-size chunks; chunk c always uses stream c, so
/// the per-chunk results do not depend on how many workers run them.
inline constexpr std::uint64_t kChunkSize = 2048;

/// Runs fn(rng, first_sample, count) for every chunk on `workers` threads and
/// returns the partial results in chunk order.
template <class Partial, class ChunkFn>
std::vector<Partial> run_chunks(std::uint64_t samples, std::uint64_t seed, unsigned workers, ChunkFn fn) {
  const std::uint64_t chunks = (samples + kChunkSize - 1) / kChunkSize;
  std::vector<Partial> out(chunks);
  std::atomic<std::uint64_t> next{0};
  auto work = [&] {
    for (std::uint64_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
      RngStream rng(seed, c);
      const std::uint64_t first = c * kChunkSize;
      const std::uint64_t count = std::min(kChunkSize, samples - first);
      out[c] = fn(rng, first, count);
    }
  };
  if (workers <= 1 || chunks <= 1) {
    work();
    return out;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace chamberwalk
