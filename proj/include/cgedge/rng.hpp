#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string_view>

namespace cgedge {

// 64-bit FNV-1a; used for stream names and config hashing.
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t splitmix64(std::uint64_t x);

// Seeded normal/uniform stream. Substreams are derived from
// (master seed, stream name, chunk index) so that chunked Monte-Carlo runs
// are reproducible independently of how chunks are scheduled.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  static Rng substream(std::uint64_t master_seed, std::string_view name, std::uint64_t chunk = 0);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Named substreams used by the experiments.
namespace streams {
inline constexpr std::string_view kHiddenWeights = "hidden-weights";
inline constexpr std::string_view kMomentMc = "moment-mc";
inline constexpr std::string_view kDensityMc = "density-mc";
inline constexpr std::string_view kPredictiveMc = "predictive-mc";
}  // namespace streams

inline constexpr std::size_t kDefaultChunkSize = 4096;

// Runs body(chunk) for chunk in [0, chunks) on up to `threads` workers.
// Callers write results into per-chunk slots and reduce in chunk order,
// which keeps outputs independent of the worker count.
void parallel_chunks(std::size_t chunks, unsigned threads, const std::function<void(std::size_t)>& body);

// Global worker count used by library routines (CLI --threads). 0 means 1.
void set_worker_threads(unsigned n);
unsigned worker_threads();

}  // namespace cgedge
