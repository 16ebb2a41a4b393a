#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cgedge/network.hpp"
#include "cgedge/rational.hpp"

namespace cgedge {

using IndexPair = std::pair<int, int>;
// Sequence of (a, b) index pairs naming E[Q_{a1 b1} ··· Q_{ak bk}].
using PairSeq = std::vector<IndexPair>;

struct MomentEntry {
  double estimate = 0.0;
  double std_err = 0.0;
  std::uint64_t count = 0;
};

// Estimates of E[Q_{a1b1}···Q_{akbk}] for every pair sequence with k <= k_max
// over {0..dim−1}². Keys are canonical (each pair sorted, pairs sorted), which
// is the full symmetry of a symmetric Q and a commutative product. The k = 0
// entry is exactly 1 and every other entry starts at 0.
class MomentTensor {
 public:
  MomentTensor(int dim, int k_max);

  static PairSeq canonicalize(PairSeq seq);
  // All canonical sequences, ordered by length and then lexicographically.
  static std::vector<PairSeq> canonical_sequences(int dim, int k_max);

  int dim() const { return dim_; }
  int k_max() const { return k_max_; }
  std::uint64_t samples() const { return samples_; }
  void set_samples(std::uint64_t n) { samples_ = n; }

  void set(const PairSeq& seq, const MomentEntry& e);
  const MomentEntry& at(const PairSeq& seq) const;
  // Expectation for a flat index tuple (a1, b1, a2, b2, ...) over {0..dim−1}.
  double expectation(std::span<const int> flat) const;
  const std::map<PairSeq, MomentEntry>& entries() const { return entries_; }

 private:
  int dim_;
  int k_max_;
  std::uint64_t samples_ = 0;
  std::map<PairSeq, MomentEntry> entries_;
};

// Streaming accumulator over whitened deviations Q = √K^{-1}(A−K)√K^{-1}.
// Partial accumulators merge exactly (Chan et al.) so chunked runs can be
// reduced in a fixed order.
class MomentAccumulator {
 public:
  MomentAccumulator(int dim, int k_max);

  void add(const Eigen::MatrixXd& q);
  void merge(const MomentAccumulator& other);
  MomentTensor finish() const;
  std::uint64_t count() const { return n_; }

 private:
  int dim_;
  int k_max_;
  std::vector<PairSeq> seqs_;
  std::vector<int> prefix_;  // index of the sequence without its last pair, −1 for k = 0
  std::vector<double> mean_, m2_;
  std::vector<double> scratch_;
  std::uint64_t n_ = 0;
};

// Whitening matrix and the Monte-Carlo estimate of the tensor over
// independent conditional-covariance draws (stream "moment-mc").
MomentTensor moment_tensor(const NetworkConfig& cfg, const InputSet& inputs, const SpdMatrix& kernel, int k_max,
                           std::uint64_t samples, std::uint64_t seed);

// Exact E[Q^k] for the shallow ReLU network with L = 1, d = 1, n_0 = 1,
// x = 1, C_W = √2, C_b = 0 (so K = 1 and A = (√2/n1) Σ ReLU(z_i)²,
// z_i ~ N(0, √2)). Accepts k in {1, 2, 3, 4}.
Rational shallow_relu_moments(int n1, int k);
// 1-D tensor holding the exact shallow moments for k <= k_max (k_max <= 4).
MomentTensor shallow_relu_tensor(int n1, int k_max);
// True when the config/inputs are the shallow ReLU example above (any width).
bool is_shallow_relu_example(const NetworkConfig& cfg, const InputSet& inputs);

struct MomentCache {
  std::string config_hash;
  Eigen::MatrixXd kernel;
  std::uint64_t seed = 0;
  MomentTensor tensor{1, 0};
};

void save_moment_cache(const std::string& path, const MomentCache& cache);
MomentCache load_moment_cache(const std::string& path);

}  // namespace cgedge
