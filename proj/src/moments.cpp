#include "cgedge/moments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "cgedge/errors.hpp"
#include "cgedge/multiindex.hpp"

namespace cgedge {

MomentTensor::MomentTensor(int dim, int k_max) : dim_(dim), k_max_(k_max) {
  if (dim < 1) throw std::invalid_argument("MomentTensor: dim must be >= 1");
  if (k_max < 0) throw std::invalid_argument("MomentTensor: k_max must be >= 0");
  // unset entries read as zero, i.e. A ≡ K
  for (const auto& seq : canonical_sequences(dim, k_max)) entries_[seq] = MomentEntry{};
  entries_[PairSeq{}] = MomentEntry{1.0, 0.0, 0};
}

PairSeq MomentTensor::canonicalize(PairSeq seq) {
  for (auto& p : seq)
    if (p.first > p.second) std::swap(p.first, p.second);
  std::sort(seq.begin(), seq.end());
  return seq;
}

std::vector<PairSeq> MomentTensor::canonical_sequences(int dim, int k_max) {
  std::vector<IndexPair> pairs;
  for (int a = 0; a < dim; ++a)
    for (int b = a; b < dim; ++b) pairs.emplace_back(a, b);
  std::vector<PairSeq> out{PairSeq{}};
  std::size_t level_begin = 0;
  for (int k = 1; k <= k_max; ++k) {
    const std::size_t level_end = out.size();
    for (std::size_t i = level_begin; i < level_end; ++i) {
      // extend with pairs >= the last one to stay sorted
      const PairSeq base = out[i];
      for (const auto& p : pairs) {
        if (!base.empty() && p < base.back()) continue;
        PairSeq next = base;
        next.push_back(p);
        out.push_back(std::move(next));
      }
    }
    level_begin = level_end;
  }
  return out;
}

void MomentTensor::set(const PairSeq& seq, const MomentEntry& e) {
  if (static_cast<int>(seq.size()) > k_max_) throw std::out_of_range("MomentTensor: sequence longer than k_max");
  for (const auto& p : seq)
    if (p.first < 0 || p.second < 0 || p.first >= dim_ || p.second >= dim_)
      throw std::out_of_range("MomentTensor: index outside {0..dim-1}");
  auto key = canonicalize(seq);
  if (key.empty()) return;  // k = 0 stays exactly 1
  entries_[std::move(key)] = e;
}

const MomentEntry& MomentTensor::at(const PairSeq& seq) const {
  auto it = entries_.find(canonicalize(seq));
  if (it == entries_.end()) throw std::out_of_range("MomentTensor: no entry for pair sequence");
  return it->second;
}

double MomentTensor::expectation(std::span<const int> flat) const {
  PairSeq seq;
  seq.reserve(flat.size() / 2);
  for (std::size_t r = 0; r + 1 < flat.size(); r += 2) seq.emplace_back(flat[r], flat[r + 1]);
  return at(seq).estimate;
}

MomentAccumulator::MomentAccumulator(int dim, int k_max)
    : dim_(dim), k_max_(k_max), seqs_(MomentTensor::canonical_sequences(dim, k_max)) {
  std::map<PairSeq, int> index;
  for (std::size_t i = 0; i < seqs_.size(); ++i) index[seqs_[i]] = static_cast<int>(i);
  prefix_.resize(seqs_.size(), -1);
  for (std::size_t i = 1; i < seqs_.size(); ++i) {
    PairSeq pre(seqs_[i].begin(), seqs_[i].end() - 1);
    prefix_[i] = index.at(pre);
  }
  mean_.assign(seqs_.size(), 0.0);
  m2_.assign(seqs_.size(), 0.0);
  scratch_.assign(seqs_.size(), 0.0);
}

void MomentAccumulator::add(const Eigen::MatrixXd& q) {
  scratch_[0] = 1.0;
  for (std::size_t i = 1; i < seqs_.size(); ++i) {
    const auto& last = seqs_[i].back();
    scratch_[i] = scratch_[static_cast<std::size_t>(prefix_[i])] * q(last.first, last.second);
  }
  ++n_;
  const double inv = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < seqs_.size(); ++i) {
    const double delta = scratch_[i] - mean_[i];
    mean_[i] += delta * inv;
    m2_[i] += delta * (scratch_[i] - mean_[i]);
  }
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.n_ == 0) return;
  if (other.seqs_.size() != seqs_.size()) throw std::invalid_argument("MomentAccumulator: shape mismatch");
  const double na = static_cast<double>(n_), nb = static_cast<double>(other.n_);
  const double n = na + nb;
  for (std::size_t i = 0; i < seqs_.size(); ++i) {
    const double delta = other.mean_[i] - mean_[i];
    mean_[i] += delta * nb / n;
    m2_[i] += other.m2_[i] + delta * delta * na * nb / n;
  }
  n_ += other.n_;
}

MomentTensor MomentAccumulator::finish() const {
  MomentTensor t(dim_, k_max_);
  t.set_samples(n_);
  for (std::size_t i = 1; i < seqs_.size(); ++i) {
    const double var = n_ > 1 ? m2_[i] / static_cast<double>(n_ - 1) : 0.0;
    t.set(seqs_[i], MomentEntry{mean_[i], n_ > 0 ? std::sqrt(var / static_cast<double>(n_)) : 0.0, n_});
  }
  return t;
}

MomentTensor moment_tensor(const NetworkConfig& cfg, const InputSet& inputs, const SpdMatrix& kernel, int k_max,
                           std::uint64_t samples, std::uint64_t seed) {
  if (kernel.dim() != inputs.size()) throw std::invalid_argument("moment_tensor: kernel dimension mismatch");
  const int d = inputs.size();
  if (k_max == 0) {
    MomentTensor t(d, 0);
    return t;
  }
  if (samples < 1000) throw std::invalid_argument("moment_tensor: at least 1000 samples required");
  const Eigen::MatrixXd whiten = kernel.inv_sqrt();
  const std::size_t chunks = (samples + kDefaultChunkSize - 1) / kDefaultChunkSize;
  std::vector<MomentAccumulator> parts(chunks, MomentAccumulator(d, k_max));
  parallel_chunks(chunks, worker_threads(), [&](std::size_t c) {
    Rng rng = Rng::substream(seed, streams::kMomentMc, c);
    const std::uint64_t begin = c * kDefaultChunkSize;
    const std::uint64_t end = std::min<std::uint64_t>(samples, begin + kDefaultChunkSize);
    for (std::uint64_t s = begin; s < end; ++s) {
      const Eigen::MatrixXd a = conditional_cov_sample(cfg, inputs, rng);
      parts[c].add(whiten * (a - kernel.matrix()) * whiten);
    }
  });
  MomentAccumulator total(d, k_max);
  for (const auto& p : parts) total.merge(p);
  return total.finish();
}

namespace {

// E[Y^q] for Y = √2·ReLU(z)², z ~ N(0, √2): 2^{q/2}(2q−1)!!(√2)^q/2.
Rational shallow_raw_moment(int q) {
  if (q == 0) return Rational(1);
  std::int64_t dfact = 1;
  for (int i = 2 * q - 1; i > 1; i -= 2) dfact *= i;
  return Rational((std::int64_t{1} << q) * dfact, 2);
}

// Integer partitions of k into parts >= 2, parts non-increasing.
void partitions_no_ones(int remaining, int max_part, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (remaining == 0) {
    out.push_back(cur);
    return;
  }
  for (int p = std::min(remaining, max_part); p >= 2; --p) {
    cur.push_back(p);
    partitions_no_ones(remaining - p, p, cur, out);
    cur.pop_back();
  }
}

}  // namespace

Rational shallow_relu_moments(int n1, int k) {
  if (k < 1 || k > 4) throw std::invalid_argument("shallow_relu_moments: k must be in {1,2,3,4}");
  if (n1 < 1) throw std::invalid_argument("shallow_relu_moments: width must be >= 1");
  // central moments of Y (E[Y] = 1)
  std::vector<Rational> mu(static_cast<std::size_t>(k + 1), Rational(0));
  for (int p = 0; p <= k; ++p) {
    Rational acc(0);
    for (int i = 0; i <= p; ++i) {
      Rational term = Rational(static_cast<std::int64_t>(multiindex::binomial(p, i))) * shallow_raw_moment(i);
      acc += ((p - i) % 2 == 0) ? term : -term;
    }
    mu[static_cast<std::size_t>(p)] = acc;
  }
  // E[(Σ X_i)^k] over partitions of k into parts >= 2 (μ_1 = 0):
  // k!/∏λ! · ∏μ_λ · n(n−1)···(n−r+1)/∏(multiplicity)!
  std::vector<std::vector<int>> parts;
  std::vector<int> cur;
  partitions_no_ones(k, k, cur, parts);
  Rational total(0);
  for (const auto& lambda : parts) {
    Rational term(static_cast<std::int64_t>(multiindex::factorial(k)));
    for (int part : lambda) term *= mu[static_cast<std::size_t>(part)] / Rational(static_cast<std::int64_t>(multiindex::factorial(part)));
    const int r = static_cast<int>(lambda.size());
    for (int i = 0; i < r; ++i) term *= Rational(n1 - i);
    for (std::size_t i = 0; i < lambda.size();) {
      std::size_t j = i;
      while (j < lambda.size() && lambda[j] == lambda[i]) ++j;
      term /= Rational(static_cast<std::int64_t>(multiindex::factorial(static_cast<int>(j - i))));
      i = j;
    }
    total += term;
  }
  Rational nk(1);
  for (int i = 0; i < k; ++i) nk *= Rational(n1);
  return total / nk;
}

MomentTensor shallow_relu_tensor(int n1, int k_max) {
  MomentTensor t(1, k_max);
  for (int k = 1; k <= k_max; ++k) t.set(PairSeq(static_cast<std::size_t>(k), IndexPair{0, 0}), MomentEntry{shallow_relu_moments(n1, k).to_double(), 0.0, 0});
  return t;
}

bool is_shallow_relu_example(const NetworkConfig& cfg, const InputSet& inputs) {
  return cfg.depth == 1 && cfg.input_dim == 1 && inputs.size() == 1 && inputs[0](0) == 1.0 &&
         cfg.activation.kind() == ActivationKind::ReLU && cfg.bias_var == 0.0 &&
         std::abs(cfg.weight_var - std::numbers::sqrt2) < 1e-15;
}

void save_moment_cache(const std::string& path, const MomentCache& cache) {
  nlohmann::json j;
  j["configHash"] = cache.config_hash;
  nlohmann::json kernel = nlohmann::json::array();
  for (Eigen::Index r = 0; r < cache.kernel.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < cache.kernel.cols(); ++c) row.push_back(cache.kernel(r, c));
    kernel.push_back(row);
  }
  j["kernel"] = kernel;
  j["kMax"] = cache.tensor.k_max();
  j["samples"] = cache.tensor.samples();
  j["seed"] = cache.seed;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [seq, e] : cache.tensor.entries()) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : seq) pairs.push_back({p.first, p.second});
    entries.push_back({{"pairs", pairs}, {"estimate", e.estimate}, {"stderr", e.std_err}});
  }
  j["entries"] = entries;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write moment cache '" + path + "'");
  out << j.dump(1) << '\n';
}

MomentCache load_moment_cache(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read moment cache '" + path + "'");
  const auto j = nlohmann::json::parse(in);
  MomentCache cache;
  cache.config_hash = j.at("configHash").get<std::string>();
  const auto& kernel = j.at("kernel");
  const auto d = static_cast<Eigen::Index>(kernel.size());
  cache.kernel.resize(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) cache.kernel(r, c) = kernel.at(r).at(c).get<double>();
  cache.seed = j.at("seed").get<std::uint64_t>();
  MomentTensor t(static_cast<int>(d), j.at("kMax").get<int>());
  t.set_samples(j.at("samples").get<std::uint64_t>());
  for (const auto& e : j.at("entries")) {
    PairSeq seq;
    for (const auto& p : e.at("pairs")) seq.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
    t.set(seq, MomentEntry{e.at("estimate").get<double>(), e.at("stderr").get<double>(), t.samples()});
  }
  cache.tensor = std::move(t);
  return cache;
}

}  // namespace cgedge
