#include "cgedge/multiindex.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cgedge::multiindex {
namespace {

void check_dims(int p, int k) {
  if (p < 1) throw std::invalid_argument("multiindex: dimension must be >= 1");
  if (k < 1) throw std::invalid_argument("multiindex: half-order must be >= 1");
  if (p > kMaxDimension || k > kMaxHalfOrder)
    throw std::invalid_argument("multiindex: beyond desk scale (p <= " + std::to_string(kMaxDimension) +
                                ", k <= " + std::to_string(kMaxHalfOrder) + ")");
}

void compose(int remaining, std::size_t slot, MultiIndex& cur, std::vector<MultiIndex>& out) {
  if (slot + 1 == cur.size()) {
    cur[slot] = remaining;
    out.push_back(cur);
    return;
  }
  for (int v = remaining; v >= 0; --v) {
    cur[slot] = v;
    compose(remaining - v, slot + 1, cur, out);
  }
}

}  // namespace

int order_of(std::span<const int> j) { return std::accumulate(j.begin(), j.end(), 0); }

std::vector<MultiIndex> enumerate_S(int p, int k) {
  check_dims(p, k);
  std::vector<MultiIndex> out;
  out.reserve(binomial(2 * k + p - 1, p - 1));
  MultiIndex cur(static_cast<std::size_t>(p), 0);
  compose(2 * k, 0, cur, out);
  return out;
}

std::vector<IndexTuple> arrangements(const MultiIndex& J) {
  IndexTuple seq;
  for (std::size_t s = 0; s < J.size(); ++s) {
    if (J[s] < 0) throw std::invalid_argument("multiindex: negative entry");
    seq.insert(seq.end(), static_cast<std::size_t>(J[s]), static_cast<int>(s));
  }
  std::vector<IndexTuple> out;
  do {
    out.push_back(seq);
  } while (std::next_permutation(seq.begin(), seq.end()));
  return out;
}

std::vector<IndexTuple> enumerate_A(const MultiIndex& J) {
  if (order_of(J) % 2 != 0) throw std::invalid_argument("enumerate_A: multi-index order must be even");
  return arrangements(J);
}

MultiIndex counts_of(std::span<const int> alpha, int p) {
  MultiIndex J(static_cast<std::size_t>(p), 0);
  for (int a : alpha) {
    if (a < 0 || a >= p) throw std::out_of_range("counts_of: entry outside {0..p-1}");
    ++J[static_cast<std::size_t>(a)];
  }
  return J;
}

bool block_admissible(std::span<const int> alpha, int block_dim) {
  for (std::size_t r = 0; r + 1 < alpha.size(); r += 2) {
    if (alpha[r] / block_dim != alpha[r + 1] / block_dim) return false;
  }
  return true;
}

void for_each_tuple(int p, int length, const std::function<void(std::span<const int>)>& visit) {
  std::vector<int> t(static_cast<std::size_t>(length), 0);
  while (true) {
    visit(t);
    int i = length - 1;
    while (i >= 0 && ++t[static_cast<std::size_t>(i)] == p) {
      t[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) return;
  }
}

void for_each_admissible_tuple(int block_dim, int block_count, int k,
                               const std::function<void(std::span<const int>)>& visit) {
  // Admissible pairs ordered lexicographically; a tuple is a sequence of k of them.
  std::vector<std::pair<int, int>> pairs;
  for (int b = 0; b < block_count; ++b)
    for (int r = 0; r < block_dim; ++r)
      for (int s = 0; s < block_dim; ++s) pairs.emplace_back(b * block_dim + r, b * block_dim + s);
  const int np = static_cast<int>(pairs.size());
  std::vector<int> tuple(static_cast<std::size_t>(2 * k));
  for_each_tuple(np, k, [&](std::span<const int> choice) {
    for (int r = 0; r < k; ++r) {
      tuple[2 * r] = pairs[choice[r]].first;
      tuple[2 * r + 1] = pairs[choice[r]].second;
    }
    visit(tuple);
  });
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

std::uint64_t factorial(int n) {
  if (n < 0 || n > 20) throw std::out_of_range("factorial: argument outside [0, 20]");
  std::uint64_t r = 1;
  for (int i = 2; i <= n; ++i) r *= static_cast<std::uint64_t>(i);
  return r;
}

std::uint64_t multinomial(std::span<const int> j) {
  std::uint64_t r = 1;
  int total = 0;
  for (int v : j) {
    total += v;
    r *= binomial(total, v);
  }
  return r;
}

}  // namespace cgedge::multiindex
