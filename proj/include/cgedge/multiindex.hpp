#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

// Index sets behind the Edgeworth sums: compositions S_p^{(2k)} of 2k into p
// parts, the arrangements A_J of a multi-index, and the block filter for
// block-diagonal matrices M^{⊕n}.
//
// Indices are 0-based throughout: an IndexTuple holds values in {0,…,p−1}.
namespace cgedge::multiindex {

using MultiIndex = std::vector<int>;
using IndexTuple = std::vector<int>;

inline constexpr int kMaxDimension = 8;
inline constexpr int kMaxHalfOrder = 6;

int order_of(std::span<const int> j);

// All J ∈ ℕ^p with |J| = 2k, first entry descending: (2,0),(1,1),(0,2).
std::vector<MultiIndex> enumerate_S(int p, int k);

// Distinct arrangements of the sequence in which value s appears J[s] times,
// in ascending lexicographic order. Rejects odd |J|.
std::vector<IndexTuple> enumerate_A(const MultiIndex& J);

// Same enumeration without the even-order restriction (used for Hermite
// pairing sums where the caller checks parity itself).
std::vector<IndexTuple> arrangements(const MultiIndex& J);

MultiIndex counts_of(std::span<const int> alpha, int p);

// True iff every consecutive pair (alpha[2r], alpha[2r+1]) lies inside one
// d-block, i.e. alpha[2r]/d == alpha[2r+1]/d.
bool block_admissible(std::span<const int> alpha, int block_dim);

// Visits every tuple of {0,…,p−1}^length in lexicographic order. The span
// passed to the visitor is only valid during the call.
void for_each_tuple(int p, int length, const std::function<void(std::span<const int>)>& visit);

// Visits every block-admissible tuple of length 2k over n blocks of size d,
// pair by pair, without generating the inadmissible ones.
void for_each_admissible_tuple(int block_dim, int block_count, int k,
                               const std::function<void(std::span<const int>)>& visit);

std::uint64_t binomial(int n, int k);
std::uint64_t factorial(int n);
// (Σj)! / ∏ j_s!
std::uint64_t multinomial(std::span<const int> j);

}  // namespace cgedge::multiindex
