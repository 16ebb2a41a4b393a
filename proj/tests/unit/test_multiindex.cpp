#include <doctest.h>

#include <cmath>
#include <set>

#include "cgedge/multiindex.hpp"

using namespace cgedge::multiindex;

TEST_SUITE("multiindex") {
  TEST_CASE("enumerate_S examples") {
    CHECK(enumerate_S(1, 3) == std::vector<MultiIndex>{{6}});
    CHECK(enumerate_S(2, 1) == std::vector<MultiIndex>{{2, 0}, {1, 1}, {0, 2}});
    CHECK(enumerate_S(3, 2).size() == 15);
    CHECK_THROWS(enumerate_S(0, 1));
    CHECK_THROWS(enumerate_S(2, 0));
  }

  TEST_CASE("enumerate_S counts and uniqueness") {
    for (int p = 1; p <= 5; ++p)
      for (int k = 1; k <= 4; ++k) {
        const auto S = enumerate_S(p, k);
        CHECK(S.size() == binomial(2 * k + p - 1, p - 1));
        const std::set<MultiIndex> uniq(S.begin(), S.end());
        CHECK(uniq.size() == S.size());
        for (const auto& J : S) CHECK(order_of(J) == 2 * k);
        CHECK(std::is_sorted(S.rbegin(), S.rend()));
      }
  }

  TEST_CASE("enumerate_A examples") {
    CHECK(enumerate_A({1, 1}) == std::vector<IndexTuple>{{0, 1}, {1, 0}});
    CHECK(enumerate_A({2, 0}) == std::vector<IndexTuple>{{0, 0}});
    CHECK(enumerate_A({2, 1, 1}).size() == 12);
    CHECK_THROWS(enumerate_A({1, 0}));
  }

  TEST_CASE("counts_of inverts enumerate_A") {
    const std::vector<int> a{0, 0, 2};
    CHECK(counts_of(a, 3) == MultiIndex{2, 0, 1});
    const std::vector<int> b{1, 0};
    CHECK(counts_of(b, 2) == MultiIndex{1, 1});
    const std::vector<int> bad{0, 3};
    CHECK_THROWS(counts_of(bad, 3));
    for (const auto& J : enumerate_S(3, 2))
      for (const auto& alpha : enumerate_A(J)) CHECK(counts_of(alpha, 3) == J);
  }

  TEST_CASE("block admissibility") {
    const std::vector<int> a{0, 1, 2, 3}, b{0, 2}, c{0, 0};
    CHECK(block_admissible(a, 2));
    CHECK_FALSE(block_admissible(b, 2));
    CHECK(block_admissible(c, 1));
  }

  TEST_CASE("double sum over (J, A_J) equals the raw tuple count p^{2k}") {
    for (int p = 1; p <= 4; ++p)
      for (int k = 1; k <= 3; ++k) {
        std::uint64_t total = 0;
        for (const auto& J : enumerate_S(p, k)) {
          const auto A = enumerate_A(J);
          CHECK(A.size() == multinomial(J));
          const std::set<IndexTuple> uniq(A.begin(), A.end());
          CHECK(uniq.size() == A.size());
          total += A.size();
        }
        CHECK(total == static_cast<std::uint64_t>(std::pow(p, 2 * k)));
      }
  }

  TEST_CASE("admissible tuple visitor agrees with filtering all raw tuples") {
    for (int d = 1; d <= 2; ++d)
      for (int n = 1; n <= 2; ++n)
        for (int k = 1; k <= 2; ++k) {
          std::set<IndexTuple> visited, filtered;
          for_each_admissible_tuple(d, n, k, [&](std::span<const int> t) { visited.emplace(t.begin(), t.end()); });
          for_each_tuple(d * n, 2 * k, [&](std::span<const int> t) {
            if (block_admissible(t, d)) filtered.emplace(t.begin(), t.end());
          });
          CHECK(visited == filtered);
        }
  }

  TEST_CASE("enumeration is deterministic") {
    CHECK(enumerate_S(4, 3) == enumerate_S(4, 3));
    CHECK(enumerate_A({2, 1, 1, 2}) == enumerate_A({2, 1, 1, 2}));
  }
}
