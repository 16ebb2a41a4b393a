#include "cgedge/hermite.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "cgedge/multiindex.hpp"

namespace cgedge::hermite {
namespace {

void check_degree(int j) {
  if (j < 0) throw std::invalid_argument("hermite: negative degree");
  if (j > kMaxDegree) throw std::invalid_argument("hermite: degree above supported maximum");
}

void check_indices(std::span<const int> s, Eigen::Index dim) {
  if (static_cast<Eigen::Index>(s.size()) != dim)
    throw std::invalid_argument("hermite: multi-index length does not match matrix dimension");
  for (int v : s)
    if (v < 0) throw std::invalid_argument("hermite: negative multi-index entry");
}

// Sum over perfect matchings of the multiset with multiplicities `counts`,
// each matching weighted by ∏ R_{ab}. Memoized on the count vector.
class MatchingSum {
 public:
  explicit MatchingSum(const Eigen::MatrixXd& R) : R_(R) {}

  double operator()(std::vector<int>& counts) {
    std::size_t a = 0;
    while (a < counts.size() && counts[a] == 0) ++a;
    if (a == counts.size()) return 1.0;
    if (auto it = memo_.find(counts); it != memo_.end()) return it->second;

    const std::vector<int> key = counts;
    double total = 0.0;
    --counts[a];
    for (std::size_t b = a; b < counts.size(); ++b) {
      if (counts[b] == 0) continue;
      const double ways = counts[b];
      --counts[b];
      total += ways * R_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * (*this)(counts);
      ++counts[b];
    }
    ++counts[a];
    memo_.emplace(key, total);
    return total;
  }

 private:
  const Eigen::MatrixXd& R_;
  std::map<std::vector<int>, double> memo_;
};

}  // namespace

double HermiteCoeffs::evaluate(double x) const {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + it->to_double();
  return acc;
}

HermiteCoeffs HermiteCoeffs::derivative() const {
  HermiteCoeffs d;
  d.degree = degree > 0 ? degree - 1 : 0;
  d.coeffs.assign(static_cast<std::size_t>(d.degree + 1), Rational(0));
  for (int p = 1; p <= degree; ++p) d.coeffs[static_cast<std::size_t>(p - 1)] = coeffs[static_cast<std::size_t>(p)] * Rational(p);
  return d;
}

double hermite_eval(int j, double x) {
  check_degree(j);
  if (j == 0) return 1.0;
  double prev = 1.0, cur = x;
  for (int n = 1; n < j; ++n) {
    const double next = x * cur - n * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

void hermite_eval_all(int jmax, double x, std::span<double> out) {
  check_degree(jmax);
  if (out.size() < static_cast<std::size_t>(jmax + 1)) throw std::invalid_argument("hermite_eval_all: output too short");
  out[0] = 1.0;
  if (jmax == 0) return;
  out[1] = x;
  for (int n = 1; n < jmax; ++n) out[n + 1] = x * out[n] - n * out[n - 1];
}

HermiteCoeffs hermite_coeffs(int j) {
  check_degree(j);
  HermiteCoeffs h;
  h.degree = j;
  h.coeffs.assign(static_cast<std::size_t>(j + 1), Rational(0));
  // n!/(m!(n−2m)!2^m) = C(n,2m)·(2m−1)!!
  std::int64_t double_fact = 1;
  for (int m = 0; 2 * m <= j; ++m) {
    if (m > 0) double_fact *= (2 * m - 1);
    const auto mag = static_cast<std::int64_t>(multiindex::binomial(j, 2 * m)) * double_fact;
    h.coeffs[static_cast<std::size_t>(j - 2 * m)] = Rational(m % 2 == 0 ? mag : -mag);
  }
  return h;
}

double product_moment_centered(std::span<const int> s, const Eigen::MatrixXd& R) {
  check_indices(s, R.rows());
  if (multiindex::order_of(s) % 2 != 0) return 0.0;
  std::vector<int> counts(s.begin(), s.end());
  return MatchingSum(R)(counts);
}

double product_moment_shifted(std::span<const int> J, const Eigen::VectorXd& shifted_mean,
                              const Eigen::MatrixXd& R, bool skip_odd_residual) {
  check_indices(J, R.rows());
  if (shifted_mean.size() != R.rows()) throw std::invalid_argument("hermite: mean length mismatch");
  const std::size_t d = J.size();
  MatchingSum central(R);
  std::vector<int> r(d, 0), rest(d, 0);
  double total = 0.0;
  while (true) {
    int residual = 0;
    double weight = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      rest[i] = J[i] - r[i];
      residual += rest[i];
      weight *= static_cast<double>(multiindex::binomial(J[i], r[i])) *
                std::pow(shifted_mean(static_cast<Eigen::Index>(i)), r[i]);
    }
    if ((!skip_odd_residual || residual % 2 == 0) && weight != 0.0) {
      std::vector<int> counts = rest;
      total += weight * central(counts);
    }
    std::size_t i = 0;
    while (i < d && ++r[i] > J[i]) r[i++] = 0;
    if (i == d) break;
  }
  return total;
}

}  // namespace cgedge::hermite
