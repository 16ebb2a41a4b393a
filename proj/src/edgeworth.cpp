#include "cgedge/edgeworth.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "cgedge/errors.hpp"
#include "cgedge/hermite.hpp"

namespace cgedge {

namespace {

struct BlockPair {
  int global_a, global_b;  // indices into ℝ^{nd}
  IndexPair local;         // indices into Q
};

double hermite_product(const multiindex::MultiIndex& J, const std::vector<std::vector<double>>& table) {
  double p = 1.0;
  for (std::size_t i = 0; i < J.size(); ++i)
    if (J[i] != 0) p *= table[i][static_cast<std::size_t>(J[i])];
  return p;
}

std::vector<std::vector<double>> hermite_table(const Eigen::VectorXd& y, int jmax) {
  std::vector<std::vector<double>> t(static_cast<std::size_t>(y.size()), std::vector<double>(static_cast<std::size_t>(jmax + 1)));
  for (Eigen::Index i = 0; i < y.size(); ++i) hermite::hermite_eval_all(jmax, y(i), t[static_cast<std::size_t>(i)]);
  return t;
}

Eigen::VectorXd block_whiten(const Eigen::MatrixXd& w, int n, const Eigen::VectorXd& x) {
  const Eigen::Index d = w.rows();
  Eigen::VectorXd y(x.size());
  for (int b = 0; b < n; ++b) y.segment(b * d, d) = w * x.segment(b * d, d);
  return y;
}

}  // namespace

EdgeworthModel::EdgeworthModel(int m, int block_dim, int block_count, SpdMatrix kernel, MomentTensor moments,
                               std::optional<int> k_max)
    : m_(m), d_(block_dim), n_(block_count), k_max_(k_max.value_or(2 * m - 1)), kernel_(std::move(kernel)),
      moments_(std::move(moments)) {
  if (m < 1 || m > 3) throw std::invalid_argument("EdgeworthModel: m must be in {1,2,3}");
  if (block_dim < 1 || block_count < 1) throw std::invalid_argument("EdgeworthModel: dimensions must be positive");
  if (block_dim * block_count > multiindex::kMaxDimension)
    throw std::invalid_argument("EdgeworthModel: n·d exceeds " + std::to_string(multiindex::kMaxDimension));
  if (kernel_.dim() != block_dim) throw std::invalid_argument("EdgeworthModel: kernel is not d×d");
  if (moments_.dim() != block_dim) throw std::invalid_argument("EdgeworthModel: moment tensor dimension mismatch");
  if (k_max_ < 0 || k_max_ > multiindex::kMaxHalfOrder) throw std::invalid_argument("EdgeworthModel: k_max out of range");
  if (moments_.k_max() < k_max_) throw std::invalid_argument("EdgeworthModel: moment tensor order below k_max");

  whiten_ = kernel_.inv_sqrt();
  log_norm_ = -0.5 * n_ * (d_ * std::log(2.0 * std::numbers::pi) + kernel_.log_det());

  const int p = dim();
  std::vector<BlockPair> pairs;
  for (int b = 0; b < n_; ++b)
    for (int a = 0; a < d_; ++a)
      for (int c = a; c < d_; ++c) pairs.push_back({b * d_ + a, b * d_ + c, {a, c}});

  // Ordered tuples of ordered within-block pairs are grouped into multisets
  // of unordered pairs; each multiset stands for k!/∏mult! · 2^{#off-diagonal}
  // raw tuples with the same moment and the same counts J.
  terms_.resize(static_cast<std::size_t>(k_max_));
  for (int k = 1; k <= k_max_; ++k) {
    std::map<multiindex::MultiIndex, double> acc;
    std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
    const double scale = 1.0 / (static_cast<double>(multiindex::factorial(k)) * std::ldexp(1.0, k));
    while (true) {
      PairSeq seq;
      multiindex::MultiIndex J(static_cast<std::size_t>(p), 0);
      double weight = static_cast<double>(multiindex::factorial(k));
      std::size_t run = 1;
      for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto& bp = pairs[idx[r]];
        seq.push_back(bp.local);
        ++J[static_cast<std::size_t>(bp.global_a)];
        ++J[static_cast<std::size_t>(bp.global_b)];
        if (bp.global_a != bp.global_b) weight *= 2.0;
        if (r > 0 && idx[r] == idx[r - 1]) {
          ++run;
          weight /= static_cast<double>(run);
        } else {
          run = 1;
        }
      }
      const double mom = moments_.at(seq).estimate;
      if (mom != 0.0) acc[J] += weight * mom;

      // next non-decreasing index sequence
      std::size_t r = idx.size();
      while (r > 0 && idx[r - 1] + 1 == pairs.size()) --r;
      if (r == 0) break;
      ++idx[r - 1];
      for (std::size_t s = r; s < idx.size(); ++s) idx[s] = idx[r - 1];
    }
    auto& level = terms_[static_cast<std::size_t>(k - 1)];
    for (const auto& [J, c] : acc)
      if (c != 0.0) level.push_back({J, c * scale});
  }
}

Eigen::VectorXd EdgeworthModel::whiten(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw std::invalid_argument("EdgeworthModel: point has wrong dimension");
  return block_whiten(whiten_, n_, x);
}

double EdgeworthModel::gaussian(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd y = whiten(x);
  return std::exp(log_norm_ - 0.5 * y.squaredNorm());
}

double EdgeworthModel::bracket(const Eigen::VectorXd& y) const {
  if (y.size() != dim()) throw std::invalid_argument("EdgeworthModel: point has wrong dimension");
  const auto table = hermite_table(y, 2 * k_max_);
  double s = 1.0;
  for (const auto& level : terms_)
    for (const auto& t : level) s += t.coeff * hermite_product(t.J, table);
  return s;
}

double EdgeworthModel::density(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd y = whiten(x);
  return std::exp(log_norm_ - 0.5 * y.squaredNorm()) * bracket(y);
}

double EdgeworthModel::literal_density(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd y = whiten(x);
  const auto table = hermite_table(y, 2 * k_max_);
  const int p = dim();
  double s = 1.0;
  for (int k = 1; k <= k_max_; ++k) {
    double level = 0.0;
    for (const auto& J : multiindex::enumerate_S(p, k)) {
      double inner = 0.0;
      for (const auto& alpha : multiindex::enumerate_A(J)) {
        if (!multiindex::block_admissible(alpha, d_)) continue;
        PairSeq seq;
        for (std::size_t r = 0; r < alpha.size(); r += 2) seq.emplace_back(alpha[r] % d_, alpha[r + 1] % d_);
        inner += moments_.at(seq).estimate;
      }
      level += inner * hermite_product(J, table);
    }
    s += level / (static_cast<double>(multiindex::factorial(k)) * std::ldexp(1.0, k));
  }
  return std::exp(log_norm_ - 0.5 * y.squaredNorm()) * s;
}

double total_mass(const EdgeworthModel& model, int order) {
  const int p = model.dim();
  if (p > 3) throw std::invalid_argument("total_mass: quadrature path supports n·d <= 3");
  // γ(x)dx = bracket(y)·φ(y)dy in whitened coordinates
  const auto rule = QuadratureRule::gauss_hermite(order);
  std::vector<int> idx(static_cast<std::size_t>(p), 0);
  Eigen::VectorXd y(p);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (int i = 0; i < p; ++i) {
      y(i) = rule.nodes[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
      w *= rule.weights[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    }
    total += w * model.bracket(y);
    int i = 0;
    while (i < p && ++idx[static_cast<std::size_t>(i)] == order) idx[static_cast<std::size_t>(i++)] = 0;
    if (i == p) break;
  }
  return total;
}

double block_gaussian_density(const SpdMatrix& gamma, int block_count, const Eigen::VectorXd& x) {
  const Eigen::Index d = gamma.dim();
  if (x.size() != d * block_count) throw std::invalid_argument("block_gaussian_density: dimension mismatch");
  const Eigen::VectorXd y = block_whiten(gamma.inv_sqrt(), block_count, x);
  const double log_norm = -0.5 * block_count * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + gamma.log_det());
  return std::exp(log_norm - 0.5 * y.squaredNorm());
}

double density_taylor_term(const SpdMatrix& K, const Eigen::MatrixXd& A, int block_count, int k, double t,
                           const Eigen::VectorXd& x) {
  if (k < 0) throw std::invalid_argument("density_taylor_term: k must be >= 0");
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("density_taylor_term: t must lie in [0,1]");
  if (A.rows() != K.dim() || A.cols() != K.dim()) throw std::invalid_argument("density_taylor_term: A is not d×d");
  const SpdMatrix gamma(t * A + (1.0 - t) * K.matrix());
  const double base = block_gaussian_density(gamma, block_count, x);
  if (k == 0) return base;
  const Eigen::MatrixXd w = gamma.inv_sqrt();
  const Eigen::MatrixXd q = w * (A - K.matrix()) * w;
  const int d = static_cast<int>(K.dim());
  const Eigen::VectorXd y = block_whiten(w, block_count, x);
  const auto table = hermite_table(y, 2 * k);
  const int p = d * block_count;
  double s = 0.0;
  multiindex::for_each_admissible_tuple(d, block_count, k, [&](std::span<const int> alpha) {
    double prod = 1.0;
    for (std::size_t r = 0; r < alpha.size(); r += 2) prod *= q(alpha[r] % d, alpha[r + 1] % d);
    if (prod == 0.0) return;
    s += prod * hermite_product(multiindex::counts_of(alpha, p), table);
  });
  return std::ldexp(s, -k) * base;
}

CurveSpec curve_from_name(const std::string& name) {
  if (name == "gaussian") return CurveSpec::Gaussian;
  if (name == "edg1") return CurveSpec::Edg1;
  if (name == "intermediate") return CurveSpec::Intermediate;
  if (name == "edg2") return CurveSpec::Edg2;
  throw ConfigError("unknown curve '" + name + "' (expected gaussian, edg1, intermediate, edg2)");
}

std::string curve_name(CurveSpec spec) {
  switch (spec) {
    case CurveSpec::Gaussian: return "gaussian";
    case CurveSpec::Edg1: return "edg1";
    case CurveSpec::Intermediate: return "intermediate";
    case CurveSpec::Edg2: return "edg2";
  }
  return "?";
}

std::vector<CurveTerm> shallow_relu_curve_terms(int n1, CurveSpec spec) {
  if (n1 < 1) throw std::invalid_argument("shallow_relu_density: width must be >= 1");
  const Rational n(n1);
  std::vector<CurveTerm> out;
  if (spec == CurveSpec::Gaussian) return out;
  out.push_back({4, Rational(5, 8) / n});
  if (spec == CurveSpec::Edg1) return out;
  out.push_back({6, Rational(11, 12) / (n * n)});
  if (spec == CurveSpec::Intermediate) return out;
  // reference H8 coefficient, taken verbatim
  out.push_back({8, Rational(1573, 192) / (n * n) + Rational(25) * (n - Rational(1)) / (Rational(64) * n * n)});
  return out;
}

double shallow_relu_density(int n1, CurveSpec spec, double y) {
  double s = 1.0;
  for (const auto& t : shallow_relu_curve_terms(n1, spec)) s += t.coeff.to_double() * hermite::hermite_eval(t.degree, y);
  return standard_normal_pdf(y) * s;
}

}  // namespace cgedge
