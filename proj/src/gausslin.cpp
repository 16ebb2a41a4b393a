#include "cgedge/gausslin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "cgedge/errors.hpp"

namespace cgedge {
namespace {

// Golub–Welsch for the nodes, then a Newton polish on the orthonormal
// recurrence and Christoffel weights 1/Σ p_j(x)². Eigenvector weights lose
// relative accuracy at the outer nodes, which matters for high-degree
// integrands.
QuadratureRule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, double mass,
                            int order) {
  const Eigen::Index n = diag.size();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  jac.diagonal() = diag;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    jac(i, i + 1) = offdiag(i);
    jac(i + 1, i) = offdiag(i);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  QuadratureRule rule;
  rule.order = order;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));

  // p_0 = 1/√mass; b_{j+1} p_{j+1} = (x − a_j) p_j − b_j p_{j−1}, with b_n := 1
  auto recur = [&](double x, double& pn, double& dpn, double& christoffel) {
    double p_prev = 0.0, p = 1.0 / std::sqrt(mass), d_prev = 0.0, d = 0.0;
    christoffel = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      christoffel += p * p;
      const double bj = j > 0 ? offdiag(j - 1) : 0.0;
      const double bnext = j + 1 < n ? offdiag(j) : 1.0;
      const double p_next = ((x - diag(j)) * p - bj * p_prev) / bnext;
      const double d_next = (p + (x - diag(j)) * d - bj * d_prev) / bnext;
      p_prev = p;
      p = p_next;
      d_prev = d;
      d = d_next;
    }
    pn = p;
    dpn = d;
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    double x = es.eigenvalues()(i), pn = 0.0, dpn = 0.0, c = 0.0;
    for (int it = 0; it < 3; ++it) {
      recur(x, pn, dpn, c);
      if (dpn == 0.0 || !std::isfinite(pn / dpn)) break;
      x -= pn / dpn;
    }
    recur(x, pn, dpn, c);
    rule.nodes[static_cast<std::size_t>(i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = 1.0 / c;
  }
  return rule;
}

void check_order(int order) {
  if (order < 1 || order > 200) throw std::invalid_argument("quadrature order must be in [1, 200]");
}

}  // namespace

SpdMatrix::SpdMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw NotPositiveDefinite("SpdMatrix: matrix must be square and non-empty");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw NotPositiveDefinite("SpdMatrix: matrix is not symmetric");
  m_ = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_);
  evals_ = es.eigenvalues();
  evecs_ = es.eigenvectors();
  if (evals_.minCoeff() <= kSpdTolerance) {
    std::ostringstream msg;
    msg << "matrix is not positive definite (minimum eigenvalue " << evals_.minCoeff() << ")";
    throw NotPositiveDefinite(msg.str());
  }
}

SpdMatrix::SpdMatrix(Eigen::MatrixXd m, Eigen::VectorXd evals, Eigen::MatrixXd evecs)
    : m_(std::move(m)), evals_(std::move(evals)), evecs_(std::move(evecs)) {}

SpdMatrix SpdMatrix::sqrt() const {
  Eigen::VectorXd root = evals_.array().sqrt();
  Eigen::MatrixXd s = evecs_ * root.asDiagonal() * evecs_.transpose();
  s = 0.5 * (s + s.transpose());
  return SpdMatrix(std::move(s), std::move(root), evecs_);
}

Eigen::MatrixXd SpdMatrix::inv_sqrt() const {
  Eigen::MatrixXd s = evecs_ * evals_.array().rsqrt().matrix().asDiagonal() * evecs_.transpose();
  return 0.5 * (s + s.transpose());
}

Eigen::MatrixXd SpdMatrix::inverse() const {
  Eigen::MatrixXd s = evecs_ * evals_.array().inverse().matrix().asDiagonal() * evecs_.transpose();
  return 0.5 * (s + s.transpose());
}

SpdMatrix spd_sqrt(const SpdMatrix& m) { return m.sqrt(); }

double min_eigenvalue_sym(const Eigen::MatrixXd& m) {
  if (m.rows() == 1) return m(0, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double operator_norm_sym(const Eigen::MatrixXd& m) {
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double gaussian_density(const SpdMatrix& sigma, const Eigen::VectorXd& x) {
  if (x.size() != sigma.dim()) throw std::invalid_argument("gaussian_density: dimension mismatch");
  const Eigen::VectorXd y = sigma.eigenvectors().transpose() * x;
  const double quad = (y.array().square() / sigma.eigenvalues().array()).sum();
  const double d = static_cast<double>(x.size());
  return std::exp(-0.5 * quad - 0.5 * sigma.log_det() - 0.5 * d * std::log(2.0 * std::numbers::pi));
}

double standard_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

QuadratureRule QuadratureRule::gauss_hermite(int order) {
  check_order(order);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd off(std::max(order - 1, 0));
  for (int i = 0; i + 1 < order; ++i) off(i) = std::sqrt(static_cast<double>(i + 1));
  auto rule = golub_welsch(diag, off, 1.0, order);
  // symmetrize: the eigen solver returns nodes to ~1e-15, exact symmetry makes
  // odd integrands vanish identically
  const std::size_t n = rule.nodes.size();
  for (std::size_t i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[n - 1 - i] + rule.weights[i]);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

QuadratureRule QuadratureRule::gauss_laguerre(int order, double alpha) {
  check_order(order);
  if (alpha <= -1.0) throw std::invalid_argument("gauss_laguerre: alpha must exceed -1");
  Eigen::VectorXd diag(order);
  Eigen::VectorXd off(std::max(order - 1, 0));
  for (int i = 0; i < order; ++i) diag(i) = 2.0 * i + alpha + 1.0;
  for (int i = 1; i < order; ++i) off(i - 1) = std::sqrt(i * (i + alpha));
  return golub_welsch(diag, off, 1.0, order);
}

QuadratureRule QuadratureRule::gauss_legendre(int order) {
  check_order(order);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd off(std::max(order - 1, 0));
  for (int i = 1; i < order; ++i) off(i - 1) = i / std::sqrt(4.0 * i * i - 1.0);
  return golub_welsch(diag, off, 2.0, order);
}

double bivariate_gaussian_expectation(const PairFunction& f, const Eigen::Matrix2d& cov,
                                      const QuadratureRule& rule) {
  const double v1 = cov(0, 0), v2 = cov(1, 1), c = cov(0, 1);
  if (v1 <= kSpdTolerance || v2 <= kSpdTolerance)
    throw NotPositiveDefinite("bivariate_gaussian_expectation: non-positive variance");
  const double rho = c / std::sqrt(v1 * v2);
  if (std::abs(std::abs(rho) - 1.0) <= 1e-10) {
    const double s1 = std::sqrt(v1), s2 = std::copysign(std::sqrt(v2), rho);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * f(s1 * rule.nodes[i], s2 * rule.nodes[i]);
    return acc;
  }
  if (std::abs(rho) > 1.0) throw NotPositiveDefinite("bivariate_gaussian_expectation: |correlation| > 1");
  const double l00 = std::sqrt(v1);
  const double l10 = c / l00;
  const double l11 = std::sqrt(v2 - l10 * l10);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double a = l00 * rule.nodes[i];
    double inner = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j)
      inner += rule.weights[j] * f(a, l10 * rule.nodes[i] + l11 * rule.nodes[j]);
    acc += rule.weights[i] * inner;
  }
  return acc;
}

double gaussian_expectation_split(const std::function<double(double)>& f, double var, int order) {
  if (var < 0.0) throw NotPositiveDefinite("gaussian_expectation_split: negative variance");
  if (var == 0.0) return f(0.0);
  // g = ±sqrt(2 s), s ~ Gamma(1/2): E f(g) = ½ E[f(√(2s)) + f(−√(2s))]
  static thread_local int cached_order = -1;
  static thread_local QuadratureRule rule;
  if (cached_order != order) {
    rule = QuadratureRule::gauss_laguerre(order, -0.5);
    cached_order = order;
  }
  const double sd = std::sqrt(var);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double g = sd * std::sqrt(2.0 * rule.nodes[i]);
    acc += rule.weights[i] * (f(g) + f(-g));
  }
  return 0.5 * acc;
}

double bivariate_gaussian_expectation_polar(const PairFunction& f, const Eigen::Matrix2d& cov, int order) {
  const double v1 = cov(0, 0), v2 = cov(1, 1), c = cov(0, 1);
  if (v1 <= kSpdTolerance || v2 <= kSpdTolerance)
    throw NotPositiveDefinite("bivariate_gaussian_expectation_polar: non-positive variance");
  const double rho = c / std::sqrt(v1 * v2);
  if (std::abs(std::abs(rho) - 1.0) <= 1e-10) {
    const double s2 = std::copysign(std::sqrt(v2 / v1), rho);
    return gaussian_expectation_split([&](double a) { return f(a, s2 * a); }, v1, order);
  }
  if (std::abs(rho) > 1.0) throw NotPositiveDefinite("bivariate_gaussian_expectation_polar: |correlation| > 1");

  const double l00 = std::sqrt(v1);
  const double l10 = c / l00;
  const double l11 = std::sqrt(v2 - l10 * l10);
  const double two_pi = 2.0 * std::numbers::pi;

  // Angles in [0, 2π) where a = l00 cos θ or b = l10 cos θ + l11 sin θ vanish.
  std::vector<double> cuts{0.0, 0.5 * std::numbers::pi, 1.5 * std::numbers::pi, two_pi};
  double tb = std::atan2(-l10, l11);
  if (tb < 0) tb += std::numbers::pi;
  cuts.push_back(tb);
  cuts.push_back(tb + std::numbers::pi);
  std::sort(cuts.begin(), cuts.end());

  static thread_local int cached_order = -1;
  static thread_local QuadratureRule radial, angular;
  if (cached_order != order) {
    radial = QuadratureRule::gauss_laguerre(order, 0.0);
    angular = QuadratureRule::gauss_legendre(order);
    cached_order = order;
  }

  // E f = (1/2π) ∫_0^{2π} ∫_0^∞ f(L r u_θ) e^{−s} ds dθ with r = √(2s).
  double acc = 0.0;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const double lo = cuts[p], hi = cuts[p + 1];
    if (hi - lo < 1e-15) continue;
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (std::size_t i = 0; i < angular.nodes.size(); ++i) {
      const double th = mid + half * angular.nodes[i];
      const double ct = std::cos(th), st = std::sin(th);
      double inner = 0.0;
      for (std::size_t j = 0; j < radial.nodes.size(); ++j) {
        const double r = std::sqrt(2.0 * radial.nodes[j]);
        inner += radial.weights[j] * f(l00 * r * ct, r * (l10 * ct + l11 * st));
      }
      acc += half * angular.weights[i] * inner;
    }
  }
  return acc / two_pi;
}

}  // namespace cgedge
