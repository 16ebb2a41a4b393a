#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

// Symmetric positive-definite matrix algebra, Gaussian densities and
// Gaussian quadrature.
namespace cgedge {

inline constexpr double kSpdTolerance = 1e-10;

// Symmetric matrix with a cached eigendecomposition. Construction fails with
// NotPositiveDefinite when the minimum eigenvalue is <= kSpdTolerance or the
// input is not symmetric to 1e-12 (relative).
class SpdMatrix {
 public:
  explicit SpdMatrix(const Eigen::MatrixXd& m);

  Eigen::Index dim() const { return m_.rows(); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  const Eigen::VectorXd& eigenvalues() const { return evals_; }
  const Eigen::MatrixXd& eigenvectors() const { return evecs_; }
  double min_eigenvalue() const { return evals_.minCoeff(); }
  double log_det() const { return evals_.array().log().sum(); }

  SpdMatrix sqrt() const;
  Eigen::MatrixXd inv_sqrt() const;
  Eigen::MatrixXd inverse() const;

 private:
  SpdMatrix(Eigen::MatrixXd m, Eigen::VectorXd evals, Eigen::MatrixXd evecs);

  Eigen::MatrixXd m_;
  Eigen::VectorXd evals_;
  Eigen::MatrixXd evecs_;
};

// Symmetric square root; result² reproduces the input.
SpdMatrix spd_sqrt(const SpdMatrix& m);

// Minimum eigenvalue of a symmetric matrix (no SPD requirement).
double min_eigenvalue_sym(const Eigen::MatrixXd& m);
// Spectral norm of a symmetric matrix: max |eigenvalue|.
double operator_norm_sym(const Eigen::MatrixXd& m);

// Centered Gaussian density (2π)^{−d/2} det(Σ)^{−1/2} exp(−½⟨x, Σ^{-1}x⟩).
double gaussian_density(const SpdMatrix& sigma, const Eigen::VectorXd& x);
double standard_normal_pdf(double x);
double standard_normal_cdf(double x);

// Nodes and weights for ∫ f dμ ≈ Σ w_i f(x_i). For Gauss–Hermite, μ is the
// standard normal law and the weights sum to 1; exact for polynomials of
// degree < 2·order.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order = 0;

  static QuadratureRule gauss_hermite(int order);
  // Weight x^alpha e^{−x} on [0, ∞), weights normalized to sum 1.
  static QuadratureRule gauss_laguerre(int order, double alpha = 0.0);
  // Lebesgue measure on [−1, 1]; weights sum to 2.
  static QuadratureRule gauss_legendre(int order);
};

inline constexpr int kDefaultQuadratureOrder = 40;

using PairFunction = std::function<double(double, double)>;

// E[f(a, b)] for (a, b) ~ N(0, cov): tensor Gauss–Hermite after a Cholesky
// transform. Perfectly correlated inputs (|ρ| = 1 within 1e-10) reduce to a
// 1-D rule.
double bivariate_gaussian_expectation(const PairFunction& f, const Eigen::Matrix2d& cov,
                                      const QuadratureRule& rule);

// Same expectation with a polar rule whose angular panels break wherever a
// or b changes sign. Exact (to rounding) for products of positively
// homogeneous piecewise-polynomial functions such as ReLU; spectrally
// accurate for even smooth integrands.
double bivariate_gaussian_expectation_polar(const PairFunction& f, const Eigen::Matrix2d& cov,
                                            int order = kDefaultQuadratureOrder);

// E[f(g)] for g ~ N(0, var) with the rule split at 0 (Gauss–Laguerre on each
// half-line). Same exactness class as the polar rule.
double gaussian_expectation_split(const std::function<double(double)>& f, double var,
                                  int order = kDefaultQuadratureOrder);

}  // namespace cgedge
