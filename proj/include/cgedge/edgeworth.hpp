#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cgedge/gausslin.hpp"
#include "cgedge/moments.hpp"
#include "cgedge/multiindex.hpp"
#include "cgedge/rational.hpp"

namespace cgedge {

// One Hermite-product term of the expansion: coeff · ∏_i H_{J_i}(y_i), with
// 1/(k!2^k) and all moment weights already folded into coeff.
struct HermiteTerm {
  multiindex::MultiIndex J;
  double coeff = 0.0;
};

// Signed Edgeworth density for n i.i.d. blocks of a d-dimensional
// conditionally Gaussian vector with limit covariance K. Orders k = 1..k_max
// enter, where k_max defaults to 2m−1.
class EdgeworthModel {
 public:
  EdgeworthModel(int m, int block_dim, int block_count, SpdMatrix kernel, MomentTensor moments,
                 std::optional<int> k_max = std::nullopt);

  int m() const { return m_; }
  int block_dim() const { return d_; }
  int block_count() const { return n_; }
  int dim() const { return n_ * d_; }
  int k_max() const { return k_max_; }
  const SpdMatrix& kernel() const { return kernel_; }
  const MomentTensor& moments() const { return moments_; }
  const Eigen::MatrixXd& inv_sqrt_kernel() const { return whiten_; }
  // terms()[k−1] holds the order-k terms, J in lexicographic order.
  const std::vector<std::vector<HermiteTerm>>& terms() const { return terms_; }

  Eigen::VectorXd whiten(const Eigen::VectorXd& x) const;
  double gaussian(const Eigen::VectorXd& x) const;
  // 1 + Σ coeff·∏H at whitened coordinates y.
  double bracket(const Eigen::VectorXd& y) const;
  double density(const Eigen::VectorXd& x) const;
  // Same quantity via the nested (J, 𝒜_J) sum; slow, kept as an oracle.
  double literal_density(const Eigen::VectorXd& x) const;

 private:
  int m_, d_, n_, k_max_;
  SpdMatrix kernel_;
  MomentTensor moments_;
  Eigen::MatrixXd whiten_;
  double log_norm_;  // log of ∏ φ_K normalization
  std::vector<std::vector<HermiteTerm>> terms_;
};

// ∫γ over ℝ^{nd} by tensor Gauss–Hermite in whitened coordinates.
double total_mass(const EdgeworthModel& model, int order = 24);

// k-th t-derivative of t ↦ φ_{Γ_t^{⊕n}}(x), Γ_t = tA + (1−t)K, divided by
// nothing (the Taylor coefficient is this over k!).
double density_taylor_term(const SpdMatrix& K, const Eigen::MatrixXd& A, int block_count, int k, double t,
                           const Eigen::VectorXd& x);

// Gaussian density of Γ^{⊕n} at x (x split into n blocks of size dim Γ).
double block_gaussian_density(const SpdMatrix& gamma, int block_count, const Eigen::VectorXd& x);

enum class CurveSpec { Gaussian, Edg1, Intermediate, Edg2 };

CurveSpec curve_from_name(const std::string& name);
std::string curve_name(CurveSpec spec);

struct CurveTerm {
  int degree;
  Rational coeff;
};

// Hermite terms of the four reference shallow-ReLU curves (φ₁ excluded).
std::vector<CurveTerm> shallow_relu_curve_terms(int n1, CurveSpec spec);
double shallow_relu_density(int n1, CurveSpec spec, double y);

}  // namespace cgedge
