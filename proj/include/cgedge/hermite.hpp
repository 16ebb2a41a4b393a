#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cgedge/rational.hpp"

// Probabilists' Hermite polynomials He_j (leading coefficient 1,
// orthogonal under N(0,1) with E[He_j(N)^2] = j!) and expectations of their
// products under correlated or shifted Gaussian laws.
namespace cgedge::hermite {

inline constexpr int kMaxDegree = 24;

struct HermiteCoeffs {
  int degree = 0;
  std::vector<Rational> coeffs;  // coeffs[p] multiplies x^p

  double evaluate(double x) const;  // Horner
  HermiteCoeffs derivative() const;
};

// Three-term recurrence H_{j+1} = x H_j − j H_{j−1}.
double hermite_eval(int j, double x);

// Fills out[0..jmax] with H_0(x)..H_jmax(x).
void hermite_eval_all(int jmax, double x, std::span<double> out);

// Explicit expansion: coefficient of x^{n−2m} is n!(−1)^m / (m!(n−2m)!2^m).
HermiteCoeffs hermite_coeffs(int j);

// E[H_{s_1}(Z_1)···H_{s_d}(Z_d)] for Z ~ N(0, I + R). Zero for odd |s|,
// otherwise the sum over perfect matchings of the expanded index sequence
// of the products of R entries (equal to the 𝒜_s arrangement formula
// s!/(2^{v/2}(v/2)!)·Σ_{α∈𝒜_s} R_{α1α2}···).
double product_moment_centered(std::span<const int> s, const Eigen::MatrixXd& R);

// E[∏ H_{j_i}(w_i + Z_i)] for Z ~ N(0, I + R), via
// H_j(x+w) = Σ_r C(j,r) w^r H_{j−r}(x). `shifted_mean` is the whitened mean
// √K^{-1}μ.
double product_moment_shifted(std::span<const int> J, const Eigen::VectorXd& shifted_mean,
                              const Eigen::MatrixXd& R, bool skip_odd_residual = true);

}  // namespace cgedge::hermite
