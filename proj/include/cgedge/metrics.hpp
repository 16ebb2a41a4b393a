#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "cgedge/edgeworth.hpp"
#include "cgedge/gausslin.hpp"
#include "cgedge/network.hpp"

namespace cgedge {

// Tensor grid, first axis varying slowest (lexicographic point order).
struct GridSpec {
  std::vector<double> lo, hi;
  std::vector<int> count;

  static GridSpec uniform(int dim, double lo, double hi, int count);

  int dim() const { return static_cast<int>(count.size()); }
  std::size_t size() const;
  double step(int axis) const { return (hi[static_cast<std::size_t>(axis)] - lo[static_cast<std::size_t>(axis)]) / (count[static_cast<std::size_t>(axis)] - 1); }
  double cell_volume() const;
  Eigen::VectorXd point(std::size_t index) const;
  // Radius of the largest centred ball inside the box.
  double inner_radius() const;
  void validate() const;  // throws std::invalid_argument
  bool operator==(const GridSpec&) const = default;
};

struct GridDensity {
  GridSpec grid;
  std::vector<double> values;
  std::vector<double> stderr_values;  // empty for deterministic evaluations
  std::vector<double> half_a, half_b;  // even / odd chunk halves for MC noise
  double tail_mass = 0.0;              // upper bound on mass outside the box
  std::uint64_t samples = 0;
  std::uint64_t skipped = 0;
};

struct DensityEstimate {
  double estimate = 0.0;
  double std_err = 0.0;
};

// Mixture density p(x) = E_A[∏ φ_A(x̃_b)] by Monte Carlo over conditional
// covariance draws (stream "density-mc"). Non-SPD draws are skipped and
// counted; more than 1% skipped is an error.
DensityEstimate true_density(const NetworkConfig& cfg, const InputSet& inputs, const Eigen::VectorXd& x,
                             std::uint64_t samples, std::uint64_t seed);
GridDensity true_density_grid(const NetworkConfig& cfg, const InputSet& inputs, const GridSpec& grid,
                              std::uint64_t samples, std::uint64_t seed);

// Density of the shallow ReLU example output at width n1 from the exact law
// of A: given N ~ Binom(n1, ½) active units, A = (2/n1)·χ²_N. N = 0 (A = 0,
// a point mass) is excluded and the rest renormalized. The N = 1 component
// has a log singularity, so the point value at y = 0 is +inf; the grid form
// uses the cell average there.
double shallow_relu_true_density(int n1, double y, int order = 96);
GridDensity shallow_relu_true_density_grid(int n1, const GridSpec& grid, int order = 96);

GridDensity evaluate_on_grid(const EdgeworthModel& model, const GridSpec& grid);
// Cauchy–Schwarz bound on ∫|γ| outside the grid box.
double edgeworth_tail_bound(const EdgeworthModel& model, const GridSpec& grid);
// P(|N(0, I_p)| > r).
double chi_tail(int p, double r);

struct TvReport {
  double tv = 0.0;
  double tail_bound = 0.0;
  double mc_noise = 0.0;
  double error_budget() const { return tail_bound + 4.0 * mc_noise; }
};

// ½Σ|a−b|·cell volume. Tail bound is half the summed tail masses; MC noise
// comes from the half-sample TVs of whichever argument carries them.
TvReport tv_on_grid(const GridDensity& a, const GridDensity& b);
double tv_plain(const std::vector<double>& a, const std::vector<double>& b, double cell_volume);

struct CosProbe {
  double lhs = 0.0;
  double lhs_stderr = 0.0;
  double rhs_gaussian = 0.0;
  double rhs_edgeworth = 0.0;
};

// E[exp(−A_jj/2)] against its Gaussian and Edgeworth-order counterparts.
CosProbe cos_probe(const NetworkConfig& cfg, const InputSet& inputs, const SpdMatrix& kernel, int j, int m,
                   std::uint64_t samples, std::uint64_t seed);

// Monte-Carlo moments of the deviation A − K used by the TV bounds.
struct DeviationMoments {
  int m = 1;
  std::vector<double> central;       // central[k] = Ê[(A_jj − K_jj)^k], k = 0..4m+1
  std::vector<double> central_abs;   // Ê|A_jj − K_jj|^k
  double op_norm_2m = 0.0;           // Ê‖A − K‖_op^{2m}
  double op_norm_4m = 0.0;           // Ê‖A − K‖_op^{4m}
  double exp_half = 0.0;             // Ê[exp(−A_jj/2)]
  double exp_half_stderr = 0.0;
  std::uint64_t samples = 0;
};

DeviationMoments deviation_moments(const NetworkConfig& cfg, const InputSet& inputs, const SpdMatrix& kernel, int j,
                                   int m, std::uint64_t samples, std::uint64_t seed);

double edgeworth_lower_bound(double central_2m, double abs_central_2m1, double k_jj, int m);
double edgeworth_lower_bound(const DeviationMoments& dm, double k_jj);

// Explicit three-term bound with estimated norm moments; not certified.
double edgeworth_upper_bound(double op_norm_2m, double op_norm_4m, double lambda_min, int d, int n, int m);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

RateFit fit_rate(const std::vector<double>& widths, const std::vector<double>& values);

}  // namespace cgedge
