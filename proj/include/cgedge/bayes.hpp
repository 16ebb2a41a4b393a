#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cgedge/edgeworth.hpp"
#include "cgedge/metrics.hpp"
#include "cgedge/moments.hpp"
#include "cgedge/network.hpp"

namespace cgedge {

struct Dataset {
  Dataset(InputSet inputs, Eigen::VectorXd labels);

  InputSet inputs;
  Eigen::VectorXd labels;
  int size() const { return inputs.size(); }
};

// L(z) = exp(−½|z − Y|²), unit observation noise.
class GaussianLikelihood {
 public:
  explicit GaussianLikelihood(Eigen::VectorXd labels) : y_(std::move(labels)) {}
  double operator()(const Eigen::VectorXd& z) const { return std::exp(-0.5 * (z - y_).squaredNorm()); }
  const Eigen::VectorXd& labels() const { return y_; }

 private:
  Eigen::VectorXd y_;
};

using Likelihood = std::function<double(const Eigen::VectorXd&)>;

inline constexpr double kDegenerateNormalizer = 1e-10;
inline constexpr int kPosteriorQuadratureOrder = 48;

// ∫ L dγ by tensor Gauss–Hermite in whitened coordinates (n·d <= 3).
double likelihood_integral(const EdgeworthModel& model, const Likelihood& lik, int order = kPosteriorQuadratureOrder);

// L·γ / ∫L dγ with the denominator computed once by quadrature.
class EdgeworthPosterior {
 public:
  EdgeworthPosterior(const EdgeworthModel& model, Likelihood lik, int order = kPosteriorQuadratureOrder);
  double normalizer() const { return normalizer_; }
  double density(const Eigen::VectorXd& x) const { return lik_(x) * model_.density(x) / normalizer_; }

 private:
  const EdgeworthModel& model_;
  Likelihood lik_;
  double normalizer_;
};

double posterior_density_edgeworth(const EdgeworthModel& model, const Likelihood& lik, const Eigen::VectorXd& x,
                                   int order = kPosteriorQuadratureOrder);

struct PosteriorClosedForm {
  Eigen::VectorXd mean;                 // μ = (K^{-1}+I)^{-1}Y
  Eigen::MatrixXd precision;            // K^{-1}+I, precision of the Gaussian factor
  std::vector<HermiteTerm> correction;  // all orders, in √K^{-1}z coordinates
  double normalizer = 0.0;              // 𝒯 = ∫L dγ
  double log_prefactor = 0.0;           // log[(2π)^{-d/2}|K|^{-1/2} e^{−½(YᵀY − μᵀΣμ)}]
  Eigen::MatrixXd inv_sqrt_kernel;

  double density(const Eigen::VectorXd& z) const;
};

// 𝒯 in closed form through shifted Hermite product moments with
// R = (I+K)^{-1} − I. With parity_indicator the odd-residual terms are
// dropped explicitly; without it they are summed and vanish on their own.
double normalizing_constant(const SpdMatrix& K, const Dataset& data, const MomentTensor& moments, int m,
                            bool parity_indicator = true, std::optional<int> k_max = std::nullopt);

PosteriorClosedForm posterior_closed_form(const SpdMatrix& K, const Dataset& data, const MomentTensor& moments, int m,
                                          std::optional<int> k_max = std::nullopt);

struct PredictiveBin {
  double lo = 0.0, hi = 0.0, prob = 0.0, std_err = 0.0;
};

struct Predictive {
  std::vector<PredictiveBin> bins;
  double mean = 0.0;  // self-normalized posterior predictive mean
  double mean_stderr = 0.0;
  double ess = 0.0;
  std::uint64_t samples = 0;
};

// Self-normalized importance sampling with the prior as proposal over joint
// forward samples at 𝒳 ∪ {x*} (stream "predictive-mc"). `edges` are bin
// boundaries; ±infinity are allowed at the ends.
Predictive predictive_distribution(const NetworkConfig& cfg, const Dataset& data, const Eigen::VectorXd& x_star,
                                   const std::vector<double>& edges, std::uint64_t samples, std::uint64_t seed,
                                   const Likelihood& lik = {});

enum class MomentSource { Exact, MonteCarlo };

struct PosteriorTvRow {
  int width = 0;
  int m = 0;
  double tv = 0.0;
  double tail_bound = 0.0;
  double mc_noise = 0.0;
  double prior_tv = 0.0;
  double normalizer_true = 0.0;
  double normalizer_edgeworth = 0.0;
  double consistency_bound = 0.0;  // 2·prior TV / true normalizer
  double negative_mass = 0.0;      // grid mass where γ_{|D} < 0
};

struct PosteriorScanOptions {
  GridSpec grid = GridSpec::uniform(1, -8.0, 8.0, 1025);
  MomentSource moment_source = MomentSource::Exact;
  std::uint64_t moment_samples = 200000;
};

std::vector<PosteriorTvRow> posterior_tv_scan(const NetworkConfig& cfg, const Dataset& data, int m,
                                              const std::vector<int>& widths, std::uint64_t samples,
                                              std::uint64_t seed, const PosteriorScanOptions& opts = {});

// Moments of Q for a network: exact for the shallow ReLU example when asked,
// Monte Carlo otherwise.
MomentTensor moments_for(const NetworkConfig& cfg, const InputSet& inputs, const SpdMatrix& kernel, int k_max,
                         MomentSource source, std::uint64_t samples, std::uint64_t seed);

}  // namespace cgedge
