#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cgedge/gausslin.hpp"
#include "cgedge/rng.hpp"

// Fully connected network at Gaussian initialization:
//   z^(1)_i(x) = b_i + Σ_j sqrt(C_W/n_0) W_ij x_j
//   z^(l)_i(x) = b_i + Σ_j sqrt(C_W/n_{l-1}) W_ij σ(z^(l-1)_j(x)),  l = 2..L+1
// with b ~ N(0, C_b) and W ~ N(0, 1), all independent.
namespace cgedge {

enum class ActivationKind { ReLU, Tanh, Identity, Custom };

class Activation {
 public:
  static Activation relu() { return Activation(ActivationKind::ReLU); }
  static Activation tanh() { return Activation(ActivationKind::Tanh); }
  static Activation identity() { return Activation(ActivationKind::Identity); }
  // The caller declares |σ(x)| <= C(1+|x|)^growth_degree; smoothness
  // conditions are not checked.
  static Activation custom(std::function<double(double)> f, double growth_degree, std::string name = "custom");
  static Activation from_name(const std::string& name);

  ActivationKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double growth_degree() const { return growth_degree_; }

  double operator()(double x) const {
    switch (kind_) {
      case ActivationKind::ReLU: return x > 0.0 ? x : 0.0;
      case ActivationKind::Tanh: return std::tanh(x);
      case ActivationKind::Identity: return x;
      case ActivationKind::Custom: return fn_(x);
    }
    return 0.0;
  }

 private:
  explicit Activation(ActivationKind kind);

  ActivationKind kind_;
  std::string name_;
  double growth_degree_ = 1.0;
  std::function<double(double)> fn_;
};

struct NetworkConfig {
  int depth = 1;                   // L, number of hidden layers
  int input_dim = 1;               // n_0
  std::vector<int> hidden_widths;  // n_1..n_L
  int output_copies = 1;           // n_{L+1}
  double bias_var = 0.0;           // C_b
  double weight_var = 1.0;         // C_W
  Activation activation = Activation::relu();

  void validate() const;  // throws ConfigError
  int last_width() const { return hidden_widths.back(); }
  // Same architecture with every hidden layer of the given width.
  NetworkConfig with_uniform_width(int width) const;
};

// Distinct, non-zero inputs x^(1)..x^(d), each of length n_0.
class InputSet {
 public:
  InputSet(std::vector<Eigen::VectorXd> points, int input_dim);

  int size() const { return static_cast<int>(points_.size()); }
  int input_dim() const { return input_dim_; }
  const Eigen::VectorXd& operator[](int i) const { return points_[static_cast<std::size_t>(i)]; }
  // n_0 × d, one column per input
  Eigen::MatrixXd as_columns() const;
  InputSet with_point(const Eigen::VectorXd& extra) const;

 private:
  std::vector<Eigen::VectorXd> points_;
  int input_dim_;
};

struct ForwardSample {
  // length n_{L+1}·d, input index fastest within each output neuron
  Eigen::VectorXd output;
  // pre-activations of the last hidden layer, n_L × d
  Eigen::MatrixXd last_hidden;
};

ForwardSample forward_sample(const NetworkConfig& cfg, const InputSet& inputs, Rng& rng);

// A_{ij} = C_b + (C_W/n_L) Σ_k σ(z_k(x^(i))) σ(z_k(x^(j))) for one draw of
// the hidden layers. Consumes the stream exactly like forward_sample does
// for layers 1..L.
Eigen::MatrixXd conditional_cov_sample(const NetworkConfig& cfg, const InputSet& inputs, Rng& rng);

enum class KernelQuadrature { Polar, GaussHermite };

struct KernelOptions {
  int order = kDefaultQuadratureOrder;
  KernelQuadrature method = KernelQuadrature::Polar;
};

struct LimitKernel {
  std::vector<SpdMatrix> per_layer;  // K^(1)..K^(L+1)
  // For ReLU: max |quadrature − arc-cosine closed form| over all layers
  // and entries; NaN for other activations.
  double relu_closed_form_gap = 0.0;

  const SpdMatrix& output() const { return per_layer.back(); }
};

// Deterministic infinite-width covariance recursion. Throws
// NotPositiveDefinite if any layer's matrix is singular.
LimitKernel limit_kernel(const NetworkConfig& cfg, const InputSet& inputs, const KernelOptions& opts = {});

// E[ReLU(u) ReLU(v)] for (u,v) centered Gaussian with the given moments.
double relu_arccos_expectation(double var_u, double var_v, double cov_uv);

}  // namespace cgedge
