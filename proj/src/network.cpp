#include "cgedge/network.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <numbers>
#include <sstream>

#include "cgedge/errors.hpp"

namespace cgedge {

Activation::Activation(ActivationKind kind) : kind_(kind) {
  switch (kind) {
    case ActivationKind::ReLU: name_ = "relu"; break;
    case ActivationKind::Tanh: name_ = "tanh"; growth_degree_ = 0.0; break;
    case ActivationKind::Identity: name_ = "identity"; break;
    case ActivationKind::Custom: name_ = "custom"; break;
  }
}

Activation Activation::custom(std::function<double(double)> f, double growth_degree, std::string name) {
  if (!f) throw ConfigError("custom activation requires a function");
  if (!(growth_degree >= 0.0)) throw ConfigError("custom activation requires a non-negative growth degree");
  Activation a(ActivationKind::Custom);
  a.fn_ = std::move(f);
  a.growth_degree_ = growth_degree;
  a.name_ = std::move(name);
  return a;
}

Activation Activation::from_name(const std::string& name) {
  if (name == "relu") return relu();
  if (name == "tanh") return tanh();
  if (name == "identity") return identity();
  throw ConfigError("unknown activation '" + name + "' (expected relu, tanh or identity)");
}

void NetworkConfig::validate() const {
  if (depth < 1) throw ConfigError("network depth must be >= 1");
  if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
  if (static_cast<int>(hidden_widths.size()) != depth)
    throw ConfigError("hidden_widths must list exactly `depth` widths");
  for (int w : hidden_widths)
    if (w < 1) throw ConfigError("hidden widths must be >= 1");
  if (output_copies < 1) throw ConfigError("output_copies must be >= 1");
  if (!(bias_var >= 0.0) || !std::isfinite(bias_var)) throw ConfigError("bias_var must be finite and >= 0");
  if (!(weight_var > 0.0) || !std::isfinite(weight_var)) throw ConfigError("weight_var must be finite and > 0");
}

NetworkConfig NetworkConfig::with_uniform_width(int width) const {
  NetworkConfig c = *this;
  c.hidden_widths.assign(static_cast<std::size_t>(depth), width);
  return c;
}

InputSet::InputSet(std::vector<Eigen::VectorXd> points, int input_dim)
    : points_(std::move(points)), input_dim_(input_dim) {
  if (points_.empty()) throw ConfigError("input set must contain at least one point");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].size() != input_dim_) throw ConfigError("input point has wrong dimension");
    if (!points_[i].allFinite()) throw ConfigError("input point is not finite");
    if (points_[i].isZero(0.0)) throw ConfigError("input points must be non-zero");
    for (std::size_t j = 0; j < i; ++j)
      if (points_[i] == points_[j]) throw ConfigError("input points must be pairwise distinct");
  }
}

Eigen::MatrixXd InputSet::as_columns() const {
  Eigen::MatrixXd x(input_dim_, size());
  for (int i = 0; i < size(); ++i) x.col(i) = points_[static_cast<std::size_t>(i)];
  return x;
}

InputSet InputSet::with_point(const Eigen::VectorXd& extra) const {
  auto pts = points_;
  pts.push_back(extra);
  return InputSet(std::move(pts), input_dim_);
}

namespace {

// One affine layer b 1ᵀ + sqrt(C_W/fan_in) W H. Draws W row-major, then b.
Eigen::MatrixXd affine_layer(const NetworkConfig& cfg, const Eigen::MatrixXd& h, int width, Rng& rng) {
  const auto fan_in = h.rows();
  Eigen::MatrixXd w(width, fan_in);
  for (Eigen::Index i = 0; i < width; ++i)
    for (Eigen::Index j = 0; j < fan_in; ++j) w(i, j) = rng.normal();
  Eigen::MatrixXd z = std::sqrt(cfg.weight_var / static_cast<double>(fan_in)) * (w * h);
  if (cfg.bias_var > 0.0) {
    const double sb = std::sqrt(cfg.bias_var);
    for (Eigen::Index i = 0; i < width; ++i) z.row(i).array() += sb * rng.normal();
  }
  return z;
}

Eigen::MatrixXd apply(const Activation& act, const Eigen::MatrixXd& z) {
  if (act.kind() == ActivationKind::ReLU) return z.cwiseMax(0.0);
  if (act.kind() == ActivationKind::Identity) return z;
  return z.unaryExpr([&](double v) { return act(v); });
}

Eigen::MatrixXd hidden_forward(const NetworkConfig& cfg, const InputSet& inputs, Rng& rng) {
  Eigen::MatrixXd z = affine_layer(cfg, inputs.as_columns(), cfg.hidden_widths[0], rng);
  for (int l = 1; l < cfg.depth; ++l) z = affine_layer(cfg, apply(cfg.activation, z), cfg.hidden_widths[static_cast<std::size_t>(l)], rng);
  return z;
}

void check_inputs(const NetworkConfig& cfg, const InputSet& inputs) {
  cfg.validate();
  if (inputs.input_dim() != cfg.input_dim) throw ConfigError("inputs do not match network input_dim");
}

}  // namespace

ForwardSample forward_sample(const NetworkConfig& cfg, const InputSet& inputs, Rng& rng) {
  check_inputs(cfg, inputs);
  ForwardSample s;
  s.last_hidden = hidden_forward(cfg, inputs, rng);
  const Eigen::MatrixXd out = affine_layer(cfg, apply(cfg.activation, s.last_hidden), cfg.output_copies, rng);
  // rows are output neurons; flatten with the input index fastest
  Eigen::MatrixXd t = out.transpose();
  s.output = Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
  return s;
}

Eigen::MatrixXd conditional_cov_sample(const NetworkConfig& cfg, const InputSet& inputs, Rng& rng) {
  check_inputs(cfg, inputs);
  const Eigen::MatrixXd act = apply(cfg.activation, hidden_forward(cfg, inputs, rng));
  Eigen::MatrixXd a = (cfg.weight_var / static_cast<double>(act.rows())) * (act.transpose() * act);
  a.array() += cfg.bias_var;
  return 0.5 * (a + a.transpose());
}

double relu_arccos_expectation(double var_u, double var_v, double cov_uv) {
  const double s = std::sqrt(var_u * var_v);
  const double c = std::clamp(cov_uv / s, -1.0, 1.0);
  const double theta = std::acos(c);
  return s / (2.0 * std::numbers::pi) * (std::sin(theta) + (std::numbers::pi - theta) * c);
}

LimitKernel limit_kernel(const NetworkConfig& cfg, const InputSet& inputs, const KernelOptions& opts) {
  check_inputs(cfg, inputs);
  const int d = inputs.size();
  const Eigen::MatrixXd x = inputs.as_columns();
  LimitKernel out;
  out.relu_closed_form_gap = cfg.activation.kind() == ActivationKind::ReLU ? 0.0 : std::numeric_limits<double>::quiet_NaN();

  auto make_spd = [&](const Eigen::MatrixXd& k, int layer) {
    try {
      return SpdMatrix(k);
    } catch (const NotPositiveDefinite& e) {
      std::ostringstream msg;
      msg << "limit kernel K^(" << layer << ") is singular: " << e.what();
      throw NotPositiveDefinite(msg.str());
    }
  };

  Eigen::MatrixXd k = (cfg.weight_var / static_cast<double>(cfg.input_dim)) * (x.transpose() * x);
  k.array() += cfg.bias_var;
  out.per_layer.push_back(make_spd(k, 1));

  const QuadratureRule gh = opts.method == KernelQuadrature::GaussHermite ? QuadratureRule::gauss_hermite(opts.order)
                                                                           : QuadratureRule{};
  const auto& act = cfg.activation;
  const PairFunction prod = [&](double a, double b) { return act(a) * act(b); };

  for (int layer = 2; layer <= cfg.depth + 1; ++layer) {
    const Eigen::MatrixXd prev = out.per_layer.back().matrix();
    Eigen::MatrixXd next(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) {
        Eigen::Matrix2d c;
        c << prev(i, i), prev(i, j), prev(i, j), prev(j, j);
        double e = 0.0;
        if (opts.method == KernelQuadrature::GaussHermite) {
          e = bivariate_gaussian_expectation(prod, c, gh);
        } else if (i == j) {
          e = gaussian_expectation_split([&](double a) { const double s = act(a); return s * s; }, prev(i, i), opts.order);
        } else {
          e = bivariate_gaussian_expectation_polar(prod, c, opts.order);
        }
        if (act.kind() == ActivationKind::ReLU) {
          const double closed = relu_arccos_expectation(prev(i, i), prev(j, j), prev(i, j));
          out.relu_closed_form_gap = std::max(out.relu_closed_form_gap, cfg.weight_var * std::abs(e - closed));
        }
        next(i, j) = next(j, i) = cfg.bias_var + cfg.weight_var * e;
      }
    }
    out.per_layer.push_back(make_spd(next, layer));
  }
  return out;
}

}  // namespace cgedge
