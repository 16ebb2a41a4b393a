#include "cgedge/bayes.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cgedge/errors.hpp"
#include "cgedge/hermite.hpp"
#include "cgedge/rng.hpp"

namespace cgedge {

Dataset::Dataset(InputSet in, Eigen::VectorXd y) : inputs(std::move(in)), labels(std::move(y)) {
  if (labels.size() != inputs.size()) throw ConfigError("dataset: label count must equal input count");
  if (!labels.allFinite()) throw ConfigError("dataset: labels must be finite");
}

double likelihood_integral(const EdgeworthModel& model, const Likelihood& lik, int order) {
  const int p = model.dim();
  if (p > 3) throw std::invalid_argument("likelihood_integral: quadrature path supports n·d <= 3");
  const auto rule = QuadratureRule::gauss_hermite(order);
  const Eigen::MatrixXd root = model.kernel().sqrt().matrix();
  const int d = model.block_dim();
  std::vector<int> idx(static_cast<std::size_t>(p), 0);
  Eigen::VectorXd y(p), x(p);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (int i = 0; i < p; ++i) {
      y(i) = rule.nodes[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
      w *= rule.weights[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    }
    for (int b = 0; b < model.block_count(); ++b) x.segment(b * d, d) = root * y.segment(b * d, d);
    total += w * lik(x) * model.bracket(y);
    int i = 0;
    while (i < p && ++idx[static_cast<std::size_t>(i)] == order) idx[static_cast<std::size_t>(i++)] = 0;
    if (i == p) break;
  }
  return total;
}

EdgeworthPosterior::EdgeworthPosterior(const EdgeworthModel& model, Likelihood lik, int order)
    : model_(model), lik_(std::move(lik)), normalizer_(likelihood_integral(model_, lik_, order)) {
  if (std::abs(normalizer_) < kDegenerateNormalizer)
    throw DegenerateNormalizer("posterior: |∫L dγ| below " + std::to_string(kDegenerateNormalizer));
}

double posterior_density_edgeworth(const EdgeworthModel& model, const Likelihood& lik, const Eigen::VectorXd& x,
                                   int order) {
  return EdgeworthPosterior(model, lik, order).density(x);
}

namespace {

struct GaussianFactor {
  Eigen::MatrixXd precision;
  Eigen::VectorXd mean;
  double log_det_k_sigma;
  double exponent;  // −½(YᵀY − μᵀΣμ)
};

GaussianFactor gaussian_factor(const SpdMatrix& K, const Dataset& data) {
  if (K.dim() != data.size()) throw std::invalid_argument("posterior: kernel size must equal dataset size");
  const Eigen::Index d = K.dim();
  GaussianFactor g;
  g.precision = K.inverse() + Eigen::MatrixXd::Identity(d, d);
  g.precision = 0.5 * (g.precision + g.precision.transpose());
  const SpdMatrix sigma(g.precision);
  g.mean = sigma.inverse() * data.labels;
  g.log_det_k_sigma = K.log_det() + sigma.log_det();
  g.exponent = -0.5 * (data.labels.squaredNorm() - g.mean.dot(g.precision * g.mean));
  return g;
}

}  // namespace

double normalizing_constant(const SpdMatrix& K, const Dataset& data, const MomentTensor& moments, int m,
                            bool parity_indicator, std::optional<int> k_max) {
  const auto g = gaussian_factor(K, data);
  const EdgeworthModel model(m, static_cast<int>(K.dim()), 1, K, moments, k_max);
  const Eigen::Index d = K.dim();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd R = SpdMatrix(I + K.matrix()).inverse() - I;
  const Eigen::VectorXd w = model.inv_sqrt_kernel() * g.mean;
  double bracket = 1.0;
  for (const auto& level : model.terms())
    for (const auto& t : level) bracket += t.coeff * hermite::product_moment_shifted(t.J, w, R, parity_indicator);
  return std::exp(-0.5 * g.log_det_k_sigma + g.exponent) * bracket;
}

PosteriorClosedForm posterior_closed_form(const SpdMatrix& K, const Dataset& data, const MomentTensor& moments, int m,
                                          std::optional<int> k_max) {
  const auto g = gaussian_factor(K, data);
  const EdgeworthModel model(m, static_cast<int>(K.dim()), 1, K, moments, k_max);
  PosteriorClosedForm pc;
  pc.mean = g.mean;
  pc.precision = g.precision;
  for (const auto& level : model.terms()) pc.correction.insert(pc.correction.end(), level.begin(), level.end());
  pc.normalizer = normalizing_constant(K, data, moments, m, true, k_max);
  if (std::abs(pc.normalizer) < kDegenerateNormalizer) throw DegenerateNormalizer("posterior: 𝒯 is degenerate");
  pc.log_prefactor = -0.5 * (static_cast<double>(K.dim()) * std::log(2.0 * std::numbers::pi) + K.log_det()) + g.exponent;
  pc.inv_sqrt_kernel = model.inv_sqrt_kernel();
  return pc;
}

double PosteriorClosedForm::density(const Eigen::VectorXd& z) const {
  if (z.size() != mean.size()) throw std::invalid_argument("posterior: point has wrong dimension");
  const Eigen::VectorXd dz = z - mean;
  const Eigen::VectorXd y = inv_sqrt_kernel * z;
  int jmax = 0;
  for (const auto& t : correction)
    for (int j : t.J) jmax = std::max(jmax, j);
  std::vector<std::vector<double>> table(static_cast<std::size_t>(y.size()), std::vector<double>(static_cast<std::size_t>(jmax + 1)));
  for (Eigen::Index i = 0; i < y.size(); ++i) hermite::hermite_eval_all(jmax, y(i), table[static_cast<std::size_t>(i)]);
  double bracket = 1.0;
  for (const auto& t : correction) {
    double p = t.coeff;
    for (std::size_t i = 0; i < t.J.size(); ++i) p *= table[i][static_cast<std::size_t>(t.J[i])];
    bracket += p;
  }
  return std::exp(log_prefactor - 0.5 * dz.dot(precision * dz)) * bracket / normalizer;
}

Predictive predictive_distribution(const NetworkConfig& cfg, const Dataset& data, const Eigen::VectorXd& x_star,
                                   const std::vector<double>& edges, std::uint64_t samples, std::uint64_t seed,
                                   const Likelihood& lik_in) {
  cfg.validate();
  if (cfg.output_copies != 1) throw ConfigError("predictive: only one output neuron is supported");
  if (samples < 10000) throw std::invalid_argument("predictive: at least 10^4 samples required");
  if (edges.size() < 2) throw std::invalid_argument("predictive: at least one bin required");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw std::invalid_argument("predictive: bin edges must increase");
  const InputSet joint = data.inputs.with_point(x_star);
  const int d = data.size();
  const Likelihood lik = lik_in ? lik_in : Likelihood(GaussianLikelihood(data.labels));
  const std::size_t nb = edges.size() - 1;

  struct Part {
    std::vector<double> wb, wb2;  // Σ L·1_B, Σ (L·1_B)²
    double w = 0, w2 = 0, wz = 0, wz2 = 0, wwz = 0;
    std::vector<double> wwb;      // Σ L·(L·1_B)
    std::uint64_t n = 0;
  };
  const std::size_t chunks = (samples + kDefaultChunkSize - 1) / kDefaultChunkSize;
  std::vector<Part> parts(chunks);
  parallel_chunks(chunks, worker_threads(), [&](std::size_t c) {
    auto& p = parts[c];
    p.wb.assign(nb, 0.0);
    p.wb2.assign(nb, 0.0);
    p.wwb.assign(nb, 0.0);
    Rng rng = Rng::substream(seed, streams::kPredictiveMc, c);
    const std::uint64_t begin = c * kDefaultChunkSize;
    const std::uint64_t end = std::min<std::uint64_t>(samples, begin + kDefaultChunkSize);
    for (std::uint64_t s = begin; s < end; ++s) {
      const Eigen::VectorXd out = forward_sample(cfg, joint, rng).output;
      const double L = lik(out.head(d));
      const double z = out(d);
      p.w += L;
      p.w2 += L * L;
      p.wz += L * z;
      p.wz2 += L * L * z * z;
      p.wwz += L * L * z;
      auto it = std::upper_bound(edges.begin(), edges.end(), z);
      if (it != edges.begin() && it != edges.end()) {
        const auto b = static_cast<std::size_t>(it - edges.begin() - 1);
        p.wb[b] += L;
        p.wb2[b] += L * L;
        p.wwb[b] += L * L;
      } else if (z == edges.back() && it == edges.end()) {
        p.wb[nb - 1] += L;
        p.wb2[nb - 1] += L * L;
        p.wwb[nb - 1] += L * L;
      }
      ++p.n;
    }
  });
  Part t;
  t.wb.assign(nb, 0.0);
  t.wb2.assign(nb, 0.0);
  t.wwb.assign(nb, 0.0);
  for (const auto& p : parts) {
    t.w += p.w;
    t.w2 += p.w2;
    t.wz += p.wz;
    t.wz2 += p.wz2;
    t.wwz += p.wwz;
    t.n += p.n;
    for (std::size_t b = 0; b < nb; ++b) {
      t.wb[b] += p.wb[b];
      t.wb2[b] += p.wb2[b];
      t.wwb[b] += p.wwb[b];
    }
  }
  const double n = static_cast<double>(t.n);
  const double mean_w = t.w / n;
  const double se_w = std::sqrt(std::max(0.0, t.w2 / n - mean_w * mean_w) / (n - 1));
  if (!(mean_w > 4.0 * se_w)) throw DegenerateNormalizer("predictive: likelihood mean is within 4 SE of zero");

  Predictive out;
  out.samples = t.n;
  out.ess = t.w * t.w / t.w2;
  // delta-method variance of a ratio r = Σ L f / Σ L: Σ L²(f − r)² / (Σ L)²
  for (std::size_t b = 0; b < nb; ++b) {
    const double r = t.wb[b] / t.w;
    const double v = t.wb2[b] - 2.0 * r * t.wwb[b] + r * r * t.w2;
    out.bins.push_back({edges[b], edges[b + 1], r, std::sqrt(std::max(0.0, v)) / t.w});
  }
  out.mean = t.wz / t.w;
  const double v = t.wz2 - 2.0 * out.mean * t.wwz + out.mean * out.mean * t.w2;
  out.mean_stderr = std::sqrt(std::max(0.0, v)) / t.w;
  return out;
}

MomentTensor moments_for(const NetworkConfig& cfg, const InputSet& inputs, const SpdMatrix& kernel, int k_max,
                         MomentSource source, std::uint64_t samples, std::uint64_t seed) {
  if (source == MomentSource::Exact) {
    if (!is_shallow_relu_example(cfg, inputs))
      throw ConfigError("exact moments are only available for the shallow ReLU example");
    return shallow_relu_tensor(cfg.last_width(), k_max);
  }
  return moment_tensor(cfg, inputs, kernel, k_max, samples, seed);
}

std::vector<PosteriorTvRow> posterior_tv_scan(const NetworkConfig& cfg, const Dataset& data, int m,
                                              const std::vector<int>& widths, std::uint64_t samples,
                                              std::uint64_t seed, const PosteriorScanOptions& opts) {
  if (data.size() != 1 || cfg.output_copies != 1) throw ConfigError("posterior_tv_scan: requires d = 1 and one output");
  const GridSpec& grid = opts.grid;
  if (grid.dim() != 1) throw ConfigError("posterior_tv_scan: grid must be one-dimensional");
  const GaussianLikelihood lik(data.labels);
  std::vector<double> lw(grid.size());
  for (std::size_t i = 0; i < lw.size(); ++i) lw[i] = lik(grid.point(i));
  const double h = grid.cell_volume();

  auto normalize = [&](const std::vector<double>& p, double* z_out) {
    std::vector<double> q(p.size());
    double z = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      q[i] = lw[i] * p[i];
      z += q[i] * h;
    }
    if (std::abs(z) < kDegenerateNormalizer) throw DegenerateNormalizer("posterior_tv_scan: degenerate normalizer");
    for (auto& v : q) v /= z;
    if (z_out) *z_out = z;
    return q;
  };

  std::vector<PosteriorTvRow> rows;
  for (int width : widths) {
    const NetworkConfig c = cfg.with_uniform_width(width);
    const SpdMatrix K = limit_kernel(c, data.inputs).output();
    const MomentTensor mom = moments_for(c, data.inputs, K, 2 * m - 1, opts.moment_source, opts.moment_samples, seed);
    const EdgeworthModel model(m, 1, 1, K, mom);
    const GridDensity truth = true_density_grid(c, data.inputs, grid, samples, seed);
    const GridDensity edg = evaluate_on_grid(model, grid);

    PosteriorTvRow row;
    row.width = width;
    row.m = m;
    const auto post_true = normalize(truth.values, &row.normalizer_true);
    const auto post_edg = normalize(edg.values, &row.normalizer_edgeworth);
    row.tv = tv_plain(post_true, post_edg, h);
    row.tail_bound = 0.5 * (truth.tail_mass / row.normalizer_true + edg.tail_mass / std::abs(row.normalizer_edgeworth));
    if (!truth.half_a.empty()) {
      const double ta = tv_plain(normalize(truth.half_a, nullptr), post_edg, h);
      const double tb = tv_plain(normalize(truth.half_b, nullptr), post_edg, h);
      row.mc_noise = 0.5 * std::abs(ta - tb);
    }
    row.prior_tv = tv_on_grid(truth, edg).tv;
    row.consistency_bound = 2.0 * row.prior_tv / row.normalizer_true;
    for (double v : post_edg)
      if (v < 0.0) row.negative_mass -= v * h;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace cgedge
