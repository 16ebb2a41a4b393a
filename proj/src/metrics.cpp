#include "cgedge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "cgedge/errors.hpp"
#include "cgedge/rng.hpp"

namespace cgedge {

GridSpec GridSpec::uniform(int dim, double lo, double hi, int count) {
  GridSpec g;
  g.lo.assign(static_cast<std::size_t>(dim), lo);
  g.hi.assign(static_cast<std::size_t>(dim), hi);
  g.count.assign(static_cast<std::size_t>(dim), count);
  g.validate();
  return g;
}

std::size_t GridSpec::size() const {
  std::size_t s = 1;
  for (int c : count) s *= static_cast<std::size_t>(c);
  return s;
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (int i = 0; i < dim(); ++i) v *= step(i);
  return v;
}

Eigen::VectorXd GridSpec::point(std::size_t index) const {
  Eigen::VectorXd x(dim());
  for (int i = dim() - 1; i >= 0; --i) {
    const auto c = static_cast<std::size_t>(count[static_cast<std::size_t>(i)]);
    x(i) = lo[static_cast<std::size_t>(i)] + static_cast<double>(index % c) * step(i);
    index /= c;
  }
  return x;
}

double GridSpec::inner_radius() const {
  double r = std::numeric_limits<double>::infinity();
  for (int i = 0; i < dim(); ++i)
    r = std::min({r, -lo[static_cast<std::size_t>(i)], hi[static_cast<std::size_t>(i)]});
  return std::max(r, 0.0);
}

void GridSpec::validate() const {
  if (count.empty() || count.size() > 3) throw std::invalid_argument("GridSpec: dimension must be 1, 2 or 3");
  if (lo.size() != count.size() || hi.size() != count.size()) throw std::invalid_argument("GridSpec: ragged bounds");
  for (std::size_t i = 0; i < count.size(); ++i) {
    if (count[i] < 33) throw std::invalid_argument("GridSpec: at least 33 points per axis");
    if (!(hi[i] > lo[i])) throw std::invalid_argument("GridSpec: empty axis");
  }
}

double chi_tail(int p, double r) {
  if (r <= 0.0) return 1.0;
  const double g = std::erfc(r / std::numbers::sqrt2);  // P(|N(0,1)| > r)
  switch (p) {
    case 1: return g;
    case 2: return std::exp(-0.5 * r * r);
    case 3: return g + std::sqrt(2.0 / std::numbers::pi) * r * std::exp(-0.5 * r * r);
    default: break;
  }
  // Q(p/2, r²/2) by the series of the lower incomplete gamma
  const double a = 0.5 * p, x = 0.5 * r * r;
  double term = 1.0 / a, sum = term;
  for (int k = 1; k < 500 && term > sum * 1e-17; ++k) {
    term *= x / (a + k);
    sum += term;
  }
  return std::max(0.0, 1.0 - std::exp(-x + a * std::log(x) - std::lgamma(a)) * sum);
}

namespace {

struct DensityAccumulator {
  std::vector<double> sum, sum_sq;
  double tail = 0.0;
  std::uint64_t n = 0, skipped = 0;
};

// Adds ∏_b φ_A(x̃_b) for all grid points; returns false when A is not SPD.
bool add_mixture_draw(const Eigen::MatrixXd& a, int blocks, const GridSpec& grid,
                      const std::vector<Eigen::VectorXd>& points, DensityAccumulator& acc) {
  const Eigen::Index d = a.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.eigenvalues().minCoeff() <= kSpdTolerance) {
    ++acc.skipped;
    return false;
  }
  const Eigen::MatrixXd w = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                            es.eigenvectors().transpose();
  const double log_norm =
      -0.5 * blocks * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + es.eigenvalues().array().log().sum());
  for (std::size_t i = 0; i < points.size(); ++i) {
    double q = 0.0;
    for (int b = 0; b < blocks; ++b) q += (w * points[i].segment(b * d, d)).squaredNorm();
    const double v = std::exp(log_norm - 0.5 * q);
    acc.sum[i] += v;
    acc.sum_sq[i] += v * v;
  }
  acc.tail += chi_tail(grid.dim(), grid.inner_radius() / std::sqrt(es.eigenvalues().maxCoeff()));
  ++acc.n;
  return true;
}

}  // namespace

GridDensity true_density_grid(const NetworkConfig& cfg, const InputSet& inputs, const GridSpec& grid,
                              std::uint64_t samples, std::uint64_t seed) {
  grid.validate();
  cfg.validate();
  const int d = inputs.size();
  const int blocks = cfg.output_copies;
  if (grid.dim() != d * blocks) throw std::invalid_argument("true_density: grid dimension must equal n·d");
  if (samples < 1000) throw std::invalid_argument("true_density: at least 1000 samples required");

  std::vector<Eigen::VectorXd> points(grid.size());
  for (std::size_t i = 0; i < points.size(); ++i) points[i] = grid.point(i);

  const std::size_t chunks = (samples + kDefaultChunkSize - 1) / kDefaultChunkSize;
  std::vector<DensityAccumulator> parts(chunks);
  parallel_chunks(chunks, worker_threads(), [&](std::size_t c) {
    auto& acc = parts[c];
    acc.sum.assign(points.size(), 0.0);
    acc.sum_sq.assign(points.size(), 0.0);
    Rng rng = Rng::substream(seed, streams::kDensityMc, c);
    const std::uint64_t begin = c * kDefaultChunkSize;
    const std::uint64_t end = std::min<std::uint64_t>(samples, begin + kDefaultChunkSize);
    for (std::uint64_t s = begin; s < end; ++s)
      add_mixture_draw(conditional_cov_sample(cfg, inputs, rng), blocks, grid, points, acc);
  });

  GridDensity out;
  out.grid = grid;
  std::vector<double> sum(points.size(), 0.0), sum_sq(points.size(), 0.0), half[2];
  half[0].assign(points.size(), 0.0);
  half[1].assign(points.size(), 0.0);
  std::uint64_t half_n[2] = {0, 0};
  double tail = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    const auto& p = parts[c];
    for (std::size_t i = 0; i < points.size(); ++i) {
      sum[i] += p.sum[i];
      sum_sq[i] += p.sum_sq[i];
      half[c % 2][i] += p.sum[i];
    }
    half_n[c % 2] += p.n;
    tail += p.tail;
    out.samples += p.n;
    out.skipped += p.skipped;
  }
  if (static_cast<double>(out.skipped) > 0.01 * static_cast<double>(samples))
    throw NotPositiveDefinite("true_density: " + std::to_string(out.skipped) + " of " + std::to_string(samples) +
                              " conditional covariance draws were not positive definite");
  const double n = static_cast<double>(out.samples);
  out.values.resize(points.size());
  out.stderr_values.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double mean = sum[i] / n;
    out.values[i] = mean;
    out.stderr_values[i] = n > 1 ? std::sqrt(std::max(0.0, sum_sq[i] / n - mean * mean) / (n - 1)) : 0.0;
  }
  if (half_n[0] > 0 && half_n[1] > 0) {
    out.half_a.resize(points.size());
    out.half_b.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      out.half_a[i] = half[0][i] / static_cast<double>(half_n[0]);
      out.half_b[i] = half[1][i] / static_cast<double>(half_n[1]);
    }
  }
  out.tail_mass = tail / n;
  return out;
}

DensityEstimate true_density(const NetworkConfig& cfg, const InputSet& inputs, const Eigen::VectorXd& x,
                             std::uint64_t samples, std::uint64_t seed) {
  const int p = inputs.size() * cfg.output_copies;
  if (x.size() != p) throw std::invalid_argument("true_density: point must have n·d entries");
  // a one-point grid: reuse the accumulator path without grid validation
  const std::vector<Eigen::VectorXd> points{x};
  GridSpec dummy = GridSpec::uniform(p, -1.0, 1.0, 33);
  const std::size_t chunks = (samples + kDefaultChunkSize - 1) / kDefaultChunkSize;
  if (samples < 1000) throw std::invalid_argument("true_density: at least 1000 samples required");
  std::vector<DensityAccumulator> parts(chunks);
  parallel_chunks(chunks, worker_threads(), [&](std::size_t c) {
    auto& acc = parts[c];
    acc.sum.assign(1, 0.0);
    acc.sum_sq.assign(1, 0.0);
    Rng rng = Rng::substream(seed, streams::kDensityMc, c);
    const std::uint64_t begin = c * kDefaultChunkSize;
    const std::uint64_t end = std::min<std::uint64_t>(samples, begin + kDefaultChunkSize);
    for (std::uint64_t s = begin; s < end; ++s)
      add_mixture_draw(conditional_cov_sample(cfg, inputs, rng), cfg.output_copies, dummy, points, acc);
  });
  double sum = 0.0, sum_sq = 0.0;
  std::uint64_t n = 0, skipped = 0;
  for (const auto& p : parts) {
    sum += p.sum[0];
    sum_sq += p.sum_sq[0];
    n += p.n;
    skipped += p.skipped;
  }
  if (static_cast<double>(skipped) > 0.01 * static_cast<double>(samples))
    throw NotPositiveDefinite("true_density: too many non-positive-definite draws");
  const double dn = static_cast<double>(n);
  const double mean = sum / dn;
  return {mean, std::sqrt(std::max(0.0, sum_sq / dn - mean * mean) / (dn - 1))};
}

namespace {

// Components with N <= kClosedFormMax use the variance-gamma closed form
// p(y|N) = α^N |y|^ν K_ν(α|y|) / (√π Γ(N/2) (2α)^ν), α = √(n/2), ν = (N−1)/2.
// Larger N go through Gauss–Laguerre, where the mixing law is smooth at 0.
constexpr int kClosedFormMax = 40;

struct ShallowLaw {
  std::vector<double> weight;  // P(N = k | N ≥ 1), k = 0..n1
  std::vector<QuadratureRule> rules;
};

const ShallowLaw& shallow_law(int n1, int order) {
  thread_local std::map<std::pair<int, int>, ShallowLaw> cache;
  auto [it, fresh] = cache.try_emplace({n1, order});
  if (!fresh) return it->second;
  ShallowLaw& law = it->second;
  law.weight.assign(static_cast<std::size_t>(n1 + 1), 0.0);
  const double log_norm = -n1 * std::log(2.0) - std::log1p(-std::exp2(-n1));
  for (int k = 1; k <= n1; ++k)
    law.weight[static_cast<std::size_t>(k)] =
        std::exp(std::lgamma(n1 + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n1 - k + 1.0) + log_norm);
  law.rules.resize(static_cast<std::size_t>(n1 + 1));
  // E_{t~Γ(k/2)}[t^{-1/2} h(t)] = Γ((k−1)/2)/Γ(k/2) · E_{t~Γ((k−1)/2)}[h(t)]
  for (int k = kClosedFormMax + 1; k <= n1; ++k) law.rules[static_cast<std::size_t>(k)] = QuadratureRule::gauss_laguerre(order, 0.5 * (k - 1) - 1.0);
  return law;
}

}  // namespace

namespace {

double variance_gamma_component(int N, double alpha, double y) {
  const double nu = 0.5 * (N - 1);
  const double z = alpha * std::abs(y);
  const double log_front = N * std::log(alpha) - 0.5 * std::log(std::numbers::pi) - std::lgamma(0.5 * N) -
                           nu * std::log(2.0 * alpha);
  if (N == 1) return z > 0.0 ? std::exp(log_front) * std::cyl_bessel_k(0.0, z) : INFINITY;
  // |y|^ν K_ν(α|y|) → Γ(ν) 2^{ν−1} α^{−ν} as y → 0
  if (z < 1e-10) return std::exp(log_front + std::lgamma(nu) + (nu - 1.0) * std::log(2.0) - nu * std::log(alpha));
  return std::exp(log_front + nu * std::log(std::abs(y)) + std::log(std::cyl_bessel_k(nu, z)));
}

double laguerre_component(const ShallowLaw& law, int N, double n, double c) {
  const auto& rule = law.rules[static_cast<std::size_t>(N)];
  double e = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) e += rule.weights[i] * std::exp(-c / rule.nodes[i]);
  const double ratio = std::exp(std::lgamma(0.5 * (N - 1)) - std::lgamma(0.5 * N));
  return ratio * e / std::sqrt(8.0 * std::numbers::pi / n);
}

// Density without the N = 1 component, which carries the log singularity.
double shallow_regular_part(const ShallowLaw& law, int n1, double y) {
  const double n = n1;
  const double alpha = std::sqrt(n / 2.0);
  // A = 4t/n with t ~ Γ(N/2, 1); φ_A(y) = (8πt/n)^{-1/2} exp(−y²n/(8t))
  const double c = y * y * n / 8.0;
  double total = 0.0;
  for (int k = 2; k <= n1; ++k) {
    const double w = law.weight[static_cast<std::size_t>(k)];
    if (w < 1e-300) continue;
    total += w * (k <= kClosedFormMax ? variance_gamma_component(k, alpha, y) : laguerre_component(law, k, n, c));
  }
  return total;
}

// (1/h)∫_{−h/2}^{h/2} of the N = 1 component, by u = a·v⁴ to tame the log.
double single_unit_cell_average(double alpha, double h) {
  const double a = 0.5 * alpha * h;
  const auto rule = QuadratureRule::gauss_legendre(48);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = 0.5 * (rule.nodes[i] + 1.0);
    s += 0.5 * rule.weights[i] * 4.0 * a * v * v * v * std::cyl_bessel_k(0.0, a * v * v * v * v);
  }
  return s / std::numbers::pi / (0.5 * h);
}

}  // namespace

double shallow_relu_true_density(int n1, double y, int order) {
  if (n1 < 1) throw std::invalid_argument("shallow_relu_true_density: width must be >= 1");
  const ShallowLaw& law = shallow_law(n1, order);
  const double alpha = std::sqrt(n1 / 2.0);
  // infinite at y = 0 through the N = 1 term
  return law.weight[1] * variance_gamma_component(1, alpha, y) + shallow_regular_part(law, n1, y);
}

GridDensity shallow_relu_true_density_grid(int n1, const GridSpec& grid, int order) {
  grid.validate();
  if (grid.dim() != 1) throw std::invalid_argument("shallow_relu_true_density_grid: grid must be 1-D");
  if (n1 < 1) throw std::invalid_argument("shallow_relu_true_density_grid: width must be >= 1");
  const ShallowLaw& law = shallow_law(n1, order);
  const double alpha = std::sqrt(n1 / 2.0);
  const double h = grid.step(0);
  GridDensity out;
  out.grid = grid;
  out.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double y = grid.point(i)(0);
    // the cell holding the singularity gets its cell average
    const double single = std::abs(y) < 0.5 * h ? single_unit_cell_average(alpha, h)
                                                : variance_gamma_component(1, alpha, y);
    out.values[i] = law.weight[1] * single + shallow_regular_part(law, n1, y);
  }
  // grid mass deficit stands in for the tail
  double mass = 0.0;
  for (double v : out.values) mass += v;
  out.tail_mass = std::max(0.0, 1.0 - mass * grid.cell_volume());
  return out;
}

GridDensity evaluate_on_grid(const EdgeworthModel& model, const GridSpec& grid) {
  grid.validate();
  if (grid.dim() != model.dim()) throw std::invalid_argument("evaluate_on_grid: grid dimension mismatch");
  GridDensity out;
  out.grid = grid;
  out.values.resize(grid.size());
  const std::size_t chunks = (grid.size() + kDefaultChunkSize - 1) / kDefaultChunkSize;
  parallel_chunks(chunks, worker_threads(), [&](std::size_t c) {
    const std::size_t end = std::min(grid.size(), (c + 1) * kDefaultChunkSize);
    for (std::size_t i = c * kDefaultChunkSize; i < end; ++i) out.values[i] = model.density(grid.point(i));
  });
  out.tail_mass = edgeworth_tail_bound(model, grid);
  return out;
}

double edgeworth_tail_bound(const EdgeworthModel& model, const GridSpec& grid) {
  // Outside the box ⇒ |x_b| > r for some block ⇒ |y| > r/√λmax(K).
  const double rho = grid.inner_radius() / std::sqrt(model.kernel().eigenvalues().maxCoeff());
  const double p_out = chi_tail(model.dim(), rho);
  // ∫_{|y|>ρ} |c·H_J|φ ≤ |c|·√(P(|y|>ρ))·√(∏ J_i!)
  double poly = 0.0;
  for (const auto& level : model.terms())
    for (const auto& t : level) {
      double norm2 = 1.0;
      for (int j : t.J) norm2 *= static_cast<double>(multiindex::factorial(j));
      poly += std::abs(t.coeff) * std::sqrt(norm2);
    }
  return p_out + std::sqrt(p_out) * poly;
}

double tv_plain(const std::vector<double>& a, const std::vector<double>& b, double cell_volume) {
  if (a.size() != b.size()) throw std::invalid_argument("tv_on_grid: grid mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s * cell_volume;
}

TvReport tv_on_grid(const GridDensity& a, const GridDensity& b) {
  if (!(a.grid == b.grid) || a.values.size() != b.values.size()) throw std::invalid_argument("tv_on_grid: grid mismatch");
  const double h = a.grid.cell_volume();
  TvReport r;
  r.tv = tv_plain(a.values, b.values, h);
  r.tail_bound = 0.5 * (a.tail_mass + b.tail_mass);
  auto noise_of = [&](const GridDensity& noisy, const GridDensity& other) {
    if (noisy.half_a.empty()) return 0.0;
    return 0.5 * std::abs(tv_plain(noisy.half_a, other.values, h) - tv_plain(noisy.half_b, other.values, h));
  };
  r.mc_noise = std::hypot(noise_of(a, b), noise_of(b, a));
  return r;
}

CosProbe cos_probe(const NetworkConfig& cfg, const InputSet& inputs, const SpdMatrix& kernel, int j, int m,
                   std::uint64_t samples, std::uint64_t seed) {
  if (j < 1 || j > inputs.size()) throw std::invalid_argument("cos_probe: coordinate out of range");
  if (m < 1) throw std::invalid_argument("cos_probe: m must be >= 1");
  const DeviationMoments dm = deviation_moments(cfg, inputs, kernel, j, m, samples, seed);
  const double kjj = kernel(j - 1, j - 1);
  CosProbe out;
  out.lhs = dm.exp_half;
  out.lhs_stderr = dm.exp_half_stderr;
  out.rhs_gaussian = std::exp(-0.5 * kjj);
  double series = 1.0;
  for (int k = 2; k <= 2 * m - 1; ++k)
    series += ((k % 2 == 0) ? 1.0 : -1.0) / (std::ldexp(1.0, k) * static_cast<double>(multiindex::factorial(k))) *
              dm.central[static_cast<std::size_t>(k)];
  out.rhs_edgeworth = out.rhs_gaussian * series;
  return out;
}

DeviationMoments deviation_moments(const NetworkConfig& cfg, const InputSet& inputs, const SpdMatrix& kernel, int j,
                                   int m, std::uint64_t samples, std::uint64_t seed) {
  if (j < 1 || j > inputs.size()) throw std::invalid_argument("deviation_moments: coordinate out of range");
  if (samples < 1000) throw std::invalid_argument("deviation_moments: at least 1000 samples required");
  const int kmax = 4 * m + 1;
  const std::size_t width = static_cast<std::size_t>(kmax + 1);
  struct Part {
    std::vector<double> pow, abs_pow;
    double op2m = 0.0, op4m = 0.0, exp_sum = 0.0, exp_sq = 0.0;
    std::uint64_t n = 0;
  };
  const std::size_t chunks = (samples + kDefaultChunkSize - 1) / kDefaultChunkSize;
  std::vector<Part> parts(chunks);
  const auto jj = static_cast<Eigen::Index>(j - 1);
  parallel_chunks(chunks, worker_threads(), [&](std::size_t c) {
    auto& p = parts[c];
    p.pow.assign(width, 0.0);
    p.abs_pow.assign(width, 0.0);
    Rng rng = Rng::substream(seed, streams::kMomentMc, c);
    const std::uint64_t begin = c * kDefaultChunkSize;
    const std::uint64_t end = std::min<std::uint64_t>(samples, begin + kDefaultChunkSize);
    for (std::uint64_t s = begin; s < end; ++s) {
      const Eigen::MatrixXd a = conditional_cov_sample(cfg, inputs, rng);
      const double dev = a(jj, jj) - kernel(jj, jj);
      double pw = 1.0;
      for (int k = 0; k <= kmax; ++k) {
        p.pow[static_cast<std::size_t>(k)] += pw;
        p.abs_pow[static_cast<std::size_t>(k)] += std::abs(pw);
        pw *= dev;
      }
      const double e = std::exp(-0.5 * a(jj, jj));
      p.exp_sum += e;
      p.exp_sq += e * e;
      const double op = operator_norm_sym(a - kernel.matrix());
      p.op2m += std::pow(op, 2 * m);
      p.op4m += std::pow(op, 4 * m);
      ++p.n;
    }
  });
  DeviationMoments dm;
  dm.m = m;
  dm.central.assign(width, 0.0);
  dm.central_abs.assign(width, 0.0);
  double exp_sum = 0.0, exp_sq = 0.0;
  for (const auto& p : parts) {
    exp_sum += p.exp_sum;
    for (std::size_t k = 0; k < width; ++k) {
      dm.central[k] += p.pow[k];
      dm.central_abs[k] += p.abs_pow[k];
    }
    dm.op_norm_2m += p.op2m;
    dm.op_norm_4m += p.op4m;
    exp_sq += p.exp_sq;
    dm.samples += p.n;
  }
  const double n = static_cast<double>(dm.samples);
  for (std::size_t k = 0; k < width; ++k) {
    dm.central[k] /= n;
    dm.central_abs[k] /= n;
  }
  dm.op_norm_2m /= n;
  dm.op_norm_4m /= n;
  dm.exp_half = exp_sum / n;
  dm.exp_half_stderr = std::sqrt(std::max(0.0, exp_sq / n - dm.exp_half * dm.exp_half) / (n - 1));
  return dm;
}

double edgeworth_lower_bound(double central_2m, double abs_central_2m1, double k_jj, int m) {
  if (m < 1) throw std::invalid_argument("edgeworth_lower_bound: m must be >= 1");
  const double f = static_cast<double>(multiindex::factorial(2 * m));
  return central_2m * std::exp(-0.5 * k_jj) / (std::ldexp(1.0, 2 * m) * f) -
         abs_central_2m1 / (std::ldexp(1.0, 2 * m + 1) * f);
}

double edgeworth_lower_bound(const DeviationMoments& dm, double k_jj) {
  return edgeworth_lower_bound(dm.central[static_cast<std::size_t>(2 * dm.m)],
                               dm.central_abs[static_cast<std::size_t>(2 * dm.m + 1)], k_jj, dm.m);
}

double edgeworth_upper_bound(double op_norm_2m, double op_norm_4m, double lambda_min, int d, int n, int m) {
  if (!(lambda_min > 0.0)) throw std::invalid_argument("edgeworth_upper_bound: λmin must be positive");
  if (m < 1 || d < 1 || n < 1) throw std::invalid_argument("edgeworth_upper_bound: invalid sizes");
  const int p = n * d;
  const double lam = std::pow(lambda_min, 2 * m);
  const double four_m_fact = std::tgamma(4.0 * m + 1.0);
  const double t1 = four_m_fact / (2.0 * std::tgamma(2.0 * m) * lam) *
                    static_cast<double>(multiindex::binomial(4 * m + p - 1, p - 1)) * op_norm_2m;
  double t2 = 0.0;
  for (int k = 1; k <= 2 * m - 1; ++k)
    t2 += static_cast<double>(multiindex::binomial(2 * k + p - 1, p - 1)) * std::tgamma(2.0 * k + 1.0) *
          std::ldexp(1.0, 2 * m - 2 * k - 1) / (static_cast<double>(multiindex::factorial(k)) * lam);
  t2 *= std::sqrt(op_norm_4m);
  const double t3 = std::ldexp(1.0, 2 * m) / lam * op_norm_2m;
  return t1 + t2 + t3;
}

RateFit fit_rate(const std::vector<double>& widths, const std::vector<double>& values) {
  if (widths.size() != values.size()) throw std::invalid_argument("fit_rate: size mismatch");
  if (widths.size() < 3) throw std::invalid_argument("fit_rate: at least 3 points required");
  const std::size_t n = widths.size();
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(widths[i] > 0.0) || !(values[i] > 0.0)) throw std::invalid_argument("fit_rate: values must be positive");
    X(static_cast<Eigen::Index>(i), 0) = std::log(widths[i]);
    X(static_cast<Eigen::Index>(i), 1) = 1.0;
    y(static_cast<Eigen::Index>(i)) = std::log(values[i]);
  }
  const Eigen::Vector2d beta = X.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd resid = y - X * beta;
  const double ss_tot = (y.array() - y.mean()).square().sum();
  RateFit f;
  f.slope = beta(0);
  f.intercept = beta(1);
  f.r2 = ss_tot > 0.0 ? 1.0 - resid.squaredNorm() / ss_tot : 1.0;
  return f;
}

}  // namespace cgedge
