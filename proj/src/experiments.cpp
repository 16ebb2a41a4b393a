#include "cgedge/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "cgedge/edgeworth.hpp"
#include "cgedge/errors.hpp"
#include "cgedge/rng.hpp"
#include "cgedge/version.hpp"

namespace cgedge {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

GridSpec default_grid(const RunConfig& rc) {
  if (rc.grid) return *rc.grid;
  const int p = rc.network.output_copies * static_cast<int>(rc.inputs.size());
  if (p > 3) throw ConfigError("grid path needs n·d <= 3");
  const int count = p == 1 ? 1025 : (p == 2 ? 129 : 41);
  return GridSpec::uniform(p, -8.0, 8.0, count);
}

const std::vector<int>& require_widths(const RunConfig& rc) {
  if (rc.experiment.widths.size() < 3) throw ConfigError("experiment.widths must list at least 3 widths");
  return rc.experiment.widths;
}

Dataset configured_dataset(const RunConfig& rc) {
  const auto& y = rc.experiment.labels;
  if (y.size() != rc.inputs.size()) throw ConfigError("experiment.labels must have one label per input");
  return Dataset(rc.input_set(), Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())));
}

}  // namespace

std::string csv_header_comment(const RunConfig& rc, const std::string& command) {
  return "# cgedge " + std::string(kVersion) + " command=" + command + " config=" + rc.hash() +
         " seed=" + std::to_string(rc.seed) + "\n";
}

MomentTensor configured_moments(const RunConfig& rc, const NetworkConfig& net, const SpdMatrix& kernel, int k_max) {
  const InputSet inputs = rc.input_set();
  const bool shallow = is_shallow_relu_example(net, inputs);
  MomentSource src = rc.resolved_moment_source();
  if (src == MomentSource::Exact && k_max > 4) src = MomentSource::MonteCarlo;  // exact table stops at k = 4
  if (src == MomentSource::Exact) {
    if (!shallow) throw ConfigError("momentSource 'exact' requires the shallow ReLU example configuration");
    return shallow_relu_tensor(net.last_width(), k_max);
  }
  const auto& path = rc.experiment.moment_cache;
  RunConfig key = rc;
  key.network = net;
  key.grid.reset();
  key.output.clear();
  key.experiment = ExperimentParams{};
  key.experiment.k_max = k_max;
  key.experiment.moment_samples = rc.experiment.moment_samples;
  const std::string hash = key.hash();
  if (!path.empty() && std::filesystem::exists(path)) {
    MomentCache cache = load_moment_cache(path);
    if (cache.config_hash == hash) return cache.tensor;
  }
  MomentTensor t = moment_tensor(net, inputs, kernel, k_max, rc.experiment.moment_samples, rc.seed);
  if (!path.empty()) save_moment_cache(path, MomentCache{hash, kernel.matrix(), rc.seed, t});
  return t;
}

std::vector<ScanRow> prior_tv_scan(const NetworkConfig& cfg, const InputSet& inputs, const std::vector<int>& orders,
                                   const std::vector<int>& widths, std::uint64_t samples, std::uint64_t seed,
                                   const TvScanOptions& opts) {
  std::vector<ScanRow> rows;
  const int d = inputs.size();
  for (int width : widths) {
    const NetworkConfig c = cfg.with_uniform_width(width);
    const SpdMatrix K = limit_kernel(c, inputs).output();
    const GridDensity truth = true_density_grid(c, inputs, opts.grid, samples, seed);
    for (int m : orders) {
      const MomentTensor mom = moments_for(c, inputs, K, 2 * m - 1, opts.moment_source, opts.moment_samples, seed);
      const EdgeworthModel model(m, d, c.output_copies, K, mom);
      const GridDensity edg = evaluate_on_grid(model, opts.grid);
      ScanRow row;
      row.width = width;
      row.m = m;
      row.seed = seed;
      row.report = tv_on_grid(truth, edg);
      const DeviationMoments dm = deviation_moments(c, inputs, K, 1, m, opts.bound_samples, seed);
      row.lower_bound = edgeworth_lower_bound(dm, K(0, 0));
      row.upper_bound = edgeworth_upper_bound(dm.op_norm_2m, dm.op_norm_4m, K.min_eigenvalue(), d, c.output_copies, m);
      rows.push_back(row);
    }
  }
  return rows;
}

const std::vector<double>& DensityTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return columns[i];
  throw std::out_of_range("density table has no column '" + name + "'");
}

double DensityTable::window_tv(const std::string& a, const std::string& b, double lo, double hi) const {
  if (grid.dim() != 1) throw std::invalid_argument("window_tv: 1-D grids only");
  const auto& x = column(a);
  const auto& y = column(b);
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid.point(i)(0);
    if (t >= lo && t <= hi) s += std::abs(x[i] - y[i]);
  }
  return 0.5 * s * grid.cell_volume();
}

DensityTable density_table(const RunConfig& rc) {
  const InputSet inputs = rc.input_set();
  const NetworkConfig& net = rc.network;
  const GridSpec grid = default_grid(rc);
  const SpdMatrix K = limit_kernel(net, inputs).output();
  const int m = rc.experiment.m;
  const int k_max = rc.experiment.k_max.value_or(2 * m - 1);
  const MomentTensor mom = configured_moments(rc, net, K, k_max);
  const int d = inputs.size();
  const EdgeworthModel model(m, d, net.output_copies, K, mom, k_max);
  const EdgeworthModel gauss(1, d, net.output_copies, K, MomentTensor(d, 0), 0);

  DensityTable t;
  t.grid = grid;
  auto add = [&](const std::string& name, std::vector<double> v) {
    t.names.push_back(name);
    t.columns.push_back(std::move(v));
  };
  add("gamma", evaluate_on_grid(model, grid).values);
  add("gaussian", evaluate_on_grid(gauss, grid).values);
  const GridDensity truth = true_density_grid(net, inputs, grid, rc.samples, rc.seed);
  add("true", truth.values);
  add("true_stderr", truth.stderr_values);
  if (grid.dim() == 1 && is_shallow_relu_example(net, inputs)) {
    const int n1 = net.last_width();
    add("exact", shallow_relu_true_density_grid(n1, grid).values);
    for (int k : {2, 4}) {
      const EdgeworthModel e(2, 1, 1, K, shallow_relu_tensor(n1, k), k);
      add("expansion_k" + std::to_string(k), evaluate_on_grid(e, grid).values);
    }
    for (CurveSpec spec : {CurveSpec::Edg1, CurveSpec::Intermediate, CurveSpec::Edg2}) {
      std::vector<double> v(grid.size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = shallow_relu_density(n1, spec, grid.point(i)(0));
      add("curve_" + curve_name(spec), std::move(v));
    }
  }
  return t;
}

void run_kernel(const RunConfig& rc, std::ostream& out) {
  const LimitKernel lk = limit_kernel(rc.network, rc.input_set());
  nlohmann::json j;
  j["version"] = kVersion;
  j["configHash"] = rc.hash();
  j["seed"] = rc.seed;
  auto layers = nlohmann::json::array();
  for (const auto& k : lk.per_layer) layers.push_back(matrix_json(k.matrix()));
  j["layers"] = layers;
  j["output"] = matrix_json(lk.output().matrix());
  if (rc.network.activation.kind() == ActivationKind::ReLU) j["reluClosedFormGap"] = lk.relu_closed_form_gap;
  out << j.dump(2) << '\n';
}

void run_coeffs(const RunConfig& rc, std::ostream& out) {
  const InputSet inputs = rc.input_set();
  const SpdMatrix K = limit_kernel(rc.network, inputs).output();
  const int k_max = rc.experiment.k_max.value_or(2 * rc.experiment.m - 1);
  const MomentTensor t = configured_moments(rc, rc.network, K, k_max);
  nlohmann::json j;
  j["version"] = kVersion;
  j["configHash"] = rc.hash();
  j["seed"] = rc.seed;
  j["kernel"] = matrix_json(K.matrix());
  j["kMax"] = k_max;
  j["samples"] = t.samples();
  auto entries = nlohmann::json::array();
  for (const auto& [seq, e] : t.entries()) {
    auto pairs = nlohmann::json::array();
    for (const auto& p : seq) pairs.push_back({p.first + 1, p.second + 1});
    entries.push_back({{"pairs", pairs}, {"estimate", e.estimate}, {"stderr", e.std_err}});
  }
  j["entries"] = entries;
  if (is_shallow_relu_example(rc.network, inputs)) {
    const int n1 = rc.network.last_width();
    nlohmann::json ex;
    ex["width"] = n1;
    nlohmann::json moms, coeffs;
    for (int k = 1; k <= 4; ++k) {
      const Rational q = shallow_relu_moments(n1, k);
      moms[std::to_string(k)] = q.str();
      const Rational c = q / Rational(static_cast<std::int64_t>(multiindex::factorial(k)) * (std::int64_t{1} << k));
      coeffs["H" + std::to_string(2 * k)] = c.str();
    }
    ex["moments"] = moms;
    ex["densityCoefficients"] = coeffs;
    nlohmann::json pub;
    for (const auto& term : shallow_relu_curve_terms(n1, CurveSpec::Edg2))
      pub["H" + std::to_string(term.degree)] = term.coeff.str();
    ex["referenceCoefficients"] = pub;
    j["shallowReluExact"] = ex;
  }
  out << j.dump(2) << '\n';
}

void run_density(const RunConfig& rc, std::ostream& out) {
  const DensityTable t = density_table(rc);
  out << csv_header_comment(rc, "density");
  for (int i = 1; i <= t.grid.dim(); ++i) out << "x_" << i << ',';
  for (std::size_t c = 0; c < t.names.size(); ++c) out << t.names[c] << (c + 1 < t.names.size() ? "," : "\n");
  for (std::size_t i = 0; i < t.grid.size(); ++i) {
    const Eigen::VectorXd x = t.grid.point(i);
    for (Eigen::Index a = 0; a < x.size(); ++a) out << fmt(x(a)) << ',';
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << fmt(t.columns[c][i]) << (c + 1 < t.columns.size() ? "," : "\n");
  }
}

void run_tv_scan(const RunConfig& rc, std::ostream& out) {
  const auto& widths = require_widths(rc);
  const GridSpec grid = default_grid(rc);
  if (!rc.experiment.labels.empty()) {
    PosteriorScanOptions opts;
    opts.grid = grid;
    opts.moment_source = rc.resolved_moment_source();
    opts.moment_samples = rc.experiment.moment_samples;
    const auto rows = posterior_tv_scan(rc.network, configured_dataset(rc), rc.experiment.m, widths, rc.samples,
                                        rc.seed, opts);
    out << csv_header_comment(rc, "tv-scan posterior");
    out << "width,m,tv,tv_tail_bound,tv_mc_noise,prior_tv,normalizer_true,normalizer_edgeworth,consistency_bound,"
           "negative_mass,seed\n";
    for (const auto& r : rows)
      out << r.width << ',' << r.m << ',' << fmt(r.tv) << ',' << fmt(r.tail_bound) << ',' << fmt(r.mc_noise) << ','
          << fmt(r.prior_tv) << ',' << fmt(r.normalizer_true) << ',' << fmt(r.normalizer_edgeworth) << ','
          << fmt(r.consistency_bound) << ',' << fmt(r.negative_mass) << ',' << rc.seed << '\n';
    return;
  }
  TvScanOptions opts;
  opts.grid = grid;
  opts.moment_source = rc.resolved_moment_source();
  opts.moment_samples = rc.experiment.moment_samples;
  opts.bound_samples = rc.experiment.moment_samples;
  const std::vector<int> orders = rc.experiment.orders.empty() ? std::vector<int>{rc.experiment.m} : rc.experiment.orders;
  const auto rows = prior_tv_scan(rc.network, rc.input_set(), orders, widths, rc.samples, rc.seed, opts);
  out << csv_header_comment(rc, "tv-scan");
  out << "width,m,tv,tv_tail_bound,tv_mc_noise,lower_bound,upper_bound_estimate,seed\n";
  for (const auto& r : rows)
    out << r.width << ',' << r.m << ',' << fmt(r.report.tv) << ',' << fmt(r.report.tail_bound) << ','
        << fmt(r.report.mc_noise) << ',' << fmt(r.lower_bound) << ',' << fmt(r.upper_bound) << ',' << r.seed << '\n';
}

void run_posterior(const RunConfig& rc, std::ostream& out) {
  const Dataset data = configured_dataset(rc);
  if (data.size() != 1 || rc.network.output_copies != 1) throw ConfigError("posterior: requires one input and one output");
  const GridSpec grid = default_grid(rc);
  const NetworkConfig& net = rc.network;
  const SpdMatrix K = limit_kernel(net, data.inputs).output();
  const int m = rc.experiment.m;
  const MomentTensor mom = configured_moments(rc, net, K, 2 * m - 1);
  const PosteriorClosedForm pc = posterior_closed_form(K, data, mom, m);
  const GridDensity truth = true_density_grid(net, data.inputs, grid, rc.samples, rc.seed);
  const GaussianLikelihood lik(data.labels);
  const double h = grid.cell_volume();
  std::vector<double> post(grid.size());
  double z = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    post[i] = lik(grid.point(i)) * truth.values[i];
    z += post[i] * h;
  }
  if (!(z > kDegenerateNormalizer)) throw DegenerateNormalizer("posterior: true normalizer is degenerate");
  const double var = 1.0 / pc.precision(0, 0);
  out << csv_header_comment(rc, "posterior");
  out << "x,posterior_true,posterior_edgeworth,posterior_gaussian\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Eigen::VectorXd x = grid.point(i);
    const double g = std::exp(-0.5 * (x(0) - pc.mean(0)) * (x(0) - pc.mean(0)) / var) / std::sqrt(2.0 * std::numbers::pi * var);
    out << fmt(x(0)) << ',' << fmt(post[i] / z) << ',' << fmt(pc.density(x)) << ',' << fmt(g) << '\n';
  }
}

void run_predict(const RunConfig& rc, std::ostream& out) {
  const Dataset data = configured_dataset(rc);
  const auto& xs = rc.experiment.x_star;
  if (static_cast<int>(xs.size()) != rc.network.input_dim) throw ConfigError("experiment.xStar must have inputDim entries");
  std::vector<double> edges = rc.experiment.bin_edges;
  if (edges.size() < 2) throw ConfigError("experiment.bins must list at least two edges");
  const Predictive p = predictive_distribution(rc.network, data,
                                               Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size())),
                                               edges, rc.samples, rc.seed);
  if (p.ess < 100.0) throw DegenerateNormalizer("predict: effective sample size " + fmt(p.ess) + " is below 100");
  double inside = 0.0;
  for (const auto& b : p.bins) inside += b.prob;
  out << csv_header_comment(rc, "predict");
  out << "# outside=" << fmt(1.0 - inside) << " ess=" << fmt(p.ess) << " mean=" << fmt(p.mean) << " mean_stderr=" << fmt(p.mean_stderr) << '\n';
  out << "bin_lo,bin_hi,prob,stderr\n";
  for (const auto& b : p.bins) out << fmt(b.lo) << ',' << fmt(b.hi) << ',' << fmt(b.prob) << ',' << fmt(b.std_err) << '\n';
}

}  // namespace cgedge
