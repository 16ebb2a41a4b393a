#include "cgedge/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cgedge/errors.hpp"
#include "cgedge/rng.hpp"

namespace cgedge {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
void get_opt(const json& obj, const std::string& key, const std::string& where, T& out) {
  if (obj.contains(key)) out = get<T>(obj, key, where);
}

NetworkConfig parse_network(const json& j) {
  reject_unknown(j, {"depth", "inputDim", "hiddenWidths", "outputCopies", "biasVar", "weightVar", "activation"},
                 "network");
  NetworkConfig c;
  c.depth = get<int>(j, "depth", "network");
  c.input_dim = get<int>(j, "inputDim", "network");
  c.hidden_widths = get<std::vector<int>>(j, "hiddenWidths", "network");
  get_opt(j, "outputCopies", "network", c.output_copies);
  get_opt(j, "biasVar", "network", c.bias_var);
  c.weight_var = get<double>(j, "weightVar", "network");
  c.activation = Activation::from_name(get<std::string>(j, "activation", "network"));
  c.validate();
  return c;
}

GridSpec parse_grid(const json& j) {
  reject_unknown(j, {"lo", "hi", "count"}, "grid");
  GridSpec g;
  g.lo = get<std::vector<double>>(j, "lo", "grid");
  g.hi = get<std::vector<double>>(j, "hi", "grid");
  g.count = get<std::vector<int>>(j, "count", "grid");
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return g;
}

ExperimentParams parse_experiment(const json& j) {
  reject_unknown(j,
                 {"m", "kMax", "momentSamples", "momentSource", "momentCache", "widths", "orders", "labels", "xStar",
                  "bins", "window", "quadratureOrder"},
                 "experiment");
  ExperimentParams e;
  const std::string w = "experiment";
  get_opt(j, "m", w, e.m);
  if (j.contains("kMax")) e.k_max = get<int>(j, "kMax", w);
  get_opt(j, "momentSamples", w, e.moment_samples);
  get_opt(j, "momentSource", w, e.moment_source);
  get_opt(j, "momentCache", w, e.moment_cache);
  get_opt(j, "widths", w, e.widths);
  get_opt(j, "orders", w, e.orders);
  get_opt(j, "labels", w, e.labels);
  get_opt(j, "xStar", w, e.x_star);
  get_opt(j, "bins", w, e.bin_edges);
  get_opt(j, "window", w, e.window);
  get_opt(j, "quadratureOrder", w, e.quadrature_order);
  if (e.m < 1 || e.m > 3) throw ConfigError("experiment.m must be 1, 2 or 3");
  if (e.moment_source != "auto" && e.moment_source != "exact" && e.moment_source != "mc")
    throw ConfigError("experiment.momentSource must be auto, exact or mc");
  if (!e.window.empty() && (e.window.size() != 2 || !(e.window[1] > e.window[0])))
    throw ConfigError("experiment.window must be [lo, hi] with lo < hi");
  for (int wd : e.widths)
    if (wd < 1) throw ConfigError("experiment.widths must be positive");
  for (int m : e.orders)
    if (m < 1 || m > 3) throw ConfigError("experiment.orders entries must be 1, 2 or 3");
  return e;
}

json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["network"] = {{"depth", c.network.depth},
                  {"inputDim", c.network.input_dim},
                  {"hiddenWidths", c.network.hidden_widths},
                  {"outputCopies", c.network.output_copies},
                  {"biasVar", c.network.bias_var},
                  {"weightVar", c.network.weight_var},
                  {"activation", c.network.activation.name()}};
  json inputs = json::array();
  for (const auto& x : c.inputs) inputs.push_back(std::vector<double>(x.data(), x.data() + x.size()));
  j["inputs"] = inputs;
  j["samples"] = c.samples;
  if (c.grid) j["grid"] = {{"lo", c.grid->lo}, {"hi", c.grid->hi}, {"count", c.grid->count}};
  const auto& e = c.experiment;
  json ex = {{"m", e.m},           {"momentSamples", e.moment_samples}, {"momentSource", e.moment_source},
             {"widths", e.widths}, {"orders", e.orders},                {"labels", e.labels},
             {"xStar", e.x_star},  {"bins", e.bin_edges},               {"window", e.window},
             {"quadratureOrder", e.quadrature_order}};
  if (e.k_max) ex["kMax"] = *e.k_max;
  j["experiment"] = ex;
  return j;
}

}  // namespace

std::string RunConfig::canonical_json() const { return to_json(*this).dump(); }

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_json())));
  return buf;
}

MomentSource RunConfig::resolved_moment_source() const {
  if (experiment.moment_source == "exact") return MomentSource::Exact;
  if (experiment.moment_source == "mc") return MomentSource::MonteCarlo;
  return is_shallow_relu_example(network, input_set()) ? MomentSource::Exact : MomentSource::MonteCarlo;
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j, {"seed", "network", "inputs", "samples", "grid", "output", "experiment"}, "config");
  if (!j.contains("seed")) throw ConfigError("config: 'seed' is mandatory");
  RunConfig c;
  c.seed = get<std::uint64_t>(j, "seed", "config");
  c.network = parse_network(get<json>(j, "network", "config"));
  const auto pts = get<std::vector<std::vector<double>>>(j, "inputs", "config");
  for (const auto& p : pts) c.inputs.push_back(Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size())));
  (void)c.input_set();  // validates non-zero, distinct, dimension
  get_opt(j, "samples", "config", c.samples);
  if (j.contains("grid")) c.grid = parse_grid(j.at("grid"));
  get_opt(j, "output", "config", c.output);
  if (j.contains("experiment")) c.experiment = parse_experiment(j.at("experiment"));
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace cgedge
