#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cgedge/bayes.hpp"
#include "cgedge/metrics.hpp"
#include "cgedge/network.hpp"

namespace cgedge {

// Command-specific knobs; every field is optional in the JSON document.
struct ExperimentParams {
  int m = 1;
  std::optional<int> k_max;
  std::uint64_t moment_samples = 200000;
  std::string moment_source = "auto";  // auto | exact | mc
  std::string moment_cache;            // path; empty disables the cache
  std::vector<int> widths;
  std::vector<int> orders;             // m values for tv-scan
  std::vector<double> labels;
  std::vector<double> x_star;
  std::vector<double> bin_edges;
  std::vector<double> window;          // [lo, hi] for central-window TV
  int quadrature_order = kDefaultQuadratureOrder;
};

struct RunConfig {
  std::uint64_t seed = 0;
  NetworkConfig network;
  std::vector<Eigen::VectorXd> inputs;
  std::uint64_t samples = 200000;
  std::optional<GridSpec> grid;
  std::string output;
  ExperimentParams experiment;

  InputSet input_set() const { return InputSet(inputs, network.input_dim); }
  // 16 hex digits of FNV-1a over the canonical JSON form.
  std::string hash() const;
  std::string canonical_json() const;
  MomentSource resolved_moment_source() const;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

}  // namespace cgedge
