#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cgedge/bayes.hpp"
#include "cgedge/config.hpp"
#include "cgedge/metrics.hpp"

namespace cgedge {

struct ScanRow {
  int width = 0;
  int m = 0;
  TvReport report;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  std::uint64_t seed = 0;
};

struct TvScanOptions {
  GridSpec grid = GridSpec::uniform(1, -8.0, 8.0, 1025);
  MomentSource moment_source = MomentSource::Exact;
  std::uint64_t moment_samples = 200000;
  std::uint64_t bound_samples = 200000;
};

// Prior TV between the Monte-Carlo true density and the order-m expansion
// (orders k = 1..2m−1) for each width, with the lower/upper bound estimates.
std::vector<ScanRow> prior_tv_scan(const NetworkConfig& cfg, const InputSet& inputs, const std::vector<int>& orders,
                                   const std::vector<int>& widths, std::uint64_t samples, std::uint64_t seed,
                                   const TvScanOptions& opts = {});

struct DensityTable {
  GridSpec grid;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  const std::vector<double>& column(const std::string& name) const;
  // ½Σ|a−b|h over grid points inside [lo, hi] (1-D grids only).
  double window_tv(const std::string& a, const std::string& b, double lo, double hi) const;
};

DensityTable density_table(const RunConfig& rc);

// Moment tensor for the configured network, going through the JSON cache
// when experiment.momentCache is set.
MomentTensor configured_moments(const RunConfig& rc, const NetworkConfig& net, const SpdMatrix& kernel, int k_max);

// Command bodies. Each writes its artifact to `out`.
void run_kernel(const RunConfig& rc, std::ostream& out);
void run_coeffs(const RunConfig& rc, std::ostream& out);
void run_density(const RunConfig& rc, std::ostream& out);
void run_tv_scan(const RunConfig& rc, std::ostream& out);
void run_posterior(const RunConfig& rc, std::ostream& out);
void run_predict(const RunConfig& rc, std::ostream& out);

std::string csv_header_comment(const RunConfig& rc, const std::string& command);

}  // namespace cgedge
