// cgedge: command-line front end for the Edgeworth expansion library.
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "cgedge/config.hpp"
#include "cgedge/errors.hpp"
#include "cgedge/experiments.hpp"
#include "cgedge/rng.hpp"
#include "cgedge/verify.hpp"

namespace {

enum Exit { kOk = 0, kGeneric = 1, kConfig = 2, kNumerical = 3, kVerification = 4 };

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  bool corrupt_hermite = false;
};

using Command = std::function<void(const cgedge::RunConfig&, std::ostream&)>;

int run_command(const Options& o, const Command& body) {
  cgedge::RunConfig rc = cgedge::load_config(o.config);
  if (o.seed) rc.seed = *o.seed;
  const std::string path = !o.out.empty() ? o.out : rc.output;
  if (path.empty() || path == "-") {
    body(rc, std::cout);
    return kOk;
  }
  // write fully before touching the destination so failures leave no partial file
  std::ostringstream buf;
  body(rc, buf);
  std::ofstream f(path);
  if (!f) throw cgedge::ConfigError("cannot write output '" + path + "'");
  f << buf.str();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edgeworth expansions for conditionally Gaussian vectors and finite-width networks"};
  app.require_subcommand(1);
  Options o;

  const std::map<std::string, std::pair<std::string, Command>> commands = {
      {"kernel", {"Limit kernel per layer (JSON)", cgedge::run_kernel}},
      {"coeffs", {"Moment tensor and exact shallow-ReLU coefficients (JSON)", cgedge::run_coeffs}},
      {"density", {"Grid densities: expansion, Gaussian, Monte-Carlo truth (CSV)", cgedge::run_density}},
      {"tv-scan", {"TV against width for the prior or posterior (CSV)", cgedge::run_tv_scan}},
      {"posterior", {"Posterior densities on a grid (CSV)", cgedge::run_posterior}},
      {"predict", {"Predictive histogram by self-normalized sampling (CSV)", cgedge::run_predict}},
  };
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", o.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "Output path (default: config 'output', else stdout)");
    sub->add_option("--seed", o.seed, "Override the config seed");
    sub->add_option("--threads", o.threads, "Worker threads (0 = hardware); never changes outputs");
  }
  auto* verify = app.add_subcommand("verify", "Run the invariant suite");
  verify->add_option("--seed", o.seed, "Seed for the randomized checks");
  verify->add_option("--out", o.out, "Write the log here instead of stdout");
  verify->add_option("--threads", o.threads, "Worker threads");
  verify->add_flag("--corrupt-hermite", o.corrupt_hermite, "Test fixture: perturb the Hermite table")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  if (o.threads > 0) cgedge::set_worker_threads(o.threads);

  try {
    if (verify->parsed()) {
      cgedge::VerifyOptions vo;
      if (o.seed) vo.seed = *o.seed;
      vo.corrupt_hermite = o.corrupt_hermite;
      cgedge::VerifyResult r;
      if (o.out.empty()) {
        r = cgedge::run_verify(vo, std::cout);
      } else {
        std::ofstream f(o.out);
        r = cgedge::run_verify(vo, f);
      }
      return r.ok() ? kOk : kVerification;
    }
    for (const auto& [name, entry] : commands)
      if (app.got_subcommand(name)) return run_command(o, entry.second);
  } catch (const cgedge::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kConfig;
  } catch (const cgedge::NotPositiveDefinite& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const cgedge::DegenerateNormalizer& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kGeneric;
  }
  return kGeneric;
}
