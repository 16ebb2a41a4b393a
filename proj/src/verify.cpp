#include "cgedge/verify.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>

#include "cgedge/bayes.hpp"
#include "cgedge/edgeworth.hpp"
#include "cgedge/hermite.hpp"
#include "cgedge/moments.hpp"
#include "cgedge/multiindex.hpp"
#include "cgedge/network.hpp"
#include "cgedge/rng.hpp"

namespace cgedge {

namespace {

class Reporter {
 public:
  explicit Reporter(std::ostream& log) : log_(log) {}

  void check(const std::string& name, double err, double tol) {
    const bool ok = std::isfinite(err) && err <= tol;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s %-34s err=%.3e tol=%.1e\n", ok ? "PASS" : "FAIL", name.c_str(), err, tol);
    log_ << buf;
    (ok ? r_.passed : r_.failed)++;
  }
  VerifyResult result() const { return r_; }

 private:
  std::ostream& log_;
  VerifyResult r_;
};

// E[f(X)] for X ~ N(0, cov) by tensor Gauss–Hermite through the Cholesky factor.
double gh_expect(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::MatrixXd& cov, int order) {
  const auto rule = QuadratureRule::gauss_hermite(order);
  const Eigen::MatrixXd L = cov.llt().matrixL();
  const auto p = static_cast<std::size_t>(cov.rows());
  std::vector<int> idx(p, 0);
  Eigen::VectorXd u(cov.rows());
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t i = 0; i < p; ++i) {
      u(static_cast<Eigen::Index>(i)) = rule.nodes[static_cast<std::size_t>(idx[i])];
      w *= rule.weights[static_cast<std::size_t>(idx[i])];
    }
    total += w * f(L * u);
    std::size_t i = 0;
    while (i < p && ++idx[i] == order) idx[i++] = 0;
    if (i == p) break;
  }
  return total;
}

Eigen::MatrixXd random_spd(Rng& rng, int d, double ridge) {
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  return g * g.transpose() / d + ridge * Eigen::MatrixXd::Identity(d, d);
}

MomentTensor random_moments(Rng& rng, int d, int k_max, double scale) {
  MomentTensor t(d, k_max);
  for (const auto& seq : MomentTensor::canonical_sequences(d, k_max))
    if (!seq.empty()) t.set(seq, {scale * std::pow(0.3, static_cast<double>(seq.size())) * rng.normal(), 0.0, 0});
  return t;
}

}  // namespace

VerifyResult run_verify(const VerifyOptions& opts, std::ostream& log) {
  Reporter rep(log);
  Rng rng(opts.seed);

  // Hermite coefficient table against the three-term recurrence.
  constexpr int kDeg = 12;
  std::vector<hermite::HermiteCoeffs> table;
  for (int j = 0; j <= kDeg; ++j) table.push_back(hermite::hermite_coeffs(j));
  if (opts.corrupt_hermite) table[4].coeffs[0] += Rational(1);
  {
    double err = 0.0;
    for (int j = 0; j <= kDeg; ++j)
      for (double x : {-2.5, -1.0, 0.0, 0.7, 3.0}) {
        const double ref = hermite::hermite_eval(j, x);
        err = std::max(err, std::abs(table[static_cast<std::size_t>(j)].evaluate(x) - ref) / std::max(1.0, std::abs(ref)));
      }
    rep.check("hermite.table_vs_recurrence", err, 1e-12);
  }
  {
    const auto rule = QuadratureRule::gauss_hermite(40);
    double err = 0.0;
    for (int i = 0; i <= 10; ++i)
      for (int j = 0; j <= 10; ++j) {
        double s = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q)
          s += rule.weights[q] * table[static_cast<std::size_t>(i)].evaluate(rule.nodes[q]) *
               table[static_cast<std::size_t>(j)].evaluate(rule.nodes[q]);
        const double ref = i == j ? static_cast<double>(multiindex::factorial(i)) : 0.0;
        err = std::max(err, std::abs(s - ref) / std::max(1.0, ref));
      }
    rep.check("hermite.orthogonality", err, 1e-9);
  }

  // Combinatorial counts.
  {
    double err = 0.0;
    for (int p = 1; p <= 4; ++p)
      for (int k = 1; k <= 3; ++k) {
        const auto S = multiindex::enumerate_S(p, k);
        err += std::abs(static_cast<double>(S.size()) - static_cast<double>(multiindex::binomial(2 * k + p - 1, p - 1)));
        double total = 0.0;
        for (const auto& J : S) total += static_cast<double>(multiindex::enumerate_A(J).size());
        err += std::abs(total - std::pow(p, 2 * k));
      }
    rep.check("multiindex.counts", err, 0.0);
  }

  // Centered and shifted product moments against quadrature.
  {
    const Eigen::MatrixXd cov = random_spd(rng, 2, 0.4);
    const Eigen::MatrixXd R = cov - Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd w(2);
    w << 0.3 * rng.normal(), 0.3 * rng.normal();
    double err_c = 0.0, err_s = 0.0;
    for (int a = 0; a <= 4; ++a)
      for (int b = 0; a + b <= 6; ++b) {
        const std::vector<int> J{a, b};
        auto f = [&](const Eigen::VectorXd& x) { return hermite::hermite_eval(a, x(0)) * hermite::hermite_eval(b, x(1)); };
        auto g = [&](const Eigen::VectorXd& x) {
          return hermite::hermite_eval(a, x(0) + w(0)) * hermite::hermite_eval(b, x(1) + w(1));
        };
        err_c = std::max(err_c, std::abs(hermite::product_moment_centered(J, R) - gh_expect(f, cov, 24)));
        err_s = std::max(err_s, std::abs(hermite::product_moment_shifted(J, w, R) - gh_expect(g, cov, 24)));
      }
    rep.check("hermite.centered_vs_quadrature", err_c, 1e-8);
    rep.check("hermite.shifted_vs_quadrature", err_s, 1e-7);
  }

  // Raw-tuple expansion against the nested (J, 𝒜_J) sum.
  {
    const SpdMatrix K(random_spd(rng, 2, 0.5));
    const EdgeworthModel model(2, 2, 1, K, random_moments(rng, 2, 3, 1.0));
    double err = 0.0;
    for (int i = 0; i < 10; ++i) {
      Eigen::VectorXd x(2);
      x << 1.5 * rng.normal(), 1.5 * rng.normal();
      const double a = model.density(x), b = model.literal_density(x);
      err = std::max(err, std::abs(a - b) / std::max(1e-300, std::abs(b)));
    }
    rep.check("edgeworth.raw_vs_literal", err, 1e-12);
    rep.check("edgeworth.total_mass", std::abs(total_mass(model) - 1.0), 1e-10);
  }

  // First Taylor term against a central difference.
  {
    const SpdMatrix K(random_spd(rng, 2, 0.5));
    const Eigen::MatrixXd A = K.matrix() + 0.2 * random_spd(rng, 2, 0.0);
    Eigen::VectorXd x(2);
    x << 0.4, -0.8;
    const double t = 0.3, h = 1e-5;
    auto phi = [&](double s) { return block_gaussian_density(SpdMatrix(s * A + (1 - s) * K.matrix()), 1, x); };
    const double fd = (phi(t + h) - phi(t - h)) / (2 * h);
    const double an = density_taylor_term(K, A, 1, 1, t, x);
    rep.check("edgeworth.taylor_k1", std::abs(fd - an) / std::abs(an), 1e-6);
  }

  // ReLU kernel quadrature against the arc-cosine form.
  {
    NetworkConfig cfg;
    cfg.hidden_widths = {10};
    cfg.bias_var = 1.0;
    cfg.weight_var = 1.0;
    const InputSet in({Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, -1.0)}, 1);
    rep.check("network.relu_arccos_gap", limit_kernel(cfg, in).relu_closed_form_gap, 1e-6);
  }

  // Closed-form normalizer against quadrature, and the parity indicator.
  {
    const SpdMatrix K(Eigen::MatrixXd::Constant(1, 1, 1.3));
    const MomentTensor mom = random_moments(rng, 1, 3, 0.5);
    const Dataset data(InputSet({Eigen::VectorXd::Constant(1, 1.0)}, 1), Eigen::VectorXd::Constant(1, 0.7));
    const double closed = normalizing_constant(K, data, mom, 2);
    const EdgeworthModel model(2, 1, 1, K, mom);
    const double quad = likelihood_integral(model, GaussianLikelihood(data.labels));
    rep.check("bayes.normalizer_vs_quadrature", std::abs(closed - quad) / std::abs(quad), 1e-10);
    rep.check("bayes.parity_indicator", std::abs(closed - normalizing_constant(K, data, mom, 2, false)), 0.0);
  }

  // Exact shallow moments.
  {
    double err = 0.0;
    for (int n : {1, 20, 100}) {
      err += std::abs((shallow_relu_moments(n, 2) - Rational(5, n)).to_double());
      err += std::abs((shallow_relu_moments(n, 3) - Rational(44, static_cast<std::int64_t>(n) * n)).to_double());
      err += std::abs(shallow_relu_moments(n, 1).to_double());
    }
    rep.check("moments.shallow_exact", err, 0.0);
  }

  const VerifyResult r = rep.result();
  log << (r.ok() ? "verify: all " : "verify: ") << r.passed << " passed, " << r.failed << " failed\n";
  return r;
}

}  // namespace cgedge
