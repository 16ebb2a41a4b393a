// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Diagnostics go to stdout as indented lines under the criterion they support.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cgedge/bayes.hpp"
#include "cgedge/config.hpp"
#include "cgedge/edgeworth.hpp"
#include "cgedge/experiments.hpp"
#include "cgedge/hermite.hpp"
#include "cgedge/metrics.hpp"
#include "cgedge/moments.hpp"
#include "cgedge/multiindex.hpp"
#include "cgedge/network.hpp"
#include "cgedge/rational.hpp"
#include "cgedge/rng.hpp"

using namespace cgedge;

namespace {

constexpr std::uint64_t kSeed = 20240611;

NetworkConfig shallow(int width) {
  NetworkConfig c;
  c.hidden_widths = {width};
  c.weight_var = std::numbers::sqrt2;
  return c;
}

Eigen::VectorXd scalar(double v) { return Eigen::VectorXd::Constant(1, v); }

InputSet unit_input() { return InputSet({scalar(1.0)}, 1); }

const SpdMatrix& unit_kernel() {
  static const SpdMatrix k(Eigen::MatrixXd::Identity(1, 1));
  return k;
}

void note(const char* fmt, auto... args) {
  std::printf("    ");
  std::printf(fmt, args...);
  std::printf("\n");
}

Eigen::MatrixXd random_spd(Rng& rng, int d, double ridge) {
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  return g * g.transpose() / d + ridge * Eigen::MatrixXd::Identity(d, d);
}

MomentTensor random_tensor(Rng& rng, int dim, int k_max, double scale) {
  MomentTensor t(dim, k_max);
  for (const auto& seq : MomentTensor::canonical_sequences(dim, k_max))
    if (!seq.empty()) t.set(seq, {scale * rng.normal(), 0.0, 0});
  return t;
}

// E[f(X)], X ~ N(mean, cov), tensor Gauss–Hermite through the Cholesky factor.
double gh_expect(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::MatrixXd& cov, int order,
                 const Eigen::VectorXd& mean) {
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
    total += w * f(mean + L * u);
    std::size_t i = 0;
    while (i < p && ++idx[i] == order) idx[i++] = 0;
    if (i == p) break;
  }
  return total;
}

// All multi-indices of length d with total degree <= deg.
std::vector<std::vector<int>> indices_up_to(int d, int deg) {
  std::vector<std::vector<int>> out;
  std::vector<int> s(static_cast<std::size_t>(d), 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == d) {
      out.push_back(s);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      s[static_cast<std::size_t>(pos)] = v;
      rec(pos + 1, left - v);
    }
  };
  rec(0, deg);
  return out;
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Outcome o;
  for (int n : {20, 100}) {
    const MomentTensor t = moment_tensor(shallow(n), unit_input(), unit_kernel(), 3, 1000000, kSeed);
    const MomentEntry q2 = t.at({{0, 0}, {0, 0}}), q3 = t.at({{0, 0}, {0, 0}, {0, 0}});
    const double z2 = std::abs(q2.estimate - 5.0 / n) / q2.std_err;
    const double z3 = std::abs(q3.estimate - 44.0 / (double(n) * n)) / q3.std_err;
    note("n1=%d  E[Q^2]=%.6g (5/n1=%.6g, %.2f SE)  E[Q^3]=%.6g (44/n1^2=%.6g, %.2f SE)", n, q2.estimate, 5.0 / n, z2,
         q3.estimate, 44.0 / (double(n) * n), z3);
    o.pass = o.pass && z2 <= 4.0 && z3 <= 4.0;

    const auto n64 = static_cast<std::int64_t>(n);
    const Rational c4 = shallow_relu_moments(n, 2) / Rational(8);
    const Rational c6 = shallow_relu_moments(n, 3) / Rational(48);
    const Rational c8 = shallow_relu_moments(n, 4) / Rational(384);
    const Rational p8 = Rational(1573, 192 * n64 * n64) + Rational(25 * (n64 - 1), 64 * n64 * n64);
    const bool ok4 = c4 == Rational(5, 8 * n64), ok6 = c6 == Rational(11, 12 * n64 * n64), ok8 = c8 == p8;
    note("n1=%d  H4 %s %s  H6 %s %s  H8 %s (exact) vs %s (reference) %s", n, c4.str().c_str(),
         ok4 ? "ok" : "MISMATCH", c6.str().c_str(), ok6 ? "ok" : "MISMATCH", c8.str().c_str(),
         p8.str().c_str(), ok8 ? "ok" : "MISMATCH");
    o.pass = o.pass && ok4 && ok6 && ok8;
  }
  o.detail = "MC moments within 4 SE; H4/H6/H8 coefficients bit-exact";
  return o;
}

Outcome criterion2() {
  Outcome o;
  const double k2 = limit_kernel(shallow(20), unit_input()).output()(0, 0);
  note("K^(2) = %.17g (|K-1| = %.2e)", k2, std::abs(k2 - 1.0));
  o.pass = std::abs(k2 - 1.0) <= 1e-10;
  Rng rng(kSeed);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    NetworkConfig c;
    c.input_dim = 2;
    c.depth = 1 + t % 3;
    c.hidden_widths.assign(static_cast<std::size_t>(c.depth), 8);
    c.bias_var = 0.05 + rng.uniform();
    c.weight_var = 0.5 + 1.5 * rng.uniform();
    Eigen::VectorXd a(2), b(2);
    a << rng.normal(), rng.normal();
    b << rng.normal(), rng.normal();
    worst = std::max(worst, limit_kernel(c, InputSet({a, b}, 2)).relu_closed_form_gap);
  }
  note("max |quadrature - arc-cosine| over 20 configurations = %.2e", worst);
  o.pass = o.pass && worst <= 1e-6;
  o.detail = "K^(2)=1 to 1e-10; ReLU quadrature vs arc-cosine to 1e-6";
  return o;
}

std::vector<ScanRow> g_prior_rows;

Outcome criterion3() {
  const std::vector<int> widths{50, 100, 200, 400};
  TvScanOptions opts;
  opts.moment_source = MomentSource::Exact;
  g_prior_rows = prior_tv_scan(shallow(50), unit_input(), {1, 2}, widths, 200000, kSeed, opts);
  Outcome o;
  for (int m : {1, 2}) {
    std::vector<double> w, tv;
    for (const auto& r : g_prior_rows)
      if (r.m == m) {
        w.push_back(r.width);
        tv.push_back(r.report.tv);
        note("m=%d width=%-4d tv=%.4e tail=%.1e noise=%.1e", m, r.width, r.report.tv, r.report.tail_bound,
             r.report.mc_noise);
      }
    const RateFit f = fit_rate(w, tv);
    const double lo = m == 1 ? -1.3 : -2.35, hi = m == 1 ? -0.7 : -1.5;
    note("m=%d slope=%.3f (window [%.2f, %.2f]) r2=%.4f", m, f.slope, lo, hi, f.r2);
    o.pass = o.pass && f.slope >= lo && f.slope <= hi;
  }
  o.detail = "prior TV slopes: k<=1 in [-1.3,-0.7], k<=3 in [-2.35,-1.5]";
  return o;
}

Outcome criterion4() {
  Outcome o;
  for (const auto& r : g_prior_rows) {
    const double budget = r.report.error_budget();
    const bool lo = r.lower_bound <= r.report.tv + budget;
    const bool up = r.report.tv <= r.upper_bound + budget;
    note("m=%d width=%-4d lower=%.3e  tv=%.3e  upper=%.3e  budget=%.1e %s", r.m, r.width, r.lower_bound, r.report.tv,
         r.upper_bound, budget, lo && up ? "" : "VIOLATED");
    o.pass = o.pass && lo && up;
  }
  o.detail = "lower <= TV + budget and TV <= upper + budget on every scan row";
  return o;
}

Outcome criterion5() {
  Outcome o;
  // orthogonality by Monte Carlo
  constexpr int kDeg = 6;
  constexpr int kSamples = 1000000;
  std::vector<double> sum((kDeg + 1) * (kDeg + 1), 0.0), sum2(sum.size(), 0.0);
  Rng rng = Rng::substream(kSeed, "hermite-orthogonality");
  std::vector<double> h(kDeg + 1);
  for (int s = 0; s < kSamples; ++s) {
    hermite::hermite_eval_all(kDeg, rng.normal(), h);
    for (int i = 0; i <= kDeg; ++i)
      for (int j = i; j <= kDeg; ++j) {
        const double v = h[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(j)];
        sum[static_cast<std::size_t>(i * (kDeg + 1) + j)] += v;
        sum2[static_cast<std::size_t>(i * (kDeg + 1) + j)] += v * v;
      }
  }
  double worst_z = 0.0;
  for (int i = 0; i <= kDeg; ++i)
    for (int j = i; j <= kDeg; ++j) {
      if (i == 0 && j == 0) continue;
      const auto k = static_cast<std::size_t>(i * (kDeg + 1) + j);
      const double mean = sum[k] / kSamples;
      const double se = std::sqrt((sum2[k] / kSamples - mean * mean) / (kSamples - 1));
      const double target = i == j ? static_cast<double>(multiindex::factorial(i)) : 0.0;
      worst_z = std::max(worst_z, std::abs(mean - target) / se);
    }
  note("orthogonality: worst |mean - i! delta_ij| = %.2f SE over degrees <= 6", worst_z);
  o.pass = worst_z <= 4.0;

  Rng qr(kSeed + 1);
  double worst_c = 0.0;
  for (int d = 1; d <= 3; ++d) {
    const Eigen::MatrixXd cov = random_spd(qr, d, 0.4);
    const Eigen::MatrixXd R = cov - Eigen::MatrixXd::Identity(d, d);
    for (const auto& s : indices_up_to(d, 6)) {
      auto f = [&](const Eigen::VectorXd& x) {
        double p = 1.0;
        for (int i = 0; i < d; ++i) p *= hermite::hermite_eval(s[static_cast<std::size_t>(i)], x(i));
        return p;
      };
      worst_c = std::max(worst_c, std::abs(hermite::product_moment_centered(s, R) -
                                           gh_expect(f, cov, 16, Eigen::VectorXd::Zero(d))));
    }
  }
  note("centered product moments vs quadrature: max err %.2e (tol 1e-8)", worst_c);
  o.pass = o.pass && worst_c <= 1e-8;

  double worst_s = 0.0;
  for (int c = 0; c < 20; ++c) {
    const int d = 1 + c % 3;
    const Eigen::MatrixXd cov = random_spd(qr, d, 0.4);
    const Eigen::MatrixXd R = cov - Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd w(d);
    for (int i = 0; i < d; ++i) w(i) = 0.7 * qr.normal();
    for (const auto& s : indices_up_to(d, 6)) {
      auto f = [&](const Eigen::VectorXd& x) {
        double p = 1.0;
        for (int i = 0; i < d; ++i) p *= hermite::hermite_eval(s[static_cast<std::size_t>(i)], x(i));
        return p;
      };
      const double ref = gh_expect(f, cov, 16, w);
      worst_s = std::max(worst_s, std::abs(hermite::product_moment_shifted(s, w, R) - ref) / std::max(1.0, std::abs(ref)));
    }
  }
  note("shifted reduction vs quadrature on 20 seeded (mu, Sigma): max err %.2e (tol 1e-7)", worst_s);
  o.pass = o.pass && worst_s <= 1e-7;
  o.detail = "orthogonality 4 SE at 1e6; centered 1e-8; shifted 1e-7";
  return o;
}

Outcome criterion6() {
  Outcome o;
  Rng rng(kSeed + 2);
  double worst_mass = 0.0, worst_dual = 0.0;
  int evaluations = 0, models = 0;
  const int shapes[][2] = {{1, 1}, {2, 1}, {1, 2}, {3, 1}, {1, 3}};
  for (const auto& s : shapes)
    for (int m : {1, 2}) {
      const int d = s[0], n = s[1];
      const EdgeworthModel model(m, d, n, SpdMatrix(random_spd(rng, d, 0.4)), random_tensor(rng, d, 2 * m - 1, 0.2));
      worst_mass = std::max(worst_mass, std::abs(total_mass(model) - 1.0));
      ++models;
      for (int i = 0; i < 5; ++i, ++evaluations) {
        Eigen::VectorXd x(d * n);
        for (int j = 0; j < d * n; ++j) x(j) = 1.2 * rng.normal();
        const double a = model.density(x), b = model.literal_density(x);
        worst_dual = std::max(worst_dual, std::abs(a - b) / std::max(1.0, std::abs(b)));
      }
    }
  note("total mass over %d models: max |mass - 1| = %.2e (tol 1e-5)", models, worst_mass);
  note("raw-tuple vs literal over %d evaluations: max err %.2e (tol 1e-12)", evaluations, worst_dual);
  o.pass = worst_mass <= 1e-5 && worst_dual <= 1e-12 && evaluations >= 50;
  o.detail = "total mass 1 +- 1e-5; dual paths agree to 1e-12";
  return o;
}

Outcome criterion7() {
  Outcome o;
  Rng rng(kSeed + 3);
  double worst1 = 0.0, worst2 = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int d = 1 + t % 2, n = 1 + (t / 2) % 2;
    const SpdMatrix K(random_spd(rng, d, 0.5));
    const Eigen::MatrixXd A = random_spd(rng, d, 0.5);
    const double s = 0.1 + 0.8 * rng.uniform();
    Eigen::VectorXd x(d * n);
    for (int i = 0; i < d * n; ++i) x(i) = 0.8 * rng.normal();
    auto phi = [&](double u) { return block_gaussian_density(SpdMatrix(u * A + (1.0 - u) * K.matrix()), n, x); };
    const double fd1 = (phi(s + 1e-5) - phi(s - 1e-5)) / 2e-5;
    auto second = [&](double h) { return (phi(s + h) - 2.0 * phi(s) + phi(s - h)) / (h * h); };
    const double fd2 = (4.0 * second(1e-3) - second(2e-3)) / 3.0;
    worst1 = std::max(worst1, std::abs(density_taylor_term(K, A, n, 1, s, x) - fd1) / std::abs(fd1));
    worst2 = std::max(worst2, std::abs(density_taylor_term(K, A, n, 2, s, x) - fd2) / std::abs(fd2));
  }
  note("k=1 max rel err %.2e, k=2 max rel err %.2e (tol 1e-5)", worst1, worst2);
  o.pass = worst1 <= 1e-5 && worst2 <= 1e-5;
  o.detail = "Taylor term vs central differences, relative 1e-5";
  return o;
}

Outcome criterion8() {
  Outcome o;
  Rng rng(kSeed + 4);
  // normalizer and posterior dual paths
  double worst_t = 0.0, worst_post = 0.0;
  for (int d : {1, 2})
    for (int m : {1, 2}) {
      InputSet in = d == 1 ? unit_input() : InputSet({scalar(1.0), scalar(-0.5)}, 1);
      NetworkConfig net = shallow(30);
      net.bias_var = 0.2;
      const SpdMatrix K = limit_kernel(net, in).output();
      const MomentTensor mom = moment_tensor(net, in, K, 2 * m - 1, 50000, kSeed + static_cast<std::uint64_t>(d));
      Eigen::VectorXd y(d);
      for (int i = 0; i < d; ++i) y(i) = rng.normal();
      const Dataset data(in, y);
      const EdgeworthModel model(m, d, 1, K, mom);
      const double quad = likelihood_integral(model, GaussianLikelihood(y));
      const double closed = normalizing_constant(K, data, mom, m);
      worst_t = std::max(worst_t, std::abs(closed / quad - 1.0));

      const EdgeworthPosterior post(model, GaussianLikelihood(y));
      const PosteriorClosedForm cf = posterior_closed_form(K, data, mom, m);
      const GridSpec g = GridSpec::uniform(d, -6.0, 6.0, 33);
      for (std::size_t i = 0; i < g.size(); ++i)
        worst_post = std::max(worst_post, std::abs(cf.density(g.point(i)) - post.density(g.point(i))));
    }
  note("normalizer closed form vs quadrature: max rel err %.2e (tol 1e-4)", worst_t);
  note("closed-form vs quadrature posterior on 33^d grids: max err %.2e (tol 1e-6)", worst_post);
  o.pass = worst_t <= 1e-4 && worst_post <= 1e-6;

  const Dataset data(unit_input(), scalar(0.5));
  const std::vector<int> widths{50, 100, 200, 400};
  const auto rows = posterior_tv_scan(shallow(50), data, 2, widths, 200000, kSeed);
  std::vector<double> w, tv;
  for (const auto& r : rows) {
    note("width=%-4d posterior tv=%.4e noise=%.1e prior tv=%.4e consistency bound=%.3e", r.width, r.tv, r.mc_noise,
         r.prior_tv, r.consistency_bound);
    w.push_back(r.width);
    tv.push_back(r.tv);
  }
  const RateFit f = fit_rate(w, tv);
  note("m=2 posterior slope=%.3f (window [-2.35, -1.5]) r2=%.4f", f.slope, f.r2);
  o.pass = o.pass && f.slope >= -2.35 && f.slope <= -1.5;
  o.detail = "normalizer 1e-4; posterior dual path 1e-6; m=2 posterior TV slope";
  return o;
}

Outcome criterion9() {
  Outcome o;
  for (int width : {20, 1000}) {
    RunConfig rc;
    rc.seed = kSeed;
    rc.network = shallow(width);
    rc.inputs = {scalar(1.0)};
    rc.samples = 200000;
    rc.grid = GridSpec::uniform(1, -8.0, 8.0, 1025);
    rc.experiment.m = 2;
    const DensityTable t = density_table(rc);
    const double g = t.window_tv("exact", "gaussian", -3.0, 3.0);
    const double e2 = t.window_tv("exact", "expansion_k2", -3.0, 3.0);
    const double e4 = t.window_tv("exact", "expansion_k4", -3.0, 3.0);
    note("width=%-4d window TV vs exact law on [-3,3]: gaussian=%.3e  k<=2=%.3e  k<=4=%.3e", width, g, e2, e4);
    note("width=%-4d same against MC true density: gaussian=%.3e  k<=2=%.3e  k<=4=%.3e  curve_edg2=%.3e", width,
         t.window_tv("true", "gaussian", -3.0, 3.0), t.window_tv("true", "expansion_k2", -3.0, 3.0),
         t.window_tv("true", "expansion_k4", -3.0, 3.0), t.window_tv("true", "curve_edg2", -3.0, 3.0));
    if (width == 20) o.pass = o.pass && e2 < g;
    if (width == 1000) o.pass = o.pass && e4 < g && e4 < e2;
  }
  o.detail = "central window: k<=2 beats Gaussian at 20; k<=4 beats both at 1000";
  return o;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const Entry entries[] = {
      {1, "shallow-ReLU coefficients", criterion1}, {2, "kernel correctness", criterion2},
      {3, "prior TV rate", criterion3},             {4, "bound sandwiches", criterion4},
      {5, "Hermite/moment identities", criterion5},     {6, "mass and dual path", criterion6},
      {7, "Taylor-term oracle", criterion7},        {8, "Bayesian closed forms", criterion8},
      {9, "figure data", criterion9},
  };
  int failed = 0;
  for (const auto& e : entries) {
    std::printf("criterion %d: %s\n", e.id, e.name);
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = e.run();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail = std::string("exception: ") + ex.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %d %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", e.id, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of 9 criteria passed\n", 9 - failed);
  return failed == 0 ? 0 : 1;
}
