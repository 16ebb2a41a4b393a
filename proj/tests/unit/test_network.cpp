#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "cgedge/errors.hpp"
#include "cgedge/metrics.hpp"
#include "cgedge/moments.hpp"
#include "cgedge/network.hpp"
#include "cgedge/rng.hpp"
#include "support.hpp"

using namespace cgedge;
using testsupport::vec;

namespace {

NetworkConfig shallow(int width) {
  NetworkConfig c;
  c.hidden_widths = {width};
  c.weight_var = std::numbers::sqrt2;
  return c;
}

InputSet one() { return InputSet({vec({1.0})}, 1); }

struct Stats {
  double mean, se;
};

template <typename F>
Stats mc(int n, F draw) {
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = draw(i);
    s += v;
    s2 += v * v;
  }
  const double m = s / n;
  return {m, std::sqrt((s2 / n - m * m) / (n - 1))};
}

}  // namespace

TEST_SUITE("network") {
  TEST_CASE("config and input validation") {
    NetworkConfig c = shallow(5);
    c.hidden_widths = {5, 5};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = shallow(0);
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = shallow(3);
    c.weight_var = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(InputSet({vec({0.0})}, 1), ConfigError);
    CHECK_THROWS_AS(InputSet({vec({1.0}), vec({1.0})}, 1), ConfigError);
    CHECK_THROWS_AS(InputSet({vec({1.0, 2.0})}, 1), ConfigError);
    CHECK_THROWS_AS(Activation::from_name("gelu"), ConfigError);
  }

  TEST_CASE("forward samples are deterministic and ordered input-fastest") {
    NetworkConfig c = shallow(7);
    c.output_copies = 3;
    const InputSet in({vec({1.0}), vec({-0.5})}, 1);
    Rng a = Rng::substream(3, streams::kHiddenWeights, 0), b = Rng::substream(3, streams::kHiddenWeights, 0);
    const auto s1 = forward_sample(c, in, a), s2 = forward_sample(c, in, b);
    CHECK(s1.output.size() == 6);
    CHECK(s1.output == s2.output);
    CHECK(s1.last_hidden.rows() == 7);
  }

  TEST_CASE("two linear layers: output variance C_W^2") {
    NetworkConfig c;
    c.hidden_widths = {4};
    c.weight_var = 1.7;
    c.activation = Activation::identity();
    const auto m = mc(100000, [&](int i) {
      Rng r = Rng::substream(100 + i, streams::kHiddenWeights);
      return forward_sample(c, one(), r).output(0);
    });
    CHECK(std::abs(m.mean) <= 4.0 * m.se);
    const auto v = mc(100000, [&](int i) {
      Rng r = Rng::substream(100 + i, streams::kHiddenWeights);
      const double z = forward_sample(c, one(), r).output(0);
      return z * z;
    });
    CHECK(std::abs(v.mean - 1.7 * 1.7) <= 4.0 * v.se);
  }

  TEST_CASE("conditional covariance: chi-square mean and positivity") {
    NetworkConfig c;
    c.hidden_widths = {6};
    c.weight_var = 1.3;
    c.bias_var = 0.0;
    c.activation = Activation::identity();
    Rng rng(4);
    const auto m = mc(100000, [&](int) { return conditional_cov_sample(c, one(), rng)(0, 0); });
    CHECK(std::abs(m.mean - 1.3 * 1.3) <= 4.0 * m.se);

    c.bias_var = 0.4;
    for (int i = 0; i < 100; ++i) {
      const Eigen::MatrixXd a = conditional_cov_sample(c, one(), rng);
      CHECK(a.rows() == 1);
      CHECK(a(0, 0) >= 0.4);
    }
    const InputSet three({vec({1.0}), vec({-2.0}), vec({0.5})}, 1);
    c.activation = Activation::tanh();
    for (int i = 0; i < 50; ++i) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(conditional_cov_sample(c, three, rng));
      CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
  }

  TEST_CASE("conditional covariance matches the realized hidden state") {
    NetworkConfig c;
    c.depth = 2;
    c.hidden_widths = {5, 4};
    c.bias_var = 0.3;
    c.weight_var = 1.1;
    c.activation = Activation::tanh();
    const InputSet in({vec({1.0, 0.2}), vec({-0.4, 0.9})}, 2);
    c.input_dim = 2;
    Rng a(9), b(9);
    const Eigen::MatrixXd A = conditional_cov_sample(c, in, a);
    const Eigen::MatrixXd h = forward_sample(c, in, b).last_hidden;  // n_L × d pre-activations
    const Eigen::MatrixXd s = h.unaryExpr([](double v) { return std::tanh(v); });
    const Eigen::MatrixXd ref = 0.3 * Eigen::MatrixXd::Ones(2, 2) + (1.1 / 4.0) * s.transpose() * s;
    CHECK((A - ref).norm() < 1e-12);
  }

  TEST_CASE("shallow ReLU: E[A] = 1 within 4 SE at 1e6 draws") {
    const NetworkConfig c = shallow(20);
    Rng rng(17);
    const auto m = mc(1000000, [&](int) { return conditional_cov_sample(c, one(), rng)(0, 0); });
    CHECK(std::abs(m.mean - 1.0) <= 4.0 * m.se);
  }

  TEST_CASE("limit kernel examples") {
    const LimitKernel k = limit_kernel(shallow(20), one());
    REQUIRE(k.per_layer.size() == 2);
    CHECK(std::abs(k.output()(0, 0) - 1.0) <= 1e-10);
    CHECK(k.per_layer[0](0, 0) == doctest::Approx(std::numbers::sqrt2).epsilon(1e-15));

    NetworkConfig id;
    id.depth = 3;
    id.hidden_widths = {2, 2, 2};
    id.activation = Activation::identity();
    for (const auto& layer : limit_kernel(id, one()).per_layer) CHECK(std::abs(layer(0, 0) - 1.0) <= 1e-12);

    NetworkConfig r;
    r.hidden_widths = {3};
    r.bias_var = 1.0;
    const LimitKernel two = limit_kernel(r, InputSet({vec({1.0}), vec({-1.0})}, 1));
    CHECK(two.relu_closed_form_gap <= 1e-6);
  }

  TEST_CASE("first-layer kernel is exact and deficient inputs fail") {
    NetworkConfig c;
    c.input_dim = 2;
    c.hidden_widths = {3};
    c.bias_var = 0.25;
    c.weight_var = 1.5;
    const InputSet in({vec({1.0, 2.0}), vec({-0.5, 0.3})}, 2);
    const auto k1 = limit_kernel(c, in).per_layer[0];
    CHECK(k1(0, 1) == doctest::Approx(0.25 + 0.75 * (-0.5 + 0.6)).epsilon(1e-15));
    c.bias_var = 0.0;
    c.input_dim = 1;
    CHECK_THROWS_AS(limit_kernel(c, InputSet({vec({1.0}), vec({2.0})}, 1)), NotPositiveDefinite);
  }

  TEST_CASE("ReLU quadrature against arc-cosine on 20 seeded configurations") {
    Rng rng(23);
    for (int t = 0; t < 20; ++t) {
      NetworkConfig c;
      c.input_dim = 2;
      c.depth = 1 + t % 3;
      c.hidden_widths.assign(static_cast<std::size_t>(c.depth), 4);
      c.bias_var = 0.1 + rng.uniform();
      c.weight_var = 0.5 + 1.5 * rng.uniform();
      const InputSet in({vec({rng.normal(), rng.normal()}), vec({rng.normal(), rng.normal()})}, 2);
      CHECK(limit_kernel(c, in).relu_closed_form_gap <= 1e-6);
    }
  }

  TEST_CASE("E[A] approaches K with width for deep networks") {
    // Depth 2: E[A] = C_b + C_W·E[g(A1)] with g(v) = E[tanh(√v Z)²] and A1
    // the first-layer conditional covariance. Subtracting g'(K1)(A1 − K1),
    // which has mean zero, leaves noise O(1/n) below the O(1/n) bias.
    NetworkConfig c;
    c.depth = 2;
    c.bias_var = 0.2;
    c.weight_var = 2.5;
    c.activation = Activation::tanh();
    const InputSet in = one();
    const auto rule = QuadratureRule::gauss_hermite(64);
    auto g = [&](double v) {
      double s = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * std::pow(std::tanh(std::sqrt(v) * rule.nodes[i]), 2);
      return s;
    };
    double prev = 1e9;
    for (int w : {25, 50, 100, 200}) {
      const NetworkConfig cw = c.with_uniform_width(w);
      NetworkConfig first = cw;
      first.depth = 1;
      first.hidden_widths = {w};
      const double K = limit_kernel(cw, in).output()(0, 0);
      const double K1 = limit_kernel(first, in).output()(0, 0);
      const double slope = (g(K1 * 1.001) - g(K1 * 0.999)) / (0.002 * K1);
      Rng rng(31 + w);
      const auto m = mc(20000, [&](int) {
        const double a1 = conditional_cov_sample(first, in, rng)(0, 0);
        return c.bias_var + c.weight_var * (g(a1) - slope * (a1 - K1));
      });
      const double gap = std::abs(m.mean - K);
      CHECK(gap > 4.0 * m.se);
      CHECK(gap < prev);
      prev = gap;
    }
  }

  TEST_CASE("even central moments of A scale as width^-p") {
    std::vector<double> widths, second, fourth;
    for (int w : {50, 100, 200, 400}) {
      const NetworkConfig c = shallow(w);
      Rng rng(41 + w);
      double s2 = 0.0, s4 = 0.0;
      const int n = 200000;
      for (int i = 0; i < n; ++i) {
        const double e = conditional_cov_sample(c, one(), rng)(0, 0) - 1.0;
        s2 += e * e;
        s4 += e * e * e * e;
      }
      widths.push_back(w);
      second.push_back(s2 / n);
      fourth.push_back(s4 / n);
    }
    const RateFit f2 = fit_rate(widths, second), f4 = fit_rate(widths, fourth);
    CHECK(std::abs(f2.slope + 1.0) <= 0.3);
    CHECK(std::abs(f4.slope + 2.0) <= 0.3);
  }
}

TEST_SUITE("moments") {
  TEST_CASE("canonicalization and the k = 0 entry") {
    CHECK(MomentTensor::canonicalize({{1, 0}, {0, 0}}) == PairSeq{{0, 0}, {0, 1}});
    const MomentTensor t(2, 0);
    CHECK(t.at({}).estimate == 1.0);
    const SpdMatrix K(Eigen::MatrixXd::Identity(1, 1));
    const MomentTensor z = moment_tensor(shallow(5), one(), K, 0, 1000, 1);
    CHECK(z.entries().size() == 1);
    CHECK(z.at({}).estimate == 1.0);
    CHECK(MomentTensor::canonical_sequences(2, 2).size() == 1 + 3 + 6);
  }

  TEST_CASE("shallow ReLU tensor: k = 1 centred, k = 2 near 5/n") {
    for (int n : {1, 20}) {
      const NetworkConfig c = shallow(n);
      const SpdMatrix K = limit_kernel(c, one()).output();
      const MomentTensor t = moment_tensor(c, one(), K, 3, 400000, 77);
      const PairSeq k1{{0, 0}}, k2{{0, 0}, {0, 0}};
      CHECK(std::abs(t.at(k1).estimate) <= 4.0 * t.at(k1).std_err);
      CHECK(std::abs(t.at(k2).estimate - 5.0 / n) <= 4.0 * t.at(k2).std_err);
      CHECK(t.samples() == 400000);
    }
  }

  TEST_CASE("tensor entries are symmetric under pair reordering") {
    NetworkConfig c;
    c.hidden_widths = {8};
    c.bias_var = 0.3;
    const InputSet in({vec({1.0}), vec({-0.7})}, 1);
    const SpdMatrix K = limit_kernel(c, in).output();
    const MomentTensor t = moment_tensor(c, in, K, 3, 5000, 3);
    CHECK(t.at({{0, 1}, {1, 1}}).estimate == t.at({{1, 1}, {1, 0}}).estimate);
    CHECK(t.at({{1, 0}, {0, 0}, {0, 1}}).estimate == t.at({{0, 1}, {0, 1}, {0, 0}}).estimate);
    // raw products accumulated directly agree with the canonical entry
    Rng rng = Rng::substream(3, streams::kMomentMc, 0);
    const Eigen::MatrixXd w = K.inv_sqrt();
    double s = 0.0;
    for (int i = 0; i < 4096; ++i) {
      const Eigen::MatrixXd q = w * (conditional_cov_sample(c, in, rng) - K.matrix()) * w;
      s += q(1, 0) * q(1, 1);
    }
    Rng rng2 = Rng::substream(3, streams::kMomentMc, 1);
    for (int i = 0; i < 5000 - 4096; ++i) {
      const Eigen::MatrixXd q = w * (conditional_cov_sample(c, in, rng2) - K.matrix()) * w;
      s += q(1, 0) * q(1, 1);
    }
    CHECK(t.at({{1, 1}, {1, 0}}).estimate == doctest::Approx(s / 5000).epsilon(1e-12));
  }

  TEST_CASE("thread count does not change the estimate") {
    const NetworkConfig c = shallow(10);
    const SpdMatrix K = limit_kernel(c, one()).output();
    set_worker_threads(1);
    const MomentTensor a = moment_tensor(c, one(), K, 3, 20000, 5);
    set_worker_threads(4);
    const MomentTensor b = moment_tensor(c, one(), K, 3, 20000, 5);
    set_worker_threads(0);
    for (const auto& [seq, e] : a.entries()) CHECK(e.estimate == b.at(seq).estimate);
  }

  TEST_CASE("exact shallow moments") {
    for (int n : {1, 7, 20, 100}) {
      CHECK(shallow_relu_moments(n, 1) == Rational(0));
      CHECK(shallow_relu_moments(n, 2) == Rational(5, n));
      CHECK(shallow_relu_moments(n, 3) == Rational(44, static_cast<std::int64_t>(n) * n));
      CHECK(shallow_relu_moments(n, 4) ==
            Rational(633 + 75 * (n - 1), static_cast<std::int64_t>(n) * n * n));
    }
    CHECK(shallow_relu_moments(20, 2) / Rational(8) == Rational(5, 160));
    CHECK(shallow_relu_moments(20, 3) / Rational(48) == Rational(11, 12 * 400));
    CHECK_THROWS(shallow_relu_moments(20, 0));
    CHECK_THROWS(shallow_relu_moments(20, 5));
  }

  TEST_CASE("cache round trip") {
    const NetworkConfig c = shallow(6);
    const SpdMatrix K = limit_kernel(c, one()).output();
    const MomentTensor t = moment_tensor(c, one(), K, 2, 3000, 8);
    const std::string path = "moment_cache_roundtrip.json";
    save_moment_cache(path, MomentCache{"abc123", K.matrix(), 8, t});
    const MomentCache back = load_moment_cache(path);
    CHECK(back.config_hash == "abc123");
    CHECK(back.seed == 8);
    CHECK(back.tensor.samples() == 3000);
    for (const auto& [seq, e] : t.entries()) {
      CHECK(back.tensor.at(seq).estimate == e.estimate);
      CHECK(back.tensor.at(seq).std_err == e.std_err);
    }
    std::remove(path.c_str());
  }
}
