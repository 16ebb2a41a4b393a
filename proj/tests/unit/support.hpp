#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "cgedge/gausslin.hpp"
#include "cgedge/rng.hpp"

namespace testsupport {

// E[f(X)], X ~ N(mean, cov), by tensor Gauss–Hermite through the Cholesky factor.
inline double gh_expect(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::MatrixXd& cov,
                        int order, const Eigen::VectorXd& mean = Eigen::VectorXd()) {
  const auto rule = cgedge::QuadratureRule::gauss_hermite(order);
  const Eigen::MatrixXd L = cov.llt().matrixL();
  const auto p = static_cast<std::size_t>(cov.rows());
  const Eigen::VectorXd mu = mean.size() ? mean : Eigen::VectorXd::Zero(cov.rows());
  std::vector<int> idx(p, 0);
  Eigen::VectorXd u(cov.rows());
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t i = 0; i < p; ++i) {
      u(static_cast<Eigen::Index>(i)) = rule.nodes[static_cast<std::size_t>(idx[i])];
      w *= rule.weights[static_cast<std::size_t>(idx[i])];
    }
    total += w * f(mu + L * u);
    std::size_t i = 0;
    while (i < p && ++idx[i] == order) idx[i++] = 0;
    if (i == p) break;
  }
  return total;
}

inline Eigen::MatrixXd random_spd(cgedge::Rng& rng, int d, double ridge) {
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  return g * g.transpose() / d + ridge * Eigen::MatrixXd::Identity(d, d);
}

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x(i++) = a;
  return x;
}

}  // namespace testsupport
