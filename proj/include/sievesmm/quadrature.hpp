#pragma once

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "sievesmm/errors.hpp"

namespace sievesmm {

// Adaptive Gauss-Kronrod (7/15) integral of f over [a, b]; a or b may be infinite.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-10, double* error = nullptr) {
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(std::forward<F>(f), a, b, 20,
                                                                                    rel_tol, &err);
  if (error) *error = err;
  return v;
}

// Nodes and weights such that E[g(Z)], Z ~ N(0,1), is approximated by sum_i w_i g(x_i).
struct NormalQuadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Hermite rule via Golub-Welsch, rescaled to the standard normal law.
inline NormalQuadrature gauss_hermite_normal(std::size_t n) {
  detail::require(n >= 1, "gauss_hermite_normal: need at least one node");
  // Jacobi matrix of the probabilists' Hermite polynomials: off-diagonal sqrt(i).
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 1; i < n; ++i) {
    const double b = std::sqrt(static_cast<double>(i));
    J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = b;
    J(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(i)) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  NormalQuadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    q.nodes[i] = es.eigenvalues()(static_cast<Eigen::Index>(i));
    const double v0 = es.eigenvectors()(0, static_cast<Eigen::Index>(i));
    q.weights[i] = v0 * v0;
  }
  // Symmetrize so odd moments vanish exactly up to rounding of the weights.
  for (std::size_t i = 0; i < n / 2; ++i) {
    const std::size_t j = n - 1 - i;
    const double x = 0.5 * (q.nodes[j] - q.nodes[i]);
    const double w = 0.5 * (q.weights[i] + q.weights[j]);
    q.nodes[i] = -x;
    q.nodes[j] = x;
    q.weights[i] = q.weights[j] = w;
  }
  if (n % 2 == 1) q.nodes[n / 2] = 0.0;
  double total = 0.0;
  for (double w : q.weights) total += w;
  for (double& w : q.weights) w /= total;
  return q;
}

} // namespace sievesmm
