#pragma once

// Independent reference computations used by unit and acceptance tests.
// None of these call into the library under test.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace altprobe::oracle {

/// MCC straight from the closed form, in long double.
inline long double mcc(long double tp, long double tn, long double fp, long double fn) {
  const long double a = tp + fp, b = tp + fn, c = tn + fp, d = tn + fn;
  if (a == 0 || b == 0 || c == 0 || d == 0) return 0;
  return (tp * tn - fp * fn) / std::sqrt(a * b * c * d);
}

/// Top-k singular values by power iteration on X^T X with deflation.
inline std::vector<double> singular_values(const Eigen::MatrixXd& x, std::size_t k, std::uint64_t seed = 1) {
  Eigen::MatrixXd g = x.transpose() * x;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> out;
  for (std::size_t i = 0; i < k; ++i) {
    Eigen::VectorXd v(g.cols());
    for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = normal(rng);
    v.normalize();
    double lambda = 0;
    for (int it = 0; it < 20000; ++it) {
      Eigen::VectorXd w = g * v;
      const double next = v.dot(w);
      w.normalize();
      const double change = (w - v).norm();
      v = w;
      if (std::abs(next - lambda) <= 1e-15 * std::abs(next) && change < 1e-12) {
        lambda = next;
        break;
      }
      lambda = next;
    }
    out.push_back(std::sqrt(std::max(lambda, 0.0)));
    g -= lambda * v * v.transpose();
  }
  return out;
}

/// Central finite-difference gradient.
template <typename F>
Eigen::VectorXd numeric_gradient(F&& f, Eigen::VectorXd theta, double h = 1e-5) {
  Eigen::VectorXd g(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double t = theta[i];
    theta[i] = t + h;
    const double up = f(theta);
    theta[i] = t - h;
    const double down = f(theta);
    theta[i] = t;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

/// Relative error used by gradient checks.
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-12});
}

}  // namespace altprobe::oracle
