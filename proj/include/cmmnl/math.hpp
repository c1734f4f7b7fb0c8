#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace cmmnl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, 1>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLogTwoPi = 1.8378770664093454836;

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// Inverse of softplus on (0, inf).
inline double inv_softplus(double y) {
  if (y > 20.0) return y;  // softplus is the identity to double precision here
  return std::log(std::expm1(y));
}

inline double log_sigmoid(double x) { return -softplus(-x); }

// log(sum(exp(v))) with max-subtraction; tolerates -inf entries (masked
// alternatives). Returns -inf when all entries are -inf.
template <typename Derived>
double log_sum_exp(const Eigen::MatrixBase<Derived>& v) {
  const double m = v.maxCoeff();
  if (!(m > kNegInf)) return kNegInf;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::exp(v(i) - m);
  return m + std::log(acc);
}

// Stabilized softmax; -inf entries map to probability zero.
template <typename Derived>
Vec softmax(const Eigen::MatrixBase<Derived>& v) {
  const double lse = log_sum_exp(v);
  Vec p(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    p(i) = v(i) > kNegInf ? std::exp(v(i) - lse) : 0.0;
  }
  return p;
}

// Gaussian tail P(Z > x).
inline double normal_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace cmmnl
