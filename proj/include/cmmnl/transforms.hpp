#pragma once

#include "cmmnl/math.hpp"
#include "cmmnl/types.hpp"

namespace cmmnl {

// Softplus map from the real line onto (0, inf).
namespace positive_transform {

inline double constrain(double raw) { return softplus(raw); }
inline double unconstrain(double value) { return inv_softplus(value); }
// d constrain / d raw = sigmoid(raw); log Jacobian of the map.
inline double log_jacobian(double raw) { return log_sigmoid(raw); }

inline Vec constrain(const Vec& raw) {
  return raw.unaryExpr([](double x) { return softplus(x); });
}
inline double log_jacobian(const Vec& raw) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < raw.size(); ++i) acc += log_sigmoid(raw(i));
  return acc;
}

}  // namespace positive_transform

// Map from K(K-1)/2 unconstrained reals to a correlation matrix, through
// tanh partial correlations and a row-wise Cholesky construction:
//   z_ij = tanh(w_ij)
//   L(i,j) = z_ij * sqrt(rem),  rem = prod_{m<j} (1 - z_im^2),  L(i,i) = sqrt(rem)
// so psi = L L^T has unit diagonal. Entries of w are stored row-major over
// the strict lower triangle: (1,0), (2,0), (2,1), ...
namespace corr_transform {

inline Eigen::Index packed_size(Eigen::Index K) { return K * (K - 1) / 2; }
inline Eigen::Index packed_index(Eigen::Index i, Eigen::Index j) {
  return i * (i - 1) / 2 + j;
}

// Cholesky factor with unit-norm rows.
Mat cholesky_factor(const Vec& w, Eigen::Index K);

inline Mat correlation(const Vec& w, Eigen::Index K) {
  const Mat L = cholesky_factor(w, K);
  Mat psi = L * L.transpose();
  for (Eigen::Index i = 0; i < K; ++i) psi(i, i) = 1.0;
  return psi;
}

// log |det d vech_strict(psi) / d w|; the map is triangular in the row-major
// ordering, so the determinant is the product of the diagonal sensitivities.
double log_abs_det_jacobian(const Vec& w, Eigen::Index K);

// Inverse map: correlation matrix -> unconstrained vector.
Vec unconstrain(const Mat& psi);

// Reverse-mode helper: given dF/dL for the Cholesky factor (lower triangle,
// including the diagonal), accumulate dF/dw. z = tanh(w) must match w.
void backward_cholesky(const Vec& w, const Mat& L, const Mat& grad_L, Vec& grad_w);

// Gradient of [log_abs_det_jacobian(w) + (eta - 1) * log det psi(w)] with
// respect to w; both terms are weighted sums of log(1 - z_ij^2), so the
// gradient is -2 * z_ij * coefficient. Accumulates into grad_w.
void backward_jacobian_and_lkj(const Vec& w, Eigen::Index K, double eta, Vec& grad_w);

}  // namespace corr_transform

}  // namespace cmmnl
