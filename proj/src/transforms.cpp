#include "cmmnl/transforms.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace cmmnl {
namespace corr_transform {

Mat cholesky_factor(const Vec& w, Eigen::Index K) {
  if (w.size() != packed_size(K))
    throw ValidationError("corr_transform: packed vector length does not match K");
  Mat L = Mat::Zero(K, K);
  if (K == 0) return L;
  L(0, 0) = 1.0;
  for (Eigen::Index i = 1; i < K; ++i) {
    double rem = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double z = std::tanh(w(packed_index(i, j)));
      L(i, j) = z * std::sqrt(rem);
      rem *= (1.0 - z * z);
    }
    L(i, i) = std::sqrt(rem);
  }
  return L;
}

double log_abs_det_jacobian(const Vec& w, Eigen::Index K) {
  if (w.size() != packed_size(K))
    throw ValidationError("corr_transform: packed vector length does not match K");
  // d psi_ij / d w_ij = L(j,j) * sqrt(rem_ij) * (1 - z_ij^2), with rem_ij the
  // remaining squared norm of row i before column j.
  double acc = 0.0;
  std::vector<double> log_rem_diag(static_cast<std::size_t>(K), 0.0);  // log L(j,j)^2
  for (Eigen::Index i = 1; i < K; ++i) {
    double log_rem = 0.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double z = std::tanh(w(packed_index(i, j)));
      const double one_minus_z2 = 1.0 - z * z;
      acc += 0.5 * log_rem_diag[static_cast<std::size_t>(j)];  // log L(j,j)
      acc += 0.5 * log_rem;                                    // log sqrt(rem_ij)
      acc += std::log(one_minus_z2);                           // tanh jacobian
      log_rem += std::log(one_minus_z2);
    }
    log_rem_diag[static_cast<std::size_t>(i)] = log_rem;
  }
  return acc;
}

Vec unconstrain(const Mat& psi) {
  const Eigen::Index K = psi.rows();
  if (!is_correlation_matrix(psi))
    throw ValidationError("corr_transform: input is not a valid correlation matrix");
  Eigen::LLT<Mat> llt(psi);
  const Mat L = llt.matrixL();
  Vec w(packed_size(K));
  for (Eigen::Index i = 1; i < K; ++i) {
    double rem = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double z = L(i, j) / std::sqrt(rem);
      w(packed_index(i, j)) = std::atanh(z);
      rem *= (1.0 - z * z);
    }
  }
  return w;
}

void backward_cholesky(const Vec& w, const Mat& L, const Mat& grad_L, Vec& grad_w) {
  const Eigen::Index K = L.rows();
  for (Eigen::Index i = 1; i < K; ++i) {
    // Recompute the per-column remainders of row i.
    std::vector<double> z(static_cast<std::size_t>(i));
    std::vector<double> rem(static_cast<std::size_t>(i) + 1);
    rem[0] = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      z[static_cast<std::size_t>(j)] = std::tanh(w(packed_index(i, j)));
      const double zz = z[static_cast<std::size_t>(j)];
      rem[static_cast<std::size_t>(j) + 1] = rem[static_cast<std::size_t>(j)] * (1.0 - zz * zz);
    }
    // Reverse through L(i,i) = sqrt(rem_i), then L(i,j) = z_j * sqrt(rem_j).
    double grad_rem = L(i, i) > 0.0
                          ? grad_L(i, i) * 0.5 / L(i, i)
                          : 0.0;
    for (Eigen::Index j = i - 1; j >= 0; --j) {
      const double zj = z[static_cast<std::size_t>(j)];
      const double rj = rem[static_cast<std::size_t>(j)];
      const double sq = std::sqrt(rj);
      double gz = grad_L(i, j) * sq;
      gz += grad_rem * rj * (-2.0 * zj);
      const double grad_rem_j = grad_L(i, j) * (sq > 0.0 ? zj * 0.5 / sq : 0.0) +
                                grad_rem * (1.0 - zj * zj);
      grad_w(packed_index(i, j)) += gz * (1.0 - zj * zj);  // through tanh
      grad_rem = grad_rem_j;
    }
  }
}

void backward_jacobian_and_lkj(const Vec& w, Eigen::Index K, double eta, Vec& grad_w) {
  // Both terms are sums of c_ij * log(1 - z_ij^2):
  //   log det psi = sum_{i} sum_{m<i} log(1 - z_im^2)
  //   log |J|     = sum_{i>j} [ 1/2 sum_{m<j} (log(1-z_jm^2) + log(1-z_im^2))
  //                             + log(1 - z_ij^2) ]
  // d/dw [c * log(1 - tanh(w)^2)] = -2 * c * tanh(w).
  Mat coef = Mat::Zero(K, K);
  for (Eigen::Index i = 1; i < K; ++i)
    for (Eigen::Index m = 0; m < i; ++m) coef(i, m) += eta - 1.0;
  for (Eigen::Index i = 1; i < K; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      coef(i, j) += 1.0;
      for (Eigen::Index m = 0; m < j; ++m) {
        coef(j, m) += 0.5;
        coef(i, m) += 0.5;
      }
    }
  }
  for (Eigen::Index i = 1; i < K; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double z = std::tanh(w(packed_index(i, j)));
      grad_w(packed_index(i, j)) += -2.0 * z * coef(i, j);
    }
  }
}

}  // namespace corr_transform
}  // namespace cmmnl
