#include "cmmnl/distributions.hpp"

#include <Eigen/Cholesky>

namespace cmmnl {

double log_mvn_diag(const Vec& x, const Vec& mean, const Vec& var_diag) {
  if (x.size() != mean.size() || x.size() != var_diag.size())
    throw ValidationError("log_mvn_diag: length mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = var_diag(i);
    if (!(v > 0.0)) throw ValidationError("log_mvn_diag: non-positive variance");
    const double r = x(i) - mean(i);
    acc += -0.5 * (kLogTwoPi + std::log(v) + r * r / v);
  }
  return acc;
}

double log_half_cauchy(double x, double scale) {
  if (!(scale > 0.0)) throw ValidationError("log_half_cauchy: scale must be > 0");
  if (x < 0.0) return kNegInf;
  const double r = x / scale;
  return std::log(2.0) - std::log(M_PI) - std::log(scale) - std::log1p(r * r);
}

double lkj_log_normalizer(int K, double eta) {
  if (K < 1) throw ValidationError("lkj_log_normalizer: K must be >= 1");
  if (!(eta > 0.0)) throw ValidationError("lkj_log_normalizer: eta must be > 0");
  // log of 1 / integral of det(psi)^(eta-1) over the correlation matrices.
  double log_z = 0.0;
  for (int k = 1; k <= K - 1; ++k) {
    const double a = eta + 0.5 * (K - k - 1);
    const double log_beta = 2.0 * std::lgamma(a) - std::lgamma(2.0 * a);
    log_z += (2.0 * eta - 2.0 + K - k) * (K - k) * std::log(2.0) + (K - k) * log_beta;
  }
  return -log_z;
}

double log_lkj(const Mat& psi, double eta) {
  const int K = static_cast<int>(psi.rows());
  if (!is_correlation_matrix(psi))
    throw ValidationError("log_lkj: psi is not a valid correlation matrix");
  Eigen::LLT<Mat> llt(psi);
  double log_det = 0.0;
  for (int i = 0; i < K; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
  return lkj_log_normalizer(K, eta) + (eta - 1.0) * log_det;
}

}  // namespace cmmnl
