#pragma once

#include <cmath>
#include <random>

#include "cmmnl/errors.hpp"
#include "cmmnl/math.hpp"
#include "cmmnl/types.hpp"

namespace cmmnl {

// Hyperparameters of the hierarchical priors. xi0_diag / sigma0_diag are
// prior variances (diagonal covariances).
struct PriorConfig {
  Vec lambda0;        // L
  Vec xi0_diag;       // L, > 0
  Vec mu0;            // K
  Vec sigma0_diag;    // K, > 0
  double halfcauchy_scale = 10.0;
  double lkj_eta = 2.0;
  double sigma_c = 0.1;  // standard deviation of the per-occasion shift noise

  static PriorConfig defaults(Eigen::Index L, Eigen::Index K) {
    PriorConfig p;
    p.lambda0 = Vec::Zero(L);
    p.xi0_diag = Vec::Constant(L, 100.0);
    p.mu0 = Vec::Zero(K);
    p.sigma0_diag = Vec::Constant(K, 100.0);
    return p;
  }

  void validate(Eigen::Index L, Eigen::Index K) const {
    if (lambda0.size() != L || xi0_diag.size() != L)
      throw ValidationError("prior config: lambda0/xi0 length must equal L");
    if (mu0.size() != K || sigma0_diag.size() != K)
      throw ValidationError("prior config: mu0/sigma0 length must equal K");
    if ((xi0_diag.array() <= 0.0).any() || (sigma0_diag.array() <= 0.0).any())
      throw ValidationError("prior config: prior variances must be strictly positive");
    if (!(halfcauchy_scale > 0.0)) throw ValidationError("prior config: sigma0 must be > 0");
    if (!(lkj_eta > 0.0)) throw ValidationError("prior config: lkj_eta must be > 0");
    if (!(sigma_c > 0.0)) throw ValidationError("prior config: sigma_c must be > 0");
  }
};

// Gaussian log density with diagonal covariance given as variances.
double log_mvn_diag(const Vec& x, const Vec& mean, const Vec& var_diag);

// Half-Cauchy log density on [0, inf); -inf outside the support.
double log_half_cauchy(double x, double scale);

// log c_K(eta) such that the LKJ log density is
//   log c_K(eta) + (eta - 1) * log det(psi).
double lkj_log_normalizer(int K, double eta);

double log_lkj(const Mat& psi, double eta);

// mean + chol_cov * eps with standard normal eps.
template <typename Rng>
Vec sample_mvn(const Vec& mean, const Mat& chol_cov, Rng& rng) {
  if (chol_cov.rows() != mean.size() || chol_cov.cols() != mean.size())
    throw ValidationError("sample_mvn: dimension mismatch");
  Vec eps(mean.size());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = rng.next_normal();
  return mean + chol_cov.template triangularView<Eigen::Lower>() * eps;
}

template <typename Rng>
double sample_half_cauchy(double scale, Rng& rng) {
  if (!(scale > 0.0)) throw ValidationError("sample_half_cauchy: scale must be > 0");
  const double u = rng.next_uniform();
  return std::abs(scale * std::tan(1.5707963267948966192 * u));
}

// Correlation matrix draw via independent partial correlations on a C-vine;
// column j (1-based) uses 2*Beta(a_j, a_j) - 1 with a_j = eta + (K-1-j)/2.
template <typename Rng>
Mat sample_lkj(int K, double eta, Rng& rng) {
  if (K < 1) throw ValidationError("sample_lkj: K must be >= 1");
  if (!(eta > 0.0)) throw ValidationError("sample_lkj: eta must be > 0");
  Mat L = Mat::Zero(K, K);
  L(0, 0) = 1.0;
  for (int i = 1; i < K; ++i) {
    double rem = 1.0;
    for (int j = 0; j < i; ++j) {
      const double a = eta + 0.5 * (K - 2 - j);
      std::gamma_distribution<double> g(a, 1.0);
      const double x = g(rng);
      const double y = g(rng);
      const double z = 2.0 * (x / (x + y)) - 1.0;
      L(i, j) = z * std::sqrt(rem);
      rem *= (1.0 - z * z);
    }
    L(i, i) = std::sqrt(rem);
  }
  Mat psi = L * L.transpose();
  for (int i = 0; i < K; ++i) psi(i, i) = 1.0;
  return psi;
}

}  // namespace cmmnl
