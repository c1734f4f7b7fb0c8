#include "cmmnl/choice_model.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <sstream>
#include <unordered_map>

namespace cmmnl {

Mat assemble_covariance(const Vec& tau, const Mat& psi) {
  const Eigen::Index K = tau.size();
  if (psi.rows() != K || psi.cols() != K)
    throw ValidationError("assemble_covariance: psi dimensions do not match tau");
  for (Eigen::Index k = 0; k < K; ++k) {
    if (!(tau(k) > 0.0))
      throw ValidationError("assemble_covariance: tau(" + std::to_string(k) +
                            ") is not strictly positive");
  }
  if (!is_correlation_matrix(psi))
    throw ValidationError("assemble_covariance: psi is not a valid correlation matrix");
  return tau.asDiagonal() * psi * tau.asDiagonal();
}

TasteVector apply_context_shift(const TasteVector& eta, const ContextShift& shift) {
  if (shift.mu.size() != eta.size())
    throw ValidationError("apply_context_shift: shift length does not match taste vector");
  TasteVector out;
  const Eigen::Index L = eta.fixed.size();
  out.fixed = eta.fixed + shift.mu.head(L);
  out.random = eta.random + shift.mu.tail(eta.random.size());
  return out;
}

Vec systematic_utility(const ChoiceOccasion& occ, const TasteVector& eta,
                       std::optional<double> beta_ps) {
  if (occ.attributes.cols() != eta.size())
    throw ValidationError("systematic_utility: attribute columns do not match taste vector");
  if (occ.has_path_size() != beta_ps.has_value())
    throw ValidationError(
        "systematic_utility: beta_ps must be supplied iff the occasion has path sizes");
  Vec v = occ.attributes * eta.concat();
  if (beta_ps) v += *beta_ps * occ.log_path_size;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (!occ.availability(j)) {
      v(j) = kNegInf;
    } else if (!std::isfinite(v(j))) {
      throw NumericError("systematic_utility: non-finite utility for alternative " +
                         std::to_string(j));
    }
  }
  return v;
}

Vec mnl_probabilities(const Vec& utilities, const BoolArray& availability) {
  if (utilities.size() != availability.size())
    throw ValidationError("mnl_probabilities: availability length mismatch");
  bool any = false;
  Vec masked = utilities;
  for (Eigen::Index j = 0; j < masked.size(); ++j) {
    if (!availability(j)) {
      masked(j) = kNegInf;
    } else {
      any = true;
    }
  }
  if (!any) throw ValidationError("mnl_probabilities: all alternatives unavailable");
  return softmax(masked);
}

double choice_log_likelihood(const ChoiceOccasion& occ, const TasteVector& eta_nt,
                             std::optional<double> beta_ps) {
  const Vec v = systematic_utility(occ, eta_nt, beta_ps);
  const double lse = log_sum_exp(v);
  return v(occ.chosen) - lse;
}

Vec path_size(const std::vector<Route>& choice_set) {
  if (choice_set.empty()) throw ValidationError("path_size: empty choice set");
  std::unordered_map<std::int64_t, int> link_count;
  for (const auto& route : choice_set) {
    if (route.links.empty()) throw ValidationError("path_size: empty route");
    for (const auto& [id, len] : route.links) {
      if (!(len > 0.0))
        throw ValidationError("path_size: non-positive length for link " + std::to_string(id));
      ++link_count[id];
    }
  }
  Vec ps(static_cast<Eigen::Index>(choice_set.size()));
  for (std::size_t i = 0; i < choice_set.size(); ++i) {
    double total = 0.0;
    for (const auto& [id, len] : choice_set[i].links) total += len;
    double acc = 0.0;
    for (const auto& [id, len] : choice_set[i].links) {
      acc += (len / total) * (1.0 / link_count.at(id));
    }
    ps(static_cast<Eigen::Index>(i)) = acc;
  }
  return ps;
}

}  // namespace cmmnl
