#pragma once

#include <optional>
#include <vector>

#include "cmmnl/types.hpp"

namespace cmmnl {

// Omega = diag(tau) * psi * diag(tau). Rejects non-positive scales and
// correlation matrices that fail Cholesky.
Mat assemble_covariance(const Vec& tau, const Mat& psi);

// eta_nt = eta_n + mu_t, componentwise over [fixed, random].
TasteVector apply_context_shift(const TasteVector& eta, const ContextShift& shift);

// Systematic utilities V_j = eta . x_j (+ beta_ps * ln PS_j when present).
// Unavailable alternatives carry -inf, which downstream softmax treats as
// zero probability. beta_ps must be supplied iff the occasion has path sizes.
Vec systematic_utility(const ChoiceOccasion& occ, const TasteVector& eta,
                       std::optional<double> beta_ps = std::nullopt);

// Stabilized softmax over available alternatives; zero elsewhere.
Vec mnl_probabilities(const Vec& utilities, const BoolArray& availability);

// Log MNL probability of the observed choice.
double choice_log_likelihood(const ChoiceOccasion& occ, const TasteVector& eta_nt,
                             std::optional<double> beta_ps = std::nullopt);

// A route is a sequence of (link id, length in meters).
struct Route {
  std::vector<std::pair<std::int64_t, double>> links;
};

// Length-weighted reciprocal-count path size:
//   PS_i = sum_{a in route i} (l_a / L_i) * (1 / N_a),
// where N_a counts the routes in the choice set containing link a.
Vec path_size(const std::vector<Route>& choice_set);

}  // namespace cmmnl
