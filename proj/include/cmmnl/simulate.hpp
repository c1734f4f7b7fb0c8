#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cmmnl/rng.hpp"
#include "cmmnl/types.hpp"

namespace cmmnl {

struct AttributeDist {
  enum class Kind { normal, uniform };
  Kind kind = Kind::normal;
  double a = 0.0;  // mean / lower bound
  double b = 1.0;  // sd / upper bound
};

struct ContextDistSpec {
  enum class Dist { bernoulli, exponential, uniform };
  std::string name;
  ContextKind kind = ContextKind::binary;
  Dist dist = Dist::bernoulli;
  double p = 0.5;     // bernoulli
  double rate = 1.0;  // exponential
  double lo = 0.0;    // uniform
  double hi = 1.0;
};

// Library of planted shift functions c -> R^(L+K). The nonlinear shapes
// mirror the behaviours the context model is meant to capture: a shift
// active only in one cell of two binary dimensions, a saturating response
// to a continuous dimension, and a linear effect gated off by a binary
// dimension.
struct PlantedShift {
  enum class Kind { none, linear, interaction_cells, saturating, gated_linear };
  Kind kind = Kind::none;
  Mat matrix;           // linear: (L+K) x C
  int dim_a = 0;        // interaction_cells: the two binary dims
  int dim_b = 1;
  Vec target;           // interaction_cells: added when both dims are 1
  int dim = 0;          // saturating / gated_linear: continuous dim
  Vec amplitude;        // saturating: amplitude * (1 - exp(-rate * c[dim]))
  double rate = 1.0;
  int gate_dim = 1;     // gated_linear: effect only when c[gate_dim] == 0
  Vec slope;            // gated_linear: slope * c[dim] * (1 - c[gate_dim])

  Vec eval(const Vec& c, Eigen::Index n_params) const;
  nlohmann::json to_json() const;
  static PlantedShift from_json(const nlohmann::json& j);
};

struct SimSpec {
  Eigen::Index n_individuals = 100;  // N
  Eigen::Index n_occasions = 5;      // T per individual
  Eigen::Index n_alternatives = 3;   // J
  Eigen::Index n_fixed = 1;          // L
  Eigen::Index n_random = 0;         // K
  std::vector<AttributeDist> attributes;  // per column; empty = standard normal
  std::vector<ContextDistSpec> context;   // C entries
  Vec true_alpha;  // L
  Vec true_zeta;   // K
  Vec true_tau;    // K
  Mat true_psi;    // K x K; empty = identity
  PlantedShift shift;
  double sigma_c = 0.0;
  std::uint64_t seed = 0;

  Eigen::Index n_params() const { return n_fixed + n_random; }
  Eigen::Index context_dim() const { return static_cast<Eigen::Index>(context.size()); }
  void validate() const;
  nlohmann::json to_json() const;
  static SimSpec from_json(const nlohmann::json& j);
};

struct GroundTruth {
  Vec alpha;
  Vec zeta;
  Vec tau;
  Mat psi;
  Mat beta;  // K x N
  Mat mu;    // (L+K) x T_total, empty for the no-shift process
  PlantedShift shift;
  double exact_loglik = 0.0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

// Generative process without context shifts: beta_n ~ N(zeta, Omega) with
// Omega = diag(tau) psi diag(tau), choices from the softmax of eta . x.
std::pair<ChoiceDataset, GroundTruth> generate_mmnl(const SimSpec& spec);

// Adds the per-occasion shift mu_t ~ N(planted(c_t), sigma_c^2 I) and draws
// choices at eta_n + mu_t.
std::pair<ChoiceDataset, GroundTruth> generate_cmmnl(const SimSpec& spec);

}  // namespace cmmnl
