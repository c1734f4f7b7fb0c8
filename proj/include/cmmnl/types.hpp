#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cmmnl/errors.hpp"
#include "cmmnl/math.hpp"

namespace cmmnl {

// Taste parameters. Concatenation order is fixed project-wide: fixed
// (shared) coefficients first, then random (individual-specific) ones.
struct TasteVector {
  Vec fixed;   // length L
  Vec random;  // length K

  Eigen::Index size() const { return fixed.size() + random.size(); }

  Vec concat() const {
    Vec out(size());
    out << fixed, random;
    return out;
  }

  static TasteVector from_concat(const Vec& eta, Eigen::Index L) {
    TasteVector t;
    t.fixed = eta.head(L);
    t.random = eta.tail(eta.size() - L);
    return t;
  }
};

// Additive per-occasion shift on the full taste vector.
struct ContextShift {
  Vec mu;  // length L+K
};

enum class ContextKind { binary, continuous };

struct ChoiceOccasion {
  std::int64_t occasion_id = 0;
  Mat attributes;            // J x (L+K), fixed-coefficient columns first
  BoolArray availability;    // length J
  Vec log_path_size;         // length J, or empty when absent
  Vec context;               // length C (may be empty)
  Eigen::Index chosen = 0;   // row index into attributes
  std::vector<std::int64_t> alt_ids;  // length J

  Eigen::Index n_alternatives() const { return attributes.rows(); }
  bool has_path_size() const { return log_path_size.size() > 0; }
  Eigen::Index n_available() const {
    Eigen::Index c = 0;
    for (Eigen::Index j = 0; j < availability.size(); ++j)
      if (availability(j)) ++c;
    return c;
  }
};

struct Individual {
  std::int64_t individual_id = 0;
  std::vector<ChoiceOccasion> occasions;
};

struct ChoiceDataset {
  std::vector<Individual> individuals;
  std::vector<std::string> column_names;   // L+K labels, fixed block first
  std::vector<std::string> context_names;  // C labels
  std::vector<ContextKind> context_kinds;  // C tags
  Eigen::Index n_fixed = 0;                // L
  Eigen::Index n_random = 0;               // K
  bool variable_choice_set = false;

  Eigen::Index n_params() const { return n_fixed + n_random; }
  Eigen::Index n_individuals() const {
    return static_cast<Eigen::Index>(individuals.size());
  }
  Eigen::Index n_occasions() const;
  Eigen::Index context_dim() const {
    return static_cast<Eigen::Index>(context_names.size());
  }
  bool has_path_size() const;

  // Validates every type invariant; throws ValidationError with a
  // diagnostic naming the offending individual/occasion.
  void validate() const;

  bool operator==(const ChoiceDataset& other) const;
};

// Flat occasion view used by the estimation engine: one entry per occasion
// in dataset order, with the owning individual and its total occasion count.
struct OccasionRef {
  int individual_index;
  int occasion_index;
  Eigen::Index occasions_of_individual;
  const ChoiceOccasion* occasion;
};

std::vector<OccasionRef> flatten_occasions(const ChoiceDataset& data);

// Population-level parameters of the random-coefficient distribution.
struct PopulationParams {
  Vec alpha;  // L
  Vec zeta;   // K
  Vec tau;    // K, strictly positive
  Mat psi;    // K x K correlation matrix

  void validate() const;
};

// Checks symmetry, unit diagonal and positive definiteness.
bool is_correlation_matrix(const Mat& psi, double tol = 1e-8);

}  // namespace cmmnl
