#pragma once

#include <map>
#include <string>
#include <vector>

#include "cmmnl/artifact.hpp"
#include "cmmnl/choice_model.hpp"

namespace cmmnl {

struct FitMetrics {
  double log_likelihood = 0.0;  // plug-in at posterior means
  double pct_correct = 0.0;     // share of occasions with argmax == chosen
  double avg_choice_prob = 0.0;
  double wall_seconds = 0.0;  // estimation time when known, else 0
  Eigen::Index n_obs = 0;
  Eigen::Index n_individuals = 0;
  Eigen::Index n_utility_params = 0;
};

// Plug-in evaluation: per-individual posterior means where the artifact
// knows the individual, population means otherwise; mu_t = NNet(c_t) in
// eval mode for context models.
FitMetrics compute_metrics(const ChoiceDataset& data, const FitArtifact& artifact,
                           double wall_seconds = 0.0);

// Plug-in choice probabilities, one vector per occasion in dataset order.
std::vector<Vec> predict_probabilities(const ChoiceDataset& data, const FitArtifact& artifact);

// One context scenario: a full assignment in original (pre-scaling) units.
struct ScenarioAssignment {
  Vec values;  // length C
  std::string label;
};

struct ScenarioReport {
  std::vector<std::string> parameter_names;  // L+K taste parameters
  ScenarioAssignment reference;
  Vec base;  // posterior means shifted by NNet(c0)
  std::vector<ScenarioAssignment> scenarios;
  Mat shifts;  // (L+K) x n_scenarios, relative to base
  double suppression_threshold = 0.05;

  // Human-readable table; shifts with |shift| < threshold * |base| are
  // suppressed. The CSV is never suppressed.
  std::string render() const;
  std::string to_csv() const;
};

ScenarioReport scenario_table(const FitArtifact& artifact,
                              const std::vector<ScenarioAssignment>& grid,
                              const ScenarioAssignment& reference, double threshold = 0.05);

// All combinations of the binary context dimensions; continuous dimensions
// take fixed values (default 0). The all-zero assignment comes first.
std::vector<ScenarioAssignment> all_binary_grid(
    const FitArtifact& artifact, const std::map<std::string, double>& fixed_continuous = {});

ScenarioAssignment make_assignment(const FitArtifact& artifact,
                                   const std::map<std::string, double>& values);

// Average effect of flipping a binary dimension from 0 to 1, averaged over
// all combinations of the remaining binary dimensions; continuous
// dimensions must be pinned via fixed_continuous.
Vec marginal_context_effect(const FitArtifact& artifact, const std::string& target_dim,
                            const std::map<std::string, double>& fixed_continuous = {});

struct SweepTable {
  std::string dim;
  std::vector<std::string> parameter_names;
  Vec theta0;           // context-adjusted parameters at the sweep origin
  std::vector<double> values;  // grid in original units
  Mat deltas;           // n_steps x (L+K): theta(r) - theta(0)

  std::string to_csv(bool include_relative = false) const;
};

// Trajectory of the context-adjusted parameters along one continuous
// dimension, normalized to the value at the first grid point.
SweepTable context_sweep(const FitArtifact& artifact, const std::string& dim, double from,
                         double to, int steps,
                         const std::map<std::string, double>& fixed = {});

}  // namespace cmmnl
