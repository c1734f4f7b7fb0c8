#pragma once

#include <string>
#include <vector>

#include "cmmnl/elbo.hpp"

namespace cmmnl {

struct TraceEntry {
  long step = 0;
  double windowed_elbo = 0.0;
  double learning_rate = 0.0;
  double wall_seconds = 0.0;
};

struct TraceLog {
  std::vector<TraceEntry> entries;
  bool diverged = false;
  std::string divergence_message;

  void write_csv(const std::string& path) const;
  // CSV without the wall-clock column; identical across same-seed runs.
  std::string deterministic_csv() const;
};

struct FitResult {
  VariationalState state;
  TraceLog trace;
  double wall_seconds = 0.0;
  bool converged = false;
  Eigen::Index n_obs = 0;
};

struct NetSpec {
  std::vector<Eigen::Index> hidden{32};
  double dropout = 0.1;
};

// Stochastic variational inference: Adam ascent on reparameterized
// mini-batch ELBO gradients, jointly over variational parameters and the
// context-network point parameters. Stops when the best windowed ELBO has
// not improved by a relative tolerance for `patience` consecutive windows.
// On numerical failure the trace (flagged as diverged) is returned for
// diagnosis.
FitResult svi_fit(const ChoiceDataset& data, const PriorConfig& priors, ModelKind kind,
                  const FitConfig& fit, const NetSpec& net = NetSpec());

struct SummaryRow {
  std::string name;
  std::string block;  // "fixed", "path_size", "random_mean", "random_sd", "correlation"
  double mean = 0.0;
  double sd = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::string stars;
};

// Posterior means/sds per named population-level parameter, with stars from
// Gaussian tail mass: P(sign flip) < 0.025 "*", < 0.005 "**", < 0.0005 "***".
// Scale and correlation rows are summarized in constrained space.
std::vector<SummaryRow> posterior_summary(const VariationalState& state,
                                          const std::vector<std::string>& column_names);

std::string stars_for(double mean, double sd);

}  // namespace cmmnl
