#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "cmmnl/data_io.hpp"
#include "cmmnl/fit.hpp"

namespace cmmnl {

// Serialized estimation result: variational means/sds for every block,
// per-individual coefficients keyed by id, network weights, the scaling
// record, and an echo of the model config so held-out data can be rebuilt.
// Timing is deliberately not stored: artifacts from identical seeds are
// byte-identical.
struct FitArtifact {
  int schema_version = 1;
  ModelKind model = ModelKind::mnl;
  std::uint64_t seed = 0;
  std::vector<std::string> column_names;
  std::vector<std::string> context_names;
  std::vector<ContextKind> context_kinds;
  VariationalState state;
  std::vector<std::int64_t> individual_ids;  // aligns with state.beta_* columns
  std::vector<std::int64_t> occasion_ids;    // aligns with state.mu_* columns
  ScalingRecord scaling;
  nlohmann::json config_echo;
  std::string trace_path;
  long steps = 0;
  bool converged = false;

  Eigen::Index beta_index_of(std::int64_t individual_id) const;

  nlohmann::json to_json() const;
  static FitArtifact from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static FitArtifact load(const std::string& path);
};

FitArtifact make_artifact(const FitResult& fit, const ChoiceDataset& data,
                          const ModelConfig& config, const ScalingRecord& scaling,
                          const std::string& trace_path);

// Rebuilds a dataset for an artifact: load, apply the stored scaling, then
// widen with the config's interaction columns (same pipeline as estimation).
ChoiceDataset load_dataset_for_artifact(const FitArtifact& artifact,
                                        const std::string& choices_path,
                                        const std::string& context_path);

}  // namespace cmmnl
