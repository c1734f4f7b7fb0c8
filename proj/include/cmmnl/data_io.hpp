#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cmmnl/distributions.hpp"
#include "cmmnl/fit.hpp"
#include "cmmnl/simulate.hpp"
#include "cmmnl/types.hpp"
#include "cmmnl/variational.hpp"

namespace cmmnl {

struct AttributeDecl {
  std::string column;
  bool random = false;
};

struct AscDecl {
  std::string name;
  std::int64_t alt = 0;
};

struct ContextDecl {
  std::string column;
  ContextKind kind = ContextKind::binary;
};

struct InteractionDecl {
  std::string attribute;  // attribute column or ASC name
  std::string context;
};

// Binding between long-format data files and the model: which columns carry
// fixed vs random coefficients, ASC declarations, context columns, priors,
// optimizer settings and network shape.
struct ModelConfig {
  ModelKind model = ModelKind::mmnl;
  std::vector<AttributeDecl> attributes;
  std::vector<AscDecl> ascs;
  std::string path_size_column;  // empty when absent
  std::vector<ContextDecl> context;
  std::vector<InteractionDecl> interactions;
  bool standardize = false;
  bool variable_choice_set = false;
  nlohmann::json priors_json;  // scalars broadcast; resolved against L, K
  FitConfig fit;
  NetSpec network;

  void validate() const;
  PriorConfig resolve_priors(Eigen::Index L, Eigen::Index K) const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  static ModelConfig load(const std::string& path);
};

// Long-format loader: one row per occasion x alternative with columns
// individual_id, occasion_id, alt_id, chosen, available, attribute columns
// and an optional path-size column; per-occasion context joined from a
// second CSV keyed by occasion_id. Every structural violation is reported
// with the offending row numbers.
ChoiceDataset load_choice_csv(const std::string& choices_path,
                              const std::string& context_path, const ModelConfig& config);

// Writes the CSV pair read back by load_choice_csv. Only datasets whose
// columns are plain attribute columns (no ASC or interaction columns) are
// writable; simulate output satisfies this.
void write_choice_csv(const ChoiceDataset& data, const std::string& choices_path,
                      const std::string& context_path);

// Appends interaction columns x_attr * context to the fixed block so the
// interaction baseline is an ordinary MMNL on the widened design. Binary
// context enters as the indicator, continuous context as the raw value.
ChoiceDataset build_interactions(const ChoiceDataset& data,
                                 const std::vector<InteractionDecl>& declarations);

struct ScalingRecord {
  struct Entry {
    std::string name;
    double mean = 0.0;
    double sd = 1.0;
  };
  std::vector<Entry> columns;  // attribute columns
  std::vector<Entry> context;  // continuous context columns
  std::vector<std::string> warnings;

  bool empty() const { return columns.empty() && context.empty(); }
  nlohmann::json to_json() const;
  static ScalingRecord from_json(const nlohmann::json& j);
};

// Z-scores the named attribute columns and all continuous context columns;
// zero-variance columns are skipped with a warning entry. The record allows
// reports to recover original-unit coefficients (beta_std / sd).
std::pair<ChoiceDataset, ScalingRecord> standardize(const ChoiceDataset& data);

// Applies a stored scaling record to a new dataset (for held-out data).
ChoiceDataset apply_scaling(const ChoiceDataset& data, const ScalingRecord& record);

// Original-unit coefficient for a standardized column.
double to_original_units(double standardized_coef, const ScalingRecord::Entry& entry);

// Ready-to-estimate config matching a simulation spec.
ModelConfig default_config_for(const SimSpec& spec, ModelKind model);

}  // namespace cmmnl
