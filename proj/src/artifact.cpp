#include "cmmnl/artifact.hpp"

#include <fstream>

namespace cmmnl {

using nlohmann::json;

namespace {

json block_to_json(const GaussBlock& b) {
  json j;
  j["mean"] = std::vector<double>(b.mean.begin(), b.mean.end());
  const Vec sd = b.sd();
  j["sd"] = std::vector<double>(sd.begin(), sd.end());
  return j;
}

GaussBlock block_from_json(const json& j) {
  GaussBlock b;
  const auto& mean = j.at("mean");
  const auto& sd = j.at("sd");
  b.mean.resize(static_cast<Eigen::Index>(mean.size()));
  b.raw_scale.resize(static_cast<Eigen::Index>(sd.size()));
  for (Eigen::Index i = 0; i < b.mean.size(); ++i)
    b.mean(i) = mean[static_cast<std::size_t>(i)].get<double>();
  for (Eigen::Index i = 0; i < b.raw_scale.size(); ++i)
    b.raw_scale(i) =
        positive_transform::unconstrain(sd[static_cast<std::size_t>(i)].get<double>());
  return b;
}

json mat_to_json_cols(const Mat& m) {
  json cols = json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    cols.push_back(std::vector<double>(m.col(c).begin(), m.col(c).end()));
  return cols;
}

Mat mat_from_json_cols(const json& j, Eigen::Index rows) {
  const auto cols = static_cast<Eigen::Index>(j.size());
  Mat m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const auto& col = j[static_cast<std::size_t>(c)];
    if (static_cast<Eigen::Index>(col.size()) != rows)
      throw ValidationError("artifact: column length mismatch");
    for (Eigen::Index r = 0; r < rows; ++r)
      m(r, c) = col[static_cast<std::size_t>(r)].get<double>();
  }
  return m;
}

Mat softplus_mat(const Mat& raw) {
  return raw.unaryExpr([](double x) { return softplus(x); });
}

Mat inv_softplus_mat(const Mat& sd) {
  return sd.unaryExpr([](double x) { return positive_transform::unconstrain(x); });
}

}  // namespace

Eigen::Index FitArtifact::beta_index_of(std::int64_t individual_id) const {
  for (std::size_t i = 0; i < individual_ids.size(); ++i)
    if (individual_ids[i] == individual_id) return static_cast<Eigen::Index>(i);
  return -1;
}

json FitArtifact::to_json() const {
  json j;
  j["schema_version"] = schema_version;
  j["model"] = model_kind_name(model);
  j["seed"] = seed;
  j["dims"] = {{"L", state.L},
               {"K", state.K},
               {"C", state.C},
               {"has_path_size", state.has_path_size}};
  j["column_names"] = column_names;
  j["context_names"] = context_names;
  json kinds = json::array();
  for (auto k : context_kinds) kinds.push_back(k == ContextKind::binary ? "binary" : "continuous");
  j["context_kinds"] = kinds;

  json q;
  q["alpha"] = block_to_json(state.q_alpha);
  if (state.has_path_size) q["beta_ps"] = block_to_json(state.q_beta_ps);
  if (state.has_beta()) {
    q["zeta"] = block_to_json(state.q_zeta);
    q["tau_unconstrained"] = block_to_json(state.q_tau);
    q["psi_unconstrained"] = block_to_json(state.q_psi);
    json beta;
    beta["individual_ids"] = individual_ids;
    beta["mean"] = mat_to_json_cols(state.beta_mean);
    beta["sd"] = mat_to_json_cols(softplus_mat(state.beta_raw));
    q["beta"] = beta;
  }
  if (state.has_mu()) {
    q["collapsed_mu"] = state.mu_collapsed;
    if (!state.mu_collapsed) {
      json mu;
      mu["occasion_ids"] = occasion_ids;
      mu["delta"] = mat_to_json_cols(state.mu_delta);
      mu["sd"] = mat_to_json_cols(softplus_mat(state.mu_raw));
      q["mu"] = mu;
    }
  }
  j["q"] = q;

  if (!state.net.empty()) {
    json net;
    net["dropout"] = state.net.dropout_rate;
    json layers = json::array();
    for (const auto& layer : state.net.layers) {
      json e;
      json rows = json::array();
      for (Eigen::Index r = 0; r < layer.w.rows(); ++r)
        rows.push_back(std::vector<double>(layer.w.row(r).begin(), layer.w.row(r).end()));
      e["w"] = rows;
      e["b"] = std::vector<double>(layer.b.begin(), layer.b.end());
      layers.push_back(e);
    }
    net["layers"] = layers;
    j["network"] = net;
  }

  if (!scaling.empty()) j["scaling"] = scaling.to_json();
  j["config"] = config_echo;
  if (!trace_path.empty()) j["trace_path"] = trace_path;
  j["estimation"] = {{"steps", steps}, {"converged", converged}};
  return j;
}

FitArtifact FitArtifact::from_json(const json& j) {
  FitArtifact a;
  a.schema_version = j.value("schema_version", 1);
  if (a.schema_version != 1)
    throw ValidationError("artifact: unsupported schema_version " +
                          std::to_string(a.schema_version));
  a.model = model_kind_from_name(j.at("model").get<std::string>());
  a.seed = j.value("seed", 0ULL);
  const json& dims = j.at("dims");
  VariationalState& s = a.state;
  s.kind = a.model;
  s.L = dims.at("L").get<Eigen::Index>();
  s.K = dims.at("K").get<Eigen::Index>();
  s.C = dims.at("C").get<Eigen::Index>();
  s.has_path_size = dims.at("has_path_size").get<bool>();
  a.column_names = j.at("column_names").get<std::vector<std::string>>();
  a.context_names = j.at("context_names").get<std::vector<std::string>>();
  for (const auto& k : j.at("context_kinds"))
    a.context_kinds.push_back(k.get<std::string>() == "binary" ? ContextKind::binary
                                                               : ContextKind::continuous);

  const json& q = j.at("q");
  s.q_alpha = block_from_json(q.at("alpha"));
  s.q_beta_ps = s.has_path_size ? block_from_json(q.at("beta_ps")) : GaussBlock::zeros(0, 0.1);
  if (s.K > 0 && a.model != ModelKind::mnl) {
    s.q_zeta = block_from_json(q.at("zeta"));
    s.q_tau = block_from_json(q.at("tau_unconstrained"));
    s.q_psi = block_from_json(q.at("psi_unconstrained"));
    const json& beta = q.at("beta");
    a.individual_ids = beta.at("individual_ids").get<std::vector<std::int64_t>>();
    s.beta_mean = mat_from_json_cols(beta.at("mean"), s.K);
    s.beta_raw = inv_softplus_mat(mat_from_json_cols(beta.at("sd"), s.K));
  } else {
    s.q_zeta = GaussBlock::zeros(0, 0.1);
    s.q_tau = GaussBlock::zeros(0, 0.1);
    s.q_psi = GaussBlock::zeros(0, 0.1);
    s.beta_mean = Mat::Zero(0, 0);
    s.beta_raw = Mat::Zero(0, 0);
  }
  if (a.model == ModelKind::cmmnl) {
    s.mu_collapsed = q.value("collapsed_mu", true);
    if (!s.mu_collapsed && q.contains("mu")) {
      const json& mu = q.at("mu");
      a.occasion_ids = mu.at("occasion_ids").get<std::vector<std::int64_t>>();
      s.mu_delta = mat_from_json_cols(mu.at("delta"), s.n_taste_params());
      s.mu_raw = inv_softplus_mat(mat_from_json_cols(mu.at("sd"), s.n_taste_params()));
    } else {
      s.mu_delta = Mat::Zero(s.n_taste_params(), 0);
      s.mu_raw = Mat::Zero(s.n_taste_params(), 0);
    }
    const json& net = j.at("network");
    s.net.dropout_rate = net.value("dropout", 0.0);
    for (const auto& e : net.at("layers")) {
      DenseLayer layer;
      const auto& rows = e.at("w");
      const auto nr = static_cast<Eigen::Index>(rows.size());
      const auto nc = static_cast<Eigen::Index>(rows[0].size());
      layer.w.resize(nr, nc);
      for (Eigen::Index r = 0; r < nr; ++r)
        for (Eigen::Index cc = 0; cc < nc; ++cc)
          layer.w(r, cc) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(cc)].get<double>();
      layer.b.resize(static_cast<Eigen::Index>(e.at("b").size()));
      for (Eigen::Index r = 0; r < layer.b.size(); ++r)
        layer.b(r) = e.at("b")[static_cast<std::size_t>(r)].get<double>();
      s.net.layers.push_back(std::move(layer));
    }
    s.net.validate();
  } else {
    s.mu_delta = Mat::Zero(s.n_taste_params(), 0);
    s.mu_raw = Mat::Zero(s.n_taste_params(), 0);
  }
  if (j.contains("scaling")) a.scaling = ScalingRecord::from_json(j.at("scaling"));
  a.config_echo = j.value("config", json());
  a.trace_path = j.value("trace_path", std::string());
  if (j.contains("estimation")) {
    a.steps = j["estimation"].value("steps", 0L);
    a.converged = j["estimation"].value("converged", false);
  }
  return a;
}

void FitArtifact::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open artifact file for writing: " + path);
  os << to_json().dump(2) << '\n';
}

FitArtifact FitArtifact::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open artifact file: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ValidationError("artifact parse error in " + path + ": " + e.what());
  }
  return from_json(j);
}

FitArtifact make_artifact(const FitResult& fit, const ChoiceDataset& data,
                          const ModelConfig& config, const ScalingRecord& scaling,
                          const std::string& trace_path) {
  FitArtifact a;
  a.model = fit.state.kind;
  a.seed = config.fit.seed;
  a.column_names = data.column_names;
  a.context_names = data.context_names;
  a.context_kinds = data.context_kinds;
  a.state = fit.state;
  if (fit.state.has_beta())
    for (const auto& ind : data.individuals) a.individual_ids.push_back(ind.individual_id);
  if (fit.state.has_mu() && !fit.state.mu_collapsed)
    for (const auto& ind : data.individuals)
      for (const auto& occ : ind.occasions) a.occasion_ids.push_back(occ.occasion_id);
  a.scaling = scaling;
  a.config_echo = config.to_json();
  a.trace_path = trace_path;
  a.steps = fit.state.step_count;
  a.converged = fit.converged;
  return a;
}

ChoiceDataset load_dataset_for_artifact(const FitArtifact& artifact,
                                        const std::string& choices_path,
                                        const std::string& context_path) {
  const ModelConfig config = ModelConfig::from_json(artifact.config_echo);
  ChoiceDataset data = load_choice_csv(choices_path, context_path, config);
  data = apply_scaling(data, artifact.scaling);
  if (!config.interactions.empty()) data = build_interactions(data, config.interactions);
  return data;
}

}  // namespace cmmnl
