#include "cmmnl/variational.hpp"

#include <cstring>

#include "cmmnl/errors.hpp"

namespace cmmnl {

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::mnl: return "mnl";
    case ModelKind::mmnl: return "mmnl";
    case ModelKind::cmmnl: return "cmmnl";
  }
  return "?";
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "mnl") return ModelKind::mnl;
  if (name == "mmnl") return ModelKind::mmnl;
  if (name == "cmmnl") return ModelKind::cmmnl;
  throw ValidationError("unknown model kind '" + name + "' (expected mnl, mmnl or cmmnl)");
}

GaussBlock GaussBlock::zeros(Eigen::Index n, double init_scale) {
  GaussBlock b;
  b.mean = Vec::Zero(n);
  b.raw_scale = Vec::Constant(n, positive_transform::unconstrain(init_scale));
  return b;
}

void FitConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("fit config: learning_rate must be > 0");
  if (batch_size < 1) throw ValidationError("fit config: batch_size must be >= 1");
  if (mc_samples < 1) throw ValidationError("fit config: mc_samples must be >= 1");
  if (max_steps < 1) throw ValidationError("fit config: max_steps must be >= 1");
  if (window < 1) throw ValidationError("fit config: window must be >= 1");
  if (patience < 1) throw ValidationError("fit config: patience must be >= 1");
  if (threads < 1) throw ValidationError("fit config: threads must be >= 1");
  if (!(init_scale > 0.0)) throw ValidationError("fit config: init_scale must be > 0");
}

VariationalState init_state(const ChoiceDataset& data, ModelKind kind,
                            const std::vector<Eigen::Index>& hidden_widths,
                            double dropout_rate, bool collapse_mu, std::uint64_t seed,
                            double init_scale) {
  VariationalState s;
  s.kind = kind;
  s.L = data.n_fixed;
  s.K = data.n_random;
  s.C = data.context_dim();
  s.has_path_size = data.has_path_size();
  if (kind == ModelKind::mnl && s.K != 0)
    throw ValidationError("model 'mnl' requires a dataset with no random-coefficient columns");
  if (kind == ModelKind::cmmnl && s.C == 0)
    throw ValidationError("model 'cmmnl' requires context columns");

  s.q_alpha = GaussBlock::zeros(s.L, init_scale);
  s.q_beta_ps = GaussBlock::zeros(s.has_path_size ? 1 : 0, init_scale);
  const Eigen::Index K = s.has_beta() ? s.K : 0;
  s.q_zeta = GaussBlock::zeros(K, init_scale);
  s.q_tau = GaussBlock::zeros(K, init_scale);
  if (K > 0) s.q_tau.mean.setConstant(positive_transform::unconstrain(1.0));
  s.q_psi = GaussBlock::zeros(corr_transform::packed_size(K), init_scale);

  const Eigen::Index N = s.has_beta() ? data.n_individuals() : 0;
  s.beta_mean = Mat::Zero(K, N);
  s.beta_raw = Mat::Constant(K, N, positive_transform::unconstrain(init_scale));

  const Eigen::Index P = s.n_taste_params();
  const Eigen::Index T = s.has_mu() ? data.n_occasions() : 0;
  s.mu_delta = Mat::Zero(P, T);
  s.mu_raw = Mat::Constant(P, T, positive_transform::unconstrain(init_scale));
  s.mu_collapsed = collapse_mu;

  if (kind == ModelKind::cmmnl) {
    std::vector<Eigen::Index> widths;
    widths.push_back(s.C);
    for (Eigen::Index h : hidden_widths) widths.push_back(h);
    widths.push_back(P);
    StreamRng rng = stream_rng(seed, Stream::net_init);
    s.net = nn_init(widths, dropout_rate, rng);
  }
  return s;
}

std::vector<std::pair<double*, Eigen::Index>> param_spans(VariationalState& s) {
  std::vector<std::pair<double*, Eigen::Index>> spans;
  auto add_vec = [&](Vec& v) {
    if (v.size() > 0) spans.emplace_back(v.data(), v.size());
  };
  auto add_mat = [&](Mat& m) {
    if (m.size() > 0) spans.emplace_back(m.data(), m.size());
  };
  add_vec(s.q_alpha.mean);
  add_vec(s.q_alpha.raw_scale);
  add_vec(s.q_beta_ps.mean);
  add_vec(s.q_beta_ps.raw_scale);
  add_vec(s.q_zeta.mean);
  add_vec(s.q_zeta.raw_scale);
  add_vec(s.q_tau.mean);
  add_vec(s.q_tau.raw_scale);
  add_vec(s.q_psi.mean);
  add_vec(s.q_psi.raw_scale);
  add_mat(s.beta_mean);
  add_mat(s.beta_raw);
  add_mat(s.mu_delta);
  add_mat(s.mu_raw);
  for (auto& layer : s.net.layers) {
    spans.emplace_back(layer.w.data(), layer.w.size());
    add_vec(layer.b);
  }
  return spans;
}

Eigen::Index param_count(const VariationalState& s) {
  Eigen::Index n = 0;
  auto spans = param_spans(const_cast<VariationalState&>(s));
  for (const auto& [ptr, len] : spans) n += len;
  return n;
}

Vec flatten(const VariationalState& s) {
  Vec out(param_count(s));
  Eigen::Index at = 0;
  auto spans = param_spans(const_cast<VariationalState&>(s));
  for (const auto& [ptr, len] : spans) {
    std::memcpy(out.data() + at, ptr, sizeof(double) * static_cast<std::size_t>(len));
    at += len;
  }
  return out;
}

void unflatten(VariationalState& s, const Vec& theta) {
  if (theta.size() != param_count(s))
    throw ValidationError("unflatten: parameter vector length mismatch");
  Eigen::Index at = 0;
  for (auto& [ptr, len] : param_spans(s)) {
    std::memcpy(ptr, theta.data() + at, sizeof(double) * static_cast<std::size_t>(len));
    at += len;
  }
}

VariationalState zeros_like(const VariationalState& s) {
  VariationalState z = s;
  for (auto& [ptr, len] : param_spans(z)) std::memset(ptr, 0, sizeof(double) * static_cast<std::size_t>(len));
  return z;
}

Vec reparameterize(const Vec& mean, const Vec& scale, const Vec& eps) {
  if (mean.size() != scale.size() || mean.size() != eps.size())
    throw ValidationError("reparameterize: length mismatch");
  return mean + scale.cwiseProduct(eps);
}

}  // namespace cmmnl
