#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cmmnl/network.hpp"
#include "cmmnl/transforms.hpp"
#include "cmmnl/types.hpp"

namespace cmmnl {

enum class ModelKind { mnl, mmnl, cmmnl };

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& name);

// Mean-field Gaussian block in unconstrained space; the positive scale is
// softplus(raw_scale).
struct GaussBlock {
  Vec mean;
  Vec raw_scale;

  Eigen::Index size() const { return mean.size(); }
  Vec sd() const { return positive_transform::constrain(raw_scale); }
  static GaussBlock zeros(Eigen::Index n, double init_scale);
};

struct FitConfig {
  double learning_rate = 0.01;
  double net_learning_rate = -1.0;  // < 0: use learning_rate
  double lr_decay_steps = 0.0;      // > 0: lr_t = lr * decay/(decay + step)
  Eigen::Index batch_size = 512;
  int mc_samples = 1;
  long max_steps = 20000;
  int window = 100;    // steps per ELBO evaluation window
  int patience = 20;   // windows without improvement before stopping
  std::uint64_t seed = 0;
  bool collapse_mu = false;
  int threads = 1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double init_scale = 0.1;
  double convergence_rtol = 1e-4;

  double net_lr() const { return net_learning_rate < 0.0 ? learning_rate : net_learning_rate; }
  double lr_factor(long step) const {
    return lr_decay_steps > 0.0 ? lr_decay_steps / (lr_decay_steps + static_cast<double>(step))
                                : 1.0;
  }
  void validate() const;
};

// Variational parameters for all latent blocks plus the point parameters of
// the context network. q_tau and q_psi live in unconstrained space
// (softplus scales, tanh partial correlations). q_mu parameterizes the
// occasion shift as NNet(c_t) + delta_t (+ noise); when mu_collapsed the
// shift is pinned to the network output and the q_mu arrays are unused.
struct VariationalState {
  ModelKind kind = ModelKind::mnl;
  Eigen::Index L = 0;
  Eigen::Index K = 0;
  Eigen::Index C = 0;
  bool has_path_size = false;

  GaussBlock q_alpha;    // L
  GaussBlock q_beta_ps;  // 0 or 1
  GaussBlock q_zeta;     // K
  GaussBlock q_tau;      // K, unconstrained
  GaussBlock q_psi;      // K(K-1)/2, unconstrained

  Mat beta_mean;  // K x N
  Mat beta_raw;   // K x N

  Mat mu_delta;  // (L+K) x T
  Mat mu_raw;    // (L+K) x T
  bool mu_collapsed = false;

  ContextNetwork net;  // empty unless cmmnl
  long step_count = 0;

  Eigen::Index n_individuals() const { return beta_mean.cols(); }
  Eigen::Index n_occasions() const { return mu_delta.cols(); }
  Eigen::Index n_taste_params() const { return L + K; }
  bool has_beta() const { return K > 0 && kind != ModelKind::mnl; }
  bool has_mu() const { return kind == ModelKind::cmmnl; }
};

VariationalState init_state(const ChoiceDataset& data, ModelKind kind,
                            const std::vector<Eigen::Index>& hidden_widths,
                            double dropout_rate, bool collapse_mu, std::uint64_t seed,
                            double init_scale = 0.1);

// Uniform traversal of every parameter array in a fixed canonical order;
// state, gradients, and optimizer moments all share this layout.
std::vector<std::pair<double*, Eigen::Index>> param_spans(VariationalState& s);
Eigen::Index param_count(const VariationalState& s);
Vec flatten(const VariationalState& s);
void unflatten(VariationalState& s, const Vec& theta);
VariationalState zeros_like(const VariationalState& s);

// mean + scale .* eps (Gaussian reparameterization).
Vec reparameterize(const Vec& mean, const Vec& scale, const Vec& eps);

}  // namespace cmmnl
