#include "cmmnl/elbo.hpp"

#include <cmath>
#include <sstream>
#include <thread>

namespace cmmnl {

namespace {

constexpr double kHalfLogTwoPiE = 1.4189385332046727418;  // 0.5*ln(2*pi*e)
constexpr double kPathSizePriorVar = 100.0;

void ensure_finite(double x, const char* term) {
  if (!std::isfinite(x)) {
    std::ostringstream os;
    os << "non-finite ELBO term: " << term;
    throw NumericError(os.str());
  }
}

Vec draw_normals(StreamRng& rng, Eigen::Index n) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.next_normal();
  return v;
}

// Gaussian entropy of a block, plus gradient w.r.t. raw scales.
double block_entropy(const GaussBlock& b, Vec* grad_raw, double weight) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const double s = softplus(b.raw_scale(i));
    h += kHalfLogTwoPiE + std::log(s);
    if (grad_raw) (*grad_raw)(i) += weight * sigmoid(b.raw_scale(i)) / s;
  }
  return weight * h;
}

struct GlobalDraw {
  Vec eps_alpha, eps_bps, eps_zeta, eps_u, eps_w;
  Vec alpha, zeta, u, w;
  double beta_ps = 0.0;
  Vec tau;      // softplus(u)
  Mat chol_psi; // unit-row Cholesky factor of psi
  Mat chol_om;  // diag(tau) * chol_psi
};

GlobalDraw draw_globals(const VariationalState& s, const ElboOptions& opts, int sample) {
  GlobalDraw g;
  const auto su = static_cast<std::uint64_t>(sample);
  {
    StreamRng r = stream_rng(opts.seed, Stream::alpha, opts.step, su);
    g.eps_alpha = draw_normals(r, s.L);
    g.alpha = s.q_alpha.mean + s.q_alpha.sd().cwiseProduct(g.eps_alpha);
  }
  if (s.has_path_size) {
    StreamRng r = stream_rng(opts.seed, Stream::beta_ps, opts.step, su);
    g.eps_bps = draw_normals(r, 1);
    g.beta_ps = s.q_beta_ps.mean(0) + softplus(s.q_beta_ps.raw_scale(0)) * g.eps_bps(0);
  }
  if (s.has_beta()) {
    const Eigen::Index K = s.K;
    {
      StreamRng r = stream_rng(opts.seed, Stream::zeta, opts.step, su);
      g.eps_zeta = draw_normals(r, K);
      g.zeta = s.q_zeta.mean + s.q_zeta.sd().cwiseProduct(g.eps_zeta);
    }
    {
      StreamRng r = stream_rng(opts.seed, Stream::tau, opts.step, su);
      g.eps_u = draw_normals(r, K);
      g.u = s.q_tau.mean + s.q_tau.sd().cwiseProduct(g.eps_u);
      g.tau = positive_transform::constrain(g.u);
    }
    {
      StreamRng r = stream_rng(opts.seed, Stream::psi, opts.step, su);
      g.eps_w = draw_normals(r, s.q_psi.size());
      g.w = s.q_psi.mean + s.q_psi.sd().cwiseProduct(g.eps_w);
      g.chol_psi = corr_transform::cholesky_factor(g.w, K);
      g.chol_om = g.tau.asDiagonal() * g.chol_psi;
    }
  }
  return g;
}

// Per-draw gradient accumulators for the global latents (in constrained or
// draw space; converted to variational-parameter gradients afterwards).
struct DrawAccum {
  double energy = 0.0;
  Vec g_alpha;     // d/d alpha
  double g_bps = 0.0;
  Vec g_zeta;      // d/d zeta
  Vec g_tau;       // d/d tau (constrained)
  Vec g_u_extra;   // direct d/d u (softplus jacobian term)
  Mat g_chol_psi;  // d/d chol factor entries
  Vec g_w_extra;   // direct d/d w (lkj + correlation jacobian)
  Mat g_beta;      // K x N, d/d beta_n draws
  NetGradients g_net;
  std::vector<char> beta_touched;

  static DrawAccum zeros(const VariationalState& s) {
    DrawAccum a;
    a.g_alpha = Vec::Zero(s.L);
    a.g_zeta = Vec::Zero(s.q_zeta.size());
    a.g_tau = Vec::Zero(s.q_tau.size());
    a.g_u_extra = Vec::Zero(s.q_tau.size());
    a.g_chol_psi = Mat::Zero(s.K, s.K);
    a.g_w_extra = Vec::Zero(s.q_psi.size());
    a.g_beta = Mat::Zero(s.beta_mean.rows(), s.beta_mean.cols());
    if (!s.net.empty()) a.g_net = NetGradients::zeros_like(s.net);
    a.beta_touched.assign(static_cast<std::size_t>(s.beta_mean.cols()), 0);
    return a;
  }

  void add(const DrawAccum& other, const VariationalState& s) {
    energy += other.energy;
    g_alpha += other.g_alpha;
    g_bps += other.g_bps;
    g_zeta += other.g_zeta;
    g_tau += other.g_tau;
    g_u_extra += other.g_u_extra;
    g_chol_psi += other.g_chol_psi;
    g_w_extra += other.g_w_extra;
    g_beta += other.g_beta;
    if (!s.net.empty()) {
      for (std::size_t l = 0; l < g_net.w.size(); ++l) {
        g_net.w[l] += other.g_net.w[l];
        g_net.b[l] += other.g_net.b[l];
      }
    }
    for (std::size_t n = 0; n < beta_touched.size(); ++n)
      beta_touched[n] = static_cast<char>(beta_touched[n] | other.beta_touched[n]);
  }
};

// Multivariate normal log density with lower-triangular covariance factor A
// (cov = A A^T). Optionally accumulates gradients w.r.t. the residual, the
// mean, and the factor.
double log_mvn_chol(const Vec& x, const Vec& mean, const Mat& A, double weight,
                    Vec* g_x, Vec* g_mean, Mat* g_A) {
  const Eigen::Index K = x.size();
  Vec r = x - mean;
  Vec v = A.triangularView<Eigen::Lower>().solve(r);
  double log_diag = 0.0;
  for (Eigen::Index i = 0; i < K; ++i) log_diag += std::log(A(i, i));
  const double logp =
      -0.5 * static_cast<double>(K) * kLogTwoPi - log_diag - 0.5 * v.squaredNorm();
  if (g_x || g_mean || g_A) {
    Vec wv = A.transpose().triangularView<Eigen::Upper>().solve(v);
    if (g_x) *g_x += weight * (-wv);
    if (g_mean) *g_mean += weight * wv;
    if (g_A) {
      for (Eigen::Index i = 0; i < K; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) (*g_A)(i, j) += weight * wv(i) * v(j);
        (*g_A)(i, i) += weight * (-1.0 / A(i, i));
      }
    }
  }
  return logp;
}

struct SlotWork {
  const ChoiceDataset* data;
  const std::vector<OccasionRef>* refs;
  const std::vector<Eigen::Index>* batch;
  const VariationalState* state;
  const PriorConfig* priors;
  const ElboOptions* opts;
  const GlobalDraw* draw;
  int sample = 0;
  double scale_occ = 1.0;
  double draw_weight = 1.0;  // 1/mc_samples, applied to direct grad writes
  bool want_grads = false;
  VariationalState* grad = nullptr;  // per-occasion mu columns written directly
};

// Processes batch slots [lo, hi) into the thread-local accumulator.
void process_slots(const SlotWork& wk, std::size_t lo, std::size_t hi, DrawAccum& acc) {
  const VariationalState& s = *wk.state;
  const GlobalDraw& g = *wk.draw;
  const Eigen::Index L = s.L;
  const Eigen::Index K = s.K;
  const Eigen::Index P = s.n_taste_params();
  const bool beta_active = s.has_beta();
  const bool mu_active = s.has_mu();
  const double sigma_c2 = wk.priors->sigma_c * wk.priors->sigma_c;
  const auto su = static_cast<std::uint64_t>(wk.sample);

  Vec eta(P);
  for (std::size_t slot = lo; slot < hi; ++slot) {
    const Eigen::Index occ_index = (*wk.batch)[slot];
    const OccasionRef& ref = (*wk.refs)[static_cast<std::size_t>(occ_index)];
    const ChoiceOccasion& occ = *ref.occasion;
    const auto n = static_cast<Eigen::Index>(ref.individual_index);
    const double t_n = static_cast<double>(ref.occasions_of_individual);

    // Draw beta_n for the owning individual (same stream wherever it occurs).
    Vec beta, eps_beta, sd_beta;
    if (beta_active) {
      StreamRng r = stream_rng(wk.opts->seed, Stream::beta, wk.opts->step, su,
                               static_cast<std::uint64_t>(n));
      eps_beta = draw_normals(r, K);
      sd_beta = s.beta_raw.col(n).unaryExpr([](double x) { return softplus(x); });
      beta = s.beta_mean.col(n) + sd_beta.cwiseProduct(eps_beta);
      acc.beta_touched[static_cast<std::size_t>(n)] = 1;
    }

    // Occasion shift mu_t.
    Vec mu, eps_mu, sd_mu, net_out;
    NetForwardCache cache;
    if (mu_active) {
      StreamRng drop_rng = stream_rng(wk.opts->seed, Stream::dropout, wk.opts->step, su,
                                      static_cast<std::uint64_t>(occ_index));
      net_out = nn_forward(s.net, occ.context, wk.opts->net_mode, drop_rng,
                           wk.want_grads ? &cache : nullptr);
      if (s.mu_collapsed) {
        mu = net_out;
      } else {
        StreamRng r = stream_rng(wk.opts->seed, Stream::mu, wk.opts->step, su,
                                 static_cast<std::uint64_t>(occ_index));
        eps_mu = draw_normals(r, P);
        sd_mu = s.mu_raw.col(occ_index).unaryExpr([](double x) { return softplus(x); });
        mu = net_out + s.mu_delta.col(occ_index) + sd_mu.cwiseProduct(eps_mu);
      }
    }

    eta.head(L) = g.alpha;
    if (beta_active) eta.tail(K) = beta;
    if (mu_active) eta += mu;

    // Likelihood of the observed choice.
    Vec v = occ.attributes * eta;
    if (s.has_path_size) v += g.beta_ps * occ.log_path_size;
    for (Eigen::Index j = 0; j < v.size(); ++j)
      if (!occ.availability(j)) v(j) = kNegInf;
    const double lse = log_sum_exp(v);
    const double ll = v(occ.chosen) - lse;
    ensure_finite(ll, "choice log-likelihood");
    acc.energy += wk.scale_occ * ll;

    Vec g_eta;
    if (wk.want_grads) {
      Vec d(v.size());
      for (Eigen::Index j = 0; j < v.size(); ++j) {
        d(j) = occ.availability(j) ? ((j == occ.chosen ? 1.0 : 0.0) - std::exp(v(j) - lse))
                                   : 0.0;
      }
      g_eta = occ.attributes.transpose() * d;
      acc.g_alpha += wk.scale_occ * g_eta.head(L);
      if (beta_active) acc.g_beta.col(n) += wk.scale_occ * g_eta.tail(K);
      if (s.has_path_size) acc.g_bps += wk.scale_occ * d.dot(occ.log_path_size);
    }

    // Per-individual prior, amortized over the individual's occasions.
    if (beta_active) {
      const double w = wk.scale_occ / t_n;
      Vec gb_local = Vec::Zero(K);
      Mat gA_local = Mat::Zero(K, K);
      const double logp =
          log_mvn_chol(beta, g.zeta, g.chol_om, w, wk.want_grads ? &gb_local : nullptr,
                       wk.want_grads ? &acc.g_zeta : nullptr,
                       wk.want_grads ? &gA_local : nullptr);
      ensure_finite(logp, "random-coefficient prior");
      acc.energy += w * logp;
      if (wk.want_grads) {
        acc.g_beta.col(n) += gb_local;
        // A = diag(tau) * chol_psi: route d/dA into tau and the factor.
        for (Eigen::Index i = 0; i < K; ++i) {
          for (Eigen::Index j = 0; j <= i; ++j) {
            acc.g_tau(i) += gA_local(i, j) * g.chol_psi(i, j);
            acc.g_chol_psi(i, j) += gA_local(i, j) * g.tau(i);
          }
        }
      }
    }

    // Per-occasion shift prior N(mu_t | net(c_t), sigma_c^2 I); with the
    // NNet + delta parameterization the residual is delta + s*eps, so the
    // network receives only the likelihood path.
    if (mu_active) {
      if (!s.mu_collapsed) {
        const Vec resid = mu - net_out;
        double logp = 0.0;
        for (Eigen::Index i = 0; i < P; ++i) {
          logp += -0.5 * (kLogTwoPi + std::log(sigma_c2) + resid(i) * resid(i) / sigma_c2);
        }
        ensure_finite(logp, "occasion-shift prior");
        acc.energy += wk.scale_occ * logp;
        if (wk.want_grads) {
          const Vec g_mu_prior = -resid / sigma_c2;
          const Vec g_mu_total = g_eta + g_mu_prior;
          const double w = wk.scale_occ * wk.draw_weight;
          wk.grad->mu_delta.col(occ_index) += w * g_mu_total;
          Vec graw(P);
          for (Eigen::Index i = 0; i < P; ++i)
            graw(i) = g_mu_total(i) * eps_mu(i) * sigmoid(s.mu_raw(i, occ_index));
          wk.grad->mu_raw.col(occ_index) += w * graw;
        }
      }
      if (wk.want_grads) {
        // d(energy)/d(net output): likelihood path only (the prior residual
        // is invariant to the network under this parameterization).
        nn_backward(s.net, cache, wk.scale_occ * g_eta, acc.g_net);
      }
    }
  }
}

ElboParts elbo_pass(const ChoiceDataset& data, const std::vector<OccasionRef>& refs,
                    const std::vector<Eigen::Index>& batch, const VariationalState& state,
                    const PriorConfig& priors, const ElboOptions& opts, bool want_grads,
                    VariationalState* grad) {
  if (batch.empty()) throw ValidationError("elbo: batch is empty");
  std::vector<char> seen(refs.size(), 0);
  for (Eigen::Index b : batch) {
    if (b < 0 || b >= static_cast<Eigen::Index>(refs.size()))
      throw ValidationError("elbo: batch index out of range");
    if (seen[static_cast<std::size_t>(b)])
      throw ValidationError("elbo: batch must be a set of distinct occasion indices");
    seen[static_cast<std::size_t>(b)] = 1;
  }
  priors.validate(state.L, state.has_beta() ? state.K : 0);
  if (want_grads) {
    for (auto& [ptr, len] : param_spans(*grad))
      std::fill(ptr, ptr + len, 0.0);
  }

  const double t_total = static_cast<double>(refs.size());
  const double scale_occ = t_total / static_cast<double>(batch.size());
  const int S = opts.mc_samples;

  ElboParts parts;

  // Analytic entropy: global blocks at full weight, local blocks scaled.
  parts.entropy += block_entropy(state.q_alpha, want_grads ? &grad->q_alpha.raw_scale : nullptr, 1.0);
  parts.entropy += block_entropy(state.q_beta_ps, want_grads ? &grad->q_beta_ps.raw_scale : nullptr, 1.0);
  parts.entropy += block_entropy(state.q_zeta, want_grads ? &grad->q_zeta.raw_scale : nullptr, 1.0);
  parts.entropy += block_entropy(state.q_tau, want_grads ? &grad->q_tau.raw_scale : nullptr, 1.0);
  parts.entropy += block_entropy(state.q_psi, want_grads ? &grad->q_psi.raw_scale : nullptr, 1.0);
  for (Eigen::Index b_idx : batch) {
    const OccasionRef& ref = refs[static_cast<std::size_t>(b_idx)];
    const auto n = static_cast<Eigen::Index>(ref.individual_index);
    if (state.has_beta()) {
      const double w = scale_occ / static_cast<double>(ref.occasions_of_individual);
      for (Eigen::Index k = 0; k < state.K; ++k) {
        const double raw = state.beta_raw(k, n);
        const double s = softplus(raw);
        parts.entropy += w * (kHalfLogTwoPiE + std::log(s));
        if (want_grads) grad->beta_raw(k, n) += w * sigmoid(raw) / s;
      }
    }
    if (state.has_mu() && !state.mu_collapsed) {
      for (Eigen::Index i = 0; i < state.n_taste_params(); ++i) {
        const double raw = state.mu_raw(i, b_idx);
        const double s = softplus(raw);
        parts.entropy += scale_occ * (kHalfLogTwoPiE + std::log(s));
        if (want_grads) grad->mu_raw(i, b_idx) += scale_occ * sigmoid(raw) / s;
      }
    }
  }
  ensure_finite(parts.entropy, "variational entropy");

  // Monte Carlo energy, one pathwise pass per draw.
  const double inv_s = 1.0 / static_cast<double>(S);
  for (int sample = 0; sample < S; ++sample) {
    GlobalDraw g = draw_globals(state, opts, sample);
    DrawAccum acc = DrawAccum::zeros(state);

    // Global priors at full weight.
    if (state.L > 0) {
      const double lp = log_mvn_diag(g.alpha, priors.lambda0, priors.xi0_diag);
      ensure_finite(lp, "fixed-coefficient prior");
      acc.energy += lp;
      if (want_grads)
        acc.g_alpha += (priors.lambda0 - g.alpha).cwiseQuotient(priors.xi0_diag);
    }
    if (state.has_path_size) {
      acc.energy += -0.5 * (kLogTwoPi + std::log(kPathSizePriorVar) +
                            g.beta_ps * g.beta_ps / kPathSizePriorVar);
      if (want_grads) acc.g_bps += -g.beta_ps / kPathSizePriorVar;
    }
    if (state.has_beta()) {
      const double lp = log_mvn_diag(g.zeta, priors.mu0, priors.sigma0_diag);
      ensure_finite(lp, "population-mean prior");
      acc.energy += lp;
      if (want_grads) acc.g_zeta += (priors.mu0 - g.zeta).cwiseQuotient(priors.sigma0_diag);
      for (Eigen::Index k = 0; k < state.K; ++k) {
        const double tau_k = g.tau(k);
        const double sc = priors.halfcauchy_scale;
        acc.energy += log_half_cauchy(tau_k, sc);
        acc.energy += log_sigmoid(g.u(k));  // softplus jacobian
        if (want_grads) {
          acc.g_tau(k) += -2.0 * tau_k / (sc * sc + tau_k * tau_k);
          acc.g_u_extra(k) += 1.0 - sigmoid(g.u(k));
        }
      }
      if (state.K >= 2) {
        double log_det = 0.0;
        for (Eigen::Index i = 0; i < state.K; ++i)
          log_det += 2.0 * std::log(g.chol_psi(i, i));
        const double lp_psi = lkj_log_normalizer(static_cast<int>(state.K), priors.lkj_eta) +
                              (priors.lkj_eta - 1.0) * log_det +
                              corr_transform::log_abs_det_jacobian(g.w, state.K);
        ensure_finite(lp_psi, "correlation prior");
        acc.energy += lp_psi;
        if (want_grads)
          corr_transform::backward_jacobian_and_lkj(g.w, state.K, priors.lkj_eta,
                                                    acc.g_w_extra);
      }
    }

    // Batch terms, optionally in parallel over contiguous chunks; chunk
    // results are reduced in chunk order so a fixed thread count is
    // reproducible.
    SlotWork wk{&data,  &refs,  &batch,    &state, &priors,    &opts,
                &g,     sample, scale_occ, inv_s,  want_grads, grad};
    const std::size_t n_slots = batch.size();
    const int threads = std::max(1, opts.threads);
    if (threads == 1 || n_slots < 2 * static_cast<std::size_t>(threads)) {
      process_slots(wk, 0, n_slots, acc);
    } else {
      const std::size_t chunk = (n_slots + static_cast<std::size_t>(threads) - 1) /
                                static_cast<std::size_t>(threads);
      std::vector<DrawAccum> partial;
      partial.reserve(static_cast<std::size_t>(threads));
      for (int i = 0; i < threads; ++i) partial.push_back(DrawAccum::zeros(state));
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
      for (int i = 0; i < threads; ++i) {
        const std::size_t lo = std::min(n_slots, static_cast<std::size_t>(i) * chunk);
        const std::size_t hi = std::min(n_slots, lo + chunk);
        pool.emplace_back([&, i, lo, hi]() {
          try {
            process_slots(wk, lo, hi, partial[static_cast<std::size_t>(i)]);
          } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
      for (int i = 0; i < threads; ++i) acc.add(partial[static_cast<std::size_t>(i)], state);
    }

    ensure_finite(acc.energy, "energy");
    parts.energy += inv_s * acc.energy;

    if (!want_grads) continue;

    // Convert draw-space gradients into variational-parameter gradients.
    const double w_s = inv_s;
    if (state.L > 0) {
      grad->q_alpha.mean += w_s * acc.g_alpha;
      for (Eigen::Index i = 0; i < state.L; ++i)
        grad->q_alpha.raw_scale(i) +=
            w_s * acc.g_alpha(i) * g.eps_alpha(i) * sigmoid(state.q_alpha.raw_scale(i));
    }
    if (state.has_path_size) {
      grad->q_beta_ps.mean(0) += w_s * acc.g_bps;
      grad->q_beta_ps.raw_scale(0) +=
          w_s * acc.g_bps * g.eps_bps(0) * sigmoid(state.q_beta_ps.raw_scale(0));
    }
    if (state.has_beta()) {
      grad->q_zeta.mean += w_s * acc.g_zeta;
      for (Eigen::Index k = 0; k < state.K; ++k)
        grad->q_zeta.raw_scale(k) +=
            w_s * acc.g_zeta(k) * g.eps_zeta(k) * sigmoid(state.q_zeta.raw_scale(k));
      // tau: constrained gradient through softplus, plus direct u terms.
      for (Eigen::Index k = 0; k < state.K; ++k) {
        const double gu = acc.g_tau(k) * sigmoid(g.u(k)) + acc.g_u_extra(k);
        grad->q_tau.mean(k) += w_s * gu;
        grad->q_tau.raw_scale(k) +=
            w_s * gu * g.eps_u(k) * sigmoid(state.q_tau.raw_scale(k));
      }
      if (state.K >= 2) {
        Vec g_w = acc.g_w_extra;
        corr_transform::backward_cholesky(g.w, g.chol_psi, acc.g_chol_psi, g_w);
        for (Eigen::Index i = 0; i < g_w.size(); ++i) {
          grad->q_psi.mean(i) += w_s * g_w(i);
          grad->q_psi.raw_scale(i) +=
              w_s * g_w(i) * g.eps_w(i) * sigmoid(state.q_psi.raw_scale(i));
        }
      }
      for (Eigen::Index n = 0; n < state.beta_mean.cols(); ++n) {
        if (!acc.beta_touched[static_cast<std::size_t>(n)]) continue;
        StreamRng r = stream_rng(opts.seed, Stream::beta, opts.step,
                                 static_cast<std::uint64_t>(sample),
                                 static_cast<std::uint64_t>(n));
        const Vec eps_beta = draw_normals(r, state.K);
        for (Eigen::Index k = 0; k < state.K; ++k) {
          grad->beta_mean(k, n) += w_s * acc.g_beta(k, n);
          grad->beta_raw(k, n) +=
              w_s * acc.g_beta(k, n) * eps_beta(k) * sigmoid(state.beta_raw(k, n));
        }
      }
    }
    if (!state.net.empty()) {
      for (std::size_t l = 0; l < grad->net.layers.size(); ++l) {
        grad->net.layers[l].w += w_s * acc.g_net.w[l];
        grad->net.layers[l].b += w_s * acc.g_net.b[l];
      }
    }
  }

  return parts;
}

}  // namespace

ElboParts elbo_estimate(const ChoiceDataset& data, const std::vector<OccasionRef>& refs,
                        const std::vector<Eigen::Index>& batch, const VariationalState& state,
                        const PriorConfig& priors, const ElboOptions& opts) {
  return elbo_pass(data, refs, batch, state, priors, opts, false, nullptr);
}

ElboParts elbo_gradients(const ChoiceDataset& data, const std::vector<OccasionRef>& refs,
                         const std::vector<Eigen::Index>& batch, const VariationalState& state,
                         const PriorConfig& priors, const ElboOptions& opts,
                         VariationalState& grad) {
  return elbo_pass(data, refs, batch, state, priors, opts, true, &grad);
}

ElboParts elbo_estimate(const ChoiceDataset& data, const std::vector<Eigen::Index>& batch,
                        const VariationalState& state, const PriorConfig& priors,
                        const ElboOptions& opts) {
  const auto refs = flatten_occasions(data);
  return elbo_estimate(data, refs, batch, state, priors, opts);
}

ElboParts elbo_gradients(const ChoiceDataset& data, const std::vector<Eigen::Index>& batch,
                         const VariationalState& state, const PriorConfig& priors,
                         const ElboOptions& opts, VariationalState& grad) {
  const auto refs = flatten_occasions(data);
  return elbo_gradients(data, refs, batch, state, priors, opts, grad);
}

}  // namespace cmmnl
