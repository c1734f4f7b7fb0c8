#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>

#include "cmmnl/choice_model.hpp"
#include "cmmnl/elbo.hpp"
#include "test_helpers.hpp"

using namespace cmmnl;
using cmmnl::test::make_synthetic;

namespace {

void randomize_state(VariationalState& s, unsigned seed, double mag = 0.3) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> norm(0.0, mag);
  for (auto& [ptr, len] : param_spans(s))
    for (Eigen::Index i = 0; i < len; ++i) ptr[i] += norm(gen);
}

void set_all_raw_scales(VariationalState& s, double scale) {
  const double raw = positive_transform::unconstrain(scale);
  s.q_alpha.raw_scale.setConstant(raw);
  s.q_beta_ps.raw_scale.setConstant(raw);
  s.q_zeta.raw_scale.setConstant(raw);
  s.q_tau.raw_scale.setConstant(raw);
  s.q_psi.raw_scale.setConstant(raw);
  s.beta_raw.setConstant(raw);
  s.mu_raw.setConstant(raw);
}

std::vector<Eigen::Index> full_batch(const ChoiceDataset& data) {
  std::vector<Eigen::Index> b(static_cast<std::size_t>(data.n_occasions()));
  std::iota(b.begin(), b.end(), 0);
  return b;
}

// Richardson-extrapolated central difference of the ELBO total.
double fd_gradient(const ChoiceDataset& data, const std::vector<Eigen::Index>& batch,
                   VariationalState& state, const PriorConfig& priors,
                   const ElboOptions& opts, const Vec& theta, Eigen::Index i, double h) {
  auto eval = [&](double x) {
    Vec th = theta;
    th(i) = x;
    unflatten(state, th);
    return elbo_estimate(data, batch, state, priors, opts).total();
  };
  const double d1 = (eval(theta(i) + h) - eval(theta(i) - h)) / (2.0 * h);
  const double d2 = (eval(theta(i) + h / 2) - eval(theta(i) - h / 2)) / h;
  unflatten(state, theta);
  return (4.0 * d2 - d1) / 3.0;
}

// Independent log joint at the variational means (priors-dist + model-core
// route, dense covariance via assemble_covariance).
double log_joint_oracle(const ChoiceDataset& data, const VariationalState& s,
                        const PriorConfig& priors) {
  double lp = 0.0;
  const Vec alpha = s.q_alpha.mean;
  if (s.L > 0) lp += log_mvn_diag(alpha, priors.lambda0, priors.xi0_diag);
  Vec tau, zeta;
  Mat psi;
  if (s.has_beta()) {
    zeta = s.q_zeta.mean;
    lp += log_mvn_diag(zeta, priors.mu0, priors.sigma0_diag);
    tau = positive_transform::constrain(s.q_tau.mean);
    for (Eigen::Index k = 0; k < s.K; ++k) {
      lp += log_half_cauchy(tau(k), priors.halfcauchy_scale);
      lp += positive_transform::log_jacobian(s.q_tau.mean(k));
    }
    psi = corr_transform::correlation(s.q_psi.mean, s.K);
    if (s.K >= 2) {
      lp += log_lkj(psi, priors.lkj_eta);
      lp += corr_transform::log_abs_det_jacobian(s.q_psi.mean, s.K);
    }
  }
  std::optional<double> bps;
  if (s.has_path_size) {
    const double b = s.q_beta_ps.mean(0);
    Vec x(1), m(1), v(1);
    x << b;
    m << 0.0;
    v << 100.0;
    lp += log_mvn_diag(x, m, v);
    bps = b;
  }
  Mat omega;
  Eigen::LLT<Mat> llt;
  if (s.has_beta()) {
    omega = assemble_covariance(tau, psi);
    llt.compute(omega);
  }
  Eigen::Index t_global = 0;
  for (Eigen::Index n = 0; n < data.n_individuals(); ++n) {
    const auto& ind = data.individuals[static_cast<std::size_t>(n)];
    Vec beta;
    if (s.has_beta()) {
      beta = s.beta_mean.col(n);
      const Vec r = beta - zeta;
      const Vec sol = llt.solve(r);
      double log_det = 0.0;
      for (Eigen::Index k = 0; k < s.K; ++k)
        log_det += 2.0 * std::log(Mat(llt.matrixL())(k, k));
      lp += -0.5 * static_cast<double>(s.K) * std::log(2.0 * M_PI) - 0.5 * log_det -
            0.5 * r.dot(sol);
    }
    for (const auto& occ : ind.occasions) {
      TasteVector eta;
      eta.fixed = alpha;
      eta.random = s.has_beta() ? Vec(beta) : Vec();
      if (s.has_mu()) {
        Vec mu = nn_forward_eval(s.net, occ.context);
        if (!s.mu_collapsed) mu += s.mu_delta.col(t_global);
        eta = apply_context_shift(eta, ContextShift{mu});
      }
      lp += choice_log_likelihood(occ, eta, bps);
      ++t_global;
    }
  }
  return lp;
}

}  // namespace

TEST_CASE("reparameterize") {
  Vec mean(2), scale(2), eps(2);
  mean << 2.0, -1.0;
  scale << 3.0, 0.5;
  eps << 0.5, 0.0;
  const Vec z = reparameterize(mean, scale, eps);
  CHECK(z(0) == doctest::Approx(3.5));
  CHECK(z(1) == doctest::Approx(-1.0));
  CHECK(reparameterize(Vec::Zero(2), Vec::Ones(2), eps) == eps);
  CHECK(reparameterize(mean, scale, Vec::Zero(2)) == mean);
  CHECK_THROWS_AS(reparameterize(mean, scale, Vec::Zero(3)), ValidationError);
}

TEST_CASE("elbo gradients match finite differences (cmmnl, all parameter classes)") {
  const ChoiceDataset data = make_synthetic(3, 2, 3, 1, 2, 2, 1001);
  VariationalState state = init_state(data, ModelKind::cmmnl, {4}, 0.1, false, 5);
  randomize_state(state, 77, 0.25);
  const PriorConfig priors = PriorConfig::defaults(1, 2);
  ElboOptions opts;
  opts.mc_samples = 2;
  opts.seed = 12;
  opts.step = 3;
  const auto batch = full_batch(data);

  VariationalState grad = zeros_like(state);
  elbo_gradients(data, batch, state, priors, opts, grad);
  const Vec analytic = flatten(grad);
  const Vec theta = flatten(state);
  REQUIRE(analytic.size() == theta.size());

  int checked = 0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double fd = fd_gradient(data, batch, state, priors, opts, theta, i, 1e-4);
    const double rel = std::abs(analytic(i) - fd) / (std::abs(fd) + 1e-8);
    CAPTURE(i);
    CHECK(rel < 1e-4);
    ++checked;
  }
  CHECK(checked == theta.size());
}

TEST_CASE("elbo gradients match finite differences (mnl with path size, batching)") {
  ChoiceDataset data = make_synthetic(4, 2, 3, 2, 0, 0, 555);
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> unif(0.2, 1.0);
  for (auto& ind : data.individuals)
    for (auto& occ : ind.occasions) {
      occ.log_path_size.resize(occ.n_alternatives());
      for (Eigen::Index j = 0; j < occ.n_alternatives(); ++j)
        occ.log_path_size(j) = std::log(unif(gen));
    }
  VariationalState state = init_state(data, ModelKind::mnl, {}, 0.0, false, 5);
  randomize_state(state, 7, 0.3);
  const PriorConfig priors = PriorConfig::defaults(2, 0);
  ElboOptions opts;
  opts.seed = 9;
  opts.step = 1;
  const std::vector<Eigen::Index> batch{0, 3, 5, 6};  // strict subset

  VariationalState grad = zeros_like(state);
  elbo_gradients(data, batch, state, priors, opts, grad);
  const Vec analytic = flatten(grad);
  const Vec theta = flatten(state);
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double fd = fd_gradient(data, batch, state, priors, opts, theta, i, 1e-4);
    CHECK(std::abs(analytic(i) - fd) / (std::abs(fd) + 1e-8) < 1e-4);
  }
}

TEST_CASE("elbo gradients match finite differences (mmnl, subset batch)") {
  const ChoiceDataset data = make_synthetic(5, 3, 3, 1, 2, 0, 321);
  VariationalState state = init_state(data, ModelKind::mmnl, {}, 0.0, false, 5);
  randomize_state(state, 11, 0.2);
  const PriorConfig priors = PriorConfig::defaults(1, 2);
  ElboOptions opts;
  opts.seed = 4;
  opts.step = 7;
  const std::vector<Eigen::Index> batch{1, 4, 8, 9, 13};

  VariationalState grad = zeros_like(state);
  elbo_gradients(data, batch, state, priors, opts, grad);
  const Vec analytic = flatten(grad);
  const Vec theta = flatten(state);
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double fd = fd_gradient(data, batch, state, priors, opts, theta, i, 1e-4);
    CHECK(std::abs(analytic(i) - fd) / (std::abs(fd) + 1e-8) < 1e-4);
  }
}

TEST_CASE("gradients of unused parameters are exactly zero when mu is collapsed") {
  const ChoiceDataset data = make_synthetic(3, 2, 3, 1, 1, 2, 99);
  VariationalState state = init_state(data, ModelKind::cmmnl, {4}, 0.0, true, 5);
  randomize_state(state, 13, 0.2);
  const PriorConfig priors = PriorConfig::defaults(1, 1);
  ElboOptions opts;
  opts.seed = 2;
  VariationalState grad = zeros_like(state);
  elbo_gradients(data, full_batch(data), state, priors, opts, grad);
  CHECK(grad.mu_delta.norm() == 0.0);
  CHECK(grad.mu_raw.norm() == 0.0);
  // but the network still learns through the likelihood
  double net_norm = 0.0;
  for (const auto& l : grad.net.layers) net_norm += l.w.norm() + l.b.norm();
  CHECK(net_norm > 0.0);
}

TEST_CASE("point-mass ELBO energy approaches the log joint at the means") {
  {
    const ChoiceDataset data = make_synthetic(4, 2, 3, 2, 0, 0, 1);
    VariationalState state = init_state(data, ModelKind::mnl, {}, 0.0, false, 5);
    randomize_state(state, 21, 0.4);
    set_all_raw_scales(state, 1e-6);
    const PriorConfig priors = PriorConfig::defaults(2, 0);
    ElboOptions opts;
    opts.seed = 31;
    const double energy = elbo_estimate(data, full_batch(data), state, priors, opts).energy;
    CHECK(energy == doctest::Approx(log_joint_oracle(data, state, priors)).epsilon(1e-3));
  }
  {
    const ChoiceDataset data = make_synthetic(4, 3, 3, 1, 2, 2, 2);
    VariationalState state = init_state(data, ModelKind::cmmnl, {4}, 0.0, true, 5);
    randomize_state(state, 22, 0.3);
    set_all_raw_scales(state, 1e-6);
    const PriorConfig priors = PriorConfig::defaults(1, 2);
    ElboOptions opts;
    opts.seed = 32;
    const double energy = elbo_estimate(data, full_batch(data), state, priors, opts).energy;
    const double want = log_joint_oracle(data, state, priors);
    CHECK(energy == doctest::Approx(want).epsilon(1e-3));
  }
}

TEST_CASE("non-collapsed point mass includes the shift prior and delta offsets") {
  const ChoiceDataset data = make_synthetic(3, 2, 3, 1, 1, 2, 8);
  VariationalState state = init_state(data, ModelKind::cmmnl, {4}, 0.0, false, 5);
  randomize_state(state, 23, 0.3);
  set_all_raw_scales(state, 1e-7);
  const PriorConfig priors = PriorConfig::defaults(1, 1);
  ElboOptions opts;
  opts.seed = 33;
  const double energy = elbo_estimate(data, full_batch(data), state, priors, opts).energy;
  // oracle: log joint + the shift prior at mu = net + delta
  double want = log_joint_oracle(data, state, priors);
  const double s2 = priors.sigma_c * priors.sigma_c;
  for (Eigen::Index t = 0; t < state.mu_delta.cols(); ++t) {
    for (Eigen::Index i = 0; i < state.mu_delta.rows(); ++i) {
      const double d = state.mu_delta(i, t);
      want += -0.5 * (std::log(2 * M_PI) + std::log(s2) + d * d / s2);
    }
  }
  CHECK(energy == doctest::Approx(want).epsilon(1e-3));
}

TEST_CASE("disjoint half-batch estimates average to the full-batch ELBO") {
  const ChoiceDataset data = make_synthetic(6, 2, 3, 1, 1, 0, 44);
  VariationalState state = init_state(data, ModelKind::mmnl, {}, 0.0, false, 5);
  randomize_state(state, 31, 0.2);
  const PriorConfig priors = PriorConfig::defaults(1, 1);
  const auto all = full_batch(data);
  std::vector<Eigen::Index> evens, odds;
  for (Eigen::Index t : all) (t % 2 == 0 ? evens : odds).push_back(t);

  const int reps = 1000;
  std::vector<double> diffs(reps);
  for (int r = 0; r < reps; ++r) {
    ElboOptions opts;
    opts.seed = 1234;
    opts.step = static_cast<std::uint64_t>(r);
    const double full = elbo_estimate(data, all, state, priors, opts).total();
    const double h1 = elbo_estimate(data, evens, state, priors, opts).total();
    const double h2 = elbo_estimate(data, odds, state, priors, opts).total();
    diffs[static_cast<std::size_t>(r)] = 0.5 * (h1 + h2) - full;
  }
  double mean = 0.0;
  for (double d : diffs) mean += d;
  mean /= reps;
  double var = 0.0;
  for (double d : diffs) var += (d - mean) * (d - mean);
  var /= reps - 1;
  const double se = std::sqrt(var / reps);
  CHECK(std::abs(mean) < 3.0 * se + 1e-12);
}

TEST_CASE("duplicating every individual doubles the likelihood portion") {
  const ChoiceDataset data = make_synthetic(5, 2, 3, 2, 0, 0, 71);
  ChoiceDataset doubled = data;
  std::int64_t next_occ = 1000;
  for (const auto& ind : data.individuals) {
    Individual copy = ind;
    copy.individual_id += 1000;
    for (auto& occ : copy.occasions) occ.occasion_id = next_occ++;
    doubled.individuals.push_back(copy);
  }
  doubled.validate();

  VariationalState state = init_state(data, ModelKind::mnl, {}, 0.0, false, 5);
  randomize_state(state, 41, 0.3);
  set_all_raw_scales(state, 1e-8);
  VariationalState state2 = init_state(doubled, ModelKind::mnl, {}, 0.0, false, 5);
  state2.q_alpha = state.q_alpha;

  const PriorConfig priors = PriorConfig::defaults(2, 0);
  ElboOptions opts;
  opts.seed = 3;
  const double e1 = elbo_estimate(data, full_batch(data), state, priors, opts).energy;
  const double e2 = elbo_estimate(doubled, full_batch(doubled), state2, priors, opts).energy;
  const double prior = log_mvn_diag(state.q_alpha.mean, priors.lambda0, priors.xi0_diag);
  CHECK(e2 - prior == doctest::Approx(2.0 * (e1 - prior)).epsilon(1e-6));
}

TEST_CASE("doubling mc_samples halves the gradient estimator variance") {
  const ChoiceDataset data = make_synthetic(4, 2, 3, 1, 1, 0, 61);
  VariationalState state = init_state(data, ModelKind::mmnl, {}, 0.0, false, 5);
  randomize_state(state, 51, 0.3);
  const PriorConfig priors = PriorConfig::defaults(1, 1);
  const auto batch = full_batch(data);

  auto grad_coord_variance = [&](int mc) {
    const int reps = 1000;
    std::vector<double> g(reps);
    VariationalState grad = zeros_like(state);
    for (int r = 0; r < reps; ++r) {
      ElboOptions opts;
      opts.mc_samples = mc;
      opts.seed = 777 + static_cast<std::uint64_t>(mc);  // independent draw sets
      opts.step = static_cast<std::uint64_t>(r);
      elbo_gradients(data, batch, state, priors, opts, grad);
      g[static_cast<std::size_t>(r)] = grad.q_zeta.mean(0);
    }
    double mean = 0.0;
    for (double x : g) mean += x;
    mean /= reps;
    double var = 0.0;
    for (double x : g) var += (x - mean) * (x - mean);
    return var / (reps - 1);
  };
  const double v1 = grad_coord_variance(1);
  const double v2 = grad_coord_variance(2);
  CHECK(v1 / v2 == doctest::Approx(2.0).epsilon(0.20));
}

TEST_CASE("elbo is deterministic and thread-count reproducible") {
  const ChoiceDataset data = make_synthetic(6, 3, 3, 1, 2, 2, 17);
  VariationalState state = init_state(data, ModelKind::cmmnl, {4}, 0.1, false, 5);
  randomize_state(state, 61, 0.2);
  const PriorConfig priors = PriorConfig::defaults(1, 2);
  const auto batch = full_batch(data);
  ElboOptions opts;
  opts.seed = 21;
  opts.step = 5;

  VariationalState g1 = zeros_like(state), g2 = zeros_like(state), g4 = zeros_like(state);
  const double e1 = elbo_gradients(data, batch, state, priors, opts, g1).total();
  const double e1b = elbo_gradients(data, batch, state, priors, opts, g2).total();
  CHECK(e1 == e1b);
  CHECK(flatten(g1) == flatten(g2));

  ElboOptions opts4 = opts;
  opts4.threads = 2;
  VariationalState g4b = zeros_like(state);
  const double e4 = elbo_gradients(data, batch, state, priors, opts4, g4).total();
  const double e4b = elbo_gradients(data, batch, state, priors, opts4, g4b).total();
  CHECK(e4 == e4b);
  CHECK(flatten(g4) == flatten(g4b));
  CHECK(e1 == doctest::Approx(e4).epsilon(1e-12));
  const Vec d = flatten(g1) - flatten(g4);
  CHECK(d.lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("elbo rejects malformed batches") {
  const ChoiceDataset data = make_synthetic(2, 2, 3, 1, 0, 0, 5);
  VariationalState state = init_state(data, ModelKind::mnl, {}, 0.0, false, 5);
  const PriorConfig priors = PriorConfig::defaults(1, 0);
  ElboOptions opts;
  CHECK_THROWS_AS(elbo_estimate(data, {}, state, priors, opts), ValidationError);
  CHECK_THROWS_AS(elbo_estimate(data, {0, 0}, state, priors, opts), ValidationError);
  CHECK_THROWS_AS(elbo_estimate(data, {99}, state, priors, opts), ValidationError);
}
