#include "doctest.h"

#include <cmath>
#include <random>

#include "cmmnl/analysis.hpp"
#include "cmmnl/simulate.hpp"
#include "test_helpers.hpp"

using namespace cmmnl;
using cmmnl::test::make_synthetic;

namespace {

FitArtifact artifact_for(const ChoiceDataset& data, ModelKind kind,
                         const VariationalState& state) {
  FitArtifact a;
  a.model = kind;
  a.column_names = data.column_names;
  a.context_names = data.context_names;
  a.context_kinds = data.context_kinds;
  a.state = state;
  if (state.has_beta())
    for (const auto& ind : data.individuals) a.individual_ids.push_back(ind.individual_id);
  return a;
}

// Artifact whose network is a single linear layer M (exact linear shifts).
FitArtifact linear_net_artifact(const ChoiceDataset& data, const Mat& m) {
  VariationalState state = init_state(data, ModelKind::cmmnl, {}, 0.0, true, 5);
  state.net.layers.clear();
  state.net.layers.push_back({m, Vec::Zero(m.rows())});
  return artifact_for(data, ModelKind::cmmnl, state);
}

}  // namespace

TEST_CASE("compute_metrics on the uniform model") {
  const ChoiceDataset data = make_synthetic(500, 6, 3, 2, 0, 0, 7);
  const VariationalState state = init_state(data, ModelKind::mnl, {}, 0.0, false, 5);
  const FitArtifact artifact = artifact_for(data, ModelKind::mnl, state);
  const FitMetrics m = compute_metrics(data, artifact);
  CHECK(m.avg_choice_prob == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(m.log_likelihood == doctest::Approx(-std::log(3.0) * 3000.0).epsilon(1e-12));
  CHECK(m.pct_correct == doctest::Approx(100.0 / 3.0).epsilon(0.10));
  CHECK(m.n_obs == 3000);
  CHECK(m.n_individuals == 500);
  CHECK(m.n_utility_params == 2);
}

TEST_CASE("compute_metrics on perfectly separated data") {
  ChoiceDataset data = make_synthetic(50, 4, 2, 1, 0, 0, 9);
  for (auto& ind : data.individuals)
    for (auto& occ : ind.occasions) {
      occ.attributes.setZero();
      occ.attributes(occ.chosen, 0) = 10.0;
    }
  VariationalState state = init_state(data, ModelKind::mnl, {}, 0.0, false, 5);
  state.q_alpha.mean(0) = 5.0;
  const FitArtifact artifact = artifact_for(data, ModelKind::mnl, state);
  const FitMetrics m = compute_metrics(data, artifact);
  CHECK(m.pct_correct == 100.0);
  CHECK(m.avg_choice_prob > 0.99);
}

TEST_CASE("compute_metrics equals a naive per-row oracle") {
  const ChoiceDataset data = make_synthetic(25, 4, 3, 1, 2, 0, 31);
  VariationalState state = init_state(data, ModelKind::mmnl, {}, 0.0, false, 5);
  std::mt19937 gen(3);
  std::normal_distribution<double> norm(0.0, 0.5);
  state.q_alpha.mean(0) = norm(gen);
  for (Eigen::Index n = 0; n < state.beta_mean.cols(); ++n)
    for (Eigen::Index k = 0; k < state.beta_mean.rows(); ++k) state.beta_mean(k, n) = norm(gen);
  const FitArtifact artifact = artifact_for(data, ModelKind::mmnl, state);
  const FitMetrics m = compute_metrics(data, artifact);

  double ll = 0.0, correct = 0.0, avg = 0.0;
  long t = 0;
  for (Eigen::Index n = 0; n < data.n_individuals(); ++n) {
    const auto& ind = data.individuals[static_cast<std::size_t>(n)];
    for (const auto& occ : ind.occasions) {
      std::vector<double> utils;
      for (Eigen::Index j = 0; j < occ.n_alternatives(); ++j) {
        double u = occ.attributes(j, 0) * state.q_alpha.mean(0);
        for (Eigen::Index k = 0; k < 2; ++k)
          u += occ.attributes(j, 1 + k) * state.beta_mean(k, n);
        utils.push_back(u);
      }
      double denom = 0.0;
      for (double u : utils) denom += std::exp(u);
      std::size_t best = 0;
      for (std::size_t j = 1; j < utils.size(); ++j)
        if (utils[j] > utils[best]) best = j;
      const double p = std::exp(utils[static_cast<std::size_t>(occ.chosen)]) / denom;
      ll += std::log(p);
      avg += p;
      correct += best == static_cast<std::size_t>(occ.chosen) ? 1.0 : 0.0;
      ++t;
    }
  }
  CHECK(m.log_likelihood == doctest::Approx(ll).epsilon(1e-10));
  CHECK(m.avg_choice_prob == doctest::Approx(avg / t).epsilon(1e-12));
  CHECK(m.pct_correct == doctest::Approx(100.0 * correct / t).epsilon(1e-12));
}

TEST_CASE("compute_metrics log-likelihood equals summed choice_log_likelihood exactly") {
  const ChoiceDataset data = make_synthetic(10, 3, 3, 1, 1, 2, 41);
  VariationalState state = init_state(data, ModelKind::cmmnl, {8}, 0.1, true, 5);
  StreamRng rng = stream_rng(7, Stream::net_init);
  state.net = nn_init({2, 8, 2}, 0.1, rng);
  state.net.layers.back().w.setConstant(0.3);  // nonzero shifts
  const FitArtifact artifact = artifact_for(data, ModelKind::cmmnl, state);
  const FitMetrics m = compute_metrics(data, artifact);
  double ll = 0.0;
  for (Eigen::Index n = 0; n < data.n_individuals(); ++n) {
    const auto& ind = data.individuals[static_cast<std::size_t>(n)];
    for (const auto& occ : ind.occasions) {
      TasteVector eta;
      eta.fixed = state.q_alpha.mean;
      eta.random = state.beta_mean.col(n);
      eta = apply_context_shift(eta, ContextShift{nn_forward_eval(state.net, occ.context)});
      ll += choice_log_likelihood(occ, eta);
    }
  }
  CHECK(m.log_likelihood == ll);
}

TEST_CASE("predict matches mnl_probabilities at eta_n + net(c) within 1e-12") {
  const ChoiceDataset data = make_synthetic(8, 3, 3, 1, 1, 2, 43);
  VariationalState state = init_state(data, ModelKind::cmmnl, {4}, 0.0, true, 5);
  StreamRng rng = stream_rng(3, Stream::net_init);
  state.net = nn_init({2, 4, 2}, 0.0, rng);
  state.net.layers.back().w.setRandom();
  for (Eigen::Index n = 0; n < state.beta_mean.cols(); ++n) state.beta_mean(0, n) = 0.1 * n;
  const FitArtifact artifact = artifact_for(data, ModelKind::cmmnl, state);
  const auto probs = predict_probabilities(data, artifact);
  std::size_t i = 0;
  for (Eigen::Index n = 0; n < data.n_individuals(); ++n) {
    const auto& ind = data.individuals[static_cast<std::size_t>(n)];
    for (const auto& occ : ind.occasions) {
      TasteVector eta;
      eta.fixed = state.q_alpha.mean;
      eta.random = state.beta_mean.col(n);
      eta = apply_context_shift(eta, ContextShift{nn_forward_eval(state.net, occ.context)});
      const Vec want = mnl_probabilities(occ.attributes * eta.concat(), occ.availability);
      CHECK((probs[i] - want).lpNorm<Eigen::Infinity>() < 1e-12);
      ++i;
    }
  }
}

TEST_CASE("unseen individuals fall back to population means") {
  const ChoiceDataset data = make_synthetic(4, 2, 3, 1, 1, 0, 47);
  VariationalState state = init_state(data, ModelKind::mmnl, {}, 0.0, false, 5);
  state.q_zeta.mean(0) = 0.8;
  for (Eigen::Index n = 0; n < 4; ++n) state.beta_mean(0, n) = 5.0;  // far from zeta
  FitArtifact artifact = artifact_for(data, ModelKind::mmnl, state);
  ChoiceDataset fresh = data;
  for (auto& ind : fresh.individuals) ind.individual_id += 1000;  // all unseen
  const auto p_fresh = predict_probabilities(fresh, artifact);
  VariationalState pop = state;
  for (Eigen::Index n = 0; n < 4; ++n) pop.beta_mean(0, n) = 0.8;  // = zeta
  const FitArtifact pop_artifact = artifact_for(data, ModelKind::mmnl, pop);
  const auto p_pop = predict_probabilities(data, pop_artifact);
  for (std::size_t i = 0; i < p_fresh.size(); ++i)
    CHECK((p_fresh[i] - p_pop[i]).lpNorm<Eigen::Infinity>() < 1e-15);
}

TEST_CASE("scenario_table: zero network, grid shape, reference semantics") {
  const ChoiceDataset data = make_synthetic(5, 2, 3, 1, 1, 2, 53);
  // context dims: c1 binary, c2 continuous; add one more binary for a 2x2 grid
  ChoiceDataset d2 = data;
  d2.context_names = {"rain", "commute"};
  d2.context_kinds = {ContextKind::binary, ContextKind::binary};
  for (auto& ind : d2.individuals)
    for (auto& occ : ind.occasions) occ.context(1) = occ.context(1) > 1.0 ? 1.0 : 0.0;
  VariationalState state = init_state(d2, ModelKind::cmmnl, {4}, 0.0, true, 5);
  state.q_alpha.mean(0) = 1.25;
  state.q_zeta.mean(0) = -0.75;
  const FitArtifact artifact = artifact_for(d2, ModelKind::cmmnl, state);

  const auto grid = all_binary_grid(artifact);
  CHECK(grid.size() == 4);  // 2^2 combinations
  CHECK(grid[0].label == "rain- commute-");
  CHECK(grid[3].label == "rain+ commute+");

  const ScenarioAssignment ref = make_assignment(artifact, {});
  const ScenarioReport rep = scenario_table(artifact, grid, ref, 0.05);
  // zero output layer: base equals the posterior means, all shifts zero
  CHECK(rep.base(0) == 1.25);
  CHECK(rep.base(1) == -0.75);
  CHECK(rep.shifts.norm() == 0.0);
  // reference scenario shift is identically zero
  for (std::size_t g = 0; g < rep.scenarios.size(); ++g)
    if (rep.scenarios[g].values == ref.values)
      CHECK(rep.shifts.col(static_cast<Eigen::Index>(g)).norm() == 0.0);
  const std::string csv = rep.to_csv();
  CHECK(csv.find("parameter,base,rain- commute-,rain- commute+,rain+ commute-,rain+ commute+") !=
        std::string::npos);
}

TEST_CASE("scenario_table with a linear network matches M (c - c0) exactly") {
  ChoiceDataset data = make_synthetic(5, 2, 3, 1, 1, 2, 59);
  data.context_kinds = {ContextKind::binary, ContextKind::binary};
  for (auto& ind : data.individuals)
    for (auto& occ : ind.occasions) occ.context(1) = occ.context(1) > 1.0 ? 1.0 : 0.0;
  Mat m(2, 2);
  m << 0.5, -0.25, 0.1, 0.75;
  const FitArtifact artifact = linear_net_artifact(data, m);
  const auto grid = all_binary_grid(artifact);
  const ScenarioAssignment ref = make_assignment(artifact, {{"c2", 1.0}});
  const ScenarioReport rep = scenario_table(artifact, grid, ref, 0.05);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const Vec want = m * (grid[g].values - ref.values);
    CHECK((rep.shifts.col(static_cast<Eigen::Index>(g)) - want).lpNorm<Eigen::Infinity>() <
          1e-14);
  }
  // base includes the network evaluated at the reference
  const Vec base_want = Vec::Zero(2) + m * ref.values;
  CHECK((rep.base - base_want).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("scenario render suppresses small shifts but the CSV never does") {
  ChoiceDataset data = make_synthetic(3, 2, 3, 1, 0, 2, 61);
  data.context_kinds = {ContextKind::binary, ContextKind::binary};
  for (auto& ind : data.individuals)
    for (auto& occ : ind.occasions) occ.context(1) = 0.0;
  Mat m(1, 2);
  m << 0.001, 2.0;  // tiny shift on dim 1, large on dim 2
  FitArtifact artifact = linear_net_artifact(data, m);
  artifact.state.q_alpha.mean(0) = 1.0;
  const auto grid = all_binary_grid(artifact);
  const ScenarioReport rep =
      scenario_table(artifact, grid, make_assignment(artifact, {}), 0.05);
  const std::string rendered = rep.render();
  CHECK(rendered.find("+2.000") != std::string::npos);
  CHECK(rendered.find("+0.001") == std::string::npos);  // suppressed below 5% of base
  CHECK(rep.to_csv().find("0.001") != std::string::npos);
}

TEST_CASE("marginal_context_effect") {
  ChoiceDataset data = make_synthetic(3, 2, 3, 2, 0, 2, 67);
  data.context_kinds = {ContextKind::binary, ContextKind::binary};
  for (auto& ind : data.individuals)
    for (auto& occ : ind.occasions) occ.context(1) = occ.context(1) > 1.0 ? 1.0 : 0.0;
  {
    // additive (linear) shift: marginal effect equals the matrix column
    Mat m(2, 2);
    m << 0.4, -0.3, 0.0, 0.9;
    const FitArtifact artifact = linear_net_artifact(data, m);
    const Vec eff = marginal_context_effect(artifact, "c1");
    CHECK((eff - m.col(0)).lpNorm<Eigen::Infinity>() < 1e-14);
  }
  {
    // pure interaction: hidden = relu(c1 + c2 - 1) fires only on (1,1)
    VariationalState state = init_state(data, ModelKind::cmmnl, {1}, 0.0, true, 5);
    state.net.layers[0].w = Mat::Ones(1, 2);
    state.net.layers[0].b = Vec::Constant(1, -1.0);
    state.net.layers[1].w = Mat::Zero(2, 1);
    state.net.layers[1].w(0, 0) = 0.8;  // interaction magnitude on parameter 1
    const FitArtifact artifact = artifact_for(data, ModelKind::cmmnl, state);
    const Vec eff = marginal_context_effect(artifact, "c1");
    CHECK(eff(0) == doctest::Approx(0.4).epsilon(1e-14));  // half the magnitude
    CHECK(eff(1) == 0.0);
  }
  {
    // zero network
    VariationalState state = init_state(data, ModelKind::cmmnl, {4}, 0.0, true, 5);
    const FitArtifact artifact = artifact_for(data, ModelKind::cmmnl, state);
    CHECK(marginal_context_effect(artifact, "c2").norm() == 0.0);
  }
  {
    // continuous remaining dim must be pinned
    ChoiceDataset mixed = data;
    mixed.context_kinds = {ContextKind::binary, ContextKind::continuous};
    VariationalState state = init_state(mixed, ModelKind::cmmnl, {4}, 0.0, true, 5);
    const FitArtifact artifact = artifact_for(mixed, ModelKind::cmmnl, state);
    CHECK_THROWS_AS(marginal_context_effect(artifact, "c1"), ValidationError);
    CHECK(marginal_context_effect(artifact, "c1", {{"c2", 0.5}}).norm() == 0.0);
    CHECK_THROWS_AS(marginal_context_effect(artifact, "c2", {{"c1", 0.0}}), ValidationError);
  }
}

TEST_CASE("context_sweep") {
  ChoiceDataset data = make_synthetic(3, 2, 3, 2, 0, 2, 71);
  data.context_names = {"com", "rain"};
  data.context_kinds = {ContextKind::binary, ContextKind::continuous};
  Mat m(2, 2);
  m << 0.0, 1.5, 0.2, -0.7;
  const FitArtifact artifact = linear_net_artifact(data, m);
  const SweepTable table = context_sweep(artifact, "rain", 0.0, 5.0, 50);
  CHECK(table.values.size() == 50);
  CHECK(table.deltas.rows() == 50);
  // first row is all zeros by construction
  CHECK(table.deltas.row(0).norm() == 0.0);
  // linear planted shift: trajectory slope equals the matrix column
  for (int i = 0; i < 50; ++i) {
    const Vec want = m.col(1) * (table.values[static_cast<std::size_t>(i)] - 0.0);
    CHECK((table.deltas.row(i).transpose() - want).lpNorm<Eigen::Infinity>() < 1e-10);
  }
  const std::string csv = table.to_csv();
  CHECK(csv.rfind("rain,xf1_delta,xf2_delta\n", 0) == 0);
  CHECK_THROWS_AS(context_sweep(artifact, "com", 0.0, 1.0, 5), ValidationError);
  CHECK_THROWS_AS(context_sweep(artifact, "rain", 1.0, 1.0, 5), ValidationError);
  CHECK_THROWS_AS(context_sweep(artifact, "rain", 0.0, 5.0, 0), ValidationError);
}

TEST_CASE("artifact json round trip preserves analysis outputs") {
  const SimSpec spec = [] {
    SimSpec s;
    s.n_individuals = 15;
    s.n_occasions = 3;
    s.n_alternatives = 3;
    s.n_fixed = 1;
    s.n_random = 1;
    s.true_alpha = Vec::Constant(1, 0.5);
    s.true_zeta = Vec::Constant(1, -0.5);
    s.true_tau = Vec::Constant(1, 0.4);
    s.context.push_back({"rain", ContextKind::continuous,
                         ContextDistSpec::Dist::uniform, 0.5, 1.0, 0.0, 2.0});
    s.context.push_back({"com", ContextKind::binary, ContextDistSpec::Dist::bernoulli, 0.5,
                         1.0, 0.0, 1.0});
    s.shift.kind = PlantedShift::Kind::linear;
    s.shift.matrix = Mat::Ones(2, 2) * 0.3;
    s.seed = 5;
    return s;
  }();
  const auto [data, truth] = generate_cmmnl(spec);
  VariationalState state = init_state(data, ModelKind::cmmnl, {6}, 0.1, false, 5);
  std::mt19937 gen(9);
  std::normal_distribution<double> norm(0.0, 0.4);
  for (auto& [ptr, len] : param_spans(state))
    for (Eigen::Index i = 0; i < len; ++i) ptr[i] += norm(gen);
  FitArtifact artifact = artifact_for(data, ModelKind::cmmnl, state);
  for (const auto& ind : data.individuals)
    for (const auto& occ : ind.occasions) artifact.occasion_ids.push_back(occ.occasion_id);
  const FitArtifact back = FitArtifact::from_json(artifact.to_json());
  CHECK(back.column_names == artifact.column_names);
  CHECK(back.individual_ids == artifact.individual_ids);
  const auto p1 = predict_probabilities(data, artifact);
  const auto p2 = predict_probabilities(data, back);
  for (std::size_t i = 0; i < p1.size(); ++i)
    CHECK((p1[i] - p2[i]).lpNorm<Eigen::Infinity>() < 1e-12);
  const auto grid = all_binary_grid(artifact, {{"rain", 0.0}});
  const auto ref = make_assignment(artifact, {{"rain", 0.0}});
  CHECK(scenario_table(artifact, grid, ref, 0.05).to_csv() ==
        scenario_table(back, grid, ref, 0.05).to_csv());
}
