#include "doctest.h"

#include <cmath>
#include <sstream>

#include "cmmnl/choice_model.hpp"
#include "cmmnl/simulate.hpp"

using namespace cmmnl;

namespace {

SimSpec base_spec() {
  SimSpec spec;
  spec.n_individuals = 100;
  spec.n_occasions = 5;
  spec.n_alternatives = 3;
  spec.n_fixed = 1;
  spec.n_random = 2;
  spec.true_alpha = Vec(1);
  spec.true_alpha << 0.8;
  spec.true_zeta = Vec(2);
  spec.true_zeta << -1.0, 0.5;
  spec.true_tau = Vec(2);
  spec.true_tau << 0.6, 0.9;
  spec.seed = 11;
  return spec;
}

}  // namespace

TEST_CASE("tau -> 0 limit: choice counts match analytic MNL probabilities") {
  SimSpec spec = base_spec();
  spec.n_individuals = 20000;
  spec.n_occasions = 5;
  spec.true_tau << 1e-12, 1e-12;
  spec.seed = 5;
  const auto [data, truth] = generate_mmnl(spec);
  // all beta_n collapse to zeta
  for (Eigen::Index n = 0; n < truth.beta.cols(); ++n)
    CHECK((truth.beta.col(n) - spec.true_zeta).norm() < 1e-9);
  // empirical counts per alternative vs the summed analytic probabilities
  Vec expected = Vec::Zero(3), observed = Vec::Zero(3), var = Vec::Zero(3);
  TasteVector eta;
  eta.fixed = spec.true_alpha;
  eta.random = spec.true_zeta;
  for (const auto& ind : data.individuals) {
    for (const auto& occ : ind.occasions) {
      const Vec p = mnl_probabilities(occ.attributes * eta.concat(), occ.availability);
      expected += p;
      var += p.cwiseProduct(Vec::Ones(3) - p);
      observed(occ.chosen) += 1.0;
    }
  }
  for (int j = 0; j < 3; ++j) {
    const double se = std::sqrt(var(j));
    CHECK(std::abs(observed(j) - expected(j)) < 2.0 * se);
  }
}

TEST_CASE("psi = I: sampled random coefficients are nearly uncorrelated") {
  SimSpec spec = base_spec();
  spec.n_individuals = 10000;
  spec.n_occasions = 1;
  spec.seed = 21;
  const auto [data, truth] = generate_mmnl(spec);
  const Mat& b = truth.beta;
  Vec mean = b.rowwise().mean();
  double c01 = 0.0, v0 = 0.0, v1 = 0.0;
  for (Eigen::Index n = 0; n < b.cols(); ++n) {
    const double d0 = b(0, n) - mean(0);
    const double d1 = b(1, n) - mean(1);
    c01 += d0 * d1;
    v0 += d0 * d0;
    v1 += d1 * d1;
  }
  CHECK(std::abs(c01 / std::sqrt(v0 * v1)) < 0.05);
  // marginal sds near tau
  CHECK(std::sqrt(v0 / b.cols()) == doctest::Approx(0.6).epsilon(0.05));
  CHECK(std::sqrt(v1 / b.cols()) == doctest::Approx(0.9).epsilon(0.05));
}

TEST_CASE("fixed seed reproduces the dataset exactly") {
  const SimSpec spec = base_spec();
  const auto [d1, t1] = generate_mmnl(spec);
  const auto [d2, t2] = generate_mmnl(spec);
  CHECK(d1 == d2);
  CHECK(t1.exact_loglik == t2.exact_loglik);
  SimSpec other = spec;
  other.seed = 12;
  const auto [d3, t3] = generate_mmnl(other);
  CHECK_FALSE(d1 == d3);
}

TEST_CASE("linear shift with sigma_c = 0 is exact") {
  SimSpec spec = base_spec();
  spec.context.push_back({"rain", ContextKind::continuous,
                          ContextDistSpec::Dist::exponential, 0.5, 2.0, 0.0, 1.0});
  spec.context.push_back({"com", ContextKind::binary, ContextDistSpec::Dist::bernoulli, 0.5,
                          1.0, 0.0, 1.0});
  spec.shift.kind = PlantedShift::Kind::linear;
  spec.shift.matrix = Mat(3, 2);
  spec.shift.matrix << 0.5, -0.2, 0.0, 0.3, -0.1, 0.0;
  spec.sigma_c = 0.0;
  const auto [data, truth] = generate_cmmnl(spec);
  Eigen::Index t = 0;
  for (const auto& ind : data.individuals) {
    for (const auto& occ : ind.occasions) {
      const Vec want = spec.shift.matrix * occ.context;
      CHECK((truth.mu.col(t) - want).norm() == 0.0);
      ++t;
    }
  }
}

TEST_CASE("all-zero context with a vanishing shift reproduces the no-shift dataset") {
  SimSpec spec = base_spec();
  spec.context.push_back({"a", ContextKind::binary, ContextDistSpec::Dist::bernoulli, 0.0,
                          1.0, 0.0, 1.0});  // p = 0: always zero
  SimSpec shifted = spec;
  shifted.shift.kind = PlantedShift::Kind::linear;
  shifted.shift.matrix = Mat::Ones(3, 1);  // vanishes at c = 0
  shifted.sigma_c = 0.0;
  const auto [plain, t1] = generate_mmnl(spec);
  const auto [with_shift, t2] = generate_cmmnl(shifted);
  CHECK(plain == with_shift);
  CHECK(t1.exact_loglik == t2.exact_loglik);
}

TEST_CASE("planted interaction cell changes behaviour only in the active cell") {
  SimSpec spec = base_spec();
  spec.n_individuals = 4000;
  spec.n_occasions = 4;
  spec.n_fixed = 1;
  spec.n_random = 0;
  spec.true_alpha = Vec(1);
  spec.true_alpha << 0.4;
  spec.true_zeta = Vec(0);
  spec.true_tau = Vec(0);
  spec.context.push_back({"c1", ContextKind::binary, ContextDistSpec::Dist::bernoulli, 0.5,
                          1.0, 0.0, 1.0});
  spec.context.push_back({"c2", ContextKind::binary, ContextDistSpec::Dist::bernoulli, 0.5,
                          1.0, 0.0, 1.0});
  spec.shift.kind = PlantedShift::Kind::interaction_cells;
  spec.shift.dim_a = 0;
  spec.shift.dim_b = 1;
  spec.shift.target = Vec(1);
  spec.shift.target << 1.5;
  spec.sigma_c = 0.0;
  spec.seed = 31;
  const auto [data, truth] = generate_cmmnl(spec);

  // share of occasions where the chosen alternative maximizes the attribute,
  // by context cell; the (1,1) cell has a stronger taste for it.
  double share[2][2] = {{0, 0}, {0, 0}};
  double count[2][2] = {{0, 0}, {0, 0}};
  for (const auto& ind : data.individuals) {
    for (const auto& occ : ind.occasions) {
      Eigen::Index best = 0;
      occ.attributes.col(0).maxCoeff(&best);
      const int a = static_cast<int>(occ.context(0));
      const int b = static_cast<int>(occ.context(1));
      share[a][b] += best == occ.chosen ? 1.0 : 0.0;
      count[a][b] += 1.0;
    }
  }
  auto prop = [&](int a, int b) { return share[a][b] / count[a][b]; };
  auto se2 = [&](int a, int b) {
    const double p = prop(a, b);
    return p * (1.0 - p) / count[a][b];
  };
  // active cell differs from every inactive cell by more than 3 se
  for (const auto& [a, b] : std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {1, 0}}) {
    const double z =
        (prop(1, 1) - prop(a, b)) / std::sqrt(se2(1, 1) + se2(a, b));
    CHECK(z > 3.0);
  }
  // inactive cells agree within noise
  const double z00_01 =
      std::abs(prop(0, 0) - prop(0, 1)) / std::sqrt(se2(0, 0) + se2(0, 1));
  CHECK(z00_01 < 3.0);
}

TEST_CASE("equal-attribute alternatives yield uniform choice shares") {
  SimSpec spec = base_spec();
  spec.n_individuals = 5000;
  spec.n_occasions = 4;
  spec.attributes.assign(3, AttributeDist{AttributeDist::Kind::uniform, 0.7, 0.7});
  spec.seed = 41;
  const auto [data, truth] = generate_mmnl(spec);
  Vec counts = Vec::Zero(3);
  for (const auto& ind : data.individuals)
    for (const auto& occ : ind.occasions) counts(occ.chosen) += 1.0;
  const double t = static_cast<double>(data.n_occasions());
  const double se = std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / t);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(counts(j) / t - 1.0 / 3.0) < 3.0 * se);
}

TEST_CASE("ground truth reproduces the exact log-likelihood via model-core ops") {
  SimSpec spec = base_spec();
  spec.context.push_back({"rain", ContextKind::continuous,
                          ContextDistSpec::Dist::uniform, 0.5, 1.0, 0.0, 3.0});
  spec.shift.kind = PlantedShift::Kind::saturating;
  spec.shift.dim = 0;
  spec.shift.amplitude = Vec(3);
  spec.shift.amplitude << 0.5, -0.3, 0.2;
  spec.shift.rate = 1.1;
  spec.sigma_c = 0.05;
  const auto [data, truth] = generate_cmmnl(spec);
  double ll = 0.0;
  Eigen::Index t = 0;
  for (Eigen::Index n = 0; n < data.n_individuals(); ++n) {
    const auto& ind = data.individuals[static_cast<std::size_t>(n)];
    for (const auto& occ : ind.occasions) {
      TasteVector eta;
      eta.fixed = truth.alpha;
      eta.random = truth.beta.col(n);
      eta = apply_context_shift(eta, ContextShift{truth.mu.col(t)});
      ll += choice_log_likelihood(occ, eta);
      ++t;
    }
  }
  CHECK(ll == doctest::Approx(truth.exact_loglik).epsilon(1e-10));
  data.validate();
}

TEST_CASE("sim spec json round trip") {
  SimSpec spec = base_spec();
  spec.context.push_back({"rain", ContextKind::continuous,
                          ContextDistSpec::Dist::exponential, 0.5, 2.5, 0.0, 1.0});
  spec.shift.kind = PlantedShift::Kind::gated_linear;
  spec.shift.dim = 0;
  spec.shift.gate_dim = 0;
  spec.shift.slope = Vec::Ones(3);
  const SimSpec back = SimSpec::from_json(spec.to_json());
  CHECK(back.n_individuals == spec.n_individuals);
  CHECK(back.true_zeta == spec.true_zeta);
  CHECK(back.context.size() == spec.context.size());
  CHECK(back.shift.kind == spec.shift.kind);
  const auto [d1, t1] = generate_cmmnl(spec);
  const auto [d2, t2] = generate_cmmnl(back);
  CHECK(d1 == d2);
}
