#include "cmmnl/simulate.hpp"

#include <Eigen/Cholesky>

#include <cmath>

#include "cmmnl/choice_model.hpp"
#include "cmmnl/math.hpp"

namespace cmmnl {

using nlohmann::json;

Vec PlantedShift::eval(const Vec& c, Eigen::Index n_params) const {
  switch (kind) {
    case Kind::none:
      return Vec::Zero(n_params);
    case Kind::linear:
      return matrix * c;
    case Kind::interaction_cells:
      return (c(dim_a) == 1.0 && c(dim_b) == 1.0) ? target : Vec::Zero(n_params);
    case Kind::saturating:
      return amplitude * (1.0 - std::exp(-rate * c(dim)));
    case Kind::gated_linear:
      return slope * (c(dim) * (1.0 - c(gate_dim)));
  }
  return Vec::Zero(n_params);
}

json PlantedShift::to_json() const {
  json j;
  switch (kind) {
    case Kind::none: j["kind"] = "none"; break;
    case Kind::linear: {
      j["kind"] = "linear";
      std::vector<std::vector<double>> rows;
      for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
        rows.emplace_back(matrix.row(i).begin(), matrix.row(i).end());
      }
      j["matrix"] = rows;
      break;
    }
    case Kind::interaction_cells:
      j["kind"] = "interaction_cells";
      j["dims"] = {dim_a, dim_b};
      j["target"] = std::vector<double>(target.begin(), target.end());
      break;
    case Kind::saturating:
      j["kind"] = "saturating";
      j["dim"] = dim;
      j["amplitude"] = std::vector<double>(amplitude.begin(), amplitude.end());
      j["rate"] = rate;
      break;
    case Kind::gated_linear:
      j["kind"] = "gated_linear";
      j["dim"] = dim;
      j["gate_dim"] = gate_dim;
      j["slope"] = std::vector<double>(slope.begin(), slope.end());
      break;
  }
  return j;
}

namespace {

Vec vec_from_json(const json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

PlantedShift PlantedShift::from_json(const json& j) {
  PlantedShift s;
  const std::string kind = j.value("kind", "none");
  if (kind == "none") {
    s.kind = Kind::none;
  } else if (kind == "linear") {
    s.kind = Kind::linear;
    const auto& rows = j.at("matrix");
    const auto r = static_cast<Eigen::Index>(rows.size());
    const auto c = static_cast<Eigen::Index>(rows[0].size());
    s.matrix.resize(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index k = 0; k < c; ++k)
        s.matrix(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
  } else if (kind == "interaction_cells") {
    s.kind = Kind::interaction_cells;
    s.dim_a = j.at("dims")[0].get<int>();
    s.dim_b = j.at("dims")[1].get<int>();
    s.target = vec_from_json(j.at("target"));
  } else if (kind == "saturating") {
    s.kind = Kind::saturating;
    s.dim = j.at("dim").get<int>();
    s.amplitude = vec_from_json(j.at("amplitude"));
    s.rate = j.at("rate").get<double>();
  } else if (kind == "gated_linear") {
    s.kind = Kind::gated_linear;
    s.dim = j.at("dim").get<int>();
    s.gate_dim = j.at("gate_dim").get<int>();
    s.slope = vec_from_json(j.at("slope"));
  } else {
    throw ValidationError("unknown planted shift kind '" + kind + "'");
  }
  return s;
}

void SimSpec::validate() const {
  if (n_individuals < 1 || n_occasions < 1) throw ValidationError("sim spec: N and T must be >= 1");
  if (n_alternatives < 2) throw ValidationError("sim spec: J must be >= 2");
  if (n_fixed < 0 || n_random < 0 || n_params() < 1)
    throw ValidationError("sim spec: need L >= 0, K >= 0, L+K >= 1");
  if (true_alpha.size() != n_fixed) throw ValidationError("sim spec: true_alpha length != L");
  if (true_zeta.size() != n_random) throw ValidationError("sim spec: true_zeta length != K");
  if (true_tau.size() != n_random) throw ValidationError("sim spec: true_tau length != K");
  for (Eigen::Index k = 0; k < true_tau.size(); ++k)
    if (!(true_tau(k) > 0.0)) throw ValidationError("sim spec: true_tau must be positive");
  if (true_psi.size() > 0) {
    if (true_psi.rows() != n_random || true_psi.cols() != n_random)
      throw ValidationError("sim spec: true_psi dimensions != K");
    if (n_random > 0 && !is_correlation_matrix(true_psi))
      throw ValidationError("sim spec: true_psi is not a valid correlation matrix");
  }
  if (!attributes.empty() && static_cast<Eigen::Index>(attributes.size()) != n_params())
    throw ValidationError("sim spec: attribute distribution count != L+K");
  if (!(sigma_c >= 0.0)) throw ValidationError("sim spec: sigma_c must be >= 0");
  for (const auto& c : context) {
    if (c.kind == ContextKind::binary && c.dist != ContextDistSpec::Dist::bernoulli)
      throw ValidationError("sim spec: binary context '" + c.name + "' must be bernoulli");
  }
}

json SimSpec::to_json() const {
  json j;
  j["n_individuals"] = n_individuals;
  j["n_occasions"] = n_occasions;
  j["n_alternatives"] = n_alternatives;
  j["n_fixed"] = n_fixed;
  j["n_random"] = n_random;
  j["true_alpha"] = std::vector<double>(true_alpha.begin(), true_alpha.end());
  j["true_zeta"] = std::vector<double>(true_zeta.begin(), true_zeta.end());
  j["true_tau"] = std::vector<double>(true_tau.begin(), true_tau.end());
  if (true_psi.size() > 0) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < true_psi.rows(); ++i)
      rows.emplace_back(true_psi.row(i).begin(), true_psi.row(i).end());
    j["true_psi"] = rows;
  }
  json ctx = json::array();
  for (const auto& c : context) {
    json e;
    e["name"] = c.name;
    e["kind"] = c.kind == ContextKind::binary ? "binary" : "continuous";
    switch (c.dist) {
      case ContextDistSpec::Dist::bernoulli: e["dist"] = "bernoulli"; e["p"] = c.p; break;
      case ContextDistSpec::Dist::exponential: e["dist"] = "exponential"; e["rate"] = c.rate; break;
      case ContextDistSpec::Dist::uniform: e["dist"] = "uniform"; e["lo"] = c.lo; e["hi"] = c.hi; break;
    }
    ctx.push_back(e);
  }
  j["context"] = ctx;
  if (!attributes.empty()) {
    json att = json::array();
    for (const auto& a : attributes) {
      json e;
      e["dist"] = a.kind == AttributeDist::Kind::normal ? "normal" : "uniform";
      e["a"] = a.a;
      e["b"] = a.b;
      att.push_back(e);
    }
    j["attributes"] = att;
  }
  j["shift"] = shift.to_json();
  j["sigma_c"] = sigma_c;
  j["seed"] = seed;
  return j;
}

SimSpec SimSpec::from_json(const json& j) {
  SimSpec s;
  s.n_individuals = j.at("n_individuals").get<Eigen::Index>();
  s.n_occasions = j.at("n_occasions").get<Eigen::Index>();
  s.n_alternatives = j.at("n_alternatives").get<Eigen::Index>();
  s.n_fixed = j.at("n_fixed").get<Eigen::Index>();
  s.n_random = j.at("n_random").get<Eigen::Index>();
  s.true_alpha = vec_from_json(j.value("true_alpha", json::array()));
  s.true_zeta = vec_from_json(j.value("true_zeta", json::array()));
  s.true_tau = vec_from_json(j.value("true_tau", json::array()));
  if (j.contains("true_psi")) {
    const auto& rows = j.at("true_psi");
    const auto r = static_cast<Eigen::Index>(rows.size());
    s.true_psi.resize(r, r);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index k = 0; k < r; ++k)
        s.true_psi(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
  }
  for (const auto& e : j.value("context", json::array())) {
    ContextDistSpec c;
    c.name = e.at("name").get<std::string>();
    const std::string kind = e.at("kind").get<std::string>();
    c.kind = kind == "binary" ? ContextKind::binary : ContextKind::continuous;
    const std::string dist = e.value("dist", kind == "binary" ? "bernoulli" : "exponential");
    if (dist == "bernoulli") {
      c.dist = ContextDistSpec::Dist::bernoulli;
      c.p = e.value("p", 0.5);
    } else if (dist == "exponential") {
      c.dist = ContextDistSpec::Dist::exponential;
      c.rate = e.value("rate", 1.0);
    } else if (dist == "uniform") {
      c.dist = ContextDistSpec::Dist::uniform;
      c.lo = e.value("lo", 0.0);
      c.hi = e.value("hi", 1.0);
    } else {
      throw ValidationError("unknown context distribution '" + dist + "'");
    }
    s.context.push_back(std::move(c));
  }
  for (const auto& e : j.value("attributes", json::array())) {
    AttributeDist a;
    const std::string dist = e.value("dist", "normal");
    a.kind = dist == "uniform" ? AttributeDist::Kind::uniform : AttributeDist::Kind::normal;
    a.a = e.value("a", 0.0);
    a.b = e.value("b", 1.0);
    s.attributes.push_back(a);
  }
  if (j.contains("shift")) s.shift = PlantedShift::from_json(j.at("shift"));
  s.sigma_c = j.value("sigma_c", 0.0);
  s.seed = j.value("seed", 0ULL);
  return s;
}

json GroundTruth::to_json() const {
  json j;
  j["alpha"] = std::vector<double>(alpha.begin(), alpha.end());
  j["zeta"] = std::vector<double>(zeta.begin(), zeta.end());
  j["tau"] = std::vector<double>(tau.begin(), tau.end());
  if (psi.size() > 0) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < psi.rows(); ++i)
      rows.emplace_back(psi.row(i).begin(), psi.row(i).end());
    j["psi"] = rows;
  }
  {
    std::vector<std::vector<double>> cols;
    for (Eigen::Index n = 0; n < beta.cols(); ++n)
      cols.emplace_back(beta.col(n).begin(), beta.col(n).end());
    j["beta"] = cols;
  }
  if (mu.size() > 0) {
    std::vector<std::vector<double>> cols;
    for (Eigen::Index t = 0; t < mu.cols(); ++t)
      cols.emplace_back(mu.col(t).begin(), mu.col(t).end());
    j["mu"] = cols;
  }
  j["shift"] = shift.to_json();
  j["exact_loglik"] = exact_loglik;
  j["seed"] = seed;
  return j;
}

namespace {

double draw_attribute_value(const AttributeDist& d, StreamRng& rng) {
  if (d.kind == AttributeDist::Kind::normal) return d.a + d.b * rng.next_normal();
  return d.a + (d.b - d.a) * rng.next_uniform();
}

double draw_context_value(const ContextDistSpec& c, StreamRng& rng) {
  switch (c.dist) {
    case ContextDistSpec::Dist::bernoulli:
      return rng.next_bernoulli(c.p) ? 1.0 : 0.0;
    case ContextDistSpec::Dist::exponential:
      return -std::log(rng.next_uniform()) / c.rate;
    case ContextDistSpec::Dist::uniform:
      return c.lo + (c.hi - c.lo) * rng.next_uniform();
  }
  return 0.0;
}

std::pair<ChoiceDataset, GroundTruth> generate_impl(const SimSpec& spec, bool with_shift) {
  spec.validate();
  const Eigen::Index L = spec.n_fixed;
  const Eigen::Index K = spec.n_random;
  const Eigen::Index P = spec.n_params();
  const Eigen::Index J = spec.n_alternatives;
  const Eigen::Index C = spec.context_dim();
  const Eigen::Index T_total = spec.n_individuals * spec.n_occasions;

  Mat psi = spec.true_psi;
  if (psi.size() == 0) psi = Mat::Identity(K, K);
  Mat chol_om;
  if (K > 0) {
    Eigen::LLT<Mat> llt(psi);
    chol_om = spec.true_tau.asDiagonal() * Mat(llt.matrixL());
  }

  GroundTruth truth;
  truth.alpha = spec.true_alpha;
  truth.zeta = spec.true_zeta;
  truth.tau = spec.true_tau;
  truth.psi = psi;
  truth.beta = Mat::Zero(K, spec.n_individuals);
  truth.mu = with_shift ? Mat::Zero(P, T_total) : Mat();
  truth.shift = spec.shift;
  truth.seed = spec.seed;

  ChoiceDataset data;
  data.n_fixed = L;
  data.n_random = K;
  for (Eigen::Index i = 0; i < L; ++i) data.column_names.push_back("xf" + std::to_string(i + 1));
  for (Eigen::Index k = 0; k < K; ++k) data.column_names.push_back("xr" + std::to_string(k + 1));
  for (const auto& c : spec.context) {
    data.context_names.push_back(c.name);
    data.context_kinds.push_back(c.kind);
  }

  double loglik = 0.0;
  Eigen::Index global_t = 0;
  data.individuals.reserve(static_cast<std::size_t>(spec.n_individuals));
  for (Eigen::Index n = 0; n < spec.n_individuals; ++n) {
    Individual ind;
    ind.individual_id = n + 1;
    // beta_n ~ N(zeta, Omega)
    Vec beta = spec.true_zeta;
    if (K > 0) {
      StreamRng rng = stream_rng(spec.seed, Stream::sim_beta, static_cast<std::uint64_t>(n));
      Vec eps(K);
      for (Eigen::Index k = 0; k < K; ++k) eps(k) = rng.next_normal();
      beta += chol_om * eps;
      truth.beta.col(n) = beta;
    }
    Vec eta_base(P);
    eta_base.head(L) = spec.true_alpha;
    eta_base.tail(K) = beta;

    for (Eigen::Index t = 0; t < spec.n_occasions; ++t, ++global_t) {
      ChoiceOccasion occ;
      occ.occasion_id = global_t + 1;
      occ.attributes.resize(J, P);
      {
        StreamRng rng =
            stream_rng(spec.seed, Stream::sim_attributes, static_cast<std::uint64_t>(global_t));
        for (Eigen::Index j = 0; j < J; ++j) {
          for (Eigen::Index p = 0; p < P; ++p) {
            const AttributeDist d = spec.attributes.empty()
                                        ? AttributeDist{}
                                        : spec.attributes[static_cast<std::size_t>(p)];
            occ.attributes(j, p) = draw_attribute_value(d, rng);
          }
        }
      }
      occ.availability = BoolArray::Constant(J, true);
      occ.context = Vec::Zero(C);
      if (C > 0) {
        StreamRng rng =
            stream_rng(spec.seed, Stream::sim_context, static_cast<std::uint64_t>(global_t));
        for (Eigen::Index c = 0; c < C; ++c)
          occ.context(c) = draw_context_value(spec.context[static_cast<std::size_t>(c)], rng);
      }
      occ.alt_ids.resize(static_cast<std::size_t>(J));
      for (Eigen::Index j = 0; j < J; ++j) occ.alt_ids[static_cast<std::size_t>(j)] = j + 1;

      Vec eta = eta_base;
      if (with_shift) {
        Vec mu = spec.shift.eval(occ.context, P);
        if (spec.sigma_c > 0.0) {
          StreamRng rng =
              stream_rng(spec.seed, Stream::sim_mu, static_cast<std::uint64_t>(global_t));
          for (Eigen::Index p = 0; p < P; ++p) mu(p) += spec.sigma_c * rng.next_normal();
        }
        truth.mu.col(global_t) = mu;
        eta += mu;
      }

      const Vec v = occ.attributes * eta;
      const double lse = log_sum_exp(v);
      StreamRng choice_rng =
          stream_rng(spec.seed, Stream::sim_choice, static_cast<std::uint64_t>(global_t));
      const double u = choice_rng.next_uniform();
      double acc = 0.0;
      Eigen::Index chosen = J - 1;
      for (Eigen::Index j = 0; j < J; ++j) {
        acc += std::exp(v(j) - lse);
        if (u <= acc) {
          chosen = j;
          break;
        }
      }
      occ.chosen = chosen;
      loglik += v(chosen) - lse;
      ind.occasions.push_back(std::move(occ));
    }
    data.individuals.push_back(std::move(ind));
  }
  truth.exact_loglik = loglik;
  data.validate();
  return {std::move(data), std::move(truth)};
}

}  // namespace

std::pair<ChoiceDataset, GroundTruth> generate_mmnl(const SimSpec& spec) {
  if (spec.shift.kind != PlantedShift::Kind::none)
    throw ValidationError("generate_mmnl: shift must be 'none'");
  return generate_impl(spec, false);
}

std::pair<ChoiceDataset, GroundTruth> generate_cmmnl(const SimSpec& spec) {
  if (spec.shift.kind == PlantedShift::Kind::none)
    throw ValidationError("generate_cmmnl: a planted shift is required");
  return generate_impl(spec, true);
}

}  // namespace cmmnl
