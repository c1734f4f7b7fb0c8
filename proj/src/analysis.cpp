#include "cmmnl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

namespace cmmnl {

namespace {

std::string format_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Context assignment in original units -> network input (stored scaling).
Vec net_input(const FitArtifact& a, const Vec& assignment) {
  Vec c = assignment;
  for (const auto& e : a.scaling.context) {
    const auto it = std::find(a.context_names.begin(), a.context_names.end(), e.name);
    if (it == a.context_names.end()) continue;
    const Eigen::Index idx = it - a.context_names.begin();
    c(idx) = (c(idx) - e.mean) / e.sd;
  }
  return c;
}

Vec shift_at(const FitArtifact& a, const Vec& assignment) {
  if (a.state.net.empty()) return Vec::Zero(a.state.n_taste_params());
  return nn_forward_eval(a.state.net, net_input(a, assignment));
}

Eigen::Index context_index(const FitArtifact& a, const std::string& name) {
  const auto it = std::find(a.context_names.begin(), a.context_names.end(), name);
  if (it == a.context_names.end())
    throw ValidationError("unknown context dimension '" + name + "'");
  return it - a.context_names.begin();
}

std::string cell(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%+.3f", x);
  return buf;
}

}  // namespace

std::vector<Vec> predict_probabilities(const ChoiceDataset& data, const FitArtifact& artifact) {
  if (static_cast<Eigen::Index>(artifact.column_names.size()) != data.n_params())
    throw ValidationError("predict: dataset parameter columns do not match the artifact");
  if (data.column_names != artifact.column_names)
    throw ValidationError("predict: dataset column names do not match the artifact");
  const VariationalState& s = artifact.state;
  std::unordered_map<std::int64_t, Eigen::Index> beta_of;
  for (std::size_t i = 0; i < artifact.individual_ids.size(); ++i)
    beta_of[artifact.individual_ids[i]] = static_cast<Eigen::Index>(i);

  const std::optional<double> beta_ps =
      s.has_path_size ? std::optional<double>(s.q_beta_ps.mean(0)) : std::nullopt;

  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(data.n_occasions()));
  for (const auto& ind : data.individuals) {
    TasteVector eta;
    eta.fixed = s.q_alpha.mean;
    if (s.has_beta()) {
      const auto it = beta_of.find(ind.individual_id);
      eta.random = it != beta_of.end() ? Vec(s.beta_mean.col(it->second)) : s.q_zeta.mean;
    } else {
      eta.random = Vec();
    }
    for (const auto& occ : ind.occasions) {
      TasteVector eta_nt = eta;
      if (s.has_mu()) {
        ContextShift shift{nn_forward_eval(s.net, occ.context)};
        eta_nt = apply_context_shift(eta, shift);
      }
      const Vec v = systematic_utility(occ, eta_nt, beta_ps);
      out.push_back(mnl_probabilities(v, occ.availability));
    }
  }
  return out;
}

FitMetrics compute_metrics(const ChoiceDataset& data, const FitArtifact& artifact,
                           double wall_seconds) {
  const auto probs = predict_probabilities(data, artifact);
  FitMetrics m;
  m.n_individuals = data.n_individuals();
  m.n_obs = data.n_occasions();
  m.n_utility_params = data.n_params() + (artifact.state.has_path_size ? 1 : 0);
  m.wall_seconds = wall_seconds;
  double ll = 0.0, correct = 0.0, avg = 0.0;
  std::size_t i = 0;
  for (const auto& ind : data.individuals) {
    for (const auto& occ : ind.occasions) {
      const Vec& p = probs[i++];
      ll += std::log(p(occ.chosen));
      Eigen::Index argmax = 0;
      p.maxCoeff(&argmax);
      if (argmax == occ.chosen) correct += 1.0;
      avg += p(occ.chosen);
    }
  }
  const double t = static_cast<double>(m.n_obs);
  m.log_likelihood = ll;
  m.pct_correct = 100.0 * correct / t;
  m.avg_choice_prob = avg / t;
  return m;
}

ScenarioAssignment make_assignment(const FitArtifact& artifact,
                                   const std::map<std::string, double>& values) {
  ScenarioAssignment a;
  a.values = Vec::Zero(static_cast<Eigen::Index>(artifact.context_names.size()));
  std::map<std::string, double> remaining = values;
  std::string label;
  for (std::size_t c = 0; c < artifact.context_names.size(); ++c) {
    const std::string& name = artifact.context_names[c];
    const auto it = remaining.find(name);
    if (it != remaining.end()) {
      a.values(static_cast<Eigen::Index>(c)) = it->second;
      remaining.erase(it);
    }
    if (!label.empty()) label += ' ';
    if (artifact.context_kinds[c] == ContextKind::binary) {
      label += name + (a.values(static_cast<Eigen::Index>(c)) == 1.0 ? "+" : "-");
    } else {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%s=%g", name.c_str(),
                    a.values(static_cast<Eigen::Index>(c)));
      label += buf;
    }
  }
  if (!remaining.empty())
    throw ValidationError("assignment names unknown context dimension '" +
                          remaining.begin()->first + "'");
  a.label = label;
  return a;
}

std::vector<ScenarioAssignment> all_binary_grid(
    const FitArtifact& artifact, const std::map<std::string, double>& fixed_continuous) {
  std::vector<std::size_t> binary_dims;
  for (std::size_t c = 0; c < artifact.context_kinds.size(); ++c)
    if (artifact.context_kinds[c] == ContextKind::binary) binary_dims.push_back(c);
  const std::size_t n = binary_dims.size();
  if (n > 20) throw ValidationError("all_binary_grid: too many binary dimensions");
  std::vector<ScenarioAssignment> grid;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    std::map<std::string, double> values = fixed_continuous;
    for (std::size_t b = 0; b < n; ++b) {
      // First-declared dimension varies slowest.
      const bool on = (mask >> (n - 1 - b)) & 1;
      values[artifact.context_names[binary_dims[b]]] = on ? 1.0 : 0.0;
    }
    grid.push_back(make_assignment(artifact, values));
  }
  return grid;
}

ScenarioReport scenario_table(const FitArtifact& artifact,
                              const std::vector<ScenarioAssignment>& grid,
                              const ScenarioAssignment& reference, double threshold) {
  const Eigen::Index C = static_cast<Eigen::Index>(artifact.context_names.size());
  if (reference.values.size() != C)
    throw ValidationError("scenario_table: reference assignment misses a dimension");
  const VariationalState& s = artifact.state;
  ScenarioReport rep;
  rep.parameter_names.assign(artifact.column_names.begin(), artifact.column_names.end());
  rep.reference = reference;
  rep.suppression_threshold = threshold;

  Vec means(s.n_taste_params());
  means.head(s.L) = s.q_alpha.mean;
  if (s.has_beta()) means.tail(s.K) = s.q_zeta.mean;
  const Vec shift0 = shift_at(artifact, reference.values);
  rep.base = means + shift0;

  rep.scenarios = grid;
  rep.shifts.resize(s.n_taste_params(), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (grid[g].values.size() != C)
      throw ValidationError("scenario_table: assignment '" + grid[g].label +
                            "' misses a dimension");
    rep.shifts.col(static_cast<Eigen::Index>(g)) = shift_at(artifact, grid[g].values) - shift0;
  }
  return rep;
}

std::string ScenarioReport::render() const {
  std::ostringstream os;
  std::vector<std::size_t> shown;
  for (std::size_t g = 0; g < scenarios.size(); ++g) {
    if (scenarios[g].values == reference.values) continue;  // base column covers it
    shown.push_back(g);
  }
  std::size_t name_w = 9;
  for (const auto& n : parameter_names) name_w = std::max(name_w, n.size());
  os << std::string(name_w, ' ') << "  " << "base (" << reference.label << ")";
  for (std::size_t g : shown) os << "  |  " << scenarios[g].label;
  os << '\n';
  for (Eigen::Index p = 0; p < base.size(); ++p) {
    std::string name = parameter_names[static_cast<std::size_t>(p)];
    name.resize(name_w, ' ');
    char bb[32];
    std::snprintf(bb, sizeof(bb), "%10.3f", base(p));
    os << name << "  " << bb;
    for (std::size_t g : shown) {
      const double sh = shifts(p, static_cast<Eigen::Index>(g));
      const bool keep = std::abs(sh) >= suppression_threshold * std::abs(base(p));
      std::string c = keep ? cell(sh) : std::string();
      c.resize(std::max<std::size_t>(scenarios[g].label.size(), 8), ' ');
      os << "  |  " << c;
    }
    os << '\n';
  }
  return os.str();
}

std::string ScenarioReport::to_csv() const {
  std::ostringstream os;
  os << "parameter,base";
  for (const auto& s : scenarios) os << ',' << s.label;
  os << '\n';
  for (Eigen::Index p = 0; p < base.size(); ++p) {
    os << parameter_names[static_cast<std::size_t>(p)] << ',' << format_full(base(p));
    for (Eigen::Index g = 0; g < shifts.cols(); ++g) os << ',' << format_full(shifts(p, g));
    os << '\n';
  }
  return os.str();
}

Vec marginal_context_effect(const FitArtifact& artifact, const std::string& target_dim,
                            const std::map<std::string, double>& fixed_continuous) {
  const Eigen::Index target = context_index(artifact, target_dim);
  if (artifact.context_kinds[static_cast<std::size_t>(target)] != ContextKind::binary)
    throw ValidationError("marginal_context_effect: target dimension must be binary");
  std::vector<std::size_t> other_binary;
  for (std::size_t c = 0; c < artifact.context_kinds.size(); ++c) {
    if (static_cast<Eigen::Index>(c) == target) continue;
    if (artifact.context_kinds[c] == ContextKind::binary) {
      other_binary.push_back(c);
    } else if (!fixed_continuous.count(artifact.context_names[c])) {
      throw ValidationError("marginal_context_effect: continuous dimension '" +
                            artifact.context_names[c] +
                            "' must be pinned to a value");
    }
  }
  Vec base_values = Vec::Zero(static_cast<Eigen::Index>(artifact.context_names.size()));
  for (const auto& [name, v] : fixed_continuous)
    base_values(context_index(artifact, name)) = v;

  const std::size_t n = other_binary.size();
  Vec acc = Vec::Zero(artifact.state.n_taste_params());
  const auto cells = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < cells; ++mask) {
    Vec v = base_values;
    for (std::size_t b = 0; b < n; ++b)
      v(static_cast<Eigen::Index>(other_binary[b])) = ((mask >> b) & 1) ? 1.0 : 0.0;
    Vec v_on = v, v_off = v;
    v_on(target) = 1.0;
    v_off(target) = 0.0;
    acc += shift_at(artifact, v_on) - shift_at(artifact, v_off);
  }
  return acc / static_cast<double>(cells);
}

SweepTable context_sweep(const FitArtifact& artifact, const std::string& dim, double from,
                         double to, int steps, const std::map<std::string, double>& fixed) {
  const Eigen::Index d = context_index(artifact, dim);
  if (artifact.context_kinds[static_cast<std::size_t>(d)] != ContextKind::continuous)
    throw ValidationError("context_sweep: dimension '" + dim + "' is not continuous");
  if (steps < 1) throw ValidationError("context_sweep: steps must be >= 1");
  if (steps > 1 && !(to > from))
    throw ValidationError("context_sweep: degenerate range (need to > from)");

  Vec base_values = Vec::Zero(static_cast<Eigen::Index>(artifact.context_names.size()));
  for (const auto& [name, v] : fixed) base_values(context_index(artifact, name)) = v;

  SweepTable table;
  table.dim = dim;
  table.parameter_names.assign(artifact.column_names.begin(), artifact.column_names.end());
  const VariationalState& s = artifact.state;
  Vec means(s.n_taste_params());
  means.head(s.L) = s.q_alpha.mean;
  if (s.has_beta()) means.tail(s.K) = s.q_zeta.mean;

  table.deltas.resize(steps, s.n_taste_params());
  Vec shift_origin;
  for (int i = 0; i < steps; ++i) {
    const double r =
        steps == 1 ? from : from + (to - from) * static_cast<double>(i) / (steps - 1);
    Vec v = base_values;
    v(d) = r;
    const Vec sh = shift_at(artifact, v);
    if (i == 0) {
      shift_origin = sh;
      table.theta0 = means + sh;
    }
    table.values.push_back(r);
    table.deltas.row(i) = (sh - shift_origin).transpose();
  }
  return table;
}

std::string SweepTable::to_csv(bool include_relative) const {
  std::ostringstream os;
  os << dim;
  for (const auto& n : parameter_names) os << ',' << n << "_delta";
  if (include_relative)
    for (const auto& n : parameter_names) os << ',' << n << "_rel";
  os << '\n';
  for (std::size_t i = 0; i < values.size(); ++i) {
    os << format_full(values[i]);
    for (Eigen::Index p = 0; p < deltas.cols(); ++p)
      os << ',' << format_full(deltas(static_cast<Eigen::Index>(i), p));
    if (include_relative) {
      for (Eigen::Index p = 0; p < deltas.cols(); ++p) {
        const double denom = std::abs(theta0(p));
        os << ','
           << format_full(denom > 0.0 ? deltas(static_cast<Eigen::Index>(i), p) / denom : 0.0);
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace cmmnl
