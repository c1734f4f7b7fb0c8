#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cmmnl/analysis.hpp"
#include "cmmnl/artifact.hpp"
#include "cmmnl/data_io.hpp"
#include "cmmnl/simulate.hpp"

namespace {

using namespace cmmnl;
using nlohmann::json;

std::map<std::string, double> parse_assignments(const std::vector<std::string>& kvs) {
  std::map<std::string, double> out;
  for (const auto& kv : kvs) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ValidationError("expected name=value, got '" + kv + "'");
    out[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open file for writing: " + path);
  os << text;
}

void print_metrics(const FitMetrics& m, std::ostream& os) {
  os << "log_likelihood:    " << m.log_likelihood << '\n'
     << "pct_correct:       " << m.pct_correct << '\n'
     << "avg_choice_prob:   " << m.avg_choice_prob << '\n'
     << "n_obs:             " << m.n_obs << '\n'
     << "n_individuals:     " << m.n_individuals << '\n'
     << "n_utility_params:  " << m.n_utility_params << '\n';
  if (m.wall_seconds > 0.0) os << "wall_seconds:      " << m.wall_seconds << '\n';
}

json metrics_json(const FitMetrics& m) {
  // Deterministic report: timing stays on the console.
  json j;
  j["log_likelihood"] = m.log_likelihood;
  j["pct_correct"] = m.pct_correct;
  j["avg_choice_prob"] = m.avg_choice_prob;
  j["n_obs"] = m.n_obs;
  j["n_individuals"] = m.n_individuals;
  j["n_utility_params"] = m.n_utility_params;
  return j;
}

int cmd_simulate(const std::string& spec_path, const std::string& out_dir,
                 const std::string& model_override, std::int64_t seed_override) {
  std::ifstream is(spec_path);
  if (!is) throw ValidationError("cannot open simulation spec: " + spec_path);
  json spec_json;
  try {
    is >> spec_json;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("spec parse error: ") + e.what());
  }
  SimSpec spec = SimSpec::from_json(spec_json);
  if (seed_override >= 0) spec.seed = static_cast<std::uint64_t>(seed_override);

  std::filesystem::create_directories(out_dir);
  const bool with_shift = spec.shift.kind != PlantedShift::Kind::none;
  auto [data, truth] = with_shift ? generate_cmmnl(spec) : generate_mmnl(spec);

  const std::string choices = out_dir + "/choices.csv";
  const std::string context = data.context_dim() > 0 ? out_dir + "/context.csv" : "";
  write_choice_csv(data, choices, context);
  write_text(out_dir + "/truth.json", truth.to_json().dump(2) + "\n");

  ModelKind kind;
  if (!model_override.empty()) {
    kind = model_kind_from_name(model_override);
  } else if (with_shift || (data.context_dim() > 0 && spec.n_random > 0)) {
    kind = ModelKind::cmmnl;
  } else {
    kind = spec.n_random > 0 ? ModelKind::mmnl : ModelKind::mnl;
  }
  ModelConfig config = default_config_for(spec, kind);
  write_text(out_dir + "/config.json", config.to_json().dump(2) + "\n");

  std::cout << "wrote " << data.n_occasions() << " occasions for " << data.n_individuals()
            << " individuals to " << out_dir << '\n';
  return 0;
}

int cmd_estimate(const std::string& model_override, const std::string& choices,
                 const std::string& context, const std::string& config_path,
                 const std::string& out_path, const std::string& trace_path,
                 std::int64_t seed_override, int threads_override, bool verbose) {
  ModelConfig config = ModelConfig::load(config_path);
  if (!model_override.empty()) config.model = model_kind_from_name(model_override);
  if (seed_override >= 0) config.fit.seed = static_cast<std::uint64_t>(seed_override);
  if (threads_override > 0) config.fit.threads = threads_override;
  config.validate();

  ChoiceDataset data = load_choice_csv(choices, context, config);
  ScalingRecord scaling;
  if (config.standardize) {
    auto [scaled, rec] = standardize(data);
    data = std::move(scaled);
    scaling = std::move(rec);
    for (const auto& w : scaling.warnings) std::cerr << "warning: " << w << '\n';
  }
  if (!config.interactions.empty()) data = build_interactions(data, config.interactions);

  const PriorConfig priors = config.resolve_priors(
      data.n_fixed, config.model == ModelKind::mnl ? 0 : data.n_random);
  FitResult fit = svi_fit(data, priors, config.model, config.fit, config.network);
  if (!trace_path.empty()) fit.trace.write_csv(trace_path);
  if (fit.trace.diverged) {
    std::cerr << "estimation diverged: " << fit.trace.divergence_message << '\n';
    if (!trace_path.empty()) std::cerr << "trace written to " << trace_path << '\n';
    return 2;
  }

  FitArtifact artifact = make_artifact(fit, data, config, scaling, trace_path);
  artifact.save(out_path);

  if (verbose) {
    for (const auto& e : fit.trace.entries)
      std::cerr << "step " << e.step << "  windowed elbo " << e.windowed_elbo << '\n';
  }
  std::cout << "model:             " << model_kind_name(config.model) << '\n'
            << "converged:         " << (fit.converged ? "yes" : "no (max steps)") << '\n'
            << "steps:             " << fit.state.step_count << '\n';
  const FitMetrics m = compute_metrics(data, artifact, fit.wall_seconds);
  print_metrics(m, std::cout);
  std::cout << "artifact:          " << out_path << '\n';

  std::cout << '\n';
  const auto rows = posterior_summary(fit.state, data.column_names);
  std::printf("%-28s %12s %12s %22s\n", "parameter", "mean", "sd", "95% interval");
  for (const auto& r : rows) {
    std::printf("%-28s %12.4f %12.4f    [%8.4f, %8.4f] %s\n", r.name.c_str(), r.mean, r.sd,
                r.ci_lo, r.ci_hi, r.stars.c_str());
  }
  return 0;
}

int cmd_predict(const std::string& fit_path, const std::string& choices,
                const std::string& context, const std::string& out_path) {
  const FitArtifact artifact = FitArtifact::load(fit_path);
  const ChoiceDataset data = load_dataset_for_artifact(artifact, choices, context);
  const auto probs = predict_probabilities(data, artifact);
  std::ofstream os(out_path);
  if (!os) throw ValidationError("cannot open file for writing: " + out_path);
  os << "individual_id,occasion_id,alt_id,probability\n";
  std::size_t i = 0;
  char buf[40];
  for (const auto& ind : data.individuals) {
    for (const auto& occ : ind.occasions) {
      const Vec& p = probs[i++];
      for (Eigen::Index j = 0; j < p.size(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", p(j));
        os << ind.individual_id << ',' << occ.occasion_id << ','
           << occ.alt_ids[static_cast<std::size_t>(j)] << ',' << buf << '\n';
      }
    }
  }
  std::cout << "wrote predictions for " << data.n_occasions() << " occasions to " << out_path
            << '\n';
  return 0;
}

int cmd_metrics(const std::string& fit_path, const std::string& choices,
                const std::string& context, const std::string& out_path) {
  const FitArtifact artifact = FitArtifact::load(fit_path);
  const ChoiceDataset data = load_dataset_for_artifact(artifact, choices, context);
  const FitMetrics m = compute_metrics(data, artifact);
  print_metrics(m, std::cout);
  if (!out_path.empty()) write_text(out_path, metrics_json(m).dump(2) + "\n");
  return 0;
}

int cmd_scenario(const std::string& fit_path, const std::string& grid_kind,
                 const std::vector<std::string>& sets, const std::vector<std::string>& refs,
                 double threshold, const std::string& out_path,
                 const std::string& marginal_dim) {
  const FitArtifact artifact = FitArtifact::load(fit_path);
  const auto fixed = parse_assignments(sets);
  if (!marginal_dim.empty()) {
    const Vec eff = marginal_context_effect(artifact, marginal_dim, fixed);
    std::cout << "marginal effect of '" << marginal_dim << "':\n";
    for (Eigen::Index p = 0; p < eff.size(); ++p)
      std::printf("%-28s %+10.4f\n", artifact.column_names[static_cast<std::size_t>(p)].c_str(),
                  eff(p));
    return 0;
  }
  std::vector<ScenarioAssignment> grid;
  if (grid_kind == "all-binary") {
    grid = all_binary_grid(artifact, fixed);
  } else {
    throw ValidationError("unknown grid '" + grid_kind + "' (expected all-binary)");
  }
  const ScenarioAssignment reference = make_assignment(artifact, parse_assignments(refs));
  const ScenarioReport rep = scenario_table(artifact, grid, reference, threshold);
  std::cout << rep.render();
  write_text(out_path, rep.to_csv());
  std::cout << "full table written to " << out_path << '\n';
  return 0;
}

int cmd_sweep(const std::string& fit_path, const std::string& dim, double from, double to,
              int steps, const std::vector<std::string>& fixes, const std::string& out_path,
              bool relative) {
  const FitArtifact artifact = FitArtifact::load(fit_path);
  const SweepTable table =
      context_sweep(artifact, dim, from, to, steps, parse_assignments(fixes));
  write_text(out_path, table.to_csv(relative));
  std::cout << "wrote " << table.values.size() << " grid rows to " << out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian discrete choice estimation (MNL, MMNL, C-MMNL)"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset from a spec");
  std::string sim_spec, sim_out = "sim_out", sim_model;
  std::int64_t sim_seed = -1;
  sim->add_option("--spec", sim_spec, "simulation spec JSON")->required();
  sim->add_option("--out-dir", sim_out, "output directory");
  sim->add_option("--model", sim_model, "config model kind override (mnl|mmnl|cmmnl)");
  sim->add_option("--seed", sim_seed, "seed override");

  auto* est = app.add_subcommand("estimate", "fit a model and write the artifact");
  std::string est_model, est_choices, est_context, est_config, est_out = "fit.json", est_trace;
  std::int64_t est_seed = -1;
  int est_threads = 0;
  bool est_verbose = false;
  est->add_option("--model", est_model, "model kind (overrides config)");
  est->add_option("--choices", est_choices, "choices CSV")->required();
  est->add_option("--context", est_context, "context CSV");
  est->add_option("--config", est_config, "model config JSON")->required();
  est->add_option("--out", est_out, "artifact output path");
  est->add_option("--trace", est_trace, "trace CSV output path");
  est->add_option("--seed", est_seed, "seed override");
  est->add_option("--threads", est_threads, "worker threads");
  est->add_flag("--verbose", est_verbose, "print window-by-window ELBO");

  auto* pred = app.add_subcommand("predict", "plug-in choice probabilities");
  std::string pred_fit, pred_choices, pred_context, pred_out = "predictions.csv";
  pred->add_option("--fit", pred_fit, "artifact JSON")->required();
  pred->add_option("--choices", pred_choices, "choices CSV")->required();
  pred->add_option("--context", pred_context, "context CSV");
  pred->add_option("--out", pred_out, "output CSV");

  auto* met = app.add_subcommand("metrics", "fit metrics on a dataset");
  std::string met_fit, met_choices, met_context, met_out;
  met->add_option("--fit", met_fit, "artifact JSON")->required();
  met->add_option("--choices", met_choices, "choices CSV")->required();
  met->add_option("--context", met_context, "context CSV");
  met->add_option("--out", met_out, "metrics JSON output path");

  auto* sce = app.add_subcommand("scenario", "context scenario shift table");
  std::string sce_fit, sce_grid = "all-binary", sce_out = "scenario.csv", sce_marginal;
  std::vector<std::string> sce_set, sce_ref;
  double sce_threshold = 0.05;
  sce->add_option("--fit", sce_fit, "artifact JSON")->required();
  sce->add_option("--grid", sce_grid, "scenario grid (all-binary)");
  sce->add_option("--set", sce_set, "fix a dimension, name=value (repeatable)");
  sce->add_option("--reference", sce_ref, "reference assignment, name=value (repeatable)");
  sce->add_option("--threshold", sce_threshold, "relative suppression threshold");
  sce->add_option("--out", sce_out, "full CSV output path");
  sce->add_option("--marginal", sce_marginal, "print the marginal effect of a binary dimension");

  auto* swp = app.add_subcommand("sweep", "continuous-context trajectory");
  std::string swp_fit, swp_dim, swp_out = "sweep.csv";
  double swp_from = 0.0, swp_to = 1.0;
  int swp_steps = 50;
  std::vector<std::string> swp_fix;
  bool swp_rel = false;
  swp->add_option("--fit", swp_fit, "artifact JSON")->required();
  swp->add_option("--dim", swp_dim, "continuous context dimension")->required();
  swp->add_option("--from", swp_from, "range start");
  swp->add_option("--to", swp_to, "range end");
  swp->add_option("--steps", swp_steps, "grid size");
  swp->add_option("--fix", swp_fix, "fix another dimension, name=value (repeatable)");
  swp->add_option("--out", swp_out, "output CSV");
  swp->add_flag("--relative", swp_rel, "also emit (theta(r)-theta(0))/|theta(0)| columns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_spec, sim_out, sim_model, sim_seed);
    if (est->parsed())
      return cmd_estimate(est_model, est_choices, est_context, est_config, est_out, est_trace,
                          est_seed, est_threads, est_verbose);
    if (pred->parsed()) return cmd_predict(pred_fit, pred_choices, pred_context, pred_out);
    if (met->parsed()) return cmd_metrics(met_fit, met_choices, met_context, met_out);
    if (sce->parsed())
      return cmd_scenario(sce_fit, sce_grid, sce_set, sce_ref, sce_threshold, sce_out,
                          sce_marginal);
    if (swp->parsed())
      return cmd_sweep(swp_fit, swp_dim, swp_from, swp_to, swp_steps, swp_fix, swp_out, swp_rel);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
