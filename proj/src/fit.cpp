#include "cmmnl/fit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace cmmnl {

namespace {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Partial Fisher-Yates draw of `m` distinct indices out of [0, t).
std::vector<Eigen::Index> sample_batch(Eigen::Index t, Eigen::Index m, StreamRng& rng,
                                       std::vector<Eigen::Index>& scratch) {
  if (m >= t) {
    std::vector<Eigen::Index> all(static_cast<std::size_t>(t));
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  scratch.resize(static_cast<std::size_t>(t));
  std::iota(scratch.begin(), scratch.end(), 0);
  std::vector<Eigen::Index> out(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto span = static_cast<std::uint64_t>(t - i);
    const auto j = i + static_cast<Eigen::Index>(rng.next_u64() % span);
    std::swap(scratch[static_cast<std::size_t>(i)], scratch[static_cast<std::size_t>(j)]);
    out[static_cast<std::size_t>(i)] = scratch[static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace

void TraceLog::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open trace file for writing: " + path);
  os << "step,windowed_elbo,learning_rate,wall_seconds\n";
  for (const auto& e : entries) {
    os << e.step << ',' << format_double(e.windowed_elbo) << ','
       << format_double(e.learning_rate) << ',' << format_double(e.wall_seconds) << '\n';
  }
}

std::string TraceLog::deterministic_csv() const {
  std::string out = "step,windowed_elbo,learning_rate\n";
  for (const auto& e : entries) {
    out += std::to_string(e.step);
    out += ',';
    out += format_double(e.windowed_elbo);
    out += ',';
    out += format_double(e.learning_rate);
    out += '\n';
  }
  return out;
}

FitResult svi_fit(const ChoiceDataset& data, const PriorConfig& priors, ModelKind kind,
                  const FitConfig& fit, const NetSpec& net) {
  fit.validate();
  data.validate();
  const auto t0 = std::chrono::steady_clock::now();

  FitResult result;
  result.state = init_state(data, kind, net.hidden, net.dropout, fit.collapse_mu, fit.seed,
                            fit.init_scale);
  VariationalState& state = result.state;
  const auto refs = flatten_occasions(data);
  const auto t_total = static_cast<Eigen::Index>(refs.size());
  result.n_obs = t_total;

  VariationalState grad = zeros_like(state);
  VariationalState adam_m = zeros_like(state);
  VariationalState adam_v = zeros_like(state);
  auto spans_state = param_spans(state);
  auto spans_grad = param_spans(grad);
  auto spans_m = param_spans(adam_m);
  auto spans_v = param_spans(adam_v);
  // Network parameter spans sit at the tail of the canonical layout.
  const std::size_t net_span_count = 2 * state.net.layers.size();
  const std::size_t first_net_span = spans_state.size() - net_span_count;

  ElboOptions opts;
  opts.mc_samples = fit.mc_samples;
  opts.seed = fit.seed;
  opts.threads = fit.threads;
  opts.net_mode = NetMode::train;

  std::vector<Eigen::Index> scratch;
  double window_sum = 0.0;
  long window_count = 0;
  double best = -std::numeric_limits<double>::infinity();
  int stale_windows = 0;
  const double b1 = fit.adam_beta1;
  const double b2 = fit.adam_beta2;

  for (long step = 0; step < fit.max_steps; ++step) {
    opts.step = static_cast<std::uint64_t>(step);
    StreamRng batch_rng = stream_rng(fit.seed, Stream::batch, static_cast<std::uint64_t>(step));
    const auto batch = sample_batch(t_total, std::min<Eigen::Index>(fit.batch_size, t_total),
                                    batch_rng, scratch);
    ElboParts parts;
    try {
      parts = elbo_gradients(data, refs, batch, state, priors, opts, grad);
    } catch (const NumericError& err) {
      result.trace.diverged = true;
      result.trace.divergence_message = err.what();
      break;
    }

    // Adam ascent step with bias correction.
    state.step_count = step + 1;
    const double t_corr = static_cast<double>(step + 1);
    const double bc1 = 1.0 - std::pow(b1, t_corr);
    const double bc2 = 1.0 - std::pow(b2, t_corr);
    const double lr_scale = fit.lr_factor(step);
    for (std::size_t sp = 0; sp < spans_state.size(); ++sp) {
      const double lr = lr_scale * (sp >= first_net_span ? fit.net_lr() : fit.learning_rate);
      if (lr == 0.0) continue;
      double* x = spans_state[sp].first;
      const double* gr = spans_grad[sp].first;
      double* m = spans_m[sp].first;
      double* v = spans_v[sp].first;
      const Eigen::Index len = spans_state[sp].second;
      for (Eigen::Index i = 0; i < len; ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * gr[i];
        v[i] = b2 * v[i] + (1.0 - b2) * gr[i] * gr[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        x[i] += lr * mhat / (std::sqrt(vhat) + fit.adam_eps);
      }
    }

    window_sum += parts.total();
    ++window_count;
    if ((step + 1) % fit.window == 0 || step + 1 == fit.max_steps) {
      const double windowed = window_sum / static_cast<double>(window_count);
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      result.trace.entries.push_back({step + 1, windowed, lr_scale * fit.learning_rate, elapsed});
      window_sum = 0.0;
      window_count = 0;
      const double improve_floor = best + fit.convergence_rtol * std::abs(best);
      if (windowed > improve_floor) {
        best = windowed;
        stale_windows = 0;
      } else {
        ++stale_windows;
        if (stale_windows >= fit.patience) {
          result.converged = true;
          break;
        }
      }
    }
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

std::string stars_for(double mean, double sd) {
  if (!(sd > 0.0)) return mean != 0.0 ? "***" : "";
  const double tail = normal_tail(std::abs(mean) / sd);
  if (tail < 0.0005) return "***";
  if (tail < 0.005) return "**";
  if (tail < 0.025) return "*";
  return "";
}

namespace {

// Mean and sd of softplus(u) with u ~ N(m, s^2), by trapezoid over m +- 8s.
std::pair<double, double> softplus_moments(double m, double s) {
  const int n = 401;
  const double lo = m - 8.0 * s;
  const double hi = m + 8.0 * s;
  const double h = (hi - lo) / (n - 1);
  double m1 = 0.0, m2 = 0.0, norm = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = lo + h * i;
    const double zz = (u - m) / s;
    double wgt = std::exp(-0.5 * zz * zz);
    if (i == 0 || i == n - 1) wgt *= 0.5;
    const double y = softplus(u);
    norm += wgt;
    m1 += wgt * y;
    m2 += wgt * y * y;
  }
  m1 /= norm;
  m2 /= norm;
  return {m1, std::sqrt(std::max(0.0, m2 - m1 * m1))};
}

}  // namespace

std::vector<SummaryRow> posterior_summary(const VariationalState& state,
                                          const std::vector<std::string>& column_names) {
  if (static_cast<Eigen::Index>(column_names.size()) != state.n_taste_params())
    throw ValidationError("posterior_summary: column name count does not match parameters");
  std::vector<SummaryRow> rows;
  auto push_gauss = [&](const std::string& name, const std::string& block, double m, double s) {
    SummaryRow r;
    r.name = name;
    r.block = block;
    r.mean = m;
    r.sd = s;
    r.ci_lo = m - 1.959963984540054 * s;
    r.ci_hi = m + 1.959963984540054 * s;
    r.stars = stars_for(m, s);
    rows.push_back(std::move(r));
  };

  for (Eigen::Index i = 0; i < state.L; ++i)
    push_gauss(column_names[static_cast<std::size_t>(i)], "fixed", state.q_alpha.mean(i),
               softplus(state.q_alpha.raw_scale(i)));
  if (state.has_path_size)
    push_gauss("beta_path_size", "path_size", state.q_beta_ps.mean(0),
               softplus(state.q_beta_ps.raw_scale(0)));
  if (state.has_beta()) {
    for (Eigen::Index k = 0; k < state.K; ++k)
      push_gauss(column_names[static_cast<std::size_t>(state.L + k)], "random_mean",
                 state.q_zeta.mean(k), softplus(state.q_zeta.raw_scale(k)));
    for (Eigen::Index k = 0; k < state.K; ++k) {
      const auto [m, s] =
          softplus_moments(state.q_tau.mean(k), softplus(state.q_tau.raw_scale(k)));
      push_gauss(column_names[static_cast<std::size_t>(state.L + k)] + " (sd)", "random_sd",
                 m, s);
    }
    if (state.K >= 2) {
      // Correlation summaries by fixed-seed Monte Carlo over q(w).
      const int draws = 8192;
      const Eigen::Index np = state.q_psi.size();
      Mat acc1 = Mat::Zero(state.K, state.K);
      Mat acc2 = Mat::Zero(state.K, state.K);
      StreamRng rng = stream_rng(0x5eed5u, Stream::psi, 777);
      const Vec sd_w = state.q_psi.sd();
      for (int d = 0; d < draws; ++d) {
        Vec w(np);
        for (Eigen::Index i = 0; i < np; ++i)
          w(i) = state.q_psi.mean(i) + sd_w(i) * rng.next_normal();
        const Mat psi = corr_transform::correlation(w, state.K);
        acc1 += psi;
        acc2 += psi.cwiseProduct(psi);
      }
      acc1 /= draws;
      acc2 /= draws;
      for (Eigen::Index i = 1; i < state.K; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
          const double m = acc1(i, j);
          const double s = std::sqrt(std::max(0.0, acc2(i, j) - m * m));
          push_gauss("corr(" + column_names[static_cast<std::size_t>(state.L + i)] + "," +
                         column_names[static_cast<std::size_t>(state.L + j)] + ")",
                     "correlation", m, s);
        }
      }
    }
  }
  return rows;
}

}  // namespace cmmnl
