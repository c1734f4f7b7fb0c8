#pragma once

#include <cstdint>
#include <vector>

#include "cmmnl/distributions.hpp"
#include "cmmnl/variational.hpp"

namespace cmmnl {

struct ElboParts {
  double energy = 0.0;   // E_q[log p(y, z) + log |jacobian|], Monte Carlo
  double entropy = 0.0;  // analytic Gaussian entropy of q (scaled local terms)
  double total() const { return energy + entropy; }
};

// Common-random-number key: the same (seed, step) pair reproduces every
// draw exactly, independent of batch order or thread count.
struct ElboOptions {
  int mc_samples = 1;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  NetMode net_mode = NetMode::train;
  int threads = 1;
};

// Unbiased mini-batch ELBO estimate. `batch` holds indices into
// flatten_occasions(data); likelihood and per-occasion terms are scaled by
// T_total/|batch|, per-individual terms are additionally amortized by 1/T_n,
// global prior and entropy terms enter at full weight.
ElboParts elbo_estimate(const ChoiceDataset& data, const std::vector<OccasionRef>& refs,
                        const std::vector<Eigen::Index>& batch, const VariationalState& state,
                        const PriorConfig& priors, const ElboOptions& opts);

// Pathwise (reparameterized) gradients of the same estimator, sharing its
// draws; writes into `grad` (zeroed first) and returns the paired estimate.
ElboParts elbo_gradients(const ChoiceDataset& data, const std::vector<OccasionRef>& refs,
                         const std::vector<Eigen::Index>& batch, const VariationalState& state,
                         const PriorConfig& priors, const ElboOptions& opts,
                         VariationalState& grad);

// Convenience overloads that flatten the dataset on the fly.
ElboParts elbo_estimate(const ChoiceDataset& data, const std::vector<Eigen::Index>& batch,
                        const VariationalState& state, const PriorConfig& priors,
                        const ElboOptions& opts);
ElboParts elbo_gradients(const ChoiceDataset& data, const std::vector<Eigen::Index>& batch,
                         const VariationalState& state, const PriorConfig& priors,
                         const ElboOptions& opts, VariationalState& grad);

}  // namespace cmmnl
