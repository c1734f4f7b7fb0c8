#pragma once

#include <vector>

#include "cmmnl/math.hpp"
#include "cmmnl/rng.hpp"
#include "cmmnl/types.hpp"

namespace cmmnl {

struct DenseLayer {
  Mat w;  // out x in
  Vec b;  // out
};

// Fully-connected network mapping a context vector to a shift on all L+K
// taste parameters. Hidden layers use ReLU, the output layer is linear.
// Inverted dropout is applied to hidden activations in train mode.
struct ContextNetwork {
  std::vector<DenseLayer> layers;
  double dropout_rate = 0.0;

  bool empty() const { return layers.empty(); }
  Eigen::Index input_dim() const { return layers.front().w.cols(); }
  Eigen::Index output_dim() const { return layers.back().w.rows(); }
  std::vector<Eigen::Index> shape() const;
  Eigen::Index n_params() const;
  void validate() const;
};

enum class NetMode { train, eval };

struct NetForwardCache {
  std::vector<Vec> inputs;   // input fed to each layer
  std::vector<Vec> preact;   // affine output of each layer
  std::vector<Vec> dropout;  // scaled dropout mask per hidden layer (empty if inactive)
  std::vector<Eigen::Index> shape;
  bool valid = false;
};

struct NetGradients {
  std::vector<Mat> w;
  std::vector<Vec> b;

  static NetGradients zeros_like(const ContextNetwork& net);
  void set_zero();
};

// Forward pass. In train mode dropout masks are drawn from rng (no draws are
// consumed when dropout_rate is 0, so rate 0 matches eval exactly). Pass a
// cache pointer to enable a subsequent backward call.
Vec nn_forward(const ContextNetwork& net, const Vec& c, NetMode mode, StreamRng& rng,
               NetForwardCache* cache = nullptr);

inline Vec nn_forward_eval(const ContextNetwork& net, const Vec& c) {
  StreamRng unused(0);
  return nn_forward(net, c, NetMode::eval, unused);
}

// Reverse pass for output^T * out_grad; accumulates parameter gradients into
// grads and returns the gradient with respect to the input. The dropout mask
// cached by the forward call is reused.
Vec nn_backward(const ContextNetwork& net, const NetForwardCache& cache,
                const Vec& out_grad, NetGradients& grads);

// He-initialized hidden layers; output layer weights and biases are exactly
// zero so a fresh network is the zero map.
ContextNetwork nn_init(const std::vector<Eigen::Index>& widths, double dropout_rate,
                       StreamRng& rng);

}  // namespace cmmnl
