#include "cmmnl/network.hpp"

#include <cmath>

#include "cmmnl/errors.hpp"

namespace cmmnl {

std::vector<Eigen::Index> ContextNetwork::shape() const {
  std::vector<Eigen::Index> s;
  if (layers.empty()) return s;
  s.push_back(layers.front().w.cols());
  for (const auto& l : layers) s.push_back(l.w.rows());
  return s;
}

Eigen::Index ContextNetwork::n_params() const {
  Eigen::Index n = 0;
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

void ContextNetwork::validate() const {
  if (layers.empty()) throw ValidationError("context network has no layers");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw ValidationError("dropout rate must lie in [0, 1)");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].b.size() != layers[l].w.rows())
      throw ValidationError("layer bias length does not match weight rows");
    if (l > 0 && layers[l].w.cols() != layers[l - 1].w.rows())
      throw ValidationError("consecutive layer dimensions do not chain");
    if (!layers[l].w.allFinite() || !layers[l].b.allFinite())
      throw ValidationError("non-finite network weight");
  }
}

NetGradients NetGradients::zeros_like(const ContextNetwork& net) {
  NetGradients g;
  g.w.reserve(net.layers.size());
  g.b.reserve(net.layers.size());
  for (const auto& l : net.layers) {
    g.w.push_back(Mat::Zero(l.w.rows(), l.w.cols()));
    g.b.push_back(Vec::Zero(l.b.size()));
  }
  return g;
}

void NetGradients::set_zero() {
  for (auto& m : w) m.setZero();
  for (auto& v : b) v.setZero();
}

Vec nn_forward(const ContextNetwork& net, const Vec& c, NetMode mode, StreamRng& rng,
               NetForwardCache* cache) {
  if (net.layers.empty()) throw ValidationError("nn_forward: network has no layers");
  if (c.size() != net.input_dim())
    throw ValidationError("nn_forward: context length does not match network input");
  const std::size_t n_layers = net.layers.size();
  if (cache) {
    cache->inputs.assign(n_layers, Vec());
    cache->preact.assign(n_layers, Vec());
    cache->dropout.assign(n_layers, Vec());
    cache->shape = net.shape();
    cache->valid = true;
  }
  const bool drop = mode == NetMode::train && net.dropout_rate > 0.0;
  const double keep = 1.0 - net.dropout_rate;
  Vec h = c;
  for (std::size_t l = 0; l < n_layers; ++l) {
    if (cache) cache->inputs[l] = h;
    Vec a = net.layers[l].w * h + net.layers[l].b;
    if (cache) cache->preact[l] = a;
    if (l + 1 == n_layers) {
      h = std::move(a);  // linear output layer
    } else {
      h = a.cwiseMax(0.0);
      if (drop) {
        Vec mask(h.size());
        for (Eigen::Index i = 0; i < h.size(); ++i)
          mask(i) = rng.next_bernoulli(keep) ? 1.0 / keep : 0.0;
        h = h.cwiseProduct(mask);
        if (cache) cache->dropout[l] = std::move(mask);
      }
    }
  }
  if (!h.allFinite()) throw NumericError("nn_forward: non-finite activation");
  return h;
}

Vec nn_backward(const ContextNetwork& net, const NetForwardCache& cache,
                const Vec& out_grad, NetGradients& grads) {
  if (!cache.valid || cache.shape != net.shape())
    throw ValidationError("nn_backward: cache does not match network (stale cache)");
  if (out_grad.size() != net.output_dim())
    throw ValidationError("nn_backward: output gradient length mismatch");
  const std::size_t n_layers = net.layers.size();
  Vec g = out_grad;
  for (std::size_t l = n_layers; l-- > 0;) {
    if (l + 1 != n_layers) {
      // Undo dropout, then gate by the ReLU derivative.
      if (cache.dropout[l].size() > 0) g = g.cwiseProduct(cache.dropout[l]);
      const Vec& a = cache.preact[l];
      for (Eigen::Index i = 0; i < g.size(); ++i)
        if (a(i) <= 0.0) g(i) = 0.0;
    }
    grads.w[l].noalias() += g * cache.inputs[l].transpose();
    grads.b[l] += g;
    g = net.layers[l].w.transpose() * g;
  }
  return g;
}

ContextNetwork nn_init(const std::vector<Eigen::Index>& widths, double dropout_rate,
                       StreamRng& rng) {
  if (widths.size() < 2) throw ValidationError("nn_init: need at least input and output widths");
  for (Eigen::Index w : widths)
    if (w < 1) throw ValidationError("nn_init: widths must be >= 1");
  ContextNetwork net;
  net.dropout_rate = dropout_rate;
  for (std::size_t l = 1; l < widths.size(); ++l) {
    DenseLayer layer;
    layer.w = Mat::Zero(widths[l], widths[l - 1]);
    layer.b = Vec::Zero(widths[l]);
    const bool output_layer = (l + 1 == widths.size());
    if (!output_layer) {
      const double sd = std::sqrt(2.0 / static_cast<double>(widths[l - 1]));
      for (Eigen::Index i = 0; i < layer.w.rows(); ++i)
        for (Eigen::Index j = 0; j < layer.w.cols(); ++j)
          layer.w(i, j) = sd * rng.next_normal();
    }
    net.layers.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

}  // namespace cmmnl
