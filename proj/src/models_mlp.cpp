#include <cmath>

#include "fuzzlab/models.hpp"

namespace fuzzlab::detail {

// Tensors: W0, b0, W1, b1, ..., W_out (1 x last), b_out (1).
std::vector<Tensor> mlp_init(const ModelConfig& c, Rng& rng) {
  std::vector<Tensor> p;
  std::size_t in = c.input_size();
  std::vector<std::size_t> widths = c.hidden;
  widths.push_back(1);
  for (auto out : widths) {
    Tensor w({out, in});
    fill_uniform(w, in, rng);
    p.push_back(std::move(w));
    p.emplace_back(std::vector<std::size_t>{out});
    in = out;
  }
  return p;
}

double mlp_forward(const ModelConfig& c, const std::vector<Tensor>& p, std::span<const std::int32_t> x, int y,
                   std::vector<Tensor>* grads) {
  const std::size_t layers = p.size() / 2;
  std::vector<std::vector<double>> acts(layers + 1);
  acts[0].resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) acts[0][i] = x[i] / 255.0;

  for (std::size_t l = 0; l < layers; ++l) {
    const Tensor& w = p[2 * l];
    const Tensor& b = p[2 * l + 1];
    const std::size_t out = w.shape[0];
    const std::size_t in = w.shape[1];
    auto& a = acts[l + 1];
    a.assign(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      double z = b.data[o];
      const double* row = &w.data[o * in];
      for (std::size_t i = 0; i < in; ++i) z += row[i] * acts[l][i];
      a[o] = l + 1 < layers ? std::tanh(z) : z;
    }
  }
  const double logit = acts[layers][0];
  if (y < 0) return sigmoid(logit);
  const double loss = bce_with_logit(logit, y);
  if (grads == nullptr) return loss;

  std::vector<double> delta{sigmoid(logit) - y};
  for (std::size_t l = layers; l-- > 0;) {
    const Tensor& w = p[2 * l];
    const std::size_t out = w.shape[0];
    const std::size_t in = w.shape[1];
    Tensor& gw = (*grads)[2 * l];
    Tensor& gb = (*grads)[2 * l + 1];
    std::vector<double> prev(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      gb.data[o] += d;
      if (d == 0) continue;
      double* grow = &gw.data[o * in];
      const double* row = &w.data[o * in];
      for (std::size_t i = 0; i < in; ++i) {
        grow[i] += d * acts[l][i];
        prev[i] += d * row[i];
      }
    }
    if (l > 0)
      for (std::size_t i = 0; i < in; ++i) prev[i] *= 1.0 - acts[l][i] * acts[l][i];
    delta = std::move(prev);
  }
  (void)c;
  return loss;
}

}  // namespace fuzzlab::detail
