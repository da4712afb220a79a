#include "fuzzlab/models.hpp"

namespace fuzzlab::detail {

// Tensors: w (n), b (1). Inputs are scaled by 1/255 like the neural families.
std::vector<Tensor> svm_init(const ModelConfig& c, Rng& rng) {
  Tensor w({c.input_size()});
  fill_uniform(w, c.input_size(), rng);
  return {std::move(w), Tensor({1})};
}

double svm_forward(const ModelConfig&, const std::vector<Tensor>& p, std::span<const std::int32_t> x, int y,
                   std::vector<Tensor>* grads) {
  const auto& w = p[0].data;
  double margin = p[1].data[0];
  for (std::size_t i = 0; i < x.size(); ++i) margin += w[i] * (x[i] / 255.0);
  if (y < 0) return margin;
  const double t = y != 0 ? 1.0 : -1.0;
  const double hinge = 1.0 - t * margin;
  if (hinge <= 0) return 0.0;
  if (grads != nullptr) {
    auto& gw = (*grads)[0].data;
    for (std::size_t i = 0; i < x.size(); ++i) gw[i] -= t * (x[i] / 255.0);
    (*grads)[1].data[0] -= t;
  }
  return hinge;
}

}  // namespace fuzzlab::detail
