#include <cmath>

#include "fuzzlab/models.hpp"

namespace fuzzlab::detail {

namespace {

struct Feature {
  std::size_t ch, h, w;
  std::vector<double> v;  // ch x h x w
};

}  // namespace

// Tensors: per conv layer W (F, C, K, K) and b (F); then Wd (D, flat), bd (D), wo (1, D), bo (1).
std::vector<Tensor> cnn_init(const ModelConfig& c, Rng& rng) {
  std::vector<Tensor> p;
  const std::size_t K = c.kernel;
  std::size_t ch = 1, h = c.input_shape[0], w = c.input_shape[1];
  for (auto f : c.conv_filters) {
    Tensor wt({f, ch, K, K});
    fill_uniform(wt, ch * K * K, rng);
    p.push_back(std::move(wt));
    p.emplace_back(std::vector<std::size_t>{f});
    ch = f;
    h /= 2;
    w /= 2;
  }
  const std::size_t flat = ch * h * w;
  Tensor wd({c.cnn_dense, flat});
  fill_uniform(wd, flat, rng);
  p.push_back(std::move(wd));
  p.emplace_back(std::vector<std::size_t>{c.cnn_dense});
  Tensor wo({1, c.cnn_dense});
  fill_uniform(wo, c.cnn_dense, rng);
  p.push_back(std::move(wo));
  p.emplace_back(std::vector<std::size_t>{1});
  return p;
}

double cnn_forward(const ModelConfig& c, const std::vector<Tensor>& p, std::span<const std::int32_t> x, int y,
                   std::vector<Tensor>* grads) {
  const std::size_t K = c.kernel;
  const auto pad = static_cast<std::ptrdiff_t>(K / 2);
  const std::size_t L = c.conv_filters.size();

  std::vector<Feature> inputs(L + 1);  // inputs[l] feeds conv l; inputs[L] is the last pooled map
  std::vector<Feature> acts(L);        // post-ReLU conv outputs
  std::vector<std::vector<std::size_t>> argmax(L);
  inputs[0] = Feature{1, c.input_shape[0], c.input_shape[1], std::vector<double>(x.size())};
  for (std::size_t i = 0; i < x.size(); ++i) inputs[0].v[i] = x[i] / 255.0;

  for (std::size_t l = 0; l < L; ++l) {
    const Feature& in = inputs[l];
    const auto& W = p[2 * l].data;
    const auto& b = p[2 * l + 1].data;
    const std::size_t F = c.conv_filters[l];
    Feature& a = acts[l];
    a = Feature{F, in.h, in.w, std::vector<double>(F * in.h * in.w)};
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t i = 0; i < in.h; ++i)
        for (std::size_t j = 0; j < in.w; ++j) {
          double z = b[f];
          for (std::size_t ch = 0; ch < in.ch; ++ch)
            for (std::size_t di = 0; di < K; ++di) {
              const auto ii = static_cast<std::ptrdiff_t>(i + di) - pad;
              if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(in.h)) continue;
              for (std::size_t dj = 0; dj < K; ++dj) {
                const auto jj = static_cast<std::ptrdiff_t>(j + dj) - pad;
                if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(in.w)) continue;
                z += W[((f * in.ch + ch) * K + di) * K + dj] *
                     in.v[(ch * in.h + static_cast<std::size_t>(ii)) * in.w + static_cast<std::size_t>(jj)];
              }
            }
          a.v[(f * in.h + i) * in.w + j] = z > 0 ? z : 0.0;
        }
    Feature& out = inputs[l + 1];
    out = Feature{F, in.h / 2, in.w / 2, {}};
    out.v.assign(F * out.h * out.w, 0.0);
    argmax[l].assign(out.v.size(), 0);
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t i = 0; i < out.h; ++i)
        for (std::size_t j = 0; j < out.w; ++j) {
          std::size_t best = (f * in.h + 2 * i) * in.w + 2 * j;
          for (std::size_t di = 0; di < 2; ++di)
            for (std::size_t dj = 0; dj < 2; ++dj) {
              const std::size_t idx = (f * in.h + 2 * i + di) * in.w + 2 * j + dj;
              if (a.v[idx] > a.v[best]) best = idx;
            }
          const std::size_t o = (f * out.h + i) * out.w + j;
          out.v[o] = a.v[best];
          argmax[l][o] = best;
        }
  }

  const auto& flat = inputs[L].v;
  const std::size_t N = flat.size(), D = c.cnn_dense;
  const auto& Wd = p[2 * L].data;
  const auto& bd = p[2 * L + 1].data;
  const auto& wo = p[2 * L + 2].data;
  std::vector<double> d(D);
  for (std::size_t j = 0; j < D; ++j) {
    double z = bd[j];
    for (std::size_t k = 0; k < N; ++k) z += Wd[j * N + k] * flat[k];
    d[j] = z > 0 ? z : 0.0;
  }
  double logit = p[2 * L + 3].data[0];
  for (std::size_t j = 0; j < D; ++j) logit += wo[j] * d[j];
  if (y < 0) return sigmoid(logit);
  const double loss = bce_with_logit(logit, y);
  if (grads == nullptr) return loss;

  auto& g = *grads;
  const double dlogit = sigmoid(logit) - y;
  g[2 * L + 3].data[0] += dlogit;
  std::vector<double> dflat(N, 0.0);
  for (std::size_t j = 0; j < D; ++j) {
    g[2 * L + 2].data[j] += dlogit * d[j];
    if (d[j] <= 0) continue;
    const double dz = dlogit * wo[j];
    g[2 * L + 1].data[j] += dz;
    for (std::size_t k = 0; k < N; ++k) {
      g[2 * L].data[j * N + k] += dz * flat[k];
      dflat[k] += dz * Wd[j * N + k];
    }
  }

  std::vector<double> dpooled = std::move(dflat);
  for (std::size_t l = L; l-- > 0;) {
    const Feature& in = inputs[l];
    const Feature& a = acts[l];
    const auto& W = p[2 * l].data;
    auto& gW = g[2 * l].data;
    auto& gb = g[2 * l + 1].data;
    std::vector<double> dz(a.v.size(), 0.0);
    for (std::size_t o = 0; o < dpooled.size(); ++o) {
      const std::size_t idx = argmax[l][o];
      if (a.v[idx] > 0) dz[idx] += dpooled[o];
    }
    std::vector<double> din(l > 0 ? in.v.size() : 0, 0.0);
    for (std::size_t f = 0; f < a.ch; ++f)
      for (std::size_t i = 0; i < in.h; ++i)
        for (std::size_t j = 0; j < in.w; ++j) {
          const double gz = dz[(f * in.h + i) * in.w + j];
          if (gz == 0) continue;
          gb[f] += gz;
          for (std::size_t ch = 0; ch < in.ch; ++ch)
            for (std::size_t di = 0; di < K; ++di) {
              const auto ii = static_cast<std::ptrdiff_t>(i + di) - pad;
              if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(in.h)) continue;
              for (std::size_t dj = 0; dj < K; ++dj) {
                const auto jj = static_cast<std::ptrdiff_t>(j + dj) - pad;
                if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(in.w)) continue;
                const std::size_t src = (ch * in.h + static_cast<std::size_t>(ii)) * in.w + static_cast<std::size_t>(jj);
                const std::size_t wi = ((f * in.ch + ch) * K + di) * K + dj;
                gW[wi] += gz * in.v[src];
                if (l > 0) din[src] += gz * W[wi];
              }
            }
        }
    dpooled = std::move(din);
  }
  return loss;
}

}  // namespace fuzzlab::detail
