#include <cmath>

#include "fuzzlab/models.hpp"

namespace fuzzlab::detail {

// Tensors: embedding (V+1, E), W (4H, E), U (4H, H), b (4H), Wd (D, H), bd (D),
// wo (1, D), bo (1). Gate rows are ordered i, f, g, o.
std::vector<Tensor> lstm_init(const ModelConfig& c, Rng& rng) {
  const std::size_t V = c.vocab + 1, E = c.embed, H = c.lstm_units, D = c.lstm_dense;
  std::vector<Tensor> p;
  Tensor emb({V, E});
  fill_uniform(emb, E, rng);
  Tensor w({4 * H, E});
  fill_uniform(w, E, rng);
  Tensor u({4 * H, H});
  fill_uniform(u, H, rng);
  Tensor b({4 * H});
  for (std::size_t k = H; k < 2 * H; ++k) b.data[k] = 1.0;  // forget gate starts open
  Tensor wd({D, H});
  fill_uniform(wd, H, rng);
  Tensor wo({1, D});
  fill_uniform(wo, D, rng);
  p.push_back(std::move(emb));
  p.push_back(std::move(w));
  p.push_back(std::move(u));
  p.push_back(std::move(b));
  p.push_back(std::move(wd));
  p.emplace_back(std::vector<std::size_t>{D});
  p.push_back(std::move(wo));
  p.emplace_back(std::vector<std::size_t>{1});
  return p;
}

double lstm_forward(const ModelConfig& c, const std::vector<Tensor>& p, std::span<const std::int32_t> x, int y,
                    std::vector<Tensor>* grads) {
  const std::size_t E = c.embed, H = c.lstm_units, D = c.lstm_dense, T = x.size();
  const auto& emb = p[0].data;
  const auto& W = p[1].data;
  const auto& U = p[2].data;
  const auto& b = p[3].data;
  const auto& Wd = p[4].data;
  const auto& bd = p[5].data;
  const auto& wo = p[6].data;
  const double bo = p[7].data[0];

  // gates[t] holds post-activation i, f, g, o; hs/cs have T+1 entries (index 0 = initial state).
  std::vector<std::vector<double>> gates(T, std::vector<double>(4 * H));
  std::vector<std::vector<double>> hs(T + 1, std::vector<double>(H, 0.0));
  std::vector<std::vector<double>> cs(T + 1, std::vector<double>(H, 0.0));
  for (std::size_t t = 0; t < T; ++t) {
    const double* e = &emb[static_cast<std::size_t>(x[t]) * E];
    auto& gt = gates[t];
    for (std::size_t r = 0; r < 4 * H; ++r) {
      double a = b[r];
      const double* wr = &W[r * E];
      for (std::size_t k = 0; k < E; ++k) a += wr[k] * e[k];
      const double* ur = &U[r * H];
      for (std::size_t k = 0; k < H; ++k) a += ur[k] * hs[t][k];
      gt[r] = (r >= 2 * H && r < 3 * H) ? std::tanh(a) : sigmoid(a);
    }
    for (std::size_t k = 0; k < H; ++k) {
      cs[t + 1][k] = gt[H + k] * cs[t][k] + gt[k] * gt[2 * H + k];
      hs[t + 1][k] = gt[3 * H + k] * std::tanh(cs[t + 1][k]);
    }
  }
  std::vector<double> d(D);
  for (std::size_t j = 0; j < D; ++j) {
    double z = bd[j];
    for (std::size_t k = 0; k < H; ++k) z += Wd[j * H + k] * hs[T][k];
    d[j] = std::tanh(z);
  }
  double logit = bo;
  for (std::size_t j = 0; j < D; ++j) logit += wo[j] * d[j];
  if (y < 0) return sigmoid(logit);
  const double loss = bce_with_logit(logit, y);
  if (grads == nullptr) return loss;

  auto& g_emb = (*grads)[0].data;
  auto& gW = (*grads)[1].data;
  auto& gU = (*grads)[2].data;
  auto& gb = (*grads)[3].data;
  auto& gWd = (*grads)[4].data;
  auto& gbd = (*grads)[5].data;
  auto& gwo = (*grads)[6].data;
  const double dlogit = sigmoid(logit) - y;
  (*grads)[7].data[0] += dlogit;
  std::vector<double> dh(H, 0.0);
  for (std::size_t j = 0; j < D; ++j) {
    gwo[j] += dlogit * d[j];
    const double dz = dlogit * wo[j] * (1.0 - d[j] * d[j]);
    gbd[j] += dz;
    for (std::size_t k = 0; k < H; ++k) {
      gWd[j * H + k] += dz * hs[T][k];
      dh[k] += dz * Wd[j * H + k];
    }
  }

  std::vector<double> dc(H, 0.0);
  std::vector<double> da(4 * H);
  for (std::size_t t = T; t-- > 0;) {
    const auto& gt = gates[t];
    for (std::size_t k = 0; k < H; ++k) {
      const double i = gt[k], f = gt[H + k], g = gt[2 * H + k], o = gt[3 * H + k];
      const double tc = std::tanh(cs[t + 1][k]);
      const double dct = dc[k] + dh[k] * o * (1.0 - tc * tc);
      da[k] = dct * g * i * (1.0 - i);
      da[H + k] = dct * cs[t][k] * f * (1.0 - f);
      da[2 * H + k] = dct * i * (1.0 - g * g);
      da[3 * H + k] = dh[k] * tc * o * (1.0 - o);
      dc[k] = dct * f;
    }
    const std::size_t id = static_cast<std::size_t>(x[t]);
    const double* e = &emb[id * E];
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t r = 0; r < 4 * H; ++r) {
      const double a = da[r];
      if (a == 0) continue;
      gb[r] += a;
      for (std::size_t k = 0; k < E; ++k) {
        gW[r * E + k] += a * e[k];
        g_emb[id * E + k] += a * W[r * E + k];
      }
      for (std::size_t k = 0; k < H; ++k) {
        gU[r * H + k] += a * hs[t][k];
        dh[k] += a * U[r * H + k];
      }
    }
  }
  return loss;
}

}  // namespace fuzzlab::detail
