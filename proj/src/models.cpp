#include "fuzzlab/models.hpp"

#include <cmath>
#include <numeric>

#include "fuzzlab/error.hpp"
#include "fuzzlab/rng.hpp"

namespace fuzzlab {

std::string_view family_name(Family f) {
  switch (f) {
    case Family::Mlp: return "mlp";
    case Family::Lstm: return "lstm";
    case Family::Cnn: return "cnn";
    case Family::Svm: return "svm";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  for (auto f : {Family::Mlp, Family::Lstm, Family::Cnn, Family::Svm})
    if (family_name(f) == name) return f;
  throw Error(ErrorCode::ConfigError, "unknown model family: " + std::string(name));
}

Family default_family(Repr r) {
  switch (r) {
    case Repr::TypeSeq: return Family::Lstm;
    case Repr::ByteMat: return Family::Cnn;
    case Repr::ByteVec:
    case Repr::HeaderVec: return Family::Mlp;
  }
  return Family::Mlp;
}

std::size_t ModelConfig::input_size() const {
  return std::accumulate(input_shape.begin(), input_shape.end(), std::size_t{1}, std::multiplies<>());
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* what) {
    if (v == 0) throw Error(ErrorCode::ConfigError, std::string(what) + " must be positive");
  };
  if (input_shape.empty()) throw Error(ErrorCode::ShapeMismatch, "input shape is empty");
  for (auto d : input_shape) positive(d, "input dimension");
  positive(epochs, "epochs");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate))
    throw Error(ErrorCode::ConfigError, "learning rate must be positive");
  switch (family) {
    case Family::Mlp:
      for (auto h : hidden) positive(h, "hidden width");
      break;
    case Family::Lstm:
      if (input_shape.size() != 1) throw Error(ErrorCode::ShapeMismatch, "lstm expects a 1-d window");
      positive(vocab, "vocab");
      positive(embed, "embedding size");
      positive(lstm_units, "lstm units");
      positive(lstm_dense, "dense width");
      break;
    case Family::Cnn: {
      if (input_shape.size() != 2) throw Error(ErrorCode::ShapeMismatch, "cnn expects a 2-d input");
      positive(kernel, "kernel");
      if (kernel % 2 == 0) throw Error(ErrorCode::ConfigError, "kernel must be odd for same padding");
      if (conv_filters.empty()) throw Error(ErrorCode::ConfigError, "cnn needs at least one conv layer");
      std::size_t h = input_shape[0];
      std::size_t w = input_shape[1];
      for (auto f : conv_filters) {
        positive(f, "filter count");
        h /= 2;
        w /= 2;
      }
      if (h == 0 || w == 0) throw Error(ErrorCode::ShapeMismatch, "input too small for the pooling stack");
      positive(cnn_dense, "dense width");
      break;
    }
    case Family::Svm:
      if (l2 < 0) throw Error(ErrorCode::ConfigError, "l2 must be non-negative");
      break;
  }
}

nlohmann::json ModelConfig::to_json() const {
  return {{"family", family_name(family)},
          {"input_shape", input_shape},
          {"hidden", hidden},
          {"vocab", vocab},
          {"embed", embed},
          {"lstm_units", lstm_units},
          {"lstm_dense", lstm_dense},
          {"conv_filters", conv_filters},
          {"kernel", kernel},
          {"cnn_dense", cnn_dense},
          {"l2", l2},
          {"seed", seed},
          {"epochs", epochs},
          {"learning_rate", learning_rate},
          {"batch_size", batch_size}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.family = parse_family(j.at("family").get<std::string>());
    c.input_shape = j.at("input_shape").get<std::vector<std::size_t>>();
    c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    c.vocab = j.at("vocab").get<std::size_t>();
    c.embed = j.at("embed").get<std::size_t>();
    c.lstm_units = j.at("lstm_units").get<std::size_t>();
    c.lstm_dense = j.at("lstm_dense").get<std::size_t>();
    c.conv_filters = j.at("conv_filters").get<std::vector<std::size_t>>();
    c.kernel = j.at("kernel").get<std::size_t>();
    c.cnn_dense = j.at("cnn_dense").get<std::size_t>();
    c.l2 = j.at("l2").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
  data.assign(std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>()), 0.0);
}

namespace detail {

void fill_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
  const double r = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : t.data) v = rng.uniform_real(-r, r);
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bce_with_logit(double z, int y) { return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z))); }

}  // namespace detail

namespace {

detail::ForwardFn forward_of(Family f) {
  switch (f) {
    case Family::Mlp: return detail::mlp_forward;
    case Family::Lstm: return detail::lstm_forward;
    case Family::Cnn: return detail::cnn_forward;
    case Family::Svm: return detail::svm_forward;
  }
  return detail::mlp_forward;
}

std::vector<Tensor> zeros_like(const std::vector<Tensor>& p) {
  std::vector<Tensor> g;
  g.reserve(p.size());
  for (const auto& t : p) g.emplace_back(t.shape);
  return g;
}

}  // namespace

Model::Model(const ModelConfig& config) : config_(config) {
  config_.validate();
  Rng rng(derive_seed(config_.seed, "init"));
  switch (config_.family) {
    case Family::Mlp: params_ = detail::mlp_init(config_, rng); break;
    case Family::Lstm: params_ = detail::lstm_init(config_, rng); break;
    case Family::Cnn: params_ = detail::cnn_init(config_, rng); break;
    case Family::Svm: params_ = detail::svm_init(config_, rng); break;
  }
}

Model::Model(ModelConfig config, std::vector<Tensor> params) : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  Rng rng(0);
  std::vector<Tensor> expected;
  switch (config_.family) {
    case Family::Mlp: expected = detail::mlp_init(config_, rng); break;
    case Family::Lstm: expected = detail::lstm_init(config_, rng); break;
    case Family::Cnn: expected = detail::cnn_init(config_, rng); break;
    case Family::Svm: expected = detail::svm_init(config_, rng); break;
  }
  if (expected.size() != params_.size()) throw Error(ErrorCode::ShapeMismatch, "wrong number of weight tensors");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (expected[i].shape != params_[i].shape || params_[i].data.size() != expected[i].data.size())
      throw Error(ErrorCode::ShapeMismatch, "weight tensor " + std::to_string(i) + " has the wrong shape");
    for (double v : params_[i].data)
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteLoss, "non-finite weight in tensor " + std::to_string(i));
  }
}

void Model::check_input(std::span<const std::int32_t> x) const {
  if (x.size() != config_.input_size())
    throw Error(ErrorCode::ShapeMismatch, "sample has " + std::to_string(x.size()) + " values, model expects " +
                                              std::to_string(config_.input_size()));
  if (config_.family == Family::Lstm) {
    for (auto v : x)
      if (v < 0 || static_cast<std::size_t>(v) > config_.vocab)
        throw Error(ErrorCode::ShapeMismatch, "type id " + std::to_string(v) + " outside the vocabulary");
  }
}

double Model::score(std::span<const std::int32_t> x) const {
  check_input(x);
  return forward_of(config_.family)(config_, params_, x, -1, nullptr);
}

int Model::predict(std::span<const std::int32_t> x) const {
  const double s = score(x);
  return config_.family == Family::Svm ? (s >= 0 ? 1 : 0) : (s >= 0.5 ? 1 : 0);
}

std::vector<double> Model::scores(const std::vector<Sample>& samples) const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(score(s.x));
  return out;
}

std::vector<int> Model::predict_all(const std::vector<Sample>& samples) const {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(predict(s.x));
  return out;
}

double Model::loss_and_gradient(const std::vector<Sample>& samples, std::vector<Tensor>* grads) const {
  if (samples.empty()) throw Error(ErrorCode::ShapeMismatch, "no samples");
  const auto fwd = forward_of(config_.family);
  if (grads != nullptr) *grads = zeros_like(params_);
  double total = 0;
  for (const auto& s : samples) {
    check_input(s.x);
    total += fwd(config_, params_, s.x, s.y, grads);
  }
  const double n = static_cast<double>(samples.size());
  double loss = total / n;
  if (grads != nullptr)
    for (auto& g : *grads)
      for (auto& v : g.data) v /= n;
  if (config_.family == Family::Svm) {
    const auto& w = params_[0].data;
    double sq = 0;
    for (double v : w) sq += v * v;
    loss += 0.5 * config_.l2 * sq;
    if (grads != nullptr)
      for (std::size_t i = 0; i < w.size(); ++i) (*grads)[0].data[i] += config_.l2 * w[i];
  }
  return loss;
}

namespace {

void check_finite(double loss, std::size_t epoch) {
  if (!std::isfinite(loss)) throw Error(ErrorCode::NonFiniteLoss, "loss is not finite at epoch " + std::to_string(epoch));
}

void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, double eta) {
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::size_t j = 0; j < params[i].data.size(); ++j) params[i].data[j] -= eta * grads[i].data[j];
}

Model train_svm(Model m, const std::vector<Sample>& train) {
  const ModelConfig& c = m.config();
  std::vector<Tensor> g;
  double obj = m.loss_and_gradient(train, &g);
  check_finite(obj, 0);
  for (std::size_t epoch = 0; epoch < c.epochs; ++epoch) {
    double eta = c.learning_rate / std::sqrt(static_cast<double>(epoch + 1));
    for (int tries = 0; tries < 30; ++tries, eta *= 0.5) {
      Model cand = m;
      step(cand.params(), g, eta);
      std::vector<Tensor> cg;
      const double cobj = cand.loss_and_gradient(train, &cg);
      check_finite(cobj, epoch);
      if (cobj <= obj) {
        m.params() = std::move(cand.params());
        obj = cobj;
        g = std::move(cg);
        break;
      }
    }
    m.loss_curve.push_back(obj);
  }
  return m;
}

}  // namespace

Model train_model(const ModelConfig& config, const std::vector<Sample>& train) {
  if (train.empty()) throw Error(ErrorCode::EmptyClass, "training set is empty");
  Model m(config);
  if (config.family == Family::Svm) return train_svm(std::move(m), train);

  const auto fwd = forward_of(config.family);
  const std::size_t n = train.size();
  const std::size_t bs = config.batch_size == 0 ? n : std::min(config.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(config.seed, "batches"));
  for (const auto& s : train) {
    if (s.x.size() != config.input_size()) throw Error(ErrorCode::ShapeMismatch, "training sample shape");
  }

  std::vector<Tensor> grads = zeros_like(m.params());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (bs < n) rng.shuffle(order);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t end = std::min(n, start + bs);
      for (auto& g : grads) std::fill(g.data.begin(), g.data.end(), 0.0);
      double batch_loss = 0;
      for (std::size_t i = start; i < end; ++i) {
        const Sample& s = train[order[i]];
        batch_loss += fwd(config, m.params(), s.x, s.y, &grads);
      }
      check_finite(batch_loss, epoch);
      epoch_loss += batch_loss;
      step(m.params(), grads, config.learning_rate / static_cast<double>(end - start));
    }
    for (const auto& t : m.params())
      for (double v : t.data)
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteLoss, "weights diverged at epoch " + std::to_string(epoch));
    m.loss_curve.push_back(epoch_loss / static_cast<double>(n));
  }
  return m;
}

ModelConfig config_for(const Dataset& dataset, std::uint64_t seed) {
  ModelConfig c;
  c.family = default_family(dataset.repr);
  c.seed = seed;
  const auto& any = dataset.split.train.empty() ? dataset.split.test : dataset.split.train;
  if (!any.empty()) c.input_shape = any.front().shape;
  if (c.family == Family::Lstm) c.vocab = std::max<std::size_t>(1, dataset.vocab());
  return c;
}

}  // namespace fuzzlab
