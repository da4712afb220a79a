#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fuzzlab/dataset.hpp"
#include "json.hpp"

namespace fuzzlab {

enum class Family { Mlp, Lstm, Cnn, Svm };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);  // throws ConfigError
Family default_family(Repr r);

struct ModelConfig {
  Family family = Family::Mlp;
  std::vector<std::size_t> input_shape;  // {n} for mlp/svm/lstm, {k, w} for cnn
  std::vector<std::size_t> hidden = {32, 16};  // mlp
  std::size_t vocab = 0;                       // lstm: ids in [0, vocab]
  std::size_t embed = 16;
  std::size_t lstm_units = 32;
  std::size_t lstm_dense = 32;
  std::vector<std::size_t> conv_filters = {8, 16};
  std::size_t kernel = 3;
  std::size_t cnn_dense = 64;
  double l2 = 1e-3;  // svm
  std::uint64_t seed = 0;
  std::size_t epochs = 300;
  double learning_rate = 0.05;
  std::size_t batch_size = 0;  // 0 = full batch

  /// Throws ConfigError / ShapeMismatch.
  void validate() const;
  std::size_t input_size() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  bool operator==(const ModelConfig&) const = default;
};

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s);
  std::size_t size() const { return data.size(); }
  bool operator==(const Tensor&) const = default;
};

/// Weights plus the configuration that gives them meaning.
class Model {
 public:
  Model() = default;
  /// Fresh weights: U[-1/sqrt(fan_in), 1/sqrt(fan_in)], seeded; biases 0.
  explicit Model(const ModelConfig& config);
  Model(ModelConfig config, std::vector<Tensor> params);

  const ModelConfig& config() const { return config_; }
  std::vector<Tensor>& params() { return params_; }
  const std::vector<Tensor>& params() const { return params_; }

  /// Probability of the malicious class (neural families) or margin (svm).
  double score(std::span<const std::int32_t> x) const;
  int predict(std::span<const std::int32_t> x) const;
  std::vector<double> scores(const std::vector<Sample>& samples) const;
  std::vector<int> predict_all(const std::vector<Sample>& samples) const;

  /// Mean loss over the samples (plus the L2 term for svm). When `grads`
  /// is non-null it receives the matching gradient, shaped like params().
  double loss_and_gradient(const std::vector<Sample>& samples, std::vector<Tensor>* grads) const;

  std::vector<double> loss_curve;

  bool operator==(const Model&) const = default;

 private:
  void check_input(std::span<const std::int32_t> x) const;

  ModelConfig config_;
  std::vector<Tensor> params_;
};

/// Deterministic gradient descent. SVM uses full-batch subgradient steps
/// with backtracking so its objective never increases.
Model train_model(const ModelConfig& config, const std::vector<Sample>& train);

/// Config for a dataset's designated family with shapes filled in.
ModelConfig config_for(const Dataset& dataset, std::uint64_t seed);

namespace detail {

// Per-family kernels. `grads` may be null; otherwise gradients are added to it.
std::vector<Tensor> mlp_init(const ModelConfig& c, Rng& rng);
double mlp_forward(const ModelConfig& c, const std::vector<Tensor>& p, std::span<const std::int32_t> x, int y,
                   std::vector<Tensor>* grads);
std::vector<Tensor> lstm_init(const ModelConfig& c, Rng& rng);
double lstm_forward(const ModelConfig& c, const std::vector<Tensor>& p, std::span<const std::int32_t> x, int y,
                    std::vector<Tensor>* grads);
std::vector<Tensor> cnn_init(const ModelConfig& c, Rng& rng);
double cnn_forward(const ModelConfig& c, const std::vector<Tensor>& p, std::span<const std::int32_t> x, int y,
                   std::vector<Tensor>* grads);
std::vector<Tensor> svm_init(const ModelConfig& c, Rng& rng);
double svm_forward(const ModelConfig& c, const std::vector<Tensor>& p, std::span<const std::int32_t> x, int y,
                   std::vector<Tensor>* grads);

/// Returns the raw output (probability or margin) when y < 0, else the per-sample loss.
using ForwardFn = double (*)(const ModelConfig&, const std::vector<Tensor>&, std::span<const std::int32_t>, int,
                             std::vector<Tensor>*);

void fill_uniform(Tensor& t, std::size_t fan_in, Rng& rng);
double sigmoid(double z);
/// Binary cross-entropy of a logit, numerically stable.
double bce_with_logit(double z, int y);

}  // namespace detail

}  // namespace fuzzlab
