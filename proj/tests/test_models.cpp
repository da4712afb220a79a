#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fuzzlab/error.hpp"
#include "fuzzlab/io.hpp"
#include "fuzzlab/models.hpp"

using namespace fuzzlab;

namespace {

Sample sample(std::vector<std::int32_t> x, std::vector<std::size_t> shape, int y, std::int64_t session = -1) {
  Sample s;
  s.x = std::move(x);
  s.shape = std::move(shape);
  s.y = y;
  s.session = session;
  return s;
}

// Class 1 samples are bright in the first half, class 0 in the second.
std::vector<Sample> bytes_set(std::size_t n, std::vector<std::size_t> shape, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t width = 1;
  for (auto d : shape) width *= d;
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    std::vector<std::int32_t> x(width);
    for (std::size_t j = 0; j < width; ++j) {
      const bool hot = (j < width / 2) == (y == 1);
      x[j] = static_cast<std::int32_t>(hot ? rng.uniform(150, 255) : rng.uniform(0, 100));
    }
    out.push_back(sample(std::move(x), shape, y));
  }
  return out;
}

std::vector<Sample> types_set(std::size_t n, std::size_t window, std::size_t vocab, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    std::vector<std::int32_t> x(window);
    for (auto& v : x) v = static_cast<std::int32_t>(y == 1 ? rng.uniform(vocab / 2 + 1, vocab) : rng.uniform(0, vocab / 2));
    out.push_back(sample(std::move(x), {window}, y, static_cast<std::int64_t>(i)));
  }
  return out;
}

ModelConfig small(Family f) {
  ModelConfig c;
  c.family = f;
  c.seed = 3;
  switch (f) {
    case Family::Mlp:
    case Family::Svm: c.input_shape = {12}; c.hidden = {6, 4}; break;
    case Family::Lstm: c.input_shape = {5}; c.vocab = 9; c.embed = 4; c.lstm_units = 5; c.lstm_dense = 4; break;
    case Family::Cnn: c.input_shape = {4, 8}; c.conv_filters = {3, 4}; c.cnn_dense = 5; break;
  }
  return c;
}

std::vector<Sample> data_for(const ModelConfig& c, std::size_t n, std::uint64_t seed) {
  if (c.family == Family::Lstm) return types_set(n, c.input_shape[0], c.vocab, seed);
  return bytes_set(n, c.input_shape, seed);
}

const Family kFamilies[] = {Family::Mlp, Family::Lstm, Family::Cnn, Family::Svm};

}  // namespace

TEST_CASE("analytic gradients agree with central differences") {
  for (Family f : kFamilies) {
    INFO(family_name(f));
    const ModelConfig c = small(f);
    Model m(c);
    const auto data = data_for(c, 8, 11);
    std::vector<Tensor> grads;
    m.loss_and_gradient(data, &grads);
    REQUIRE(grads.size() == m.params().size());

    Rng pick(5);
    const double eps = 1e-4;
    for (std::size_t t = 0; t < m.params().size(); ++t) {
      REQUIRE(grads[t].shape == m.params()[t].shape);
      for (int k = 0; k < 5; ++k) {
        const std::size_t i = pick.index(m.params()[t].size());
        Model plus = m, minus = m;
        plus.params()[t].data[i] += eps;
        minus.params()[t].data[i] -= eps;
        const double numeric = (plus.loss_and_gradient(data, nullptr) - minus.loss_and_gradient(data, nullptr)) / (2 * eps);
        const double analytic = grads[t].data[i];
        const double rel = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-4});
        CHECK_MESSAGE(rel < 1e-3, "tensor ", t, " index ", i, ": ", analytic, " vs ", numeric);
      }
    }
  }
}

TEST_CASE("training lowers the loss and separates easy data") {
  for (Family f : kFamilies) {
    INFO(family_name(f));
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      ModelConfig c = small(f);
      c.seed = seed;
      c.epochs = 60;
      c.learning_rate = f == Family::Svm ? 0.5 : 0.2;
      const auto data = data_for(c, 40, 20 + seed);
      const Model m = train_model(c, data);
      REQUIRE(m.loss_curve.size() == c.epochs);
      CHECK(m.loss_curve.back() < m.loss_curve.front());
      if (f == Family::Svm)
        for (std::size_t i = 1; i < m.loss_curve.size(); ++i) CHECK(m.loss_curve[i] <= m.loss_curve[i - 1] + 1e-12);
    }
  }

  ModelConfig c = small(Family::Mlp);
  c.input_shape = {2};
  c.epochs = 200;
  c.learning_rate = 0.5;
  std::vector<Sample> toy;
  for (int i = 0; i < 20; ++i) {
    const int y = i % 2;
    toy.push_back(sample({y ? 200 + i : 10 + i, y ? 10 + i : 200 + i}, {2}, y));
  }
  const Model m = train_model(c, toy);
  std::size_t right = 0;
  for (const auto& s : toy) right += m.predict(s.x) == s.y;
  CHECK(right == toy.size());
}

TEST_CASE("svm separates an opposite pair and ignores margin scale") {
  ModelConfig c;
  c.family = Family::Svm;
  c.input_shape = {1};
  c.epochs = 100;
  c.learning_rate = 1.0;
  const std::vector<Sample> pair{sample({255}, {1}, 1), sample({0}, {1}, 0)};
  Model m = train_model(c, pair);
  CHECK(m.predict(pair[0].x) == 1);
  CHECK(m.predict(pair[1].x) == 0);

  const auto data = bytes_set(30, {12}, 4);
  ModelConfig c12 = small(Family::Svm);
  const Model base = train_model(c12, data);
  Model scaled = base;
  for (auto& t : scaled.params())
    for (auto& v : t.data) v *= 3.5;
  CHECK(base.predict_all(data) == scaled.predict_all(data));
}

TEST_CASE("zero weights score one half") {
  ModelConfig c = small(Family::Mlp);
  Model m(c);
  for (auto& t : m.params()) std::fill(t.data.begin(), t.data.end(), 0.0);
  const std::vector<std::int32_t> x(12, 77);
  CHECK(m.score(x) == 0.5);
  CHECK(m.predict(x) == 1);
}

TEST_CASE("batch prediction matches per-sample prediction") {
  for (Family f : kFamilies) {
    const ModelConfig c = small(f);
    const Model m(c);
    const auto data = data_for(c, 100, 6);
    const auto scores = m.scores(data);
    const auto labels = m.predict_all(data);
    for (std::size_t i = 0; i < data.size(); ++i) {
      CHECK(scores[i] == m.score(data[i].x));
      CHECK(labels[i] == m.predict(data[i].x));
    }
  }
}

TEST_CASE("training is deterministic and checkpoints are bit stable") {
  for (Family f : kFamilies) {
    ModelConfig c = small(f);
    c.epochs = 15;
    c.batch_size = 7;
    const auto data = data_for(c, 30, 8);
    const Model a = train_model(c, data);
    const Model b = train_model(c, data);
    const std::string text = checkpoint_to_string(a);
    CHECK(text == checkpoint_to_string(b));
    const Model back = checkpoint_from_string(text);
    CHECK(back.config() == a.config());
    CHECK(back.params() == a.params());
    CHECK(back.loss_curve == a.loss_curve);
    CHECK(checkpoint_to_string(back) == text);
  }
}

TEST_CASE("lstm predictions ignore session ids") {
  const ModelConfig c = small(Family::Lstm);
  const auto data = types_set(20, 5, 9, 9);
  const Model a = train_model(c, data);
  auto shifted = data;
  for (auto& s : shifted) s.session += 1000;
  const Model b = train_model(c, shifted);
  CHECK(a.params() == b.params());
  CHECK(a.scores(data) == b.scores(shifted));
}

TEST_CASE("errors") {
  ModelConfig c = small(Family::Mlp);
  c.learning_rate = 1e308;
  c.epochs = 50;
  try {
    train_model(c, bytes_set(10, {12}, 1));
    FAIL("diverged silently");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteLoss);
  }

  const Model m(small(Family::Mlp));
  const std::vector<std::int32_t> wrong(11, 0);
  CHECK_THROWS_AS(m.score(wrong), Error);

  ModelConfig bad = small(Family::Cnn);
  bad.kernel = 2;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = small(Family::Lstm);
  bad.vocab = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = small(Family::Mlp);
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(parse_family("transformer"), Error);

  for (Family f : kFamilies) CHECK(ModelConfig::from_json(small(f).to_json()) == small(f));
}
