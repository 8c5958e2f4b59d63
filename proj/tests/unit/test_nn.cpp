#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "s2wef/error.hpp"
#include "s2wef/nn.hpp"
#include "support.hpp"

using namespace s2wef;
using namespace s2wef::nn;

namespace {

DatasetShard line_shard(const std::vector<double>& xs, const std::vector<std::size_t>& ys) {
  DatasetShard s;
  s.class_count = 2;
  for (double x : xs) s.features.push_back({x});
  s.labels = ys;
  return s;
}

std::vector<double*> params(ModelWeights& w) {
  std::vector<double*> out;
  for (auto& layer : w.layers) {
    for (double& v : layer.weight.values()) out.push_back(&v);
    for (double& b : layer.bias) out.push_back(&b);
  }
  return out;
}

std::vector<std::size_t> all_indices(const DatasetShard& s) {
  std::vector<std::size_t> idx(s.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

void check_gradient(ModelWeights w, const DatasetShard& shard) {
  const auto lg = loss_and_gradient(w, shard, all_indices(shard));
  ModelWeights g = lg.gradient;
  auto wp = params(w);
  auto gp = params(g);
  REQUIRE(wp.size() == gp.size());
  const double h = 1e-6;
  for (std::size_t i = 0; i < wp.size(); ++i) {
    const double saved = *wp[i];
    *wp[i] = saved + h;
    const double up = mean_loss(w, shard);
    *wp[i] = saved - h;
    const double down = mean_loss(w, shard);
    *wp[i] = saved;
    const double numeric = (up - down) / (2 * h);
    const double analytic = *gp[i];
    const double rel = std::abs(numeric - analytic) / std::max(1e-8, std::abs(numeric) + std::abs(analytic));
    CHECK(rel < 1e-5);
  }
}

}  // namespace

TEST_CASE("init_model is deterministic and shaped by the architecture" * doctest::test_suite("invariants")) {
  const std::vector<std::size_t> arch{4, 8, 2};
  const auto a = init_model(arch, 7);
  const auto b = init_model(arch, 7);
  CHECK(a == b);
  CHECK(a.digest() == b.digest());
  CHECK(a.penultimate().rows() == 8);
  CHECK(a.penultimate().cols() == 2);
  CHECK(a.input_dim() == 4);
  CHECK(a.class_count() == 2);
  CHECK(a.parameter_count() == 4 * 8 + 8 + 8 * 2 + 2);
  CHECK(a.architecture() == arch);
  CHECK(init_model(arch, 8) != a);

  for (const auto& layer : a.layers) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(layer.weight.rows()));
    for (double v : layer.weight.values()) CHECK(std::abs(v) <= limit);
    for (double v : layer.bias) CHECK(std::abs(v) <= limit);
  }
}

TEST_CASE("degenerate architectures are rejected") {
  const std::vector<std::size_t> one{4};
  CHECK_THROWS_AS(init_model(one, 1), ConfigError);
  CHECK_THROWS_AS(init_model(std::vector<std::size_t>{}, 1), ConfigError);
  CHECK_THROWS_AS(init_model(std::vector<std::size_t>{4, 0, 2}, 1), ConfigError);
}

TEST_CASE("analytic gradient matches central differences" * doctest::test_suite("invariants")) {
  std::mt19937_64 gen(3);
  SUBCASE("logistic model with one input") {
    const auto shard = line_shard({-1.5, -0.3, 0.2, 0.9, 1.7, -2.1}, {0, 1, 0, 1, 1, 0});
    check_gradient(testing::random_model(gen, {1, 2}), shard);
  }
  SUBCASE("one hidden layer") {
    const auto shard = testing::random_shard(gen, 12, 3, 3);
    check_gradient(testing::random_model(gen, {3, 4, 3}), shard);
  }
  SUBCASE("two hidden layers") {
    const auto shard = testing::random_shard(gen, 10, 2, 2);
    check_gradient(testing::random_model(gen, {2, 5, 3, 2}), shard);
  }
}

TEST_CASE("one SGD step equals a hand-written softmax step") {
  const std::vector<double> xs{-1.0, -0.5, 0.25, 0.75, 1.5, 2.0, -2.0, 0.1};
  const std::vector<std::size_t> ys{0, 0, 1, 1, 1, 1, 0, 0};
  const auto shard = line_shard(xs, ys);
  ModelWeights w = init_model(std::vector<std::size_t>{1, 2}, 5);
  w.layers[0].weight(0, 0) = 0.3;
  w.layers[0].weight(0, 1) = -0.2;
  w.layers[0].bias = {0.05, -0.1};

  const double lr = 0.1;
  TrainConfig cfg{lr, 0.0, xs.size(), 1};
  const auto result = local_train(w, shard, cfg, 99);

  double gw[2] = {0, 0};
  double gb[2] = {0, 0};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double z0 = 0.3 * xs[i] + 0.05;
    const double z1 = -0.2 * xs[i] - 0.1;
    const double p0 = 1.0 / (1.0 + std::exp(z1 - z0));
    const double p[2] = {p0, 1.0 - p0};
    for (int c = 0; c < 2; ++c) {
      const double r = p[c] - (ys[i] == static_cast<std::size_t>(c) ? 1.0 : 0.0);
      gw[c] += xs[i] * r / xs.size();
      gb[c] += r / xs.size();
    }
  }
  const auto& out = result.weights.layers[0];
  CHECK(out.weight(0, 0) == doctest::Approx(0.3 - lr * gw[0]).epsilon(1e-12));
  CHECK(out.weight(0, 1) == doctest::Approx(-0.2 - lr * gw[1]).epsilon(1e-12));
  CHECK(out.bias[0] == doctest::Approx(0.05 - lr * gb[0]).epsilon(1e-12));
  CHECK(out.bias[1] == doctest::Approx(-0.1 - lr * gb[1]).epsilon(1e-12));
}

TEST_CASE("momentum accumulates velocity across steps") {
  std::mt19937_64 gen(8);
  const auto shard = testing::random_shard(gen, 6, 2, 2);
  const auto w0 = testing::random_model(gen, {2, 3, 2});
  TrainConfig cfg{0.1, 0.9, shard.size(), 2};
  const auto result = local_train(w0, shard, cfg, 1);

  const auto idx = all_indices(shard);
  const auto g1 = loss_and_gradient(w0, shard, idx).gradient;
  const auto w1 = zip_with(w0, g1, [](double w, double g) { return w - 0.1 * g; });
  const auto g2 = loss_and_gradient(w1, shard, idx).gradient;
  const auto v2 = zip_with(g1, g2, [](double a, double b) { return 0.9 * a + b; });
  const auto w2 = zip_with(w1, v2, [](double w, double v) { return w - 0.1 * v; });
  auto a = result.weights;
  auto b = w2;
  auto pa = params(a);
  auto pb = params(b);
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i] == doctest::Approx(*pb[i]).epsilon(1e-12));
}

TEST_CASE("local_train snapshots" * doctest::test_suite("invariants")) {
  std::mt19937_64 gen(11);
  const auto shard = testing::random_shard(gen, 40, 3, 2);
  const auto w0 = init_model(std::vector<std::size_t>{3, 6, 2}, 4);

  SUBCASE("zero learning rate freezes every snapshot") {
    const auto r = local_train(w0, shard, TrainConfig{0.0, 0.0, 8, 4}, 1);
    REQUIRE(r.snapshots.size() == 5);
    for (const auto& s : r.snapshots) CHECK(s == w0.penultimate());
    CHECK(r.weights == w0);
  }
  SUBCASE("one iteration yields two snapshots") {
    const auto r = local_train(w0, shard, TrainConfig{0.1, 0.0, 8, 1}, 1);
    CHECK(r.snapshots.size() == 2);
    CHECK(r.snapshots.front() == w0.penultimate());
    CHECK(r.snapshots.back() == r.weights.penultimate());
  }
  SUBCASE("chain shape, finiteness and determinism") {
    const TrainConfig cfg{0.2, 0.5, 7, 6};
    const auto a = local_train(w0, shard, cfg, 21);
    const auto b = local_train(w0, shard, cfg, 21);
    CHECK(a.weights == b.weights);
    CHECK(a.snapshots == b.snapshots);
    CHECK(a.snapshots.size() == cfg.local_iterations + 1);
    for (const auto& s : a.snapshots) {
      CHECK(s.rows() == 6);
      CHECK(s.cols() == 2);
      for (double v : s.values()) CHECK(std::isfinite(v));
    }
    const auto c = local_train(w0, shard, cfg, 22);
    CHECK(c.weights != a.weights);
  }
}

TEST_CASE("a few steps on a tiny separable shard lower the loss") {
  DatasetShard s;
  s.class_count = 2;
  s.features = {{1.0, 0.8}, {0.9, 1.2}, {1.3, 1.0}, {0.7, 0.9},
                {-1.0, -0.7}, {-1.1, -1.2}, {-0.8, -1.0}, {-1.2, -0.9}};
  s.labels = {0, 0, 0, 0, 1, 1, 1, 1};
  const auto w0 = init_model(std::vector<std::size_t>{2, 4, 2}, 11);
  const auto r = local_train(w0, s, TrainConfig{0.5, 0.0, 8, 3}, 11);
  CHECK(mean_loss(r.weights, s) < mean_loss(w0, s));
}

TEST_CASE("shape and numeric errors") {
  std::mt19937_64 gen(2);
  const auto shard = testing::random_shard(gen, 5, 3, 2);
  const auto w = init_model(std::vector<std::size_t>{4, 3, 2}, 1);
  CHECK_THROWS_AS(local_train(w, shard, TrainConfig{}, 1), ShapeError);
  CHECK_THROWS_AS(forward(w, std::vector<double>{1.0}), ShapeError);

  auto huge = init_model(std::vector<std::size_t>{3, 3, 2}, 1);
  for (auto& layer : huge.layers) {
    for (double& v : layer.weight.values()) v = 1e308;
  }
  CHECK_THROWS_AS(local_train(huge, shard, TrainConfig{1e10, 0.0, 5, 2}, 1), NumericError);

  CHECK_THROWS_AS(TrainConfig({0.1, -1.0, 8, 1}).validate(), ConfigError);
  CHECK_THROWS_AS(TrainConfig({0.1, 0.0, 0, 1}).validate(), ConfigError);
  CHECK_THROWS_AS(TrainConfig({0.1, 0.0, 8, 0}).validate(), ConfigError);
}

TEST_CASE("evaluate_accuracy") {
  ModelWeights w = init_model(std::vector<std::size_t>{1, 2}, 1);
  w.layers[0].weight(0, 0) = 0.0;
  w.layers[0].weight(0, 1) = 0.0;
  w.layers[0].bias = {1.0, 0.0};

  CHECK(evaluate_accuracy(w, line_shard({-1, 0, 2}, {0, 0, 0})) == 1.0);
  CHECK(evaluate_accuracy(w, line_shard({-1, 0, 2}, {1, 1, 1})) == 0.0);

  // logits (x, -x): x = 1 picks class 0, x = -1 picks class 1.
  w.layers[0].weight(0, 0) = 1.0;
  w.layers[0].weight(0, 1) = -1.0;
  w.layers[0].bias = {0.0, 0.0};
  CHECK(evaluate_accuracy(w, line_shard({1.0, -1.0}, {0, 0})) == 0.5);
  CHECK(predict(w, std::vector<double>{0.0}) == 0);

  DatasetShard empty;
  empty.class_count = 2;
  CHECK_THROWS_AS(evaluate_accuracy(w, empty), ConfigError);
  CHECK_THROWS_AS(line_shard({1.0}, {2}).validate(), ConfigError);
}
