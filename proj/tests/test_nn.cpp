#include "catch_amalgamated.hpp"

#include "support/oracles.hpp"
#include "vlv/nn.hpp"

using namespace vlv;

namespace {

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-4, std::abs(a), std::abs(b)});
}

// Worst relative error between analytic and central-difference gradients for
// a loss over the given input.
template <typename LossFn, typename GradFn>
double max_grad_error(Mlp& net, LossFn&& loss, GradFn&& analytic_grads, double h = 1e-5) {
  const Grads grads = analytic_grads(net);
  double worst = 0.0;
  for (size_t l = 0; l < net.weights.size(); ++l) {
    for (size_t i = 0; i < net.weights[l].size(); ++i) {
      const double fd = oracles::central_difference(net, &net.weights[l][i], h, loss);
      worst = std::max(worst, rel_err(grads.weights[l][i], fd));
    }
    for (size_t i = 0; i < net.biases[l].size(); ++i) {
      const double fd = oracles::central_difference(net, &net.biases[l][i], h, loss);
      worst = std::max(worst, rel_err(grads.biases[l][i], fd));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("forward pass basics") {
  SECTION("zero weights give zero output") {
    Mlp net({4, 3, 2}, 1);
    for (auto& w : net.weights) std::fill(w.begin(), w.end(), 0.0);
    for (auto& b : net.biases) std::fill(b.begin(), b.end(), 0.0);
    for (double v : forward(net, {1.0, -2.0, 3.0, 0.5})) CHECK(v == 0.0);
  }
  SECTION("identity single layer echoes the input") {
    Mlp net({3, 3}, 1);
    for (auto& w : net.weights[0]) w = 0.0;
    for (int i = 0; i < 3; ++i) net.weights[0][static_cast<size_t>(i) * 3 + i] = 1.0;
    std::fill(net.biases[0].begin(), net.biases[0].end(), 0.0);
    const std::vector<double> x{0.3, -1.2, 2.0};
    CHECK(forward(net, x) == x);
  }
  SECTION("random net matches the naive reference") {
    Mlp net({6, 9, 5, 4}, 42);
    Rng rng(7);
    std::vector<double> x(6);
    for (auto& v : x) v = rng.uniform(-1, 1);
    const auto got = forward(net, x);
    const auto want = oracles::naive_forward(net, x);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i)
      CHECK(got[i] == Catch::Approx(want[i]).epsilon(1e-12));
  }
  SECTION("input size mismatch is rejected") {
    Mlp net({3, 2}, 1);
    CHECK_THROWS_AS(forward(net, {1.0, 2.0}), ShapeMismatch);
  }
}

TEST_CASE("gradients match central finite differences on small nets") {
  Rng rng(5);
  SECTION("mse loss") {
    Mlp net({7, 6, 4}, 11);
    std::vector<double> x(7), target(4);
    for (auto& v : x) v = rng.uniform(-1, 1);
    for (auto& v : target) v = rng.uniform(-1, 1);
    auto loss = [&](const Mlp& m) { return mse(forward(m, x), target).loss; };
    auto grads = [&](const Mlp& m) {
      return backward(m, x, mse(forward(m, x), target).grad);
    };
    CHECK(max_grad_error(net, loss, grads) <= 1e-4);
  }
  SECTION("cross entropy loss") {
    Mlp net({5, 8, 3}, 12);
    std::vector<double> x(5);
    for (auto& v : x) v = rng.uniform(-1, 1);
    auto loss = [&](const Mlp& m) { return cross_entropy(forward(m, x), 1).loss; };
    auto grads = [&](const Mlp& m) {
      return backward(m, x, cross_entropy(forward(m, x), 1).grad);
    };
    CHECK(max_grad_error(net, loss, grads) <= 1e-4);
  }
  SECTION("zero loss gradient gives zero parameter gradients") {
    Mlp net({4, 5, 3}, 13);
    const Grads grads = backward(net, {0.1, 0.2, 0.3, 0.4}, {0.0, 0.0, 0.0});
    for (const auto& layer : grads.weights)
      for (double g : layer) CHECK(g == 0.0);
  }
}

TEST_CASE("linear net with mse recovers the closed-form gradient") {
  Mlp net({3, 2}, 21);
  const std::vector<double> x{0.5, -1.0, 2.0};
  const std::vector<double> y{0.2, 0.7};
  const auto pred = forward(net, x);
  const auto loss = mse(pred, y);
  const Grads grads = backward(net, x, loss.grad);
  for (int r = 0; r < 2; ++r) {
    for (int k = 0; k < 3; ++k) {
      const double want = 2.0 / 2.0 * (pred[static_cast<size_t>(r)] - y[static_cast<size_t>(r)]) *
                          x[static_cast<size_t>(k)];
      CHECK(grads.weights[0][static_cast<size_t>(r) * 3 + k] ==
            Catch::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("adam update behaviour") {
  SECTION("first step moves by about lr in the gradient sign direction") {
    Mlp net({1, 1}, 3);
    net.weights[0][0] = 0.5;
    Grads g;
    g.init_like(net);
    g.weights[0][0] = 0.7;
    g.biases[0][0] = -0.2;
    AdamState adam;
    const double w0 = net.weights[0][0], b0 = net.biases[0][0];
    adam_step(net, g, adam);
    CHECK(net.weights[0][0] == Catch::Approx(w0 - adam.lr).epsilon(1e-6));
    CHECK(net.biases[0][0] == Catch::Approx(b0 + adam.lr).epsilon(1e-6));
  }
  SECTION("zero gradients leave parameters unchanged") {
    Mlp net({2, 2}, 4);
    const Mlp before = net;
    Grads g;
    g.init_like(net);
    AdamState adam;
    adam_step(net, g, adam);
    CHECK(net == before);
  }
  SECTION("descends a 1-d quadratic monotonically") {
    Mlp net({1, 1}, 5);
    net.weights[0][0] = 1.0;
    net.biases[0][0] = 0.0;
    AdamState adam;
    adam.lr = 1e-3;
    double prev = kInf;
    for (int i = 0; i < 100; ++i) {
      const auto out = forward(net, {1.0});
      const auto loss = mse(out, {0.0});
      CHECK(loss.loss < prev);
      prev = loss.loss;
      adam_step(net, backward(net, {1.0}, loss.grad), adam);
    }
  }
}

TEST_CASE("loss values") {
  CHECK(mse({0.3, -0.4}, {0.3, -0.4}).loss == 0.0);
  CHECK(cross_entropy({0.7, 0.7, 0.7}, 2).loss == Catch::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK_THROWS_AS(mse({0.1}, {0.1, 0.2}), ShapeMismatch);
  CHECK_THROWS_AS(cross_entropy({0.1, 0.2}, 5), ShapeMismatch);
}

TEST_CASE("model files round-trip exactly") {
  Mlp net({5, 7, 3}, 77);
  const std::string text = model_to_string(net, 0x1234u);
  const LoadedModel loaded = model_from_string(text);
  CHECK(loaded.net == net);
  CHECK(loaded.cfg_hash == 0x1234u);
  CHECK(model_to_string(loaded.net, loaded.cfg_hash) == text);
  CHECK_THROWS_AS(model_from_string("VLVMODEL 2\n1 1\n0\n0\n"), FormatError);
  CHECK_THROWS_AS(model_from_string("VLVMODEL 1\n2 2\n0 0 0\n0 0\n"), FormatError);
}
