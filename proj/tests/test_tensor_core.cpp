#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "obsdn/error.hpp"
#include "obsdn/gradcheck.hpp"
#include "obsdn/graph.hpp"
#include "obsdn/kernels.hpp"
#include "obsdn/ops.hpp"

using namespace obsdn;
using obsdn::testing::random_tensor;

TEST_CASE("tensor construction enforces shape/data agreement") {
  CHECK_THROWS_AS(Tensor(Shape{2, 3}, std::vector<double>(5)), ShapeError);
  CHECK_THROWS_AS(Tensor(Shape{0, 3}), ShapeError);
  Tensor t(Shape{2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.all_finite());
}

TEST_CASE("conv2d of ones with a ones kernel matches direct summation") {
  const Tensor in(Shape{1, 3, 3}, 1.0);
  const Tensor k(Shape{1, 1, 3, 3}, 1.0);
  const Tensor out = ops::conv2d(in, k);
  REQUIRE(out.shape() == Shape{1, 3, 3});
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t x = 0; x < 3; ++x) CHECK(out.at(0, y, x) == obsdn::testing::conv_at(in, k, 0, y, x));
  CHECK(out.at(0, 1, 1) == 9.0);
  CHECK(out.at(0, 0, 0) == 4.0);
  CHECK(out.at(0, 0, 1) == 6.0);
}

TEST_CASE("conv2d matches the direct oracle on random multi-channel input") {
  Rng rng(11);
  const Tensor in = random_tensor(Shape{3, 7, 9}, rng);
  const Tensor k = random_tensor(Shape{5, 3, 3, 3}, rng);
  const Tensor out = ops::conv2d(in, k);
  double worst = 0.0;
  for (std::size_t co = 0; co < 5; ++co)
    for (std::size_t y = 0; y < 7; ++y)
      for (std::size_t x = 0; x < 9; ++x)
        worst = std::max(worst, std::abs(out.at(co, y, x) - obsdn::testing::conv_at(in, k, co, y, x)));
  CHECK(worst < 1e-13);
}

TEST_CASE("conv2d with a zero kernel is zero") {
  Rng rng(3);
  const Tensor in = random_tensor(Shape{2, 5, 5}, rng);
  const Tensor out = ops::conv2d(in, Tensor(Shape{4, 2, 3, 3}));
  for (double v : out.data()) CHECK(v == 0.0);
}

TEST_CASE("conv2d shape errors name the primitive and shapes") {
  const Tensor in(Shape{2, 4, 4});
  try {
    (void)ops::conv2d(in, Tensor(Shape{1, 3, 3, 3}));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("conv2d") != std::string::npos);
    CHECK(msg.find("[2x4x4]") != std::string::npos);
    CHECK(msg.find("[1x3x3x3]") != std::string::npos);
  }
  CHECK_THROWS_AS(ops::conv2d(in, Tensor(Shape{1, 2, 2, 2})), ShapeError);
  CHECK_THROWS_AS(ops::conv2d(Tensor(Shape{4, 4}), Tensor(Shape{1, 1, 3, 3})), ShapeError);
}

TEST_CASE("relu clamps negatives") {
  const Tensor out = ops::relu(Tensor::vector({-1.0, 0.0, 2.0}));
  CHECK(out == Tensor::vector({0.0, 0.0, 2.0}));
}

TEST_CASE("grad of squared norm is 2z") {
  Graph g;
  const auto z = g.leaf(Tensor::vector({1.0, -2.0, 3.0}));
  const auto out = g.sq_norm(z);
  const NodeId wrt[] = {z};
  CHECK(g.grad(out, wrt)[0] == Tensor::vector({2.0, -4.0, 6.0}));
}

TEST_CASE("grad of sum(relu(z)) uses subgradient 0 at negatives and at 0") {
  Graph g;
  const auto z = g.leaf(Tensor::vector({-1.0, 2.0, 0.0}));
  const auto out = g.sum(g.relu(z));
  const NodeId wrt[] = {z};
  CHECK(g.grad(out, wrt)[0] == Tensor::vector({0.0, 1.0, 0.0}));
}

TEST_CASE("grad rejects non-scalar outputs and non-leaf targets") {
  Graph g;
  const auto z = g.leaf(Tensor::vector({1.0, 2.0}));
  const auto r = g.relu(z);
  const auto s = g.sum(r);
  const NodeId leaves[] = {z};
  const NodeId inner[] = {r};
  CHECK_THROWS_AS(g.grad(r, leaves), GraphError);
  CHECK_THROWS_AS(g.grad(s, inner), GraphError);
}

TEST_CASE("leaves the output does not depend on get zero gradient") {
  Graph g;
  const auto a = g.leaf(Tensor::vector({1.0, 2.0}));
  const auto b = g.leaf(Tensor::vector({5.0, 6.0}));
  const auto out = g.sq_norm(a);
  const NodeId wrt[] = {a, b};
  const auto grads = g.grad(out, wrt);
  CHECK(grads[1] == Tensor::vector({0.0, 0.0}));
}

TEST_CASE("gradcheck on quadratics and constants") {
  const GraphBuilder quad = [](Graph& g, NodeId z) { return g.sq_norm(z); };
  CHECK(gradcheck(quad, Tensor::vector({1.0, 2.0, 3.0})) < 1e-8);

  const GraphBuilder constant = [](Graph& g, NodeId) { return g.sum(g.leaf(Tensor::vector({4.0, 5.0}))); };
  CHECK(gradcheck(constant, Tensor::vector({1.0, 2.0, 3.0})) < 1e-8);
}

namespace {
// Random 3-layer conv net (linear-ReLU-linear-ReLU-linear) ending in a sum of squares.
struct RandomNet {
  Tensor k1, b1, k2, b2, k3, b3;
  explicit RandomNet(Rng& rng, std::size_t c = 1, std::size_t width = 4) {
    k1 = random_tensor(Shape{width, c, 3, 3}, rng, -0.5, 0.5);
    b1 = random_tensor(Shape{width}, rng, -0.1, 0.1);
    k2 = random_tensor(Shape{width, width, 3, 3}, rng, -0.3, 0.3);
    b2 = random_tensor(Shape{width}, rng, -0.1, 0.1);
    k3 = random_tensor(Shape{c, width, 3, 3}, rng, -0.3, 0.3);
    b3 = random_tensor(Shape{c}, rng, -0.1, 0.1);
  }
  NodeId apply(Graph& g, NodeId x, const std::optional<std::pair<int, NodeId>>& swap = {}) const {
    const Tensor* ts[] = {&k1, &b1, &k2, &b2, &k3, &b3};
    NodeId n[6];
    for (int i = 0; i < 6; ++i) n[i] = (swap && swap->first == i) ? swap->second : g.leaf(*ts[i]);
    auto h = g.relu(g.conv2d(x, n[0], n[1]));
    h = g.relu(g.conv2d(h, n[2], n[3]));
    return g.conv2d(h, n[4], n[5]);
  }
};
}  // namespace

TEST_CASE("gradcheck passes on a 3-layer conv net, input and every parameter") {
  Rng rng(2024);
  const RandomNet net(rng);
  const Tensor input = random_tensor(Shape{1, 8, 8}, rng);
  const Tensor target = random_tensor(Shape{1, 8, 8}, rng);

  const GraphBuilder wrt_input = [&](Graph& g, NodeId x) {
    return g.sq_norm(g.sub(net.apply(g, x), g.leaf(target)));
  };
  CHECK(gradcheck(wrt_input, input) < 1e-5);

  const Tensor* params[] = {&net.k1, &net.b1, &net.k2, &net.b2, &net.k3, &net.b3};
  for (int i = 0; i < 6; ++i) {
    const GraphBuilder wrt_param = [&, i](Graph& g, NodeId leaf) {
      const NodeId x = g.leaf(input);
      return g.sq_norm(g.sub(net.apply(g, x, std::make_pair(i, leaf)), g.leaf(target)));
    };
    CAPTURE(i);
    CHECK(gradcheck(wrt_param, *params[i]) < 1e-5);
  }
}

TEST_CASE("gradcheck covers add, scale and sum compositions") {
  Rng rng(5);
  const Tensor other = random_tensor(Shape{6}, rng);
  const GraphBuilder f = [&](Graph& g, NodeId z) {
    const auto a = g.add(g.scale(z, -1.5), g.leaf(other));
    return g.add(g.sum(g.relu(a)), g.scale(g.sq_norm(g.sub(z, a)), 0.25));
  };
  CHECK(gradcheck(f, random_tensor(Shape{6}, rng)) < 1e-5);
}

TEST_CASE("grad is linear in the loss") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor z0 = random_tensor(Shape{1, 5, 5}, rng);
    const Tensor k = random_tensor(Shape{2, 1, 3, 3}, rng);
    const Tensor t = random_tensor(Shape{2, 5, 5}, rng);
    const double a = rng.uniform(-2, 2);
    const double b = rng.uniform(-2, 2);

    auto grad_of = [&](double wa, double wb) {
      Graph g;
      const auto z = g.leaf(z0);
      const auto h = g.conv2d(z, g.leaf(k));
      const auto l1 = g.sq_norm(g.sub(h, g.leaf(t)));
      const auto l2 = g.sum(g.relu(h));
      const auto out = g.add(g.scale(l1, wa), g.scale(l2, wb));
      const NodeId wrt[] = {z};
      return g.grad(out, wrt)[0];
    };
    const Tensor combined = grad_of(a, b);
    const Tensor separate = a * grad_of(1, 0) + b * grad_of(0, 1);
    CHECK(obsdn::testing::max_abs_diff(combined, separate) < 1e-12);
  }
}

TEST_CASE("conv2d backward-input is the adjoint of conv2d") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t cin = 1 + rng.below(4), cout = 1 + rng.below(4);
    const std::size_t h = 1 + rng.below(10), w = 1 + rng.below(13);
    const std::size_t k = rng.uniform() < 0.5 ? 3 : 5;
    const Tensor x = random_tensor(Shape{cin, h, w}, rng);
    const Tensor ker = random_tensor(Shape{cout, cin, k, k}, rng);
    const Tensor u = random_tensor(Shape{cout, h, w}, rng);
    const double lhs = dot(ops::conv2d(x, ker), u);
    const double rhs = dot(x, ops::conv2d_backward_input(u, ker));
    CHECK(std::abs(lhs - rhs) < 1e-9);
  }
}

TEST_CASE("graph is deterministic for a fixed input") {
  Rng rng(8);
  const RandomNet net(rng);
  const Tensor input = random_tensor(Shape{1, 6, 6}, rng);
  auto run = [&] {
    Graph g;
    const auto x = g.leaf(input);
    const auto out = g.sq_norm(net.apply(g, x));
    const NodeId wrt[] = {x};
    return g.grad(out, wrt)[0];
  };
  CHECK(obsdn::testing::bitwise_equal(run(), run()));
}
