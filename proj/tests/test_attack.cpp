#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "obsdn/attack.hpp"
#include "obsdn/error.hpp"
#include "obsdn/gradcheck.hpp"
#include "obsdn/projection.hpp"

using namespace obsdn;
using obsdn::testing::random_tensor;

namespace {

struct Sample {
  Tensor x;
  Tensor y;
};

Sample make_sample(std::uint64_t seed, std::size_t h = 12, std::size_t w = 12) {
  Rng rng(seed);
  Sample s{random_tensor(Shape{1, h, w}, rng, 0.2, 0.8), {}};
  s.y = s.x;
  for (auto& v : s.y.data()) v = std::clamp(v + 0.1 * rng.normal(), 0.0, 1.0);
  return s;
}

const ModelParams& small_model() {
  static const ModelParams p = init_model(ArchConfig{3, 6, 3, 1, 1, true}, 77);
  return p;
}

}  // namespace

TEST_CASE("zero budget yields zero perturbation and a flat trace") {
  const auto s = make_sample(1);
  AttackConfig cfg;
  cfg.rho = 0.0;
  const auto r = obsatk(small_model(), s.x, s.y, cfg);
  CHECK(max_abs(r.delta) == 0.0);
  CHECK(max_abs(r.pre_clip_delta) == 0.0);
  REQUIRE(r.objective_trace.size() == cfg.iters);
  const double base = adv_objective(small_model(), s.y, Tensor(s.y.shape()), s.x);
  for (double v : r.objective_trace) CHECK(v == base);
}

TEST_CASE("attack output satisfies the budget, zero-mean and box constraints") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = make_sample(seed, 8 + seed % 5, 9 + seed % 3);
    const std::size_t m = s.x.size();
    AttackConfig cfg;
    cfg.rho = (1.0 + seed % 7) / 255.0 * std::sqrt(static_cast<double>(m));
    cfg.iters = 1 + seed % 6;
    if (seed % 2) cfg.step.kind = StepKind::raw, cfg.step.eta = 0.01;
    CAPTURE(seed);
    const auto r = obsatk(small_model(), s.x, s.y, cfg);
    const Tensor& d = r.pre_clip_delta;
    CHECK(std::abs(mean(d)) <= projection_tol::mean * std::max(1.0, max_abs(d)));
    CHECK(l2_norm(d) <= cfg.rho * (1.0 + projection_tol::radius));
    const Tensor y_adv = s.y + r.delta;
    for (double v : y_adv.data()) CHECK((v >= 0.0 && v <= 1.0));
    CHECK(l2_norm(r.delta) <= l2_norm(d) + 1e-12);
    CHECK(r.objective_trace.size() == cfg.iters);
    const Tensor expected = clip(s.y + d, 0.0, 1.0) - s.y;
    CHECK(obsdn::testing::bitwise_equal(r.delta, expected));
  }
}

TEST_CASE("attack increases the objective over the clean observation") {
  int ascents = 0;
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const auto s = make_sample(seed);
    AttackConfig cfg;
    cfg.rho = 5.0 / 255.0 * std::sqrt(static_cast<double>(s.x.size()));
    const auto r = obsatk(small_model(), s.x, s.y, cfg);
    const double base = adv_objective(small_model(), s.y, Tensor(s.y.shape()), s.x);
    if (adv_objective(small_model(), s.y, r.delta, s.x) >= base) ++ascents;
  }
  CHECK(ascents == 10);
}

TEST_CASE("gradcheck of the adversarial objective") {
  const auto s = make_sample(9, 8, 8);
  Rng rng(5);
  const Tensor delta = random_tensor(s.y.shape(), rng, -0.02, 0.02);
  const GraphBuilder f = [&](Graph& g, NodeId leaf) { return adv_objective(g, small_model(), s.y, leaf, s.x); };
  CHECK(gradcheck(f, delta) < 1e-5);

  Graph g;
  const auto leaf = g.leaf(delta);
  CHECK(g.value(adv_objective(g, small_model(), s.y, leaf, s.x))[0] ==
        doctest::Approx(adv_objective(small_model(), s.y, delta, s.x)).epsilon(1e-14));
}

TEST_CASE("attack is deterministic") {
  const auto s = make_sample(3);
  AttackConfig cfg;
  cfg.rho = 0.3;
  const auto a = obsatk(small_model(), s.x, s.y, cfg);
  const auto b = obsatk(small_model(), s.x, s.y, cfg);
  CHECK(obsdn::testing::bitwise_equal(a.delta, b.delta));
  CHECK(a.objective_trace == b.objective_trace);
}

TEST_CASE("step size defaults and validation") {
  AttackConfig cfg;
  cfg.rho = 1.0;
  cfg.iters = 4;
  CHECK(cfg.step_size() == doctest::Approx(0.5));
  cfg.step.eta = 0.1;
  CHECK(cfg.step_size() == 0.1);
  cfg.iters = 0;
  CHECK_THROWS_AS(cfg.validate(), ValueError);
  cfg = {};
  cfg.rho = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ValueError);
  cfg = {};
  cfg.p_min = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ValueError);
}

TEST_CASE("observation out of range is rejected") {
  auto s = make_sample(4);
  s.y[0] = 1.5;
  AttackConfig cfg;
  cfg.rho = 0.1;
  CHECK_THROWS_AS(obsatk(small_model(), s.x, s.y, cfg), ValueError);
  s.y[0] = 0.5;
  CHECK_THROWS_AS(obsatk(small_model(), Tensor(Shape{1, 3, 3}), s.y, cfg), ShapeError);
}

TEST_CASE("budget split") {
  CHECK(budget_split(15.0 / 255.0, 5.0 / 255.0) == doctest::Approx(10.0 / 255.0).epsilon(1e-14));
  CHECK(budget_split(15.0 / 255.0, 0.0) == 15.0 / 255.0);
  CHECK(budget_split(15.0 / 255.0, 15.0 / 255.0) == 0.0);
  CHECK_THROWS_AS(budget_split(15.0 / 255.0, 16.0 / 255.0), ValueError);
  CHECK_THROWS_AS(budget_split(-0.1, 0.0), ValueError);
}
