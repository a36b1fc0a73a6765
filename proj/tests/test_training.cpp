#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "obsdn/corpus.hpp"
#include "obsdn/error.hpp"
#include "obsdn/gradcheck.hpp"
#include "obsdn/training.hpp"

using namespace obsdn;
using obsdn::testing::bitwise_equal;

namespace {

std::vector<TrainPair> random_batch(std::uint64_t seed, std::size_t n, std::size_t side = 10) {
  Corpus c = synth_corpus(n, side, side, seed);
  return make_pairs(c, 25.0 / 255.0, seed + 1);
}

const ModelParams& model() {
  static const ModelParams p = init_model(ArchConfig{3, 4, 3, 1, 1, true}, 31);
  return p;
}

// depth 2, width 1, 1x1 kernels, no skip; weights 1 and biases 0 give f(y) = relu(y).
ModelParams identity_on_positive() {
  ModelParams p = zero_model(ArchConfig{2, 1, 1, 1, 1, false});
  for (auto& l : p.layers) l.kernel[0] = 1.0;
  return p;
}

}  // namespace

TEST_CASE("mode names round trip") {
  for (auto m : {TrainMode::nt, TrainMode::vat, TrainMode::hat}) CHECK(parse_mode(mode_name(m)) == m);
  try {
    (void)parse_mode("gan");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "mode");
  }
}

TEST_CASE("hat with alpha 0 equals nt bitwise") {
  TrainAttack atk;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto batch = random_batch(1000 + i, 1 + i % 3, 6 + i % 4);
    CAPTURE(i);
    const auto a = loss_and_grad(model(), batch, LossSpec{TrainMode::hat, 0.0, atk});
    const auto b = loss_and_grad(model(), batch, LossSpec{TrainMode::nt, 0.0, atk});
    REQUIRE(std::bit_cast<std::uint64_t>(a.loss) == std::bit_cast<std::uint64_t>(b.loss));
    for (std::size_t k = 0; k < a.grads.size(); ++k) REQUIRE(bitwise_equal(a.grads[k], b.grads[k]));
  }
}

TEST_CASE("vat with zero budget equals nt") {
  TrainAttack atk;
  atk.level = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto batch = random_batch(2000 + i, 2);
    const auto a = loss_and_grad(model(), batch, LossSpec{TrainMode::vat, 0.0, atk});
    const auto b = loss_and_grad(model(), batch, LossSpec{TrainMode::nt, 0.0, atk});
    CHECK(a.loss == b.loss);
    for (std::size_t k = 0; k < a.grads.size(); ++k) CHECK(bitwise_equal(a.grads[k], b.grads[k]));
  }
}

TEST_CASE("hat loss on a one-pixel example") {
  const ModelParams p = identity_on_positive();
  const TrainPair pair{Tensor(Shape{1, 1, 1}, 0.4), Tensor(Shape{1, 1, 1}, 0.5)};
  const Tensor adv(Shape{1, 1, 1}, 0.6);
  Graph g;
  const auto nodes = add_param_leaves(g, p);
  const NodeId loss = pair_loss(g, p, nodes, pair, adv, LossSpec{TrainMode::hat, 1.0, {}});
  CHECK(g.value(loss)[0] == doctest::Approx(0.005).epsilon(1e-12));

  Graph g2;
  const auto n2 = add_param_leaves(g2, p);
  CHECK(g2.value(pair_loss(g2, p, n2, pair, adv, LossSpec{TrainMode::nt, 1.0, {}}))[0] ==
        doctest::Approx(0.005).epsilon(1e-12));
  Graph g3;
  const auto n3 = add_param_leaves(g3, p);
  CHECK(g3.value(pair_loss(g3, p, n3, pair, adv, LossSpec{TrainMode::vat, 1.0, {}}))[0] ==
        doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("hat is the convex combination of its two terms") {
  const auto batch = random_batch(7, 1, 12);
  TrainAttack atk;
  const auto terms = hat_terms(model(), batch[0], atk);
  CHECK(terms.consistency > 0.0);
  for (double a : {0.0, 0.5, 1.0, 2.0, 10.0}) {
    const double want = 0.5 * (terms.reconstruction / (1.0 + a) + a / (1.0 + a) * terms.consistency);
    CHECK(hat_loss(model(), batch, atk, a) == doctest::Approx(want).epsilon(1e-12));
  }
  CHECK(hat_loss(model(), batch, atk, 0.0) == doctest::Approx(0.5 * terms.reconstruction).epsilon(1e-14));
  CHECK_THROWS_AS(hat_loss(model(), batch, atk, -1.0), ValueError);
}

TEST_CASE("parameter gradients pass a finite-difference check") {
  const auto batch = random_batch(11, 1, 8);
  for (TrainMode mode : {TrainMode::nt, TrainMode::vat, TrainMode::hat}) {
    const LossSpec spec{mode, 1.0, {}};
    const Tensor adv = adversarial_observation(model(), batch[0], spec);
    const auto params = param_tensors(model());
    for (std::size_t k = 0; k < params.size(); ++k) {
      CAPTURE(mode_name(mode));
      CAPTURE(k);
      const GraphBuilder f = [&](Graph& g, NodeId leaf) {
        auto nodes = add_param_leaves(g, model());
        nodes.leaves[k] = leaf;
        ModelParams shadow = model();
        *param_tensors(shadow)[k] = g.value(leaf);
        return pair_loss(g, shadow, nodes, batch[0], adv, spec);
      };
      CHECK(gradcheck(f, *params[k], GradcheckOptions{1e-5, 20, k}) < 1e-4);
    }
  }
}

TEST_CASE("attacked loss is at least the clean loss") {
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto batch = random_batch(300 + i, 2, 12);
    TrainAttack atk;
    atk.iters = 3;
    CHECK(vat_loss(model(), batch, atk) >= nt_loss(model(), batch));
  }
}

TEST_CASE("threaded loss_and_grad matches serial bitwise") {
  const auto batch = random_batch(5, 5);
  const LossSpec spec{TrainMode::hat, 1.0, {}};
  const auto a = loss_and_grad(model(), batch, spec, 1);
  const auto b = loss_and_grad(model(), batch, spec, 3);
  CHECK(a.loss == b.loss);
  for (std::size_t k = 0; k < a.grads.size(); ++k) CHECK(bitwise_equal(a.grads[k], b.grads[k]));
}

TEST_CASE("empty batch and bad configs are rejected") {
  CHECK_THROWS_AS(nt_loss(model(), std::span<const TrainPair>{}), ValueError);
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.val_fraction = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.eps = -0.1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("training is reproducible and lowers the loss") {
  const Corpus corpus = synth_corpus(24, 12, 12, 8);
  TrainConfig cfg;
  cfg.arch = ArchConfig{3, 4, 3, 1, 1, true};
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.learning_rate = 3e-3;
  cfg.seed = 99;
  for (TrainMode mode : {TrainMode::nt, TrainMode::hat}) {
    cfg.mode = mode;
    cfg.threads = 1;
    const auto a = train(corpus, cfg);
    cfg.threads = 2;
    const auto b = train(corpus, cfg);
    CHECK(a.params == b.params);
    REQUIRE(a.log.rows.size() == 3);
    for (std::size_t e = 0; e < 3; ++e) {
      CHECK(a.log.rows[e].epoch == e + 1);
      CHECK(a.log.rows[e].loss == b.log.rows[e].loss);
      CHECK(a.log.rows[e].psnr_val == b.log.rows[e].psnr_val);
    }
    CHECK(a.log.rows.back().loss < a.log.rows.front().loss);
  }
  std::ostringstream os;
  TrainLog{}.write_csv(os);
  CHECK(os.str() == "epoch,loss,psnr_val,seconds\n");
}
