#include "obsdn/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "obsdn/attack.hpp"
#include "obsdn/corpus.hpp"
#include "obsdn/gradcheck.hpp"
#include "obsdn/projection.hpp"
#include "obsdn/rng.hpp"
#include "obsdn/training.hpp"

namespace obsdn::selftest {

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Tensor random_tensor(const Shape& shape, Rng& rng, double lo, double hi) {
  Tensor t(shape);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

Tensor random_feasible(std::size_t m, double rho, Rng& rng) {
  Tensor z(Shape{m});
  for (auto& v : z.data()) v = rng.normal();
  z = project_zero_mean(z);
  const double n = l2_norm(z);
  if (n > 0.0) z *= rho * std::pow(rng.uniform(), 1.0 / static_cast<double>(m)) / n;
  return z;
}

void add(Report& r, std::string name, double value, double limit) {
  r.checks.push_back(Check{std::move(name), value, limit, value < limit});
}

}  // namespace

Report projection_suite(const ProjectionSuiteOptions& opts) {
  const auto t0 = Clock::now();
  Rng rng(opts.seed);
  double max_dev = 0.0;
  double max_mean = 0.0;
  double max_excess = 0.0;
  double max_gap = 0.0;  // how much closer a sampled feasible point got, if ever
  for (std::size_t inst = 0; inst < opts.instances; ++inst) {
    const std::size_t m = opts.min_m + rng.below(opts.max_m - opts.min_m + 1);
    const double scale = std::pow(10.0, rng.uniform(-2.0, 1.0));
    Tensor d = random_tensor(Shape{m}, rng, -scale, scale);
    if (inst % 5 == 0) d += Tensor(Shape{m}, rng.uniform(-2.0, 2.0));
    const double rho = rng.uniform(0.0, 1.5) * l2_norm(d);

    const Tensor p = project_feasible(d, rho);
    const Tensor q = dykstra_project(d, rho, 1000000);
    for (std::size_t i = 0; i < m; ++i) max_dev = std::max(max_dev, std::abs(p[i] - q[i]));
    max_mean = std::max(max_mean, std::abs(mean(p)) / std::max(1.0, max_abs(p)));
    if (rho > 0.0) max_excess = std::max(max_excess, l2_norm(p) / rho - 1.0);
    else max_excess = std::max(max_excess, l2_norm(p));

    const double best = l2_norm(d - p);
    for (std::size_t k = 0; k < opts.feasible_samples; ++k)
      max_gap = std::max(max_gap, best - l2_norm(d - random_feasible(m, rho, rng)));
  }
  Report r;
  add(r, "two-step vs dykstra (inf norm)", max_dev, projection_tol::oracle);
  add(r, "zero-mean residual", max_mean, 1e-12);
  add(r, "norm excess over rho", max_excess, 1e-12);
  add(r, "closer feasible point found", max_gap, 1e-12);
  r.seconds = since(t0);
  return r;
}

Report gradient_suite(std::uint64_t seed) {
  const auto t0 = Clock::now();
  Rng rng(seed);
  Report r;
  const Tensor k1 = random_tensor(Shape{3, 2, 3, 3}, rng, -0.5, 0.5);
  const Tensor k2 = random_tensor(Shape{2, 3, 5, 5}, rng, -0.3, 0.3);
  const Tensor b1 = random_tensor(Shape{3}, rng, -0.2, 0.2);
  const Tensor z = random_tensor(Shape{2, 7, 6}, rng, -1.0, 1.0);
  const Tensor w = random_tensor(Shape{2, 7, 6}, rng, -1.0, 1.0);

  add(r, "sq_norm", gradcheck([](Graph& g, NodeId x) { return g.sq_norm(x); }, z), 1e-5);
  add(r, "sum", gradcheck([](Graph& g, NodeId x) { return g.sum(x); }, z), 1e-5);
  add(r, "scale",
      gradcheck([](Graph& g, NodeId x) { return g.sq_norm(g.scale(x, -1.7)); }, z), 1e-5);
  add(r, "add/sub",
      gradcheck([&](Graph& g, NodeId x) { return g.sq_norm(g.sub(g.add(x, g.leaf(w)), g.scale(x, 0.3))); }, z),
      1e-5);
  add(r, "relu",
      gradcheck([&](Graph& g, NodeId x) { return g.sum(g.relu(g.add(x, g.leaf(w)))); }, z), 1e-5);
  add(r, "conv2d wrt input",
      gradcheck([&](Graph& g, NodeId x) { return g.sq_norm(g.conv2d(x, g.leaf(k1), g.leaf(b1))); }, z), 1e-5);
  add(r, "conv2d wrt kernel",
      gradcheck([&](Graph& g, NodeId k) { return g.sq_norm(g.conv2d(g.leaf(z), k, g.leaf(b1))); }, k1), 1e-5);
  add(r, "conv2d wrt bias",
      gradcheck([&](Graph& g, NodeId b) { return g.sq_norm(g.conv2d(g.leaf(z), g.leaf(k1), b)); }, b1), 1e-5);
  add(r, "conv-relu-conv stack",
      gradcheck(
          [&](Graph& g, NodeId x) {
            const NodeId h = g.relu(g.conv2d(x, g.leaf(k1), g.leaf(b1)));
            return g.sq_norm(g.sub(g.conv2d(h, g.leaf(k2)), g.leaf(w)));
          },
          z),
      1e-5);

  const ModelParams params = init_model(ArchConfig{4, 6, 3, 1, 1, true}, seed);
  const Corpus c = synth_corpus(1, 10, 10, seed);
  const auto pairs = make_pairs(c, 25.0 / 255.0, seed);
  const TrainPair& pair = pairs[0];
  const Tensor delta = random_tensor(pair.noisy.shape(), rng, -0.02, 0.02);
  add(r, "adversarial objective wrt delta",
      gradcheck([&](Graph& g, NodeId d) { return adv_objective(g, params, pair.noisy, d, pair.clean); }, delta), 1e-4);

  for (TrainMode mode : {TrainMode::nt, TrainMode::vat, TrainMode::hat}) {
    const LossSpec spec{mode, 1.0, {}};
    const Tensor adv = adversarial_observation(params, pair, spec);
    const auto tensors = param_tensors(params);
    double worst = 0.0;
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      const GraphBuilder f = [&](Graph& g, NodeId leaf) {
        auto nodes = add_param_leaves(g, params);
        nodes.leaves[k] = leaf;
        return pair_loss(g, params, nodes, pair, adv, spec);
      };
      worst = std::max(worst, gradcheck(f, *tensors[k], GradcheckOptions{1e-5, 16, seed + k}));
    }
    add(r, std::string(mode_name(mode)) + " loss wrt parameters", worst, 1e-4);
  }
  r.seconds = since(t0);
  return r;
}

}  // namespace obsdn::selftest
