#include "obsdn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "obsdn/error.hpp"
#include "obsdn/rng.hpp"

namespace obsdn {
namespace {

double evaluate(const GraphBuilder& build, const Tensor& value) {
  Graph g;
  const NodeId leaf = g.leaf(value);
  return g.value(build(g, leaf))[0];
}

}  // namespace

double gradcheck(const GraphBuilder& build, const Tensor& leaf_value, const GradcheckOptions& opts) {
  if (!(opts.eps > 0.0)) throw ValueError("gradcheck: eps must be positive");

  Graph g;
  const NodeId leaf = g.leaf(leaf_value);
  const NodeId out = build(g, leaf);
  const NodeId wrt[] = {leaf};
  const Tensor analytic = g.grad(out, wrt).front();

  std::vector<std::size_t> coords(leaf_value.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (opts.max_coords > 0 && opts.max_coords < coords.size()) {
    Rng rng(opts.seed);
    for (std::size_t i = 0; i < opts.max_coords; ++i) std::swap(coords[i], coords[i + rng.below(coords.size() - i)]);
    coords.resize(opts.max_coords);
  }

  double worst = 0.0;
  Tensor probe = leaf_value;
  for (auto i : coords) {
    const double orig = probe[i];
    probe[i] = orig + opts.eps;
    const double up = evaluate(build, probe);
    probe[i] = orig - opts.eps;
    const double down = evaluate(build, probe);
    probe[i] = orig;
    const double numeric = (up - down) / (2.0 * opts.eps);
    const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace obsdn
