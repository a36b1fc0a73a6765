#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include "obsdn/graph.hpp"

namespace obsdn {

// Builds a scalar-output graph around a leaf holding the probed tensor.
using GraphBuilder = std::function<NodeId(Graph&, NodeId leaf)>;

struct GradcheckOptions {
  double eps = 1e-5;
  // 0 checks every coordinate; otherwise a seeded sample of this many.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

// Max over checked coordinates of |analytic - central difference| / max(1, |analytic|).
double gradcheck(const GraphBuilder& build, const Tensor& leaf_value, const GradcheckOptions& opts = {});

}  // namespace obsdn
