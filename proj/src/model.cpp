#include "obsdn/model.hpp"

#include <cmath>
#include <string>

#include "obsdn/error.hpp"
#include "obsdn/ops.hpp"
#include "obsdn/rng.hpp"

namespace obsdn {

void ArchConfig::validate() const {
  if (depth < 2) throw ValueError("arch: depth must be >= 2, got " + std::to_string(depth));
  if (width < 1) throw ValueError("arch: width must be >= 1");
  if (kernel % 2 == 0) throw ValueError("arch: kernel size must be odd, got " + std::to_string(kernel));
  if (channels_in != 1 && channels_in != 3)
    throw ValueError("arch: channels must be 1 or 3, got " + std::to_string(channels_in));
  if (channels_in != channels_out) throw ValueError("arch: channels_in must equal channels_out");
}

Shape layer_kernel_shape(const ArchConfig& arch, std::size_t i) {
  const std::size_t cin = i == 0 ? arch.channels_in : arch.width;
  const std::size_t cout = i + 1 == arch.depth ? arch.channels_out : arch.width;
  return Shape{cout, cin, arch.kernel, arch.kernel};
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.kernel.size() + l.bias.size();
  return n;
}

void ModelParams::validate() const {
  arch.validate();
  if (layers.size() != arch.depth)
    throw ShapeError("model: " + std::to_string(layers.size()) + " layers for depth " + std::to_string(arch.depth));
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto want = layer_kernel_shape(arch, i);
    if (layers[i].kernel.shape() != want)
      throw ShapeError("model: layer " + std::to_string(i) + " kernel " + shape_str(layers[i].kernel.shape()) +
                       ", expected " + shape_str(want));
    if (layers[i].bias.shape() != Shape{want[0]})
      throw ShapeError("model: layer " + std::to_string(i) + " bias " + shape_str(layers[i].bias.shape()));
    if (!layers[i].kernel.all_finite() || !layers[i].bias.all_finite())
      throw NumericError("model: layer " + std::to_string(i) + " has non-finite parameters");
  }
}

ModelParams zero_model(const ArchConfig& arch) {
  arch.validate();
  ModelParams p{arch, {}};
  for (std::size_t i = 0; i < arch.depth; ++i) {
    auto shape = layer_kernel_shape(arch, i);
    p.layers.push_back(ConvLayer{Tensor(shape), Tensor(Shape{shape[0]})});
  }
  return p;
}

ModelParams init_model(const ArchConfig& arch, std::uint64_t seed) {
  ModelParams p = zero_model(arch);
  Rng rng(derive_seed(seed, seed_domain::init));
  for (auto& layer : p.layers) {
    const auto& s = layer.kernel.shape();
    const double fan_in = static_cast<double>(s[1] * s[2] * s[3]);
    const double stddev = std::sqrt(2.0 / fan_in);
    for (auto& w : layer.kernel.data()) w = stddev * rng.normal();
  }
  return p;
}

ParamNodes add_param_leaves(Graph& g, const ModelParams& params) {
  ParamNodes nodes;
  nodes.leaves.reserve(2 * params.layers.size());
  for (const auto& l : params.layers) {
    nodes.leaves.push_back(g.leaf(l.kernel));
    nodes.leaves.push_back(g.leaf(l.bias));
  }
  return nodes;
}

namespace {
void check_input(const ModelParams& params, const Tensor& y) {
  if (y.rank() != 3 || y.dim(0) != params.arch.channels_in)
    throw ShapeError("denoise: input " + shape_str(y.shape()) + " does not have " +
                     std::to_string(params.arch.channels_in) + " channels (C x H x W)");
}
}  // namespace

NodeId denoise(Graph& g, const ModelParams& params, const ParamNodes& nodes, NodeId y) {
  check_input(params, g.value(y));
  NodeId h = y;
  const std::size_t depth = params.layers.size();
  for (std::size_t i = 0; i < depth; ++i) {
    h = g.conv2d(h, nodes.leaves[2 * i], nodes.leaves[2 * i + 1]);
    if (i + 1 < depth) h = g.relu(h);
  }
  return params.arch.residual ? g.sub(y, h) : h;
}

Tensor denoise(const ModelParams& params, const Tensor& y) {
  check_input(params, y);
  Tensor h = y;
  const std::size_t depth = params.layers.size();
  for (std::size_t i = 0; i < depth; ++i) {
    h = ops::conv2d(h, params.layers[i].kernel, &params.layers[i].bias);
    if (i + 1 < depth) h = ops::relu(h);
  }
  return params.arch.residual ? y - h : h;
}

std::vector<Tensor*> param_tensors(ModelParams& params) {
  std::vector<Tensor*> out;
  for (auto& l : params.layers) {
    out.push_back(&l.kernel);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> param_tensors(const ModelParams& params) {
  std::vector<const Tensor*> out;
  for (const auto& l : params.layers) {
    out.push_back(&l.kernel);
    out.push_back(&l.bias);
  }
  return out;
}

}  // namespace obsdn
