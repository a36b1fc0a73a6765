#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "obsdn/graph.hpp"
#include "obsdn/tensor.hpp"

namespace obsdn {

struct ArchConfig {
  std::uint32_t depth = 5;
  std::uint32_t width = 16;
  std::uint32_t kernel = 3;
  std::uint32_t channels_in = 1;
  std::uint32_t channels_out = 1;
  bool residual = true;

  void validate() const;
  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

struct ConvLayer {
  Tensor kernel;  // C_out×C_in×k×k
  Tensor bias;    // [C_out]
  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

// conv+ReLU blocks followed by a final linear conv. With `residual` the net
// predicts the noise and the output is y - r(y).
struct ModelParams {
  ArchConfig arch;
  std::vector<ConvLayer> layers;

  std::size_t parameter_count() const;
  // Throws if layer shapes disagree with `arch` or any value is non-finite.
  void validate() const;
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Expected kernel shape of layer `i`.
Shape layer_kernel_shape(const ArchConfig& arch, std::size_t i);

// Kaiming fan-in Gaussian kernels, zero biases.
ModelParams init_model(const ArchConfig& arch, std::uint64_t seed);

ModelParams zero_model(const ArchConfig& arch);

// Graph leaves for a parameter set, in layer order: kernel_0, bias_0, kernel_1, ...
struct ParamNodes {
  std::vector<NodeId> leaves;
};

ParamNodes add_param_leaves(Graph& g, const ModelParams& params);

// Differentiable denoiser applied to graph node `y` (C×H×W).
NodeId denoise(Graph& g, const ModelParams& params, const ParamNodes& nodes, NodeId y);

// Forward-only evaluation; bit-identical to the graph path.
Tensor denoise(const ModelParams& params, const Tensor& y);

// Flattened view helpers used by the optimizer; ordering matches ParamNodes.
std::vector<Tensor*> param_tensors(ModelParams& params);
std::vector<const Tensor*> param_tensors(const ModelParams& params);

}  // namespace obsdn
