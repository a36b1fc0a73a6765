#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "obsdn/tensor.hpp"

namespace obsdn {

struct NodeId {
  std::size_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

enum class Op { leaf, conv2d, relu, add, sub, scale, sum, sq_norm };

const char* op_name(Op op) noexcept;

// Define-by-run computation record. Nodes are appended in evaluation order, so
// every node's inputs precede it and the node list is already topologically
// sorted. Values are computed eagerly when a node is added.
class Graph {
 public:
  NodeId leaf(Tensor value);

  NodeId conv2d(NodeId input, NodeId kernel);
  NodeId conv2d(NodeId input, NodeId kernel, NodeId bias);
  NodeId relu(NodeId x);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  NodeId sum(NodeId a);
  NodeId sq_norm(NodeId a);

  const Tensor& value(NodeId id) const;
  Op op(NodeId id) const;
  bool is_leaf(NodeId id) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  // Reverse-mode gradient of the scalar `output` with respect to each leaf in
  // `wrt`. Only the subgraph between the requested leaves and the output is
  // differentiated. Leaves the output does not depend on get zero gradients.
  std::vector<Tensor> grad(NodeId output, std::span<const NodeId> wrt) const;

 private:
  struct Node {
    Op op;
    std::vector<std::size_t> inputs;
    double factor = 1.0;
    Tensor value;
  };

  const Node& node(NodeId id) const;
  NodeId push(Op op, std::vector<std::size_t> inputs, Tensor value, double factor = 1.0);

  std::vector<Node> nodes_;
};

}  // namespace obsdn
