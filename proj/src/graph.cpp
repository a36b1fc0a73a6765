#include "obsdn/graph.hpp"

#include <string>

#include "obsdn/error.hpp"
#include "obsdn/kernels.hpp"
#include "obsdn/ops.hpp"

namespace obsdn {

const char* op_name(Op op) noexcept {
  switch (op) {
    case Op::leaf: return "leaf";
    case Op::conv2d: return "conv2d";
    case Op::relu: return "relu";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::scale: return "scale";
    case Op::sum: return "sum";
    case Op::sq_norm: return "sq_norm";
  }
  return "?";
}

const Graph::Node& Graph::node(NodeId id) const {
  if (id.index >= nodes_.size())
    throw GraphError("graph: node " + std::to_string(id.index) + " does not exist (graph has " +
                     std::to_string(nodes_.size()) + " nodes)");
  return nodes_[id.index];
}

NodeId Graph::push(Op op, std::vector<std::size_t> inputs, Tensor value, double factor) {
  nodes_.push_back(Node{op, std::move(inputs), factor, std::move(value)});
  return NodeId{nodes_.size() - 1};
}

NodeId Graph::leaf(Tensor value) { return push(Op::leaf, {}, std::move(value)); }

NodeId Graph::conv2d(NodeId input, NodeId kernel) {
  auto out = ops::conv2d(node(input).value, node(kernel).value);
  return push(Op::conv2d, {input.index, kernel.index}, std::move(out));
}

NodeId Graph::conv2d(NodeId input, NodeId kernel, NodeId bias) {
  auto out = ops::conv2d(node(input).value, node(kernel).value, &node(bias).value);
  return push(Op::conv2d, {input.index, kernel.index, bias.index}, std::move(out));
}

NodeId Graph::relu(NodeId x) { return push(Op::relu, {x.index}, ops::relu(node(x).value)); }

NodeId Graph::add(NodeId a, NodeId b) {
  require_same_shape(node(a).value, node(b).value, "add");
  return push(Op::add, {a.index, b.index}, node(a).value + node(b).value);
}

NodeId Graph::sub(NodeId a, NodeId b) {
  require_same_shape(node(a).value, node(b).value, "sub");
  return push(Op::sub, {a.index, b.index}, node(a).value - node(b).value);
}

NodeId Graph::scale(NodeId a, double factor) {
  return push(Op::scale, {a.index}, factor * node(a).value, factor);
}

NodeId Graph::sum(NodeId a) { return push(Op::sum, {a.index}, Tensor::scalar(obsdn::sum(node(a).value))); }

NodeId Graph::sq_norm(NodeId a) {
  return push(Op::sq_norm, {a.index}, Tensor::scalar(squared_norm(node(a).value)));
}

const Tensor& Graph::value(NodeId id) const { return node(id).value; }
Op Graph::op(NodeId id) const { return node(id).op; }
bool Graph::is_leaf(NodeId id) const { return node(id).op == Op::leaf; }

std::vector<Tensor> Graph::grad(NodeId output, std::span<const NodeId> wrt) const {
  const Node& out = node(output);
  if (out.value.size() != 1)
    throw GraphError("grad: output node " + std::to_string(output.index) + " (" + op_name(out.op) +
                     ") is not scalar, shape " + shape_str(out.value.shape()));
  for (auto id : wrt)
    if (!is_leaf(id))
      throw GraphError("grad: node " + std::to_string(id.index) + " is " + op_name(node(id).op) +
                       ", not a leaf");

  // Nodes downstream of a requested leaf; everything else needs no adjoint.
  const std::size_t n = output.index + 1;
  std::vector<char> live(n, 0);
  for (auto id : wrt)
    if (id.index < n) live[id.index] = 1;
  for (std::size_t i = 0; i < n; ++i)
    for (auto in : nodes_[i].inputs)
      if (live[in]) live[i] = 1;

  std::vector<std::optional<Tensor>> adj(n);
  const auto& kt = kernels::active();
  const auto accumulate = [&](std::size_t target, const Tensor& g) {
    if (!live[target]) return;
    if (!adj[target])
      adj[target] = g;
    else
      *adj[target] += g;
  };
  const auto slot = [&](std::size_t target) -> Tensor& {
    if (!adj[target]) adj[target] = Tensor(nodes_[target].value.shape());
    return *adj[target];
  };

  if (live[output.index]) adj[output.index] = Tensor::scalar(1.0);

  for (std::size_t i = n; i-- > 0;) {
    if (!live[i] || !adj[i]) continue;
    const Node& nd = nodes_[i];
    const Tensor& g = *adj[i];
    switch (nd.op) {
      case Op::leaf:
        break;
      case Op::conv2d: {
        const auto in = nd.inputs[0];
        const auto ker = nd.inputs[1];
        if (live[in]) {
          Tensor& gi = slot(in);
          kernels::ConvDims d{nodes_[ker].value.dim(1), nodes_[ker].value.dim(0), g.dim(1), g.dim(2),
                              nodes_[ker].value.dim(2)};
          kt.conv2d_backward_input(d, g.ptr(), nodes_[ker].value.ptr(), gi.ptr());
        }
        const bool want_bias = nd.inputs.size() == 3 && live[nd.inputs[2]];
        if (live[ker] || want_bias) {
          Tensor gk(nodes_[ker].value.shape());
          Tensor gb(Shape{nodes_[ker].value.dim(0)});
          ops::conv2d_backward_params(g, nodes_[in].value, gk, want_bias ? &gb : nullptr);
          accumulate(ker, gk);
          if (want_bias) accumulate(nd.inputs[2], gb);
        }
        break;
      }
      case Op::relu: {
        const auto in = nd.inputs[0];
        Tensor& gi = slot(in);
        kt.relu_backward(g.size(), nodes_[in].value.ptr(), g.ptr(), gi.ptr());
        break;
      }
      case Op::add:
        accumulate(nd.inputs[0], g);
        accumulate(nd.inputs[1], g);
        break;
      case Op::sub:
        accumulate(nd.inputs[0], g);
        if (live[nd.inputs[1]]) accumulate(nd.inputs[1], -1.0 * g);
        break;
      case Op::scale:
        accumulate(nd.inputs[0], nd.factor * g);
        break;
      case Op::sum: {
        const auto in = nd.inputs[0];
        accumulate(in, Tensor(nodes_[in].value.shape(), g[0]));
        break;
      }
      case Op::sq_norm: {
        const auto in = nd.inputs[0];
        accumulate(in, (2.0 * g[0]) * nodes_[in].value);
        break;
      }
    }
  }

  std::vector<Tensor> result;
  result.reserve(wrt.size());
  for (auto id : wrt) {
    if (id.index < n && adj[id.index])
      result.push_back(*adj[id.index]);
    else
      result.emplace_back(nodes_[id.index].value.shape());
  }
  return result;
}

}  // namespace obsdn
