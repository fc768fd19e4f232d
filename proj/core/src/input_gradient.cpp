// Symbolic backward pass w.r.t. a network input, emitted as graph nodes so
// the result stays differentiable w.r.t. parameters (double backprop for the
// R1 penalty).

#include <string>
#include <unordered_map>
#include <unordered_set>

#include "venngan/autodiff.hpp"

namespace venngan::ad {

namespace {

template <typename F>
NodePtr mask_of(const Node& at, F&& derivative) {
  Tensor mask(at.shape().rows, at.shape().cols);
  auto x = at.value().values();
  for (std::size_t k = 0; k < x.size(); ++k) mask.values()[k] = derivative(x[k]);
  return constant(std::move(mask));
}

[[noreturn]] void unsupported(const Node& node, const std::string& why) {
  throw UnsupportedOpError("input_gradient_graph: no input-gradient rule for " + std::string(op_name(node.op())) +
                           (why.empty() ? "" : " (" + why + ")"));
}

}  // namespace

NodePtr input_gradient_graph(const NodePtr& output, const NodePtr& input) {
  if (output->shape().cols != 1) {
    throw ShapeError("input_gradient_graph: output must have one column, got " + to_string(output->shape()));
  }
  if (output->shape().rows != input->shape().rows) {
    throw ShapeError("input_gradient_graph: output rows " + std::to_string(output->shape().rows) +
                     " differ from input rows " + std::to_string(input->shape().rows));
  }

  const auto order = topological_order(output);
  std::unordered_set<const Node*> depends;
  depends.insert(input.get());
  for (Node* node : order) {
    for (const auto& p : node->parents()) {
      if (depends.count(p.get())) {
        depends.insert(node);
        break;
      }
    }
  }
  if (!depends.count(output.get())) {
    return constant(Tensor::zeros(input->shape().rows, input->shape().cols));
  }

  std::unordered_map<const Node*, NodePtr> grads;
  auto contribute = [&](const NodePtr& target, NodePtr g) {
    if (!depends.count(target.get())) return;
    auto [it, inserted] = grads.try_emplace(target.get(), g);
    if (!inserted) it->second = add(it->second, g);
  };
  grads[output.get()] = constant(Tensor::ones(output->shape().rows, 1));

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Node* node = *it;
    if (node == input.get() || !depends.count(node)) continue;
    auto found = grads.find(node);
    if (found == grads.end()) continue;
    const NodePtr g = found->second;
    const auto& ps = node->parents();
    auto dep = [&](std::size_t k) { return depends.count(ps[k].get()) > 0; };

    switch (node->op()) {
      case Op::MatMul:
        if (dep(0)) contribute(ps[0], matmul(g, transpose(ps[1])));
        if (dep(1)) contribute(ps[1], matmul(transpose(ps[0]), g));
        break;
      case Op::Transpose:
        contribute(ps[0], transpose(g));
        break;
      case Op::Add:
        contribute(ps[0], g);
        contribute(ps[1], g);
        break;
      case Op::Sub:
        contribute(ps[0], g);
        if (dep(1)) contribute(ps[1], scale(g, -1.0));
        break;
      case Op::Scale:
        contribute(ps[0], scale(g, node->attributes().scalar));
        break;
      case Op::Mul:
        if (dep(0)) contribute(ps[0], mul(g, ps[1]));
        if (dep(1)) contribute(ps[1], mul(g, ps[0]));
        break;
      case Op::AddRow:
        if (dep(1)) unsupported(*node, "broadcast row depends on the input");
        contribute(ps[0], g);
        break;
      case Op::MulRow:
        if (dep(1)) unsupported(*node, "broadcast row depends on the input");
        contribute(ps[0], mul_row(g, ps[1]));
        break;
      case Op::LeakyRelu: {
        const double slope = node->attributes().scalar;
        contribute(ps[0], mul(g, mask_of(*ps[0], [slope](double x) { return x < 0.0 ? slope : 1.0; })));
        break;
      }
      case Op::Tanh: {
        // Second derivative dropped: the mask is held constant.
        contribute(ps[0], mul(g, mask_of(*node, [](double y) { return 1.0 - y * y; })));
        break;
      }
      case Op::Square:
        contribute(ps[0], mul(g, scale(ps[0], 2.0)));
        break;
      case Op::Clamp: {
        const double lo = node->attributes().scalar;
        const double hi = node->attributes().scalar2;
        contribute(ps[0], mul(g, mask_of(*ps[0], [lo, hi](double x) { return x < lo || x > hi ? 0.0 : 1.0; })));
        break;
      }
      case Op::ConcatRows: {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < ps.size(); ++k) {
          const std::size_t rows = ps[k]->shape().rows;
          if (dep(k)) contribute(ps[k], slice_rows(g, offset, rows));
          offset += rows;
        }
        break;
      }
      case Op::Leaf:
        break;
      case Op::LogSigmoid:
      case Op::ReduceMean:
      case Op::ReduceSum:
      case Op::SliceRows:
      case Op::SoftmaxCrossEntropy:
        unsupported(*node, "");
    }
  }

  auto result = grads.find(input.get());
  if (result == grads.end()) {
    return constant(Tensor::zeros(input->shape().rows, input->shape().cols));
  }
  return result->second;
}

}  // namespace venngan::ad
