#pragma once

// Minimal reverse-mode automatic differentiation over dense 2-D tensors.
//
// A graph is built fresh for every training step. Parameters are persistent
// leaf nodes; each step's graph references them and gradients accumulate in
// the leaves until zero_grad() is called. The graph is acyclic by
// construction: a node only ever points at nodes created before it.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "venngan/tensor.hpp"

namespace venngan::ad {

enum class Op {
  Leaf,
  MatMul,
  Transpose,
  Add,
  Sub,
  Scale,
  Mul,
  AddRow,
  MulRow,
  LeakyRelu,
  Tanh,
  LogSigmoid,
  Square,
  Clamp,
  ReduceMean,
  ReduceSum,
  ConcatRows,
  SliceRows,
  SoftmaxCrossEntropy,
};

std::string_view op_name(Op op);

/// Raised by input_gradient_graph for ops that have no input-gradient rule.
class UnsupportedOpError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class Node;
using NodePtr = std::shared_ptr<Node>;

class Node {
 public:
  /// Per-op constants: leaky slope, scale factor, clamp bounds, slice offset,
  /// class targets, or a cached forward intermediate.
  struct Attributes {
    double scalar = 0.0;
    double scalar2 = 0.0;
    std::size_t offset = 0;
    std::vector<std::size_t> targets;
    std::optional<Tensor> cache;
  };

  Node(Op op, Tensor value, std::vector<NodePtr> parents, Attributes attrs, bool requires_grad);

  Op op() const { return op_; }
  const Tensor& value() const { return value_; }
  Shape shape() const { return value_.shape(); }
  const std::vector<NodePtr>& parents() const { return parents_; }
  const Attributes& attributes() const { return attrs_; }
  bool requires_grad() const { return requires_grad_; }
  bool is_leaf() const { return op_ == Op::Leaf; }

  const std::optional<Tensor>& grad() const { return grad_; }
  void zero_grad() { grad_.reset(); }
  void accumulate_grad(const Tensor& g);

  /// Only leaves may be mutated (optimizer updates, checkpoint restore).
  Tensor& mutable_value();

 private:
  Op op_;
  Tensor value_;
  std::vector<NodePtr> parents_;
  Attributes attrs_;
  bool requires_grad_;
  std::optional<Tensor> grad_;
};

/// Leaf that collects gradients.
NodePtr parameter(Tensor value);
/// Leaf that never collects gradients (data, masks).
NodePtr constant(Tensor value);

NodePtr matmul(const NodePtr& a, const NodePtr& b);
NodePtr transpose(const NodePtr& a);
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr scale(const NodePtr& a, double factor);
NodePtr mul(const NodePtr& a, const NodePtr& b);
/// a + row, with the 1 x cols row broadcast over every row of a.
NodePtr add_row(const NodePtr& a, const NodePtr& row);
/// a * row elementwise, with the 1 x cols row broadcast over every row of a.
NodePtr mul_row(const NodePtr& a, const NodePtr& row);

inline constexpr double kLeakySlope = 0.2;
/// Derivative is `slope` for x < 0 and 1 for x >= 0.
NodePtr leaky_relu(const NodePtr& a, double slope = kLeakySlope);
NodePtr tanh(const NodePtr& a);
/// log(sigmoid(x)), evaluated without overflow for large |x|.
NodePtr log_sigmoid(const NodePtr& a);
NodePtr square(const NodePtr& a);
/// Elementwise clamp; derivative is 1 inside [lo, hi] and 0 outside.
NodePtr clamp(const NodePtr& a, double lo, double hi);
NodePtr reduce_mean(const NodePtr& a);
NodePtr reduce_sum(const NodePtr& a);
NodePtr concat_rows(std::span<const NodePtr> parts);
NodePtr slice_rows(const NodePtr& a, std::size_t begin, std::size_t count);

/// Mean over rows of -log softmax(logits)[target], stabilized by subtracting
/// the row maximum.
NodePtr softmax_cross_entropy(const NodePtr& logits, std::span<const std::size_t> targets);

/// Populates grad() on every reachable leaf that requires grad. Calling twice
/// without zero_grad() accumulates.
void backward(const NodePtr& root);

/// Builds a node holding d(output[r]) / d(input[r, :]) for every row r, out
/// of differentiable primitive ops, so that a penalty on it can itself be
/// backpropagated to parameters. Activation derivatives enter as constant
/// masks. `output` must have a single column.
NodePtr input_gradient_graph(const NodePtr& output, const NodePtr& input);

/// Nodes reachable from root, parents before children.
std::vector<Node*> topological_order(const NodePtr& root);

}  // namespace venngan::ad
