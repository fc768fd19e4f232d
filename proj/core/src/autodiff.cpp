#include "venngan/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace venngan::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap view(const Tensor& t) { return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())); }
MutMap view(Tensor& t) { return MutMap(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())); }

bool any_requires_grad(const std::vector<NodePtr>& parents) {
  return std::any_of(parents.begin(), parents.end(), [](const NodePtr& p) { return p->requires_grad(); });
}

void require_same_shape(Op op, const NodePtr& a, const NodePtr& b) {
  if (a->shape() != b->shape()) {
    throw ShapeError(std::string(op_name(op)) + ": shapes " + to_string(a->shape()) + " and " +
                     to_string(b->shape()) + " differ");
  }
}

void require_row_vector(Op op, const NodePtr& a, const NodePtr& row) {
  if (row->shape() != Shape{1, a->shape().cols}) {
    throw ShapeError(std::string(op_name(op)) + ": expected row of shape (1," +
                     std::to_string(a->shape().cols) + "), got " + to_string(row->shape()));
  }
}

NodePtr make_node(Op op, Tensor value, std::vector<NodePtr> parents, Node::Attributes attrs = {}) {
  value.require_finite(std::string(op_name(op)));
  const bool rg = any_requires_grad(parents);
  return std::make_shared<Node>(op, std::move(value), std::move(parents), std::move(attrs), rg);
}

template <typename F>
Tensor map_values(const Tensor& in, F&& f) {
  Tensor out(in.rows(), in.cols());
  auto src = in.values();
  auto dst = out.values();
  for (std::size_t k = 0; k < src.size(); ++k) dst[k] = f(src[k]);
  return out;
}

double log_sigmoid_value(double x) { return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x))); }

// sigmoid(-x), the derivative of log_sigmoid.
double sigmoid_neg(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

Tensor column_sums(const Tensor& g) {
  Tensor out(1, g.cols());
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < g.cols(); ++c) out(0, c) += g(r, c);
  }
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.size(); ++k) out.values()[k] = a.values()[k] * b.values()[k];
  return out;
}

}  // namespace

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::MatMul: return "matmul";
    case Op::Transpose: return "transpose";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Scale: return "scale";
    case Op::Mul: return "mul";
    case Op::AddRow: return "add_row";
    case Op::MulRow: return "mul_row";
    case Op::LeakyRelu: return "leaky_relu";
    case Op::Tanh: return "tanh";
    case Op::LogSigmoid: return "log_sigmoid";
    case Op::Square: return "square";
    case Op::Clamp: return "clamp";
    case Op::ReduceMean: return "reduce_mean";
    case Op::ReduceSum: return "reduce_sum";
    case Op::ConcatRows: return "concat_rows";
    case Op::SliceRows: return "slice_rows";
    case Op::SoftmaxCrossEntropy: return "softmax_cross_entropy";
  }
  return "unknown";
}

Node::Node(Op op, Tensor value, std::vector<NodePtr> parents, Attributes attrs, bool requires_grad)
    : op_(op),
      value_(std::move(value)),
      parents_(std::move(parents)),
      attrs_(std::move(attrs)),
      requires_grad_(requires_grad) {}

void Node::accumulate_grad(const Tensor& g) {
  if (g.shape() != value_.shape()) {
    throw ShapeError("gradient shape " + to_string(g.shape()) + " does not match node shape " +
                     to_string(value_.shape()));
  }
  if (!grad_) {
    grad_ = g;
    return;
  }
  view(*grad_) += view(g);
}

Tensor& Node::mutable_value() {
  if (op_ != Op::Leaf) {
    throw std::logic_error("only leaf nodes may be mutated");
  }
  return value_;
}

NodePtr parameter(Tensor value) {
  return std::make_shared<Node>(Op::Leaf, std::move(value), std::vector<NodePtr>{}, Node::Attributes{}, true);
}

NodePtr constant(Tensor value) {
  return std::make_shared<Node>(Op::Leaf, std::move(value), std::vector<NodePtr>{}, Node::Attributes{}, false);
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  if (a->shape().cols != b->shape().rows) {
    throw ShapeError("matmul: " + to_string(a->shape()) + " x " + to_string(b->shape()));
  }
  Tensor out(a->shape().rows, b->shape().cols);
  view(out).noalias() = view(a->value()) * view(b->value());
  return make_node(Op::MatMul, std::move(out), {a, b});
}

NodePtr transpose(const NodePtr& a) {
  Tensor out(a->shape().cols, a->shape().rows);
  view(out) = view(a->value()).transpose();
  return make_node(Op::Transpose, std::move(out), {a});
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
  require_same_shape(Op::Add, a, b);
  Tensor out = a->value();
  view(out) += view(b->value());
  return make_node(Op::Add, std::move(out), {a, b});
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
  require_same_shape(Op::Sub, a, b);
  Tensor out = a->value();
  view(out) -= view(b->value());
  return make_node(Op::Sub, std::move(out), {a, b});
}

NodePtr scale(const NodePtr& a, double factor) {
  Tensor out = map_values(a->value(), [factor](double x) { return factor * x; });
  Node::Attributes attrs;
  attrs.scalar = factor;
  return make_node(Op::Scale, std::move(out), {a}, std::move(attrs));
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
  require_same_shape(Op::Mul, a, b);
  return make_node(Op::Mul, hadamard(a->value(), b->value()), {a, b});
}

NodePtr add_row(const NodePtr& a, const NodePtr& row) {
  require_row_vector(Op::AddRow, a, row);
  Tensor out = a->value();
  view(out).rowwise() += view(row->value()).row(0);
  return make_node(Op::AddRow, std::move(out), {a, row});
}

NodePtr mul_row(const NodePtr& a, const NodePtr& row) {
  require_row_vector(Op::MulRow, a, row);
  Tensor out = a->value();
  view(out).array().rowwise() *= view(row->value()).row(0).array();
  return make_node(Op::MulRow, std::move(out), {a, row});
}

NodePtr leaky_relu(const NodePtr& a, double slope) {
  Tensor out = map_values(a->value(), [slope](double x) { return x >= 0.0 ? x : slope * x; });
  Node::Attributes attrs;
  attrs.scalar = slope;
  return make_node(Op::LeakyRelu, std::move(out), {a}, std::move(attrs));
}

NodePtr tanh(const NodePtr& a) {
  return make_node(Op::Tanh, map_values(a->value(), [](double x) { return std::tanh(x); }), {a});
}

NodePtr log_sigmoid(const NodePtr& a) {
  a->value().require_finite("log_sigmoid input");
  return make_node(Op::LogSigmoid, map_values(a->value(), log_sigmoid_value), {a});
}

NodePtr square(const NodePtr& a) {
  return make_node(Op::Square, map_values(a->value(), [](double x) { return x * x; }), {a});
}

NodePtr clamp(const NodePtr& a, double lo, double hi) {
  if (!(lo <= hi)) {
    throw std::invalid_argument("clamp: lower bound exceeds upper bound");
  }
  Node::Attributes attrs;
  attrs.scalar = lo;
  attrs.scalar2 = hi;
  return make_node(Op::Clamp, map_values(a->value(), [lo, hi](double x) { return std::clamp(x, lo, hi); }),
                   {a}, std::move(attrs));
}

NodePtr reduce_sum(const NodePtr& a) {
  double total = 0.0;
  for (double v : a->value().values()) total += v;
  return make_node(Op::ReduceSum, Tensor(1, 1, total), {a});
}

NodePtr reduce_mean(const NodePtr& a) {
  double total = 0.0;
  for (double v : a->value().values()) total += v;
  return make_node(Op::ReduceMean, Tensor(1, 1, total / static_cast<double>(a->value().size())), {a});
}

NodePtr concat_rows(std::span<const NodePtr> parts) {
  if (parts.empty()) {
    throw ShapeError("concat_rows: no inputs");
  }
  const std::size_t cols = parts.front()->shape().cols;
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p->shape().cols != cols) {
      throw ShapeError("concat_rows: column mismatch " + to_string(p->shape()));
    }
    rows += p->shape().rows;
  }
  std::vector<double> values;
  values.reserve(rows * cols);
  for (const auto& p : parts) {
    auto v = p->value().values();
    values.insert(values.end(), v.begin(), v.end());
  }
  return make_node(Op::ConcatRows, Tensor(rows, cols, std::move(values)),
                   std::vector<NodePtr>(parts.begin(), parts.end()));
}

NodePtr slice_rows(const NodePtr& a, std::size_t begin, std::size_t count) {
  if (count == 0 || begin + count > a->shape().rows) {
    throw ShapeError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of " + std::to_string(a->shape().rows) + " rows");
  }
  const std::size_t cols = a->shape().cols;
  auto src = a->value().values().subspan(begin * cols, count * cols);
  Node::Attributes attrs;
  attrs.offset = begin;
  return make_node(Op::SliceRows, Tensor(count, cols, std::vector<double>(src.begin(), src.end())), {a},
                   std::move(attrs));
}

NodePtr softmax_cross_entropy(const NodePtr& logits, std::span<const std::size_t> targets) {
  const Tensor& z = logits->value();
  if (targets.size() != z.rows()) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                     std::to_string(z.rows()) + " rows");
  }
  Tensor probs(z.rows(), z.cols());
  double total = 0.0;
  for (std::size_t r = 0; r < z.rows(); ++r) {
    if (targets[r] >= z.cols()) {
      throw std::out_of_range("softmax_cross_entropy: target " + std::to_string(targets[r]) +
                              " out of range for " + std::to_string(z.cols()) + " classes");
    }
    auto row = z.row(r);
    const double m = *std::max_element(row.begin(), row.end());
    double denom = 0.0;
    for (std::size_t c = 0; c < z.cols(); ++c) {
      probs(r, c) = std::exp(row[c] - m);
      denom += probs(r, c);
    }
    for (std::size_t c = 0; c < z.cols(); ++c) probs(r, c) /= denom;
    total += -(row[targets[r]] - m - std::log(denom));
  }
  Node::Attributes attrs;
  attrs.targets.assign(targets.begin(), targets.end());
  attrs.cache = std::move(probs);
  return make_node(Op::SoftmaxCrossEntropy, Tensor(1, 1, total / static_cast<double>(z.rows())), {logits},
                   std::move(attrs));
}

std::vector<Node*> topological_order(const NodePtr& root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  // (node, next parent index to visit)
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents().size()) {
      Node* parent = node->parents()[next++].get();
      if (visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }
  return order;
}

namespace {

// Accumulates gradient contributions for interior nodes during one backward
// pass; leaves receive theirs through Node::accumulate_grad.
class GradTable {
 public:
  void add(Node* node, Tensor g) {
    if (!node->requires_grad()) return;
    if (node->is_leaf()) {
      node->accumulate_grad(g);
      return;
    }
    auto [it, inserted] = grads_.try_emplace(node, std::move(g));
    if (!inserted) view(it->second) += view(g);
  }

  const Tensor* find(Node* node) const {
    auto it = grads_.find(node);
    return it == grads_.end() ? nullptr : &it->second;
  }

 private:
  std::unordered_map<Node*, Tensor> grads_;
};

void propagate(Node* node, const Tensor& g, GradTable& table) {
  const auto& ps = node->parents();
  auto parent = [&](std::size_t k) { return ps[k].get(); };
  auto wants = [&](std::size_t k) { return ps[k]->requires_grad(); };

  switch (node->op()) {
    case Op::Leaf:
      break;
    case Op::MatMul: {
      if (wants(0)) {
        Tensor ga(parent(0)->shape().rows, parent(0)->shape().cols);
        view(ga).noalias() = view(g) * view(parent(1)->value()).transpose();
        table.add(parent(0), std::move(ga));
      }
      if (wants(1)) {
        Tensor gb(parent(1)->shape().rows, parent(1)->shape().cols);
        view(gb).noalias() = view(parent(0)->value()).transpose() * view(g);
        table.add(parent(1), std::move(gb));
      }
      break;
    }
    case Op::Transpose: {
      Tensor ga(g.cols(), g.rows());
      view(ga) = view(g).transpose();
      table.add(parent(0), std::move(ga));
      break;
    }
    case Op::Add:
      table.add(parent(0), g);
      table.add(parent(1), g);
      break;
    case Op::Sub: {
      table.add(parent(0), g);
      if (wants(1)) table.add(parent(1), map_values(g, [](double x) { return -x; }));
      break;
    }
    case Op::Scale: {
      const double f = node->attributes().scalar;
      table.add(parent(0), map_values(g, [f](double x) { return f * x; }));
      break;
    }
    case Op::Mul:
      if (wants(0)) table.add(parent(0), hadamard(g, parent(1)->value()));
      if (wants(1)) table.add(parent(1), hadamard(g, parent(0)->value()));
      break;
    case Op::AddRow:
      table.add(parent(0), g);
      if (wants(1)) table.add(parent(1), column_sums(g));
      break;
    case Op::MulRow: {
      if (wants(0)) {
        Tensor ga = g;
        view(ga).array().rowwise() *= view(parent(1)->value()).row(0).array();
        table.add(parent(0), std::move(ga));
      }
      if (wants(1)) table.add(parent(1), column_sums(hadamard(g, parent(0)->value())));
      break;
    }
    case Op::LeakyRelu: {
      const double slope = node->attributes().scalar;
      Tensor ga = g;
      auto x = parent(0)->value().values();
      for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] < 0.0) ga.values()[k] *= slope;
      }
      table.add(parent(0), std::move(ga));
      break;
    }
    case Op::Tanh: {
      Tensor ga = g;
      auto y = node->value().values();
      for (std::size_t k = 0; k < y.size(); ++k) ga.values()[k] *= 1.0 - y[k] * y[k];
      table.add(parent(0), std::move(ga));
      break;
    }
    case Op::LogSigmoid: {
      Tensor ga = g;
      auto x = parent(0)->value().values();
      for (std::size_t k = 0; k < x.size(); ++k) ga.values()[k] *= sigmoid_neg(x[k]);
      table.add(parent(0), std::move(ga));
      break;
    }
    case Op::Square: {
      Tensor ga = g;
      auto x = parent(0)->value().values();
      for (std::size_t k = 0; k < x.size(); ++k) ga.values()[k] *= 2.0 * x[k];
      table.add(parent(0), std::move(ga));
      break;
    }
    case Op::Clamp: {
      const double lo = node->attributes().scalar;
      const double hi = node->attributes().scalar2;
      Tensor ga = g;
      auto x = parent(0)->value().values();
      for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] < lo || x[k] > hi) ga.values()[k] = 0.0;
      }
      table.add(parent(0), std::move(ga));
      break;
    }
    case Op::ReduceSum: {
      const Shape s = parent(0)->shape();
      table.add(parent(0), Tensor(s.rows, s.cols, g(0, 0)));
      break;
    }
    case Op::ReduceMean: {
      const Shape s = parent(0)->shape();
      table.add(parent(0), Tensor(s.rows, s.cols, g(0, 0) / static_cast<double>(s.size())));
      break;
    }
    case Op::ConcatRows: {
      std::size_t offset = 0;
      const std::size_t cols = g.cols();
      for (std::size_t k = 0; k < ps.size(); ++k) {
        const std::size_t rows = ps[k]->shape().rows;
        if (wants(k)) {
          auto part = g.values().subspan(offset * cols, rows * cols);
          table.add(parent(k), Tensor(rows, cols, std::vector<double>(part.begin(), part.end())));
        }
        offset += rows;
      }
      break;
    }
    case Op::SliceRows: {
      const Shape s = parent(0)->shape();
      Tensor ga(s.rows, s.cols);
      std::copy(g.values().begin(), g.values().end(),
                ga.values().begin() + static_cast<std::ptrdiff_t>(node->attributes().offset * s.cols));
      table.add(parent(0), std::move(ga));
      break;
    }
    case Op::SoftmaxCrossEntropy: {
      Tensor ga = *node->attributes().cache;
      const auto& targets = node->attributes().targets;
      const double f = g(0, 0) / static_cast<double>(ga.rows());
      for (std::size_t r = 0; r < ga.rows(); ++r) {
        ga(r, targets[r]) -= 1.0;
        for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) *= f;
      }
      table.add(parent(0), std::move(ga));
      break;
    }
  }
}

}  // namespace

void backward(const NodePtr& root) {
  if (root->shape() != Shape{1, 1}) {
    throw ShapeError("backward: root must be scalar, got " + to_string(root->shape()));
  }
  if (!root->requires_grad()) return;
  const auto order = topological_order(root);
  GradTable table;
  table.add(root.get(), Tensor::ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->is_leaf() || !node->requires_grad()) continue;
    const Tensor* g = table.find(node);
    if (g == nullptr) continue;
    propagate(node, *g, table);
  }
}

}  // namespace venngan::ad
