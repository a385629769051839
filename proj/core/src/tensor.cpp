#include "gbdnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace gbd {

std::string Shape::str() const {
  std::ostringstream os;
  os << "(" << n << "," << c << "," << h << "," << w << ")";
  return os.str();
}

namespace {

std::shared_ptr<detail::Node> make_leaf(const Shape& s,
                                        std::vector<double> values,
                                        bool requires_grad) {
  if (static_cast<std::int64_t>(values.size()) != s.numel()) {
    throw ShapeError("tensor value count " + std::to_string(values.size()) +
                     " does not match shape " + s.str());
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = s;
  node->values = std::make_shared<std::vector<double>>(std::move(values));
  node->grad.assign(static_cast<std::size_t>(s.numel()), 0.0);
  node->requires_grad = requires_grad;
  return node;
}

}  // namespace

Tensor Tensor::zeros(const Shape& s) {
  return Tensor(make_leaf(s, std::vector<double>(s.numel(), 0.0), true));
}

Tensor Tensor::full(const Shape& s, double value) {
  return Tensor(make_leaf(s, std::vector<double>(s.numel(), value), true));
}

Tensor Tensor::from_values(const Shape& s, std::vector<double> values) {
  return Tensor(make_leaf(s, std::move(values), true));
}

Tensor Tensor::constant(const Shape& s, std::vector<double> values) {
  return Tensor(make_leaf(s, std::move(values), false));
}

Tensor Tensor::scalar(double value) {
  return Tensor(make_leaf(Shape{1, 1, 1, 1}, {value}, true));
}

double& Tensor::at(int n, int c, int y, int x) {
  return node_->vals()[static_cast<std::size_t>(offset_of(node_->shape, n, c, y, x))];
}

double Tensor::at(int n, int c, int y, int x) const {
  return node_->vals()[static_cast<std::size_t>(offset_of(node_->shape, n, c, y, x))];
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() requires a single-element tensor, got " +
                     node_->shape.str());
  }
  return node_->vals()[0];
}

Tensor Tensor::alias() const {
  auto node = std::make_shared<detail::Node>();
  node->shape = node_->shape;
  node->values = node_->values;
  node->grad.assign(node_->grad.size(), 0.0);
  node->requires_grad = true;
  return Tensor(std::move(node));
}

Tensor make_op(const Shape& shape, std::vector<Tensor> parents,
               std::vector<double> values,
               std::function<void(detail::Node&)> backward) {
  if (static_cast<std::int64_t>(values.size()) != shape.numel()) {
    throw ShapeError("op produced " + std::to_string(values.size()) +
                     " values for shape " + shape.str());
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->values = std::make_shared<std::vector<double>>(std::move(values));
  bool needs = false;
  node->parents.reserve(parents.size());
  for (const Tensor& p : parents) {
    needs = needs || p.requires_grad();
    node->parents.push_back(p.node());
  }
  node->requires_grad = needs;
  if (needs) {
    node->grad.assign(static_cast<std::size_t>(shape.numel()), 0.0);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void backward(const Tensor& root, double seed) {
  if (root.numel() != 1) {
    throw ShapeError("backward() expects a single-element root, got " +
                     root.shape().str());
  }
  if (!root.requires_grad()) {
    return;
  }

  // Iterative post-order DFS; the reversed finish order is a valid
  // topological order for the reverse pass.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  struct Frame {
    detail::Node* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({root.node().get(), 0});
  visited.insert(root.node().get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      detail::Node* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && visited.insert(p).second) {
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  root.node()->grad[0] += seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backward) {
      node->backward(*node);
    }
  }
}

void check_finite(const Tensor& t, const std::string& context) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) {
      throw TrainingError("non-finite value in " + context);
    }
  }
}

}  // namespace gbd
