#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gbdnet/error.hpp"

namespace gbd {

/// Dense 4-D layout: (batch, channel, rows, cols), row-major.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::int64_t numel() const {
    return static_cast<std::int64_t>(n) * c * h * w;
  }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

namespace detail {

struct Node {
  Shape shape;
  // Values are shared so a parameter alias can reuse storage while keeping
  // its own gradient buffer.
  std::shared_ptr<std::vector<double>> values;
  std::vector<double> grad;
  bool requires_grad = true;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<double>& vals() { return *values; }
  const std::vector<double>& vals() const { return *values; }
};

}  // namespace detail

/// Reverse-mode differentiable 4-D array. Copying a Tensor copies a handle
/// to the same node; ops build new nodes that remember how to push
/// gradients to their parents.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& s);
  static Tensor full(const Shape& s, double value);
  static Tensor from_values(const Shape& s, std::vector<double> values);
  /// Leaf that never receives gradients (input images, frozen data).
  static Tensor constant(const Shape& s, std::vector<double> values);
  static Tensor scalar(double value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t numel() const { return node_->shape.numel(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::vector<double>& values() { return node_->vals(); }
  const std::vector<double>& values() const { return node_->vals(); }
  std::vector<double>& grad() { return node_->grad; }
  const std::vector<double>& grad() const { return node_->grad; }

  double& at(int n, int c, int y, int x);
  double at(int n, int c, int y, int x) const;

  /// Value of a single-element tensor.
  double item() const;

  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

  /// Fresh leaf sharing this tensor's value storage with its own zeroed
  /// gradient buffer. Lets concurrent graphs accumulate gradients privately.
  Tensor alias() const;

  std::shared_ptr<detail::Node> node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend Tensor make_op(const Shape&, std::vector<Tensor>, std::vector<double>,
                        std::function<void(detail::Node&)>);
};

/// Builds an op node. `backward` receives the finished node and must
/// accumulate into parents' grad buffers; it may be empty for ops with no
/// differentiable parents.
Tensor make_op(const Shape& shape, std::vector<Tensor> parents,
               std::vector<double> values,
               std::function<void(detail::Node&)> backward);

/// Reverse pass from a single-element root; seeds the root gradient with
/// `seed` and accumulates into every reachable gradient buffer.
void backward(const Tensor& root, double seed = 1.0);

inline std::int64_t offset_of(const Shape& s, int n, int c, int y, int x) {
  return ((static_cast<std::int64_t>(n) * s.c + c) * s.h + y) * s.w + x;
}

/// Throws TrainingError if any entry is NaN or infinite.
void check_finite(const Tensor& t, const std::string& context);

}  // namespace gbd
