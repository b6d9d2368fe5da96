#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stf {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Throws ShapeError naming both shapes when they differ.
void require_same_shape(const Shape& a, const Shape& b, const char* op);

/// Graph-building switch. While a guard is alive on this thread, ops produce
/// plain values with no backward rule attached.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until the first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::span<T> grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), T{0});
    return grad;
  }
};

}  // namespace detail

/// Dense row-major tensor handle with a reverse-mode gradient slot.
///
/// Copies share the underlying node. Data is treated as immutable once a
/// tensor has been used as an op input; only leaf parameters are updated in
/// place (by optimizers and initializers through mutable_data()).
template <typename T>
class BasicTensor {
 public:
  using value_type = T;
  using NodeType = detail::Node<T>;

  BasicTensor() = default;

  static BasicTensor zeros(Shape shape);
  static BasicTensor full(Shape shape, T value);
  static BasicTensor from_data(Shape shape, std::vector<T> data);
  /// Leaf that accumulates gradients.
  static BasicTensor parameter(Shape shape, std::vector<T> data);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node().shape; }
  std::size_t numel() const { return node().data.size(); }
  std::size_t dim() const { return node().shape.size(); }

  std::span<const T> data() const { return node().data; }
  std::span<T> mutable_data() { return node().data; }
  T item() const;

  bool requires_grad() const { return node().requires_grad; }
  BasicTensor& set_requires_grad(bool on);
  bool has_grad() const { return !node().grad.empty(); }
  /// Zeros when no gradient has been accumulated yet.
  std::vector<T> grad() const;
  std::span<const T> grad_view() const { return node().grad; }
  void zero_grad();

  /// Reverse pass from a single-element tensor; accumulates into every leaf
  /// reachable through nodes that require grad.
  void backward() const;

  /// Same values, no history.
  BasicTensor detach() const;

  // Internal construction used by ops.
  static BasicTensor from_node(std::shared_ptr<NodeType> node) {
    BasicTensor t;
    t.node_ = std::move(node);
    return t;
  }
  const std::shared_ptr<NodeType>& node_ptr() const { return node_; }

 private:
  NodeType& node() const {
    if (!node_) throw std::logic_error("use of undefined tensor");
    return *node_;
  }

  std::shared_ptr<NodeType> node_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

/// Builds the result node of an op. The backward rule and parents are kept
/// only when grad mode is on and some parent requires grad.
template <typename T>
BasicTensor<T> make_result(Shape shape, std::vector<T> data,
                           std::vector<BasicTensor<T>> parents,
                           std::function<void(detail::Node<T>&)> backward);

/// Tensor whose every element is exactly 0 or 1. Keeps the producing graph
/// node so surrogate gradients can flow through it.
class SpikeTensor {
 public:
  SpikeTensor() = default;

  /// Validates binary contents; throws std::invalid_argument otherwise.
  static SpikeTensor from_tensor(Tensor values);
  static SpikeTensor zeros(Shape shape);
  static SpikeTensor from_data(Shape shape, std::vector<float> data);

  const Tensor& real() const { return values_; }
  const Shape& shape() const { return values_.shape(); }
  std::size_t numel() const { return values_.numel(); }
  std::span<const float> data() const { return values_.data(); }
  bool defined() const { return values_.defined(); }

  // For ops whose output is binary by construction; skips validation.
  static SpikeTensor trusted(Tensor values) {
    SpikeTensor s;
    s.values_ = std::move(values);
    return s;
  }

 private:
  Tensor values_;
};

}  // namespace stf
