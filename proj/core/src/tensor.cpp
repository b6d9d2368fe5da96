#include "stf/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace stf {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a) +
                     " vs " + to_string(b));
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

template <typename T>
static void check_extents(const Shape& shape) {
  for (auto e : shape) {
    if (e == 0) throw ShapeError("tensor extents must be positive: " + to_string(shape));
  }
}

template <typename T>
BasicTensor<T> BasicTensor<T>::zeros(Shape shape) {
  return full(std::move(shape), T{0});
}

template <typename T>
BasicTensor<T> BasicTensor<T>::full(Shape shape, T value) {
  check_extents<T>(shape);
  auto n = std::make_shared<NodeType>();
  n->data.assign(stf::numel(shape), value);
  n->shape = std::move(shape);
  return from_node(std::move(n));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::from_data(Shape shape, std::vector<T> data) {
  check_extents<T>(shape);
  if (data.size() != stf::numel(shape)) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + to_string(shape));
  }
  auto n = std::make_shared<NodeType>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  return from_node(std::move(n));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::parameter(Shape shape, std::vector<T> data) {
  auto t = from_data(std::move(shape), std::move(data));
  t.node_->requires_grad = true;
  return t;
}

template <typename T>
T BasicTensor<T>::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on tensor of shape " + to_string(shape()));
  }
  return node().data[0];
}

template <typename T>
BasicTensor<T>& BasicTensor<T>::set_requires_grad(bool on) {
  node().requires_grad = on;
  return *this;
}

template <typename T>
std::vector<T> BasicTensor<T>::grad() const {
  if (node().grad.empty()) return std::vector<T>(numel(), T{0});
  return node().grad;
}

template <typename T>
void BasicTensor<T>::zero_grad() {
  node().grad.clear();
}

template <typename T>
BasicTensor<T> BasicTensor<T>::detach() const {
  return from_data(shape(), node().data);
}

template <typename T>
void BasicTensor<T>::backward() const {
  if (numel() != 1) {
    throw ShapeError("backward() needs a single-element tensor, got " +
                     to_string(shape()));
  }
  if (!node().requires_grad) return;

  // Iterative post-order DFS; graphs unrolled over many timesteps are deep.
  std::vector<NodeType*> order;
  std::unordered_set<NodeType*> visited;
  std::vector<std::pair<NodeType*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      NodeType* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->grad_buffer()[0] += T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeType* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

template <typename T>
BasicTensor<T> make_result(Shape shape, std::vector<T> data,
                           std::vector<BasicTensor<T>> parents,
                           std::function<void(detail::Node<T>&)> backward) {
  auto n = std::make_shared<detail::Node<T>>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  if (grad_enabled()) {
    bool any = std::any_of(parents.begin(), parents.end(),
                           [](const BasicTensor<T>& p) { return p.requires_grad(); });
    if (any) {
      n->requires_grad = true;
      n->backward = std::move(backward);
      n->parents.reserve(parents.size());
      for (auto& p : parents) n->parents.push_back(p.node_ptr());
    }
  }
  return BasicTensor<T>::from_node(std::move(n));
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template BasicTensor<float> make_result(Shape, std::vector<float>,
                                        std::vector<BasicTensor<float>>,
                                        std::function<void(detail::Node<float>&)>);
template BasicTensor<double> make_result(Shape, std::vector<double>,
                                         std::vector<BasicTensor<double>>,
                                         std::function<void(detail::Node<double>&)>);

SpikeTensor SpikeTensor::from_tensor(Tensor values) {
  for (float v : values.data()) {
    if (v != 0.0f && v != 1.0f) {
      throw std::invalid_argument("spike tensor values must be exactly 0 or 1");
    }
  }
  return trusted(std::move(values));
}

SpikeTensor SpikeTensor::zeros(Shape shape) {
  return trusted(Tensor::zeros(std::move(shape)));
}

SpikeTensor SpikeTensor::from_data(Shape shape, std::vector<float> data) {
  return from_tensor(Tensor::from_data(std::move(shape), std::move(data)));
}

}  // namespace stf
