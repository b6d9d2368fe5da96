#include "stf/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "stf/parallel.hpp"

namespace stf {

void SurrogateSpec::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("surrogate alpha must be > 0");
}

double surrogate_derivative(const SurrogateSpec& spec, double x) {
  const double z = std::numbers::pi * spec.alpha * x / 2.0;
  return spec.alpha / (2.0 * (1.0 + z * z));
}

namespace {

template <typename T>
using Node = detail::Node<T>;

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
Node<T>& parent(Node<T>& self, std::size_t i) {
  return *self.parents[i];
}

std::size_t product(const Shape& s, std::size_t begin, std::size_t end) {
  std::size_t p = 1;
  for (std::size_t i = begin; i < end; ++i) p *= s[i];
  return p;
}

}  // namespace

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  std::vector<T> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      auto& p = parent(self, k);
      if (!p.requires_grad) continue;
      auto g = p.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  std::vector<T> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    auto& pa = parent(self, 0);
    auto& pb = parent(self, 1);
    if (pa.requires_grad) {
      auto g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      auto g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  std::vector<T> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    auto& pa = parent(self, 0);
    auto& pb = parent(self, 1);
    if (pa.requires_grad) {
      auto g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.data[i];
    }
    if (pb.requires_grad) {
      auto g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.data[i];
    }
  });
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T factor) {
  std::vector<T> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * factor;
  return make_result<T>(a.shape(), std::move(out), {a}, [factor](Node<T>& self) {
    auto g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
  });
}

template <typename T>
BasicTensor<T> add_scalar(const BasicTensor<T>& a, T offset) {
  std::vector<T> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + offset;
  return make_result<T>(a.shape(), std::move(out), {a}, [](Node<T>& self) {
    auto g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a) {
  T total{0};
  for (T v : a.data()) total += v;
  return make_result<T>({1}, {total}, {a}, [](Node<T>& self) {
    auto g = parent(self, 0).grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& a) {
  T total{0};
  for (T v : a.data()) total += v;
  const T n = static_cast<T>(a.numel());
  return make_result<T>({1}, {total / n}, {a}, [n](Node<T>& self) {
    auto g = parent(self, 0).grad_buffer();
    for (auto& v : g) v += self.grad[0] / n;
  });
}

template <typename T>
BasicTensor<T> mean_axis(const BasicTensor<T>& a, std::size_t axis) {
  const Shape& s = a.shape();
  if (axis >= s.size()) throw ShapeError("mean_axis: axis out of range for " + to_string(s));
  if (s.size() == 1) return mean(a);
  const std::size_t outer = product(s, 0, axis), len = s[axis],
                    inner = product(s, axis + 1, s.size());
  Shape out_shape = s;
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  std::vector<T> out(outer * inner, T{0});
  auto x = a.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t k = 0; k < len; ++k)
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += x[(o * len + k) * inner + i];
  const T n = static_cast<T>(len);
  for (auto& v : out) v /= n;
  return make_result<T>(std::move(out_shape), std::move(out), {a},
                        [outer, len, inner, n](Node<T>& self) {
                          auto g = parent(self, 0).grad_buffer();
                          for (std::size_t o = 0; o < outer; ++o)
                            for (std::size_t k = 0; k < len; ++k)
                              for (std::size_t i = 0; i < inner; ++i)
                                g[(o * len + k) * inner + i] += self.grad[o * inner + i] / n;
                        });
}

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& a, Shape shape) {
  if (stf::numel(shape) != a.numel()) {
    throw ShapeError("reshape: cannot view " + to_string(a.shape()) + " as " + to_string(shape));
  }
  std::vector<T> out(a.data().begin(), a.data().end());
  return make_result<T>(std::move(shape), std::move(out), {a}, [](Node<T>& self) {
    auto g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

template <typename T>
BasicTensor<T> permute(const BasicTensor<T>& a, const std::vector<std::size_t>& axes) {
  const Shape& s = a.shape();
  const std::size_t rank = s.size();
  if (axes.size() != rank) throw ShapeError("permute: axis count does not match " + to_string(s));
  std::vector<bool> seen(rank, false);
  for (auto ax : axes) {
    if (ax >= rank || seen[ax]) throw ShapeError("permute: invalid axis order");
    seen[ax] = true;
  }
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_strides[i - 1] = in_strides[i] * s[i];
  Shape out_shape(rank);
  std::vector<std::size_t> src_stride(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = s[axes[i]];
    src_stride[i] = in_strides[axes[i]];
  }
  const std::size_t n = a.numel();
  std::vector<std::size_t> index_map(n);
  std::vector<std::size_t> counter(rank, 0);
  std::size_t src = 0;
  for (std::size_t o = 0; o < n; ++o) {
    index_map[o] = src;
    for (std::size_t d = rank; d-- > 0;) {
      if (++counter[d] < out_shape[d]) {
        src += src_stride[d];
        break;
      }
      src -= src_stride[d] * (out_shape[d] - 1);
      counter[d] = 0;
    }
  }
  std::vector<T> out(n);
  auto x = a.data();
  for (std::size_t o = 0; o < n; ++o) out[o] = x[index_map[o]];
  return make_result<T>(std::move(out_shape), std::move(out), {a},
                        [map = std::move(index_map)](Node<T>& self) {
                          auto g = parent(self, 0).grad_buffer();
                          for (std::size_t o = 0; o < map.size(); ++o) g[map[o]] += self.grad[o];
                        });
}

template <typename T>
BasicTensor<T> slice_leading(const BasicTensor<T>& a, std::size_t begin, std::size_t end) {
  const Shape& s = a.shape();
  if (begin >= end || end > s[0]) {
    throw ShapeError("slice_leading: range [" + std::to_string(begin) + "," +
                     std::to_string(end) + ") invalid for " + to_string(s));
  }
  const std::size_t row = a.numel() / s[0];
  Shape out_shape = s;
  out_shape[0] = end - begin;
  auto x = a.data();
  std::vector<T> out(x.begin() + static_cast<std::ptrdiff_t>(begin * row),
                     x.begin() + static_cast<std::ptrdiff_t>(end * row));
  return make_result<T>(std::move(out_shape), std::move(out), {a},
                        [offset = begin * row](Node<T>& self) {
                          auto g = parent(self, 0).grad_buffer();
                          for (std::size_t i = 0; i < self.grad.size(); ++i)
                            g[offset + i] += self.grad[i];
                        });
}

template <typename T>
BasicTensor<T> concat_leading(const std::vector<BasicTensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_leading: no inputs");
  Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
  std::size_t rows = 0;
  for (const auto& p : parts) {
    Shape pt(p.shape().begin() + 1, p.shape().end());
    if (pt != tail) {
      throw ShapeError("concat_leading: shape mismatch " + to_string(parts[0].shape()) + " vs " +
                       to_string(p.shape()));
    }
    rows += p.shape()[0];
  }
  Shape out_shape = parts[0].shape();
  out_shape[0] = rows;
  std::vector<T> out;
  out.reserve(stf::numel(out_shape));
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return make_result<T>(std::move(out_shape), std::move(out), parts, [](Node<T>& self) {
    std::size_t offset = 0;
    for (auto& pp : self.parents) {
      const std::size_t n = pp->data.size();
      if (pp->requires_grad) {
        auto g = pp->grad_buffer();
        for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[offset + i];
      }
      offset += n;
    }
  });
}

template <typename T>
BasicTensor<T> repeat_leading(const BasicTensor<T>& a, std::size_t count) {
  if (count < 1) throw std::invalid_argument("repeat_leading: count must be >= 1");
  Shape out_shape;
  out_shape.reserve(a.dim() + 1);
  out_shape.push_back(count);
  out_shape.insert(out_shape.end(), a.shape().begin(), a.shape().end());
  std::vector<T> out;
  out.reserve(count * a.numel());
  for (std::size_t c = 0; c < count; ++c) out.insert(out.end(), a.data().begin(), a.data().end());
  return make_result<T>(std::move(out_shape), std::move(out), {a}, [count](Node<T>& self) {
    auto g = parent(self, 0).grad_buffer();
    const std::size_t n = g.size();
    for (std::size_t c = 0; c < count; ++c)
      for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[c * n + i];
  });
}

template <typename T>
BasicTensor<T> add_broadcast_axis1(const BasicTensor<T>& x, const BasicTensor<T>& y) {
  const Shape& xs = x.shape();
  Shape expected;
  if (xs.size() >= 2) {
    expected.push_back(xs[0]);
    expected.insert(expected.end(), xs.begin() + 2, xs.end());
  }
  if (xs.size() < 2 || y.shape() != expected) {
    throw ShapeError("add_broadcast_axis1: shape mismatch " + to_string(xs) + " vs " +
                     to_string(y.shape()));
  }
  const std::size_t outer = xs[0], mid = xs[1], inner = product(xs, 2, xs.size());
  std::vector<T> out(x.numel());
  auto xd = x.data(), yd = y.data();
  for (std::size_t a = 0; a < outer; ++a)
    for (std::size_t b = 0; b < mid; ++b)
      for (std::size_t i = 0; i < inner; ++i)
        out[(a * mid + b) * inner + i] = xd[(a * mid + b) * inner + i] + yd[a * inner + i];
  return make_result<T>(xs, std::move(out), {x, y}, [outer, mid, inner](Node<T>& self) {
    auto& px = parent(self, 0);
    auto& py = parent(self, 1);
    if (px.requires_grad) {
      auto g = px.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (py.requires_grad) {
      auto g = py.grad_buffer();
      for (std::size_t a = 0; a < outer; ++a)
        for (std::size_t b = 0; b < mid; ++b)
          for (std::size_t i = 0; i < inner; ++i)
            g[a * inner + i] += self.grad[(a * mid + b) * inner + i];
    }
  });
}

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.size() != 2 || bs.size() != 2 || as[1] != bs[0]) {
    throw ShapeError("matmul: shape mismatch " + to_string(as) + " vs " + to_string(bs));
  }
  const auto m = static_cast<Eigen::Index>(as[0]), k = static_cast<Eigen::Index>(as[1]),
             n = static_cast<Eigen::Index>(bs[1]);
  std::vector<T> out(static_cast<std::size_t>(m * n));
  Eigen::Map<RowMat<T>>(out.data(), m, n).noalias() =
      Eigen::Map<const RowMat<T>>(a.data().data(), m, k) *
      Eigen::Map<const RowMat<T>>(b.data().data(), k, n);
  return make_result<T>({as[0], bs[1]}, std::move(out), {a, b}, [m, k, n](Node<T>& self) {
    auto& pa = parent(self, 0);
    auto& pb = parent(self, 1);
    Eigen::Map<const RowMat<T>> g(self.grad.data(), m, n);
    if (pa.requires_grad) {
      Eigen::Map<RowMat<T>>(pa.grad_buffer().data(), m, k).noalias() +=
          g * Eigen::Map<const RowMat<T>>(pb.data.data(), k, n).transpose();
    }
    if (pb.requires_grad) {
      Eigen::Map<RowMat<T>>(pb.grad_buffer().data(), k, n).noalias() +=
          Eigen::Map<const RowMat<T>>(pa.data.data(), m, k).transpose() * g;
    }
  });
}

template <typename T>
BasicTensor<T> bmm(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.size() != 3 || bs.size() != 3 || as[0] != bs[0] || as[2] != bs[1]) {
    throw ShapeError("bmm: shape mismatch " + to_string(as) + " vs " + to_string(bs));
  }
  const std::size_t groups = as[0];
  const auto m = static_cast<Eigen::Index>(as[1]), k = static_cast<Eigen::Index>(as[2]),
             n = static_cast<Eigen::Index>(bs[2]);
  const std::size_t sa = as[1] * as[2], sb = bs[1] * bs[2], so = as[1] * bs[2];
  std::vector<T> out(groups * so);
  for (std::size_t g = 0; g < groups; ++g) {
    Eigen::Map<RowMat<T>>(out.data() + g * so, m, n).noalias() =
        Eigen::Map<const RowMat<T>>(a.data().data() + g * sa, m, k) *
        Eigen::Map<const RowMat<T>>(b.data().data() + g * sb, k, n);
  }
  return make_result<T>({groups, as[1], bs[2]}, std::move(out), {a, b},
                        [=](Node<T>& self) {
                          auto& pa = parent(self, 0);
                          auto& pb = parent(self, 1);
                          for (std::size_t g = 0; g < groups; ++g) {
                            Eigen::Map<const RowMat<T>> go(self.grad.data() + g * so, m, n);
                            if (pa.requires_grad) {
                              Eigen::Map<RowMat<T>>(pa.grad_buffer().data() + g * sa, m, k)
                                  .noalias() +=
                                  go * Eigen::Map<const RowMat<T>>(pb.data.data() + g * sb, k, n)
                                           .transpose();
                            }
                            if (pb.requires_grad) {
                              Eigen::Map<RowMat<T>>(pb.grad_buffer().data() + g * sb, k, n)
                                  .noalias() +=
                                  Eigen::Map<const RowMat<T>>(pa.data.data() + g * sa, m, k)
                                      .transpose() *
                                  go;
                            }
                          }
                        });
}

template <typename T>
BasicTensor<T> add_bias(const BasicTensor<T>& x, const BasicTensor<T>& bias) {
  const Shape& xs = x.shape();
  if (xs.size() != 2 || bias.shape() != Shape{xs[1]}) {
    throw ShapeError("add_bias: shape mismatch " + to_string(xs) + " vs " +
                     to_string(bias.shape()));
  }
  const std::size_t rows = xs[0], cols = xs[1];
  std::vector<T> out(x.numel());
  auto xd = x.data(), bd = bias.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = xd[r * cols + c] + bd[c];
  return make_result<T>(xs, std::move(out), {x, bias}, [rows, cols](Node<T>& self) {
    auto& px = parent(self, 0);
    auto& pb = parent(self, 1);
    if (px.requires_grad) {
      auto g = px.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      auto g = pb.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) g[c] += self.grad[r * cols + c];
    }
  });
}

namespace {

struct ConvDims {
  std::size_t n, c, h, w, o, k, ho, wo, stride, pad;
  std::size_t col_rows() const { return c * k * k; }
  std::size_t col_cols() const { return ho * wo; }
};

template <typename T>
void im2col(const T* img, const ConvDims& d, T* col) {
  const std::size_t cols = d.col_cols();
  for (std::size_t ci = 0; ci < d.c; ++ci)
    for (std::size_t ky = 0; ky < d.k; ++ky)
      for (std::size_t kx = 0; kx < d.k; ++kx) {
        T* row = col + ((ci * d.k + ky) * d.k + kx) * cols;
        for (std::size_t oy = 0; oy < d.ho; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * d.stride + ky) -
                                    static_cast<std::ptrdiff_t>(d.pad);
          for (std::size_t ox = 0; ox < d.wo; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * d.stride + kx) -
                                      static_cast<std::ptrdiff_t>(d.pad);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(d.h) &&
                                ix < static_cast<std::ptrdiff_t>(d.w);
            row[oy * d.wo + ox] =
                inside ? img[(ci * d.h + static_cast<std::size_t>(iy)) * d.w +
                             static_cast<std::size_t>(ix)]
                       : T{0};
          }
        }
      }
}

template <typename T>
void col2im_add(const T* col, const ConvDims& d, T* img) {
  const std::size_t cols = d.col_cols();
  for (std::size_t ci = 0; ci < d.c; ++ci)
    for (std::size_t ky = 0; ky < d.k; ++ky)
      for (std::size_t kx = 0; kx < d.k; ++kx) {
        const T* row = col + ((ci * d.k + ky) * d.k + kx) * cols;
        for (std::size_t oy = 0; oy < d.ho; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * d.stride + ky) -
                                    static_cast<std::ptrdiff_t>(d.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
          for (std::size_t ox = 0; ox < d.wo; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * d.stride + kx) -
                                      static_cast<std::ptrdiff_t>(d.pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) continue;
            img[(ci * d.h + static_cast<std::size_t>(iy)) * d.w + static_cast<std::size_t>(ix)] +=
                row[oy * d.wo + ox];
          }
        }
      }
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      Conv2dGeometry geometry) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (xs.size() != 4 || ws.size() != 4 || ws[1] != xs[1] || ws[2] != ws[3] ||
      geometry.stride == 0) {
    throw ShapeError("conv2d: shape mismatch " + to_string(xs) + " vs " + to_string(ws));
  }
  ConvDims d{};
  d.n = xs[0];
  d.c = xs[1];
  d.h = xs[2];
  d.w = xs[3];
  d.o = ws[0];
  d.k = ws[2];
  d.stride = geometry.stride;
  d.pad = geometry.padding;
  if (d.h + 2 * d.pad < d.k || d.w + 2 * d.pad < d.k) {
    throw ShapeError("conv2d: kernel larger than padded input " + to_string(xs) + " vs " +
                     to_string(ws));
  }
  d.ho = (d.h + 2 * d.pad - d.k) / d.stride + 1;
  d.wo = (d.w + 2 * d.pad - d.k) / d.stride + 1;

  const auto rows = static_cast<Eigen::Index>(d.col_rows());
  const auto cols = static_cast<Eigen::Index>(d.col_cols());
  const auto outc = static_cast<Eigen::Index>(d.o);
  const std::size_t in_stride = d.c * d.h * d.w, out_stride = d.o * d.ho * d.wo;

  std::vector<T> out(d.n * out_stride);
  const T* xd = x.data().data();
  const T* wd = weight.data().data();
  parallel_for(d.n, [&](std::size_t i) {
    std::vector<T> col(d.col_rows() * d.col_cols());
    im2col(xd + i * in_stride, d, col.data());
    Eigen::Map<RowMat<T>>(out.data() + i * out_stride, outc, cols).noalias() =
        Eigen::Map<const RowMat<T>>(wd, outc, rows) *
        Eigen::Map<const RowMat<T>>(col.data(), rows, cols);
  });

  return make_result<T>(
      {d.n, d.o, d.ho, d.wo}, std::move(out), {x, weight}, [d](Node<T>& self) {
        auto& px = parent(self, 0);
        auto& pw = parent(self, 1);
        const auto rows = static_cast<Eigen::Index>(d.col_rows());
        const auto cols = static_cast<Eigen::Index>(d.col_cols());
        const auto outc = static_cast<Eigen::Index>(d.o);
        const std::size_t in_stride = d.c * d.h * d.w, out_stride = d.o * d.ho * d.wo;
        Eigen::Map<const RowMat<T>> w(pw.data.data(), outc, rows);
        if (px.requires_grad) {
          T* gx = px.grad_buffer().data();
          parallel_for(d.n, [&](std::size_t i) {
            std::vector<T> col(d.col_rows() * d.col_cols());
            Eigen::Map<RowMat<T>>(col.data(), rows, cols).noalias() =
                w.transpose() *
                Eigen::Map<const RowMat<T>>(self.grad.data() + i * out_stride, outc, cols);
            col2im_add(col.data(), d, gx + i * in_stride);
          });
        }
        if (pw.requires_grad) {
          Eigen::Map<RowMat<T>> gw(pw.grad_buffer().data(), outc, rows);
          std::vector<T> col(d.col_rows() * d.col_cols());
          for (std::size_t i = 0; i < d.n; ++i) {
            im2col(px.data.data() + i * in_stride, d, col.data());
            gw.noalias() +=
                Eigen::Map<const RowMat<T>>(self.grad.data() + i * out_stride, outc, cols) *
                Eigen::Map<const RowMat<T>>(col.data(), rows, cols).transpose();
          }
        }
      });
}

template <typename T>
BasicTensor<T> max_pool2d(const BasicTensor<T>& x, std::size_t window) {
  const Shape& s = x.shape();
  if (s.size() != 4 || window == 0 || s[2] % window != 0 || s[3] % window != 0) {
    throw ShapeError("max_pool2d: extent " + to_string(s) + " not divisible by window " +
                     std::to_string(window));
  }
  const std::size_t planes = s[0] * s[1], h = s[2], w = s[3];
  const std::size_t ho = h / window, wo = w / window;
  std::vector<T> out(planes * ho * wo);
  std::vector<std::size_t> argmax(out.size());
  auto xd = x.data();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t oy = 0; oy < ho; ++oy)
      for (std::size_t ox = 0; ox < wo; ++ox) {
        std::size_t best = (p * h + oy * window) * w + ox * window;
        for (std::size_t ky = 0; ky < window; ++ky)
          for (std::size_t kx = 0; kx < window; ++kx) {
            const std::size_t idx = (p * h + oy * window + ky) * w + ox * window + kx;
            if (xd[idx] > xd[best]) best = idx;
          }
        const std::size_t o = (p * ho + oy) * wo + ox;
        out[o] = xd[best];
        argmax[o] = best;
      }
  return make_result<T>({s[0], s[1], ho, wo}, std::move(out), {x},
                        [am = std::move(argmax)](Node<T>& self) {
                          auto g = parent(self, 0).grad_buffer();
                          for (std::size_t o = 0; o < am.size(); ++o) g[am[o]] += self.grad[o];
                        });
}

template <typename T>
BasicTensor<T> batch_norm(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                          const BasicTensor<T>& beta, std::span<T> running_mean,
                          std::span<T> running_var, const BatchNormOptions& options) {
  const Shape& s = x.shape();
  const std::size_t axis = options.channel_axis;
  if (axis >= s.size()) throw ShapeError("batch_norm: channel axis out of range for " + to_string(s));
  const std::size_t outer = product(s, 0, axis), channels = s[axis],
                    inner = product(s, axis + 1, s.size());
  if (gamma.shape() != Shape{channels} || beta.shape() != Shape{channels} ||
      running_mean.size() != channels || running_var.size() != channels) {
    throw ShapeError("batch_norm: parameter shape " + to_string(gamma.shape()) +
                     " does not match input " + to_string(s));
  }
  const std::size_t count = outer * inner;
  auto xd = x.data();
  auto gd = gamma.data();
  auto bd = beta.data();

  std::vector<T> mean_c(channels), invstd(channels);
  if (options.training) {
    for (std::size_t c = 0; c < channels; ++c) {
      double acc = 0.0;
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < inner; ++i) acc += xd[(o * channels + c) * inner + i];
      const double mu = acc / static_cast<double>(count);
      double sq = 0.0;
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < inner; ++i) {
          const double diff = xd[(o * channels + c) * inner + i] - mu;
          sq += diff * diff;
        }
      const double var = sq / static_cast<double>(count);
      mean_c[c] = static_cast<T>(mu);
      invstd[c] = static_cast<T>(1.0 / std::sqrt(var + options.eps));
      const double unbiased = count > 1 ? var * static_cast<double>(count) /
                                              static_cast<double>(count - 1)
                                        : var;
      running_mean[c] = static_cast<T>((1.0 - options.momentum) * running_mean[c] +
                                       options.momentum * mu);
      running_var[c] = static_cast<T>((1.0 - options.momentum) * running_var[c] +
                                      options.momentum * unbiased);
    }
  } else {
    for (std::size_t c = 0; c < channels; ++c) {
      mean_c[c] = running_mean[c];
      invstd[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var[c]) + options.eps));
    }
  }

  std::vector<T> xhat(x.numel()), out(x.numel());
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t i = 0; i < inner; ++i) {
        const std::size_t idx = (o * channels + c) * inner + i;
        xhat[idx] = (xd[idx] - mean_c[c]) * invstd[c];
        out[idx] = gd[c] * xhat[idx] + bd[c];
      }

  const bool training = options.training;
  return make_result<T>(
      s, std::move(out), {x, gamma, beta},
      [=, xhat = std::move(xhat), invstd = std::move(invstd)](Node<T>& self) {
        auto& px = parent(self, 0);
        auto& pg = parent(self, 1);
        auto& pb = parent(self, 2);
        const auto& g = self.grad;
        std::vector<double> sum_g(channels, 0.0), sum_gx(channels, 0.0);
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t i = 0; i < inner; ++i) {
              const std::size_t idx = (o * channels + c) * inner + i;
              sum_g[c] += g[idx];
              sum_gx[c] += static_cast<double>(g[idx]) * xhat[idx];
            }
        if (pg.requires_grad) {
          auto gg = pg.grad_buffer();
          for (std::size_t c = 0; c < channels; ++c) gg[c] += static_cast<T>(sum_gx[c]);
        }
        if (pb.requires_grad) {
          auto gb = pb.grad_buffer();
          for (std::size_t c = 0; c < channels; ++c) gb[c] += static_cast<T>(sum_g[c]);
        }
        if (px.requires_grad) {
          auto gx = px.grad_buffer();
          const double m = static_cast<double>(count);
          for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t c = 0; c < channels; ++c) {
              const double k = static_cast<double>(pg.data[c]) * invstd[c];
              for (std::size_t i = 0; i < inner; ++i) {
                const std::size_t idx = (o * channels + c) * inner + i;
                if (training) {
                  gx[idx] += static_cast<T>(
                      k / m * (m * g[idx] - sum_g[c] - xhat[idx] * sum_gx[c]));
                } else {
                  gx[idx] += static_cast<T>(k * g[idx]);
                }
              }
            }
        }
      });
}

template <typename T>
BasicTensor<T> channel_affine(const BasicTensor<T>& x, std::span<const T> scale_c,
                              std::span<const T> shift_c) {
  const Shape& s = x.shape();
  if (s.size() < 2 || scale_c.size() != s[1] || shift_c.size() != s[1]) {
    throw ShapeError("channel_affine: " + std::to_string(scale_c.size()) +
                     " coefficients for input " + to_string(s));
  }
  const std::size_t outer = s[0], channels = s[1], inner = product(s, 2, s.size());
  std::vector<T> k(scale_c.begin(), scale_c.end());
  std::vector<T> out(x.numel());
  auto xd = x.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t i = 0; i < inner; ++i) {
        const std::size_t idx = (o * channels + c) * inner + i;
        out[idx] = xd[idx] * k[c] + shift_c[c];
      }
  return make_result<T>(s, std::move(out), {x},
                        [outer, channels, inner, k = std::move(k)](Node<T>& self) {
                          auto g = parent(self, 0).grad_buffer();
                          for (std::size_t o = 0; o < outer; ++o)
                            for (std::size_t c = 0; c < channels; ++c)
                              for (std::size_t i = 0; i < inner; ++i) {
                                const std::size_t idx = (o * channels + c) * inner + i;
                                g[idx] += self.grad[idx] * k[c];
                              }
                        });
}

template <typename T>
BasicTensor<T> cross_entropy(const BasicTensor<T>& logits, std::span<const int> labels) {
  const Shape& s = logits.shape();
  if (s.size() != 2 || labels.size() != s[0]) {
    throw ShapeError("cross_entropy: logits " + to_string(s) + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t batch = s[0], classes = s[1];
  auto z = logits.data();
  std::vector<T> probs(logits.numel());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const int y = labels[b];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw std::invalid_argument("cross_entropy: label " + std::to_string(y) + " out of range");
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < classes; ++k) mx = std::max(mx, static_cast<double>(z[b * classes + k]));
    double denom = 0.0;
    for (std::size_t k = 0; k < classes; ++k) denom += std::exp(z[b * classes + k] - mx);
    for (std::size_t k = 0; k < classes; ++k)
      probs[b * classes + k] = static_cast<T>(std::exp(z[b * classes + k] - mx) / denom);
    loss += -(z[b * classes + static_cast<std::size_t>(y)] - mx - std::log(denom));
  }
  loss /= static_cast<double>(batch);
  std::vector<int> ys(labels.begin(), labels.end());
  return make_result<T>({1}, {static_cast<T>(loss)}, {logits},
                        [batch, classes, probs = std::move(probs), ys = std::move(ys)](Node<T>& self) {
                          auto g = parent(self, 0).grad_buffer();
                          const T scale_factor = self.grad[0] / static_cast<T>(batch);
                          for (std::size_t b = 0; b < batch; ++b)
                            for (std::size_t k = 0; k < classes; ++k) {
                              T p = probs[b * classes + k];
                              if (static_cast<int>(k) == ys[b]) p -= T{1};
                              g[b * classes + k] += p * scale_factor;
                            }
                        });
}

template <typename T>
BasicTensor<T> heaviside(const BasicTensor<T>& x, const SurrogateSpec& spec) {
  spec.validate();
  std::vector<T> out(x.numel());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] >= T{0} ? T{1} : T{0};
  return make_result<T>(x.shape(), std::move(out), {x}, [spec](Node<T>& self) {
    auto& px = parent(self, 0);
    auto g = px.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += self.grad[i] * static_cast<T>(surrogate_derivative(spec, px.data[i]));
  });
}

template <typename T>
BasicTensor<T> arctan_sigmoid(const BasicTensor<T>& x, const SurrogateSpec& spec) {
  spec.validate();
  std::vector<T> out(x.numel());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<T>(std::atan(std::numbers::pi * spec.alpha * xd[i] / 2.0) /
                                std::numbers::pi +
                            0.5);
  }
  return make_result<T>(x.shape(), std::move(out), {x}, [spec](Node<T>& self) {
    auto& px = parent(self, 0);
    auto g = px.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += self.grad[i] * static_cast<T>(surrogate_derivative(spec, px.data[i]));
  });
}

SpikeTensor heaviside_surrogate(const Tensor& x, const SurrogateSpec& spec) {
  return SpikeTensor::trusted(heaviside(x, spec));
}

template <typename T>
BasicTensor<T> spike_or(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "spike_or");
  std::vector<T> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i] - x[i] * y[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    auto& pa = parent(self, 0);
    auto& pb = parent(self, 1);
    if (pa.requires_grad) {
      auto g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * (T{1} - pb.data[i]);
    }
    if (pb.requires_grad) {
      auto g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * (T{1} - pa.data[i]);
    }
  });
}

template <typename T>
BasicTensor<T> lif_charge(const BasicTensor<T>& u, const BasicTensor<T>& input, T tau_m,
                          T u_reset, IntegrationForm form) {
  require_same_shape(u.shape(), input.shape(), "lif_charge");
  const T decay = T{1} - T{1} / tau_m;
  std::vector<T> out(u.numel());
  auto ud = u.data(), id = input.data();
  T du, di;
  if (form == IntegrationForm::leaky_input) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ud[i] + (id[i] - (ud[i] - u_reset)) / tau_m;
    du = decay;
    di = T{1} / tau_m;
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = u_reset + decay * (ud[i] - u_reset) + id[i];
    du = decay;
    di = T{1};
  }
  return make_result<T>(u.shape(), std::move(out), {u, input}, [du, di](Node<T>& self) {
    auto& pu = parent(self, 0);
    auto& pi = parent(self, 1);
    if (pu.requires_grad) {
      auto g = pu.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * du;
    }
    if (pi.requires_grad) {
      auto g = pi.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * di;
    }
  });
}

template <typename T>
BasicTensor<T> lif_reset(const BasicTensor<T>& h, const BasicTensor<T>& s, T u_reset) {
  require_same_shape(h.shape(), s.shape(), "lif_reset");
  std::vector<T> out(h.numel());
  auto hd = h.data(), sd = s.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = hd[i] * (T{1} - sd[i]) + u_reset * sd[i];
  return make_result<T>(h.shape(), std::move(out), {h, s}, [u_reset](Node<T>& self) {
    auto& ph = parent(self, 0);
    auto& ps = parent(self, 1);
    if (ph.requires_grad) {
      auto g = ph.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * (T{1} - ps.data[i]);
    }
    if (ps.requires_grad) {
      auto g = ps.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * (u_reset - ph.data[i]);
    }
  });
}

#define STF_INSTANTIATE_OPS(T)                                                                  \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                    \
  template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);                    \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                    \
  template BasicTensor<T> scale(const BasicTensor<T>&, T);                                      \
  template BasicTensor<T> add_scalar(const BasicTensor<T>&, T);                                 \
  template BasicTensor<T> sum(const BasicTensor<T>&);                                           \
  template BasicTensor<T> mean(const BasicTensor<T>&);                                          \
  template BasicTensor<T> mean_axis(const BasicTensor<T>&, std::size_t);                        \
  template BasicTensor<T> reshape(const BasicTensor<T>&, Shape);                                \
  template BasicTensor<T> permute(const BasicTensor<T>&, const std::vector<std::size_t>&);      \
  template BasicTensor<T> slice_leading(const BasicTensor<T>&, std::size_t, std::size_t);       \
  template BasicTensor<T> concat_leading(const std::vector<BasicTensor<T>>&);                   \
  template BasicTensor<T> repeat_leading(const BasicTensor<T>&, std::size_t);                   \
  template BasicTensor<T> add_broadcast_axis1(const BasicTensor<T>&, const BasicTensor<T>&);    \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);                 \
  template BasicTensor<T> bmm(const BasicTensor<T>&, const BasicTensor<T>&);                    \
  template BasicTensor<T> add_bias(const BasicTensor<T>&, const BasicTensor<T>&);               \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&, Conv2dGeometry); \
  template BasicTensor<T> max_pool2d(const BasicTensor<T>&, std::size_t);                       \
  template BasicTensor<T> batch_norm(const BasicTensor<T>&, const BasicTensor<T>&,              \
                                     const BasicTensor<T>&, std::span<T>, std::span<T>,         \
                                     const BatchNormOptions&);                                  \
  template BasicTensor<T> channel_affine(const BasicTensor<T>&, std::span<const T>,             \
                                         std::span<const T>);                                   \
  template BasicTensor<T> cross_entropy(const BasicTensor<T>&, std::span<const int>);           \
  template BasicTensor<T> heaviside(const BasicTensor<T>&, const SurrogateSpec&);               \
  template BasicTensor<T> arctan_sigmoid(const BasicTensor<T>&, const SurrogateSpec&);          \
  template BasicTensor<T> spike_or(const BasicTensor<T>&, const BasicTensor<T>&);               \
  template BasicTensor<T> lif_charge(const BasicTensor<T>&, const BasicTensor<T>&, T, T,        \
                                     IntegrationForm);                                          \
  template BasicTensor<T> lif_reset(const BasicTensor<T>&, const BasicTensor<T>&, T);

STF_INSTANTIATE_OPS(float)
STF_INSTANTIATE_OPS(double)

#undef STF_INSTANTIATE_OPS

}  // namespace stf
