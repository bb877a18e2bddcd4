#include "inb/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "inb/errors.hpp"

namespace inb {

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation '" + std::string(name) + "' (expected relu, sigmoid or tanh)");
}

std::string to_string(Activation kind) {
  switch (kind) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanh: return "tanh";
  }
  throw ConfigError("invalid activation value " + std::to_string(static_cast<int>(kind)));
}

Padding parse_padding(std::string_view name) {
  if (name == "same") return Padding::kSame;
  if (name == "valid") return Padding::kValid;
  throw ConfigError("unknown padding '" + std::string(name) + "'");
}

std::string to_string(Padding padding) { return padding == Padding::kSame ? "same" : "valid"; }

namespace ops {
namespace {

void require_rank(const Shape& shape, std::size_t rank, const char* what) {
  if (shape.size() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got shape " +
                     shape_to_string(shape));
  }
}

// out[r,k] += a[r,c] * b[c,k]; zero entries of `a` are skipped, which leaves
// every finite result unchanged.
template <typename T>
void gemm_nn(const T* a, const T* b, T* out, std::size_t r, std::size_t c, std::size_t k) {
  for (std::size_t i = 0; i < r; ++i) {
    T* orow = out + i * k;
    const T* arow = a + i * c;
    for (std::size_t p = 0; p < c; ++p) {
      const T av = arow[p];
      if (av == T{0}) continue;
      const T* brow = b + p * k;
      for (std::size_t j = 0; j < k; ++j) orow[j] += av * brow[j];
    }
  }
}

// out[r,k] += a[c,r]^T * b[c,k]
template <typename T>
void gemm_tn(const T* a, const T* b, T* out, std::size_t c, std::size_t r, std::size_t k) {
  for (std::size_t p = 0; p < c; ++p) {
    const T* arow = a + p * r;
    const T* brow = b + p * k;
    for (std::size_t i = 0; i < r; ++i) {
      const T av = arow[i];
      if (av == T{0}) continue;
      T* orow = out + i * k;
      for (std::size_t j = 0; j < k; ++j) orow[j] += av * brow[j];
    }
  }
}

template <typename T>
Tensor<T> transpose2d(const Tensor<T>& m) {
  const std::size_t r = m.dim(0), c = m.dim(1);
  Tensor<T> out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = m[i * c + j];
  return out;
}

struct ConvGeometry {
  std::size_t batch, channels, height, width;
  std::size_t out_channels, kh, kw;
  std::size_t out_h, out_w, pad_top, pad_left, stride;
  std::size_t patch() const { return channels * kh * kw; }
  std::size_t positions() const { return out_h * out_w; }
};

template <typename T>
ConvGeometry conv_geometry(const Tensor<T>& input, const Tensor<T>& filters, std::size_t stride,
                           Padding padding) {
  require_rank(input.shape(), 4, "conv2d input");
  require_rank(filters.shape(), 4, "conv2d filters");
  if (stride == 0) throw ShapeError("conv2d: stride must be >= 1");
  if (input.dim(1) != filters.dim(1)) {
    throw ShapeError("conv2d: input " + shape_to_string(input.shape()) + " and filters " +
                     shape_to_string(filters.shape()) + " disagree on channel count");
  }
  ConvGeometry g{};
  g.batch = input.dim(0);
  g.channels = input.dim(1);
  g.height = input.dim(2);
  g.width = input.dim(3);
  g.out_channels = filters.dim(0);
  g.kh = filters.dim(2);
  g.kw = filters.dim(3);
  g.stride = stride;
  g.out_h = conv_output_extent(g.height, g.kh, stride, padding);
  g.out_w = conv_output_extent(g.width, g.kw, stride, padding);
  g.pad_top = conv_leading_pad(g.height, g.kh, stride, padding);
  g.pad_left = conv_leading_pad(g.width, g.kw, stride, padding);
  return g;
}

template <typename T>
void im2col(const ConvGeometry& g, const T* image, T* cols) {
  const std::size_t positions = g.positions();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t dy = 0; dy < g.kh; ++dy) {
      for (std::size_t dx = 0; dx < g.kw; ++dx) {
        T* row = cols + ((c * g.kh + dy) * g.kw + dx) * positions;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * g.stride + dy) -
                                   static_cast<std::ptrdiff_t>(g.pad_top);
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox * g.stride + dx) -
                                     static_cast<std::ptrdiff_t>(g.pad_left);
            const bool inside = y >= 0 && x >= 0 && y < static_cast<std::ptrdiff_t>(g.height) &&
                                x < static_cast<std::ptrdiff_t>(g.width);
            row[oy * g.out_w + ox] = inside ? image[(c * g.height + y) * g.width + x] : T{0};
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const ConvGeometry& g, const T* cols, T* image) {
  const std::size_t positions = g.positions();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t dy = 0; dy < g.kh; ++dy) {
      for (std::size_t dx = 0; dx < g.kw; ++dx) {
        const T* row = cols + ((c * g.kh + dy) * g.kw + dx) * positions;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * g.stride + dy) -
                                   static_cast<std::ptrdiff_t>(g.pad_top);
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.height)) continue;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox * g.stride + dx) -
                                     static_cast<std::ptrdiff_t>(g.pad_left);
            if (x < 0 || x >= static_cast<std::ptrdiff_t>(g.width)) continue;
            image[(c * g.height + y) * g.width + x] += row[oy * g.out_w + ox];
          }
        }
      }
    }
  }
}

struct PoolGeometry {
  std::size_t out_h, out_w, pad_top, pad_left;
};

PoolGeometry pool_geometry(const Shape& shape, std::size_t window, std::size_t stride) {
  require_rank(shape, 4, "maxpool2d input");
  if (window == 0 || stride == 0) throw ShapeError("maxpool2d: window and stride must be positive");
  PoolGeometry g{};
  g.out_h = conv_output_extent(shape[2], window, stride, Padding::kSame);
  g.out_w = conv_output_extent(shape[3], window, stride, Padding::kSame);
  g.pad_top = conv_leading_pad(shape[2], window, stride, Padding::kSame);
  g.pad_left = conv_leading_pad(shape[3], window, stride, Padding::kSame);
  return g;
}

// Calls visit(out_index, argmax_input_index) for every pooled cell.
template <typename T, typename Visit>
void for_each_pool_window(const Tensor<T>& input, std::size_t window, std::size_t stride, Visit visit) {
  const auto g = pool_geometry(input.shape(), window, stride);
  const std::size_t planes = input.dim(0) * input.dim(1);
  const auto h = static_cast<std::ptrdiff_t>(input.dim(2));
  const auto w = static_cast<std::ptrdiff_t>(input.dim(3));
  std::size_t out_index = 0;
  for (std::size_t plane = 0; plane < planes; ++plane) {
    const std::size_t base = plane * input.dim(2) * input.dim(3);
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      const auto y0 = static_cast<std::ptrdiff_t>(oy * stride) - static_cast<std::ptrdiff_t>(g.pad_top);
      for (std::size_t ox = 0; ox < g.out_w; ++ox, ++out_index) {
        const auto x0 = static_cast<std::ptrdiff_t>(ox * stride) - static_cast<std::ptrdiff_t>(g.pad_left);
        T best = -std::numeric_limits<T>::infinity();
        std::size_t best_index = base;
        bool found = false;
        for (std::ptrdiff_t y = std::max<std::ptrdiff_t>(y0, 0);
             y < std::min<std::ptrdiff_t>(y0 + static_cast<std::ptrdiff_t>(window), h); ++y) {
          for (std::ptrdiff_t x = std::max<std::ptrdiff_t>(x0, 0);
               x < std::min<std::ptrdiff_t>(x0 + static_cast<std::ptrdiff_t>(window), w); ++x) {
            const std::size_t idx = base + static_cast<std::size_t>(y * w + x);
            if (!found || input[idx] > best) {
              best = input[idx];
              best_index = idx;
              found = true;
            }
          }
        }
        visit(out_index, best_index);
      }
    }
  }
}

}  // namespace

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride, Padding padding) {
  if (stride == 0 || kernel == 0) throw ShapeError("kernel and stride must be positive");
  if (padding == Padding::kSame) return (in + stride - 1) / stride;
  if (kernel > in) {
    throw ShapeError("kernel extent " + std::to_string(kernel) + " exceeds input extent " +
                     std::to_string(in) + " under VALID padding");
  }
  return (in - kernel) / stride + 1;
}

std::size_t conv_leading_pad(std::size_t in, std::size_t kernel, std::size_t stride, Padding padding) {
  if (padding == Padding::kValid) return 0;
  const std::size_t out = conv_output_extent(in, kernel, stride, padding);
  const std::size_t needed = (out - 1) * stride + kernel;
  const std::size_t total = needed > in ? needed - in : 0;
  return total / 2;
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a.shape(), 2, "matmul lhs");
  require_rank(b.shape(), 2, "matmul rhs");
  if (a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: inner dimensions disagree for " + shape_to_string(a.shape()) + " x " +
                     shape_to_string(b.shape()));
  }
  Tensor<T> out({a.dim(0), b.dim(1)});
  gemm_nn(a.data().data(), b.data().data(), out.data().data(), a.dim(0), a.dim(1), b.dim(1));
  require_finite(out, "matmul");
  return out;
}

template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a.shape(), 2, "matmul_nt lhs");
  require_rank(b.shape(), 2, "matmul_nt rhs");
  if (a.dim(1) != b.dim(1)) {
    throw ShapeError("matmul_nt: inner dimensions disagree for " + shape_to_string(a.shape()) + " x " +
                     shape_to_string(b.shape()) + "^T");
  }
  return matmul(a, transpose2d(b));
}

template <typename T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a.shape(), 2, "matmul_tn lhs");
  require_rank(b.shape(), 2, "matmul_tn rhs");
  if (a.dim(0) != b.dim(0)) {
    throw ShapeError("matmul_tn: inner dimensions disagree for " + shape_to_string(a.shape()) + "^T x " +
                     shape_to_string(b.shape()));
  }
  Tensor<T> out({a.dim(1), b.dim(1)});
  gemm_tn(a.data().data(), b.data().data(), out.data().data(), a.dim(0), a.dim(1), b.dim(1));
  require_finite(out, "matmul_tn");
  return out;
}

template <typename T>
MatmulGrads<T> matmul_vjp(const Tensor<T>& a, const Tensor<T>& b, const Tensor<T>& upstream) {
  if (upstream.shape() != Shape{a.dim(0), b.dim(1)}) {
    throw ShapeError("matmul_vjp: upstream " + shape_to_string(upstream.shape()) + " does not match output [" +
                     std::to_string(a.dim(0)) + "," + std::to_string(b.dim(1)) + "]");
  }
  return {matmul_nt(upstream, b), matmul_tn(a, upstream)};
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& filters, std::size_t stride, Padding padding) {
  const auto g = conv_geometry(input, filters, stride, padding);
  Tensor<T> out({g.batch, g.out_channels, g.out_h, g.out_w});
  std::vector<T> cols(g.patch() * g.positions());
  const std::size_t in_stride = g.channels * g.height * g.width;
  const std::size_t out_stride = g.out_channels * g.positions();
  for (std::size_t b = 0; b < g.batch; ++b) {
    im2col(g, input.data().data() + b * in_stride, cols.data());
    gemm_nn(filters.data().data(), cols.data(), out.data().data() + b * out_stride, g.out_channels,
            g.patch(), g.positions());
  }
  require_finite(out, "conv2d");
  return out;
}

template <typename T>
ConvGrads<T> conv2d_vjp(const Tensor<T>& input, const Tensor<T>& filters, std::size_t stride,
                        Padding padding, const Tensor<T>& upstream, bool need_input_grad) {
  const auto g = conv_geometry(input, filters, stride, padding);
  if (upstream.shape() != Shape{g.batch, g.out_channels, g.out_h, g.out_w}) {
    throw ShapeError("conv2d_vjp: upstream shape " + shape_to_string(upstream.shape()) + " does not match output");
  }
  ConvGrads<T> grads{need_input_grad ? Tensor<T>(input.shape()) : Tensor<T>(), Tensor<T>(filters.shape())};
  const std::size_t patch = g.patch(), positions = g.positions();
  std::vector<T> cols(patch * positions);
  std::vector<T> grad_cols(need_input_grad ? patch * positions : 0);
  const std::size_t in_stride = g.channels * g.height * g.width;
  const std::size_t out_stride = g.out_channels * positions;
  T* gf = grads.filters.data().data();
  for (std::size_t b = 0; b < g.batch; ++b) {
    const T* gout = upstream.data().data() + b * out_stride;
    im2col(g, input.data().data() + b * in_stride, cols.data());
    // filter grad: gout[O,P] * cols[Q,P]^T
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      const T* grow = gout + o * positions;
      for (std::size_t q = 0; q < patch; ++q) {
        const T* crow = cols.data() + q * positions;
        T acc{0};
        for (std::size_t s = 0; s < positions; ++s) acc += grow[s] * crow[s];
        gf[o * patch + q] += acc;
      }
    }
    if (need_input_grad) {
      std::fill(grad_cols.begin(), grad_cols.end(), T{0});
      gemm_tn(filters.data().data(), gout, grad_cols.data(), g.out_channels, patch, positions);
      col2im(g, grad_cols.data(), grads.input.data().data() + b * in_stride);
    }
  }
  return grads;
}

template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& input, std::size_t window, std::size_t stride) {
  const auto g = pool_geometry(input.shape(), window, stride);
  Tensor<T> out({input.dim(0), input.dim(1), g.out_h, g.out_w});
  for_each_pool_window(input, window, stride,
                       [&](std::size_t o, std::size_t i) { out[o] = input[i]; });
  return out;
}

template <typename T>
Tensor<T> maxpool2d_vjp(const Tensor<T>& input, std::size_t window, std::size_t stride,
                        const Tensor<T>& upstream) {
  const auto g = pool_geometry(input.shape(), window, stride);
  if (upstream.shape() != Shape{input.dim(0), input.dim(1), g.out_h, g.out_w}) {
    throw ShapeError("maxpool2d_vjp: upstream shape " + shape_to_string(upstream.shape()) + " does not match output");
  }
  Tensor<T> grad(input.shape());
  for_each_pool_window(input, window, stride,
                       [&](std::size_t o, std::size_t i) { grad[i] += upstream[o]; });
  return grad;
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input) {
  require_rank(input.shape(), 4, "global_avg_pool input");
  const std::size_t planes = input.dim(0) * input.dim(1);
  const std::size_t area = input.dim(2) * input.dim(3);
  if (area == 0) throw ShapeError("global_avg_pool: empty spatial extent");
  Tensor<T> out({input.dim(0), input.dim(1)});
  for (std::size_t p = 0; p < planes; ++p) {
    T sum{0};
    for (std::size_t s = 0; s < area; ++s) sum += input[p * area + s];
    out[p] = sum / static_cast<T>(area);
  }
  return out;
}

template <typename T>
Tensor<T> global_avg_pool_vjp(const Shape& input_shape, const Tensor<T>& upstream) {
  require_rank(input_shape, 4, "global_avg_pool_vjp input");
  if (upstream.shape() != Shape{input_shape[0], input_shape[1]}) {
    throw ShapeError("global_avg_pool_vjp: upstream shape " + shape_to_string(upstream.shape()) +
                     " does not match " + shape_to_string(input_shape));
  }
  const std::size_t area = input_shape[2] * input_shape[3];
  Tensor<T> grad(input_shape);
  for (std::size_t p = 0; p < upstream.size(); ++p) {
    const T v = upstream[p] / static_cast<T>(area);
    for (std::size_t s = 0; s < area; ++s) grad[p * area + s] = v;
  }
  return grad;
}

template <typename T>
T activate(Activation kind, T x) {
  switch (kind) {
    case Activation::kIdentity: return x;
    case Activation::kRelu: return x > T{0} ? x : T{0};
    case Activation::kSigmoid:
      if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
      else {
        const T e = std::exp(x);
        return e / (T{1} + e);
      }
    case Activation::kTanh: return std::tanh(x);
  }
  throw ConfigError("invalid activation value " + std::to_string(static_cast<int>(kind)));
}

template <typename T>
Tensor<T> activation(Activation kind, const Tensor<T>& x) {
  if (kind == Activation::kIdentity) return x;
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = activate(kind, x[i]);
  return out;
}

template <typename T>
Tensor<T> activation_vjp(Activation kind, const Tensor<T>& x, const Tensor<T>& upstream) {
  if (x.shape() != upstream.shape()) {
    throw ShapeError("activation_vjp: input " + shape_to_string(x.shape()) + " vs upstream " +
                     shape_to_string(upstream.shape()));
  }
  Tensor<T> grad(x.shape());
  switch (kind) {
    case Activation::kIdentity: return upstream;
    case Activation::kRelu:
      for (std::size_t i = 0; i < x.size(); ++i) grad[i] = x[i] > T{0} ? upstream[i] : T{0};
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < x.size(); ++i) {
        const T s = activate(Activation::kSigmoid, x[i]);
        grad[i] = upstream[i] * s * (T{1} - s);
      }
      break;
    case Activation::kTanh:
      for (std::size_t i = 0; i < x.size(); ++i) {
        const T t = std::tanh(x[i]);
        grad[i] = upstream[i] * (T{1} - t * t);
      }
      break;
  }
  return grad;
}

template <typename T>
SoftmaxLoss<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const std::uint8_t> labels) {
  require_rank(logits.shape(), 2, "softmax_cross_entropy logits");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != batch) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                     std::to_string(batch));
  }
  require_finite(logits, "softmax_cross_entropy logits");
  SoftmaxLoss<T> result{T{0}, Tensor<T>(logits.shape())};
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    if (labels[b] >= classes) {
      throw ShapeError("softmax_cross_entropy: label " + std::to_string(labels[b]) + " outside [0," +
                       std::to_string(classes) + ")");
    }
    const T* row = logits.data().data() + b * classes;
    T* prow = result.probs.data().data() + b * classes;
    const T peak = *std::max_element(row, row + classes);
    T sum{0};
    for (std::size_t c = 0; c < classes; ++c) {
      prow[c] = std::exp(row[c] - peak);
      sum += prow[c];
    }
    for (std::size_t c = 0; c < classes; ++c) prow[c] /= sum;
    total += -static_cast<double>(row[labels[b]] - peak - std::log(sum));
  }
  result.loss = batch ? static_cast<T>(total / static_cast<double>(batch)) : T{0};
  return result;
}

template <typename T>
Tensor<T> softmax_cross_entropy_vjp(const Tensor<T>& probs, std::span<const std::uint8_t> labels) {
  require_rank(probs.shape(), 2, "softmax_cross_entropy_vjp probs");
  const std::size_t batch = probs.dim(0), classes = probs.dim(1);
  if (labels.size() != batch) throw ShapeError("softmax_cross_entropy_vjp: label count mismatch");
  Tensor<T> grad(probs.shape());
  const T scale = T{1} / static_cast<T>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < classes; ++c) {
      const T target = c == labels[b] ? T{1} : T{0};
      grad[b * classes + c] = (probs[b * classes + c] - target) * scale;
    }
  }
  return grad;
}

template <typename T>
void add_channel_bias(Tensor<T>& x, const Tensor<T>& bias) {
  if (x.rank() < 2 || x.dim(1) != bias.size()) {
    throw ShapeError("add_channel_bias: bias " + shape_to_string(bias.shape()) + " vs input " +
                     shape_to_string(x.shape()));
  }
  const std::size_t batch = x.dim(0), channels = x.dim(1);
  const std::size_t inner = batch * channels != 0 ? x.size() / (batch * channels) : 0;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c) {
      T* p = x.data().data() + (b * channels + c) * inner;
      for (std::size_t s = 0; s < inner; ++s) p[s] += bias[c];
    }
}

template <typename T>
Tensor<T> channel_bias_vjp(const Tensor<T>& upstream) {
  const std::size_t batch = upstream.dim(0), channels = upstream.dim(1);
  const std::size_t inner = batch * channels != 0 ? upstream.size() / (batch * channels) : 0;
  Tensor<T> grad({channels});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c) {
      const T* p = upstream.data().data() + (b * channels + c) * inner;
      for (std::size_t s = 0; s < inner; ++s) grad[c] += p[s];
    }
  return grad;
}

#define INB_INSTANTIATE_OPS(T)                                                                        \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> matmul_nt(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> matmul_tn(const Tensor<T>&, const Tensor<T>&);                                   \
  template MatmulGrads<T> matmul_vjp(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, std::size_t, Padding);                \
  template ConvGrads<T> conv2d_vjp(const Tensor<T>&, const Tensor<T>&, std::size_t, Padding,          \
                                   const Tensor<T>&, bool);                                           \
  template Tensor<T> maxpool2d(const Tensor<T>&, std::size_t, std::size_t);                           \
  template Tensor<T> maxpool2d_vjp(const Tensor<T>&, std::size_t, std::size_t, const Tensor<T>&);     \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                                               \
  template Tensor<T> global_avg_pool_vjp(const Shape&, const Tensor<T>&);                             \
  template T activate(Activation, T);                                                                 \
  template Tensor<T> activation(Activation, const Tensor<T>&);                                        \
  template Tensor<T> activation_vjp(Activation, const Tensor<T>&, const Tensor<T>&);                  \
  template SoftmaxLoss<T> softmax_cross_entropy(const Tensor<T>&, std::span<const std::uint8_t>);     \
  template Tensor<T> softmax_cross_entropy_vjp(const Tensor<T>&, std::span<const std::uint8_t>);      \
  template void add_channel_bias(Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> channel_bias_vjp(const Tensor<T>&);

INB_INSTANTIATE_OPS(float)
INB_INSTANTIATE_OPS(double)

#undef INB_INSTANTIATE_OPS

}  // namespace ops
}  // namespace inb
