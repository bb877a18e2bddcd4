#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "inb/tensor.hpp"

namespace inb {

/// Activation kinds. `kIdentity` is used for the logits layer only and is
/// not accepted by parse_activation.
enum class Activation : std::uint8_t { kIdentity = 0, kRelu = 1, kSigmoid = 2, kTanh = 3 };

enum class Padding : std::uint8_t { kSame = 0, kValid = 1 };

Activation parse_activation(std::string_view name);
std::string to_string(Activation kind);
Padding parse_padding(std::string_view name);
std::string to_string(Padding padding);

namespace ops {

// Matrix products. Each output element is accumulated left to right over the
// contraction index, so results are deterministic.

/// a[r,c] * b[c,k] -> [r,k]
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
/// a[r,c] * b[k,c]^T -> [r,k]
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b);
/// a[c,r]^T * b[c,k] -> [r,k]
template <typename T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
struct MatmulGrads {
  Tensor<T> a;
  Tensor<T> b;
};
/// Gradients of sum(upstream .* (a*b)) with respect to a and b.
template <typename T>
MatmulGrads<T> matmul_vjp(const Tensor<T>& a, const Tensor<T>& b, const Tensor<T>& upstream);

/// Output spatial extent for one axis.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride, Padding padding);
/// Leading (top/left) padding for one axis. SAME puts the odd cell last.
std::size_t conv_leading_pad(std::size_t in, std::size_t kernel, std::size_t stride, Padding padding);

/// Cross-correlation of input[B,C,H,W] with filters[O,C,kh,kw].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& filters, std::size_t stride, Padding padding);

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> filters;
};
template <typename T>
ConvGrads<T> conv2d_vjp(const Tensor<T>& input, const Tensor<T>& filters, std::size_t stride,
                        Padding padding, const Tensor<T>& upstream, bool need_input_grad = true);

/// Max pooling with SAME padding; padded cells never win.
template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& input, std::size_t window, std::size_t stride);
/// Routes each upstream value to the first maximal cell of its window.
template <typename T>
Tensor<T> maxpool2d_vjp(const Tensor<T>& input, std::size_t window, std::size_t stride,
                        const Tensor<T>& upstream);

/// input[B,C,H,W] -> [B,C], mean over H and W.
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input);
template <typename T>
Tensor<T> global_avg_pool_vjp(const Shape& input_shape, const Tensor<T>& upstream);

template <typename T>
T activate(Activation kind, T x);
template <typename T>
Tensor<T> activation(Activation kind, const Tensor<T>& x);
/// `x` is the activation input (pre-activation).
template <typename T>
Tensor<T> activation_vjp(Activation kind, const Tensor<T>& x, const Tensor<T>& upstream);

template <typename T>
struct SoftmaxLoss {
  T loss;           // mean negative log-likelihood
  Tensor<T> probs;  // [B,K]
};
template <typename T>
SoftmaxLoss<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const std::uint8_t> labels);
/// Gradient of the mean loss with respect to the logits.
template <typename T>
Tensor<T> softmax_cross_entropy_vjp(const Tensor<T>& probs, std::span<const std::uint8_t> labels);

/// Adds bias[c] to every element of channel c. x is [B,C,...].
template <typename T>
void add_channel_bias(Tensor<T>& x, const Tensor<T>& bias);
/// Sums upstream[B,C,...] over everything except the channel axis.
template <typename T>
Tensor<T> channel_bias_vjp(const Tensor<T>& upstream);

}  // namespace ops
}  // namespace inb
