#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "inb/bagging.hpp"
#include "inb/ops.hpp"
#include "inb/rng.hpp"
#include "inb/tensor.hpp"

namespace inb {

/// A trainable tensor together with its gradient. For grouped layers
/// `groups`/`members` describe the leading [k, n] layout so optimizer state
/// can be averaged the same way as the weights.
template <typename T>
struct ParamRef {
  Tensor<T>* value = nullptr;
  Tensor<T>* grad = nullptr;
  std::size_t groups = 0;
  std::size_t members = 0;
  std::string name;
};

/// Fully connected layer, one node per output. Inputs of any rank are
/// flattened to [batch, fan_in].
template <typename T>
class DensePlain {
 public:
  DensePlain() = default;
  /// weights [outputs, fan_in], biases [outputs]
  DensePlain(Tensor<T> weights, Tensor<T> biases, Activation activation);

  /// Uniform in +-sqrt(6 / (fan_in + outputs)); zero biases.
  static DensePlain initialize(std::size_t fan_in, std::size_t outputs, Activation activation, Rng& rng);

  Tensor<T> forward(const Tensor<T>& input) const;
  Tensor<T> forward_train(const Tensor<T>& input);
  /// Consumes the recorded forward state; fills the parameter gradients and
  /// returns the input gradient (empty when need_input_grad is false).
  Tensor<T> backward(const Tensor<T>& upstream, bool need_input_grad = true);

  bool has_record() const { return record_.has_value(); }
  std::vector<ParamRef<T>> parameters();
  std::size_t parameter_count() const { return weights_.size() + biases_.size(); }

  const Tensor<T>& weights() const { return weights_; }
  const Tensor<T>& biases() const { return biases_; }
  Tensor<T>& weights() { return weights_; }
  Tensor<T>& biases() { return biases_; }
  const Tensor<T>& weight_grad() const { return weight_grad_; }
  const Tensor<T>& bias_grad() const { return bias_grad_; }
  Activation activation() const { return activation_; }
  std::size_t fan_in() const { return weights_.dim(1); }
  std::size_t outputs() const { return weights_.dim(0); }

  Tensor<T> pre_activation(const Tensor<T>& input) const;

 private:
  struct Record {
    Shape input_shape;
    Tensor<T> input;  // [batch, fan_in]
    Tensor<T> pre;
  };

  Tensor<T> weights_;
  Tensor<T> biases_;
  Tensor<T> weight_grad_;
  Tensor<T> bias_grad_;
  Activation activation_ = Activation::kRelu;
  std::optional<Record> record_;
};

/// k groups of n member nodes. Member j of group i is row i*n+j of the
/// underlying member layer; weights read as [k, n, fan_in].
template <typename T>
class DenseGrouped {
 public:
  DenseGrouped() = default;
  DenseGrouped(GroupSpec spec, Tensor<T> weights, Tensor<T> biases, Activation activation);

  /// One draw per group (limit sqrt(6 / (fan_in + k))), copied to every member.
  static DenseGrouped initialize(std::size_t fan_in, const GroupSpec& spec, Activation activation, Rng& rng);

  /// Member activations, masked and summed per group: [batch, k].
  Tensor<T> forward_train(const Tensor<T>& input, const MaskBatch& mask);
  Tensor<T> backward(const Tensor<T>& upstream, bool need_input_grad = true);
  bool has_record() const { return mask_.has_value(); }

  /// [batch, k, n] member pre-activations.
  Tensor<T> member_pre_activations(const Tensor<T>& input) const;

  void average();
  DensePlain<T> combine() const;
  /// Plain layer standing in n copies of member `member` for every group.
  DensePlain<T> single_member(std::size_t member = 0) const;

  const GroupSpec& spec() const { return spec_; }
  Tensor<T> weights() const;  // [k, n, fan_in]
  Tensor<T> biases() const;   // [k, n]
  Tensor<T> weight_grad() const;
  Tensor<T> bias_grad() const;
  Activation activation() const { return members_.activation(); }
  std::size_t fan_in() const { return members_.fan_in(); }
  const DensePlain<T>& members() const { return members_; }
  DensePlain<T>& members() { return members_; }

  std::vector<ParamRef<T>> parameters();
  std::size_t parameter_count() const { return members_.parameter_count(); }
  bool members_identical() const;

 private:
  GroupSpec spec_;
  DensePlain<T> members_;
  std::optional<MaskBatch> mask_;
};

/// 2-D convolution with per-filter bias, input [B,C,H,W].
template <typename T>
class ConvPlain {
 public:
  ConvPlain() = default;
  /// filters [O, C, kh, kw], biases [O]
  ConvPlain(Tensor<T> filters, Tensor<T> biases, std::size_t stride, Padding padding, Activation activation);

  static ConvPlain initialize(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                              std::size_t stride, Padding padding, Activation activation, Rng& rng);

  Tensor<T> forward(const Tensor<T>& input) const;
  Tensor<T> forward_train(const Tensor<T>& input);
  Tensor<T> backward(const Tensor<T>& upstream, bool need_input_grad = true);
  bool has_record() const { return record_.has_value(); }

  Tensor<T> pre_activation(const Tensor<T>& input) const;

  std::vector<ParamRef<T>> parameters();
  std::size_t parameter_count() const { return filters_.size() + biases_.size(); }
  const Tensor<T>& filters() const { return filters_; }
  const Tensor<T>& biases() const { return biases_; }
  Tensor<T>& filters() { return filters_; }
  Tensor<T>& biases() { return biases_; }
  const Tensor<T>& filter_grad() const { return filter_grad_; }
  const Tensor<T>& bias_grad() const { return bias_grad_; }
  std::size_t stride() const { return stride_; }
  Padding padding() const { return padding_; }
  Activation activation() const { return activation_; }
  std::size_t in_channels() const { return filters_.dim(1); }
  std::size_t out_channels() const { return filters_.dim(0); }
  std::size_t kernel() const { return filters_.dim(2); }

 private:
  struct Record {
    Tensor<T> input;
    Tensor<T> pre;
  };

  Tensor<T> filters_;
  Tensor<T> biases_;
  Tensor<T> filter_grad_;
  Tensor<T> bias_grad_;
  std::size_t stride_ = 1;
  Padding padding_ = Padding::kSame;
  Activation activation_ = Activation::kRelu;
  std::optional<Record> record_;
};

/// Grouped convolution: each member is one filter, a group's sampled output
/// is one feature map. A mask entry gates a member's whole map per sample.
template <typename T>
class ConvGrouped {
 public:
  ConvGrouped() = default;
  /// filters [k, n, C, kh, kw], biases [k, n]
  ConvGrouped(GroupSpec spec, Tensor<T> filters, Tensor<T> biases, std::size_t stride, Padding padding,
              Activation activation);

  static ConvGrouped initialize(std::size_t in_channels, const GroupSpec& spec, std::size_t kernel,
                                std::size_t stride, Padding padding, Activation activation, Rng& rng);

  Tensor<T> forward_train(const Tensor<T>& input, const MaskBatch& mask);
  Tensor<T> backward(const Tensor<T>& upstream, bool need_input_grad = true);
  bool has_record() const { return mask_.has_value(); }

  /// [B, k*n, H', W'] member pre-activations.
  Tensor<T> member_pre_activations(const Tensor<T>& input) const;

  void average();
  ConvPlain<T> combine() const;
  ConvPlain<T> single_member(std::size_t member = 0) const;

  const GroupSpec& spec() const { return spec_; }
  Tensor<T> filters() const;  // [k, n, C, kh, kw]
  Tensor<T> biases() const;   // [k, n]
  Activation activation() const { return members_.activation(); }
  const ConvPlain<T>& members() const { return members_; }
  ConvPlain<T>& members() { return members_; }

  std::vector<ParamRef<T>> parameters();
  std::size_t parameter_count() const { return members_.parameter_count(); }
  bool members_identical() const;

 private:
  GroupSpec spec_;
  ConvPlain<T> members_;
  std::optional<MaskBatch> mask_;
};

/// 2-D max pooling, SAME padding.
template <typename T>
class MaxPool {
 public:
  MaxPool() = default;
  MaxPool(std::size_t window, std::size_t stride);
  Tensor<T> forward(const Tensor<T>& input) const;
  Tensor<T> forward_train(const Tensor<T>& input);
  Tensor<T> backward(const Tensor<T>& upstream, bool need_input_grad = true);
  bool has_record() const { return input_.has_value(); }
  std::size_t window() const { return window_; }
  std::size_t stride() const { return stride_; }

 private:
  std::size_t window_ = 2;
  std::size_t stride_ = 2;
  std::optional<Tensor<T>> input_;
};

/// [B,C,H,W] -> [B,C]
template <typename T>
class GlobalAvgPool {
 public:
  Tensor<T> forward(const Tensor<T>& input) const;
  Tensor<T> forward_train(const Tensor<T>& input);
  Tensor<T> backward(const Tensor<T>& upstream, bool need_input_grad = true);
  bool has_record() const { return input_shape_.has_value(); }

 private:
  std::optional<Shape> input_shape_;
};

/// Inference-form replacement of a grouped layer.
template <typename T>
DensePlain<T> combine_layer(const DenseGrouped<T>& layer) {
  return layer.combine();
}
template <typename T>
ConvPlain<T> combine_layer(const ConvGrouped<T>& layer) {
  return layer.combine();
}

}  // namespace inb
