#include "inb/layers.hpp"

#include <cmath>

#include "inb/errors.hpp"

namespace inb {
namespace {

template <typename T>
std::vector<T> draw_uniform(Rng& rng, std::size_t count, double limit) {
  std::vector<T> out(count);
  for (auto& v : out) v = static_cast<T>(rng.uniform(-limit, limit));
  return out;
}

template <typename T>
Tensor<T> flatten_batch(const Tensor<T>& input, std::size_t fan_in) {
  if (input.rank() < 1 || input.dim(0) == 0 || input.size() / input.dim(0) != fan_in ||
      input.size() % input.dim(0) != 0) {
    throw ShapeError("dense layer expects " + std::to_string(fan_in) + " features per sample, got input " +
                     shape_to_string(input.shape()));
  }
  if (input.rank() == 2) return input;
  return input.reshaped({input.dim(0), fan_in});
}

template <typename T>
bool groups_identical(std::span<const T> values, std::size_t k, std::size_t n) {
  const std::size_t inner = values.size() / (k * n);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 1; j < n; ++j)
      for (std::size_t s = 0; s < inner; ++s)
        if (values[(i * n + j) * inner + s] != values[(i * n) * inner + s]) return false;
  return true;
}

// Buffer [k, n, inner] where every member of group i is member `member`.
template <typename T>
std::vector<T> replicate_member(std::span<const T> values, std::size_t k, std::size_t n, std::size_t member) {
  if (member >= n) throw ConfigError("member index " + std::to_string(member) + " out of range");
  const std::size_t inner = values.size() / (k * n);
  std::vector<T> out(values.size());
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t s = 0; s < inner; ++s) out[(i * n + j) * inner + s] = values[(i * n + member) * inner + s];
  return out;
}

}  // namespace

// ---------------------------------------------------------------- DensePlain

template <typename T>
DensePlain<T>::DensePlain(Tensor<T> weights, Tensor<T> biases, Activation activation)
    : weights_(std::move(weights)), biases_(std::move(biases)), activation_(activation) {
  if (weights_.rank() != 2 || biases_.rank() != 1 || biases_.dim(0) != weights_.dim(0)) {
    throw ShapeError("dense layer: weights " + shape_to_string(weights_.shape()) + " and biases " +
                     shape_to_string(biases_.shape()) + " are inconsistent");
  }
  weight_grad_ = Tensor<T>(weights_.shape());
  bias_grad_ = Tensor<T>(biases_.shape());
}

template <typename T>
DensePlain<T> DensePlain<T>::initialize(std::size_t fan_in, std::size_t outputs, Activation activation, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + outputs));
  return DensePlain(Tensor<T>({outputs, fan_in}, draw_uniform<T>(rng, outputs * fan_in, limit)),
                    Tensor<T>({outputs}), activation);
}

template <typename T>
Tensor<T> DensePlain<T>::pre_activation(const Tensor<T>& input) const {
  auto pre = ops::matmul_nt(flatten_batch(input, fan_in()), weights_);
  ops::add_channel_bias(pre, biases_);
  return pre;
}

template <typename T>
Tensor<T> DensePlain<T>::forward(const Tensor<T>& input) const {
  return ops::activation(activation_, pre_activation(input));
}

template <typename T>
Tensor<T> DensePlain<T>::forward_train(const Tensor<T>& input) {
  Record rec{input.shape(), flatten_batch(input, fan_in()), {}};
  rec.pre = ops::matmul_nt(rec.input, weights_);
  ops::add_channel_bias(rec.pre, biases_);
  auto out = ops::activation(activation_, rec.pre);
  record_ = std::move(rec);
  return out;
}

template <typename T>
Tensor<T> DensePlain<T>::backward(const Tensor<T>& upstream, bool need_input_grad) {
  if (!record_) throw StateError("dense backward called without a recorded forward pass");
  Record rec = std::move(*record_);
  record_.reset();
  const auto grad_pre = ops::activation_vjp(activation_, rec.pre, upstream);
  weight_grad_ = ops::matmul_tn(grad_pre, rec.input);
  bias_grad_ = ops::channel_bias_vjp(grad_pre);
  if (!need_input_grad) return {};
  return ops::matmul(grad_pre, weights_).reshaped(rec.input_shape);
}

template <typename T>
std::vector<ParamRef<T>> DensePlain<T>::parameters() {
  return {{&weights_, &weight_grad_, 0, 0, "weight"}, {&biases_, &bias_grad_, 0, 0, "bias"}};
}

// -------------------------------------------------------------- DenseGrouped

template <typename T>
DenseGrouped<T>::DenseGrouped(GroupSpec spec, Tensor<T> weights, Tensor<T> biases, Activation activation)
    : spec_(spec) {
  spec_.validate();
  const std::size_t k = spec_.group_count, n = spec_.group_size;
  if (weights.rank() != 3 || weights.dim(0) != k || weights.dim(1) != n || biases.shape() != Shape{k, n}) {
    throw ShapeError("grouped dense layer: weights " + shape_to_string(weights.shape()) + " / biases " +
                     shape_to_string(biases.shape()) + " do not match [k,n]=[" + std::to_string(k) + "," +
                     std::to_string(n) + "]");
  }
  const std::size_t fan_in = weights.dim(2);
  members_ = DensePlain<T>(std::move(weights).reshaped({k * n, fan_in}), std::move(biases).reshaped({k * n}),
                           activation);
}

template <typename T>
DenseGrouped<T> DenseGrouped<T>::initialize(std::size_t fan_in, const GroupSpec& spec, Activation activation,
                                            Rng& rng) {
  spec.validate();
  const std::size_t k = spec.group_count, n = spec.group_size;
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + k));
  Tensor<T> weights({k, n, fan_in});
  for (std::size_t i = 0; i < k; ++i) {
    const auto draw = draw_uniform<T>(rng, fan_in, limit);
    for (std::size_t j = 0; j < n; ++j)
      std::copy(draw.begin(), draw.end(), weights.data().begin() + static_cast<std::ptrdiff_t>((i * n + j) * fan_in));
  }
  return DenseGrouped(spec, std::move(weights), Tensor<T>({k, n}), activation);
}

template <typename T>
Tensor<T> DenseGrouped<T>::forward_train(const Tensor<T>& input, const MaskBatch& mask) {
  if (mask.groups() != spec_.group_count || mask.members() != spec_.group_size ||
      mask.batch() != (input.rank() ? input.dim(0) : 0)) {
    throw ShapeError("grouped dense forward: mask [" + std::to_string(mask.batch()) + "," +
                     std::to_string(mask.groups()) + "," + std::to_string(mask.members()) +
                     "] does not match input " + shape_to_string(input.shape()) + " and group spec");
  }
  auto member_out = members_.forward_train(input);
  mask_ = mask;
  return group_reduce_channels(member_out, mask);
}

template <typename T>
Tensor<T> DenseGrouped<T>::backward(const Tensor<T>& upstream, bool need_input_grad) {
  if (!mask_) throw StateError("grouped dense backward called without a recorded forward pass");
  const auto grad_members = group_reduce_channels_vjp(upstream, *mask_);
  mask_.reset();
  return members_.backward(grad_members, need_input_grad);
}

template <typename T>
Tensor<T> DenseGrouped<T>::member_pre_activations(const Tensor<T>& input) const {
  auto pre = members_.pre_activation(input);
  const std::size_t batch = pre.dim(0);
  return std::move(pre).reshaped({batch, spec_.group_count, spec_.group_size});
}

template <typename T>
void DenseGrouped<T>::average() {
  average_members(members_.weights().data(), spec_.group_count, spec_.group_size);
  average_members(members_.biases().data(), spec_.group_count, spec_.group_size);
}

template <typename T>
DensePlain<T> DenseGrouped<T>::combine() const {
  const std::size_t k = spec_.group_count, n = spec_.group_size;
  return DensePlain<T>(Tensor<T>({k, fan_in()}, combine_members(members_.weights().data(), k, n, spec_)),
                       Tensor<T>({k}, combine_members(members_.biases().data(), k, n, spec_)), activation());
}

template <typename T>
DensePlain<T> DenseGrouped<T>::single_member(std::size_t member) const {
  const std::size_t k = spec_.group_count, n = spec_.group_size;
  const auto w = replicate_member(members_.weights().data(), k, n, member);
  const auto b = replicate_member(members_.biases().data(), k, n, member);
  return DensePlain<T>(Tensor<T>({k, fan_in()}, combine_members(std::span<const T>(w), k, n, spec_)),
                       Tensor<T>({k}, combine_members(std::span<const T>(b), k, n, spec_)), activation());
}

template <typename T>
Tensor<T> DenseGrouped<T>::weights() const {
  return members_.weights().reshaped({spec_.group_count, spec_.group_size, fan_in()});
}
template <typename T>
Tensor<T> DenseGrouped<T>::biases() const {
  return members_.biases().reshaped({spec_.group_count, spec_.group_size});
}
template <typename T>
Tensor<T> DenseGrouped<T>::weight_grad() const {
  return members_.weight_grad().reshaped({spec_.group_count, spec_.group_size, fan_in()});
}
template <typename T>
Tensor<T> DenseGrouped<T>::bias_grad() const {
  return members_.bias_grad().reshaped({spec_.group_count, spec_.group_size});
}

template <typename T>
std::vector<ParamRef<T>> DenseGrouped<T>::parameters() {
  auto params = members_.parameters();
  for (auto& p : params) {
    p.groups = spec_.group_count;
    p.members = spec_.group_size;
  }
  return params;
}

template <typename T>
bool DenseGrouped<T>::members_identical() const {
  return groups_identical(members_.weights().data(), spec_.group_count, spec_.group_size) &&
         groups_identical(members_.biases().data(), spec_.group_count, spec_.group_size);
}

// ----------------------------------------------------------------- ConvPlain

template <typename T>
ConvPlain<T>::ConvPlain(Tensor<T> filters, Tensor<T> biases, std::size_t stride, Padding padding,
                        Activation activation)
    : filters_(std::move(filters)),
      biases_(std::move(biases)),
      stride_(stride),
      padding_(padding),
      activation_(activation) {
  if (filters_.rank() != 4 || biases_.rank() != 1 || biases_.dim(0) != filters_.dim(0)) {
    throw ShapeError("conv layer: filters " + shape_to_string(filters_.shape()) + " and biases " +
                     shape_to_string(biases_.shape()) + " are inconsistent");
  }
  if (stride_ == 0) throw ShapeError("conv layer: stride must be >= 1");
  filter_grad_ = Tensor<T>(filters_.shape());
  bias_grad_ = Tensor<T>(biases_.shape());
}

template <typename T>
ConvPlain<T> ConvPlain<T>::initialize(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                                      std::size_t stride, Padding padding, Activation activation, Rng& rng) {
  const std::size_t fan_in = in_channels * kernel * kernel;
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + out_channels));
  return ConvPlain(
      Tensor<T>({out_channels, in_channels, kernel, kernel}, draw_uniform<T>(rng, out_channels * fan_in, limit)),
      Tensor<T>({out_channels}), stride, padding, activation);
}

template <typename T>
Tensor<T> ConvPlain<T>::pre_activation(const Tensor<T>& input) const {
  auto pre = ops::conv2d(input, filters_, stride_, padding_);
  ops::add_channel_bias(pre, biases_);
  return pre;
}

template <typename T>
Tensor<T> ConvPlain<T>::forward(const Tensor<T>& input) const {
  return ops::activation(activation_, pre_activation(input));
}

template <typename T>
Tensor<T> ConvPlain<T>::forward_train(const Tensor<T>& input) {
  Record rec{input, pre_activation(input)};
  auto out = ops::activation(activation_, rec.pre);
  record_ = std::move(rec);
  return out;
}

template <typename T>
Tensor<T> ConvPlain<T>::backward(const Tensor<T>& upstream, bool need_input_grad) {
  if (!record_) throw StateError("conv backward called without a recorded forward pass");
  Record rec = std::move(*record_);
  record_.reset();
  const auto grad_pre = ops::activation_vjp(activation_, rec.pre, upstream);
  bias_grad_ = ops::channel_bias_vjp(grad_pre);
  auto grads = ops::conv2d_vjp(rec.input, filters_, stride_, padding_, grad_pre, need_input_grad);
  filter_grad_ = std::move(grads.filters);
  return std::move(grads.input);
}

template <typename T>
std::vector<ParamRef<T>> ConvPlain<T>::parameters() {
  return {{&filters_, &filter_grad_, 0, 0, "filter"}, {&biases_, &bias_grad_, 0, 0, "bias"}};
}

// --------------------------------------------------------------- ConvGrouped

template <typename T>
ConvGrouped<T>::ConvGrouped(GroupSpec spec, Tensor<T> filters, Tensor<T> biases, std::size_t stride,
                            Padding padding, Activation activation)
    : spec_(spec) {
  spec_.validate();
  const std::size_t k = spec_.group_count, n = spec_.group_size;
  if (filters.rank() != 5 || filters.dim(0) != k || filters.dim(1) != n || biases.shape() != Shape{k, n}) {
    throw ShapeError("grouped conv layer: filters " + shape_to_string(filters.shape()) + " / biases " +
                     shape_to_string(biases.shape()) + " do not match [k,n]=[" + std::to_string(k) + "," +
                     std::to_string(n) + "]");
  }
  Shape member_shape{k * n, filters.dim(2), filters.dim(3), filters.dim(4)};
  members_ = ConvPlain<T>(std::move(filters).reshaped(member_shape), std::move(biases).reshaped({k * n}), stride,
                          padding, activation);
}

template <typename T>
ConvGrouped<T> ConvGrouped<T>::initialize(std::size_t in_channels, const GroupSpec& spec, std::size_t kernel,
                                          std::size_t stride, Padding padding, Activation activation, Rng& rng) {
  spec.validate();
  const std::size_t k = spec.group_count, n = spec.group_size;
  const std::size_t fan_in = in_channels * kernel * kernel;
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + k));
  Tensor<T> filters({k, n, in_channels, kernel, kernel});
  for (std::size_t i = 0; i < k; ++i) {
    const auto draw = draw_uniform<T>(rng, fan_in, limit);
    for (std::size_t j = 0; j < n; ++j)
      std::copy(draw.begin(), draw.end(), filters.data().begin() + static_cast<std::ptrdiff_t>((i * n + j) * fan_in));
  }
  return ConvGrouped(spec, std::move(filters), Tensor<T>({k, n}), stride, padding, activation);
}

template <typename T>
Tensor<T> ConvGrouped<T>::forward_train(const Tensor<T>& input, const MaskBatch& mask) {
  if (mask.groups() != spec_.group_count || mask.members() != spec_.group_size ||
      mask.batch() != (input.rank() ? input.dim(0) : 0)) {
    throw ShapeError("grouped conv forward: mask does not match input " + shape_to_string(input.shape()) +
                     " and group spec");
  }
  auto member_out = members_.forward_train(input);
  mask_ = mask;
  return group_reduce_channels(member_out, mask);
}

template <typename T>
Tensor<T> ConvGrouped<T>::backward(const Tensor<T>& upstream, bool need_input_grad) {
  if (!mask_) throw StateError("grouped conv backward called without a recorded forward pass");
  const auto grad_members = group_reduce_channels_vjp(upstream, *mask_);
  mask_.reset();
  return members_.backward(grad_members, need_input_grad);
}

template <typename T>
Tensor<T> ConvGrouped<T>::member_pre_activations(const Tensor<T>& input) const {
  return members_.pre_activation(input);
}

template <typename T>
void ConvGrouped<T>::average() {
  average_members(members_.filters().data(), spec_.group_count, spec_.group_size);
  average_members(members_.biases().data(), spec_.group_count, spec_.group_size);
}

template <typename T>
ConvPlain<T> ConvGrouped<T>::combine() const {
  const std::size_t k = spec_.group_count, n = spec_.group_size;
  const auto& f = members_.filters();
  return ConvPlain<T>(Tensor<T>({k, f.dim(1), f.dim(2), f.dim(3)}, combine_members(f.data(), k, n, spec_)),
                      Tensor<T>({k}, combine_members(members_.biases().data(), k, n, spec_)), members_.stride(),
                      members_.padding(), activation());
}

template <typename T>
ConvPlain<T> ConvGrouped<T>::single_member(std::size_t member) const {
  const std::size_t k = spec_.group_count, n = spec_.group_size;
  const auto& f = members_.filters();
  const auto fw = replicate_member(f.data(), k, n, member);
  const auto b = replicate_member(members_.biases().data(), k, n, member);
  return ConvPlain<T>(
      Tensor<T>({k, f.dim(1), f.dim(2), f.dim(3)}, combine_members(std::span<const T>(fw), k, n, spec_)),
      Tensor<T>({k}, combine_members(std::span<const T>(b), k, n, spec_)), members_.stride(), members_.padding(),
      activation());
}

template <typename T>
Tensor<T> ConvGrouped<T>::filters() const {
  const auto& f = members_.filters();
  return f.reshaped({spec_.group_count, spec_.group_size, f.dim(1), f.dim(2), f.dim(3)});
}
template <typename T>
Tensor<T> ConvGrouped<T>::biases() const {
  return members_.biases().reshaped({spec_.group_count, spec_.group_size});
}

template <typename T>
std::vector<ParamRef<T>> ConvGrouped<T>::parameters() {
  auto params = members_.parameters();
  for (auto& p : params) {
    p.groups = spec_.group_count;
    p.members = spec_.group_size;
  }
  return params;
}

template <typename T>
bool ConvGrouped<T>::members_identical() const {
  return groups_identical(members_.filters().data(), spec_.group_count, spec_.group_size) &&
         groups_identical(members_.biases().data(), spec_.group_count, spec_.group_size);
}

// ------------------------------------------------------------------ pooling

template <typename T>
MaxPool<T>::MaxPool(std::size_t window, std::size_t stride) : window_(window), stride_(stride) {
  if (window == 0 || stride == 0) throw ShapeError("max pooling window and stride must be positive");
}

template <typename T>
Tensor<T> MaxPool<T>::forward(const Tensor<T>& input) const {
  return ops::maxpool2d(input, window_, stride_);
}

template <typename T>
Tensor<T> MaxPool<T>::forward_train(const Tensor<T>& input) {
  auto out = ops::maxpool2d(input, window_, stride_);
  input_ = input;
  return out;
}

template <typename T>
Tensor<T> MaxPool<T>::backward(const Tensor<T>& upstream, bool need_input_grad) {
  if (!input_) throw StateError("max pooling backward called without a recorded forward pass");
  auto input = std::move(*input_);
  input_.reset();
  if (!need_input_grad) return {};
  return ops::maxpool2d_vjp(input, window_, stride_, upstream);
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::forward(const Tensor<T>& input) const {
  return ops::global_avg_pool(input);
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::forward_train(const Tensor<T>& input) {
  auto out = ops::global_avg_pool(input);
  input_shape_ = input.shape();
  return out;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::backward(const Tensor<T>& upstream, bool need_input_grad) {
  if (!input_shape_) throw StateError("global average pooling backward called without a recorded forward pass");
  auto shape = std::move(*input_shape_);
  input_shape_.reset();
  if (!need_input_grad) return {};
  return ops::global_avg_pool_vjp(shape, upstream);
}

template class DensePlain<float>;
template class DensePlain<double>;
template class DenseGrouped<float>;
template class DenseGrouped<double>;
template class ConvPlain<float>;
template class ConvPlain<double>;
template class ConvGrouped<float>;
template class ConvGrouped<double>;
template class MaxPool<float>;
template class MaxPool<double>;
template class GlobalAvgPool<float>;
template class GlobalAvgPool<double>;

}  // namespace inb
