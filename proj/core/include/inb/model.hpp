#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "inb/bagging.hpp"
#include "inb/layers.hpp"

namespace inb {

template <typename T>
using Layer = std::variant<DensePlain<T>, DenseGrouped<T>, ConvPlain<T>, ConvGrouped<T>, MaxPool<T>, GlobalAvgPool<T>>;

/// A linear chain of layers ending in logits. Grouped layers make it the
/// training form; after combine_model every layer is plain.
template <typename T>
struct Model {
  std::string architecture;
  Shape input_shape;  // per sample, [C, H, W]
  std::vector<Layer<T>> layers;
};

template <typename T>
bool is_grouped(const Layer<T>& layer) {
  return std::holds_alternative<DenseGrouped<T>>(layer) || std::holds_alternative<ConvGrouped<T>>(layer);
}

template <typename T>
std::size_t parameter_count(const Layer<T>& layer);
template <typename T>
std::size_t parameter_count(const Model<T>& model);
/// Parameters held by grouped layers only.
template <typename T>
std::size_t grouped_parameter_count(const Model<T>& model);
template <typename T>
bool has_grouped_layers(const Model<T>& model);
/// Group spec of every grouped layer, in layer order.
template <typename T>
std::vector<GroupSpec> group_specs(const Model<T>& model);

/// One mask per grouped layer, in layer order.
template <typename T>
std::vector<MaskBatch> sample_masks(const Model<T>& model, std::size_t batch, Rng& rng);

/// Training forward pass; records state in every layer.
template <typename T>
Tensor<T> forward_train(Model<T>& model, const Tensor<T>& input, const std::vector<MaskBatch>& masks);
/// Backward pass from the logits gradient. The first layer's input gradient
/// is not computed.
template <typename T>
void backward(Model<T>& model, const Tensor<T>& logits_grad);

template <typename T>
std::vector<ParamRef<T>> parameters(Model<T>& model);

/// Inference logits. Every layer must be plain.
template <typename T>
Tensor<T> forward(const Model<T>& model, const Tensor<T>& input);
/// Inference logits where each grouped layer outputs the exact mask
/// expectation of its group (enumeration), plain layers run unchanged.
template <typename T>
Tensor<T> forward_expected(const Model<T>& model, const Tensor<T>& input);

/// Replaces every grouped layer by its combined plain layer.
template <typename T>
Model<T> combine_model(const Model<T>& model);
/// Replaces every grouped layer by the plain layer built from member 0.
template <typename T>
Model<T> single_member_model(const Model<T>& model);

/// Weight averaging on every grouped layer.
template <typename T>
void average_model(Model<T>& model);
template <typename T>
bool members_identical(const Model<T>& model);

}  // namespace inb
