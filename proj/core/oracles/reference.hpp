#pragma once

// Straightforward reference implementations used to cross-check the
// library: nested loops, brute-force mask enumeration, finite differences.
// Everything here favours obviousness over speed.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "inb/bagging.hpp"
#include "inb/layers.hpp"
#include "inb/tensor.hpp"

namespace inb::oracle {

template <typename T>
Tensor<T> naive_matmul(const Tensor<T>& a, const Tensor<T>& b);

/// input [B,C,H,W], filters [O,C,kh,kw]; `same` pads with zeros so the
/// output is ceil(H/stride), extra padding going bottom/right.
template <typename T>
Tensor<T> naive_conv2d(const Tensor<T>& input, const Tensor<T>& filters, std::size_t stride, bool same);

/// SAME-padded max pooling; padding never wins, ties go to the first cell
/// in row-major window order.
template <typename T>
Tensor<T> naive_maxpool(const Tensor<T>& input, std::size_t window, std::size_t stride);

template <typename T>
Tensor<T> naive_global_avg_pool(const Tensor<T>& input);

/// Mean negative log-likelihood of softmax(logits) in long double.
double naive_softmax_cross_entropy(const Tensor<double>& logits, std::span<const std::uint8_t> labels);

/// Dense layer with a dropout mask applied to its outputs (no rescaling),
/// written as plain loops over the same accumulation order a textbook
/// implementation would use.
template <typename T>
struct ReferenceDropoutDense {
  Tensor<T> weights;  // [out, in]
  Tensor<T> biases;   // [out]
  Activation activation = Activation::kRelu;

  struct Grads {
    Tensor<T> input;
    Tensor<T> weights;
    Tensor<T> biases;
  };

  /// mask [B, out] of 0/1
  Tensor<T> forward(const Tensor<T>& input, const std::vector<std::uint8_t>& mask) const;
  Grads backward(const Tensor<T>& input, const std::vector<std::uint8_t>& mask, const Tensor<T>& upstream) const;
};

/// One group's member masks and their probabilities, listed by brute force
/// over all 2^n binary vectors.
struct MaskOutcome {
  std::vector<std::uint8_t> members;
  double probability = 0;
};
std::vector<MaskOutcome> enumerate_group_masks(Method method, std::size_t n, double keep_prob);

/// E[group output] for a grouped dense layer, computed by running the
/// layer's own training forward pass once per mask outcome of each group
/// and weighting by the outcome probability. Returns [B, k].
Tensor<double> enumerated_expectation(DenseGrouped<double>& layer, const Tensor<double>& input);
/// Same for a grouped convolution. Returns [B, k, H', W'].
Tensor<double> enumerated_expectation(ConvGrouped<double>& layer, const Tensor<double>& input);

struct GradientTarget {
  std::string name;
  Tensor<double>* value = nullptr;
  Tensor<double> analytic;
};

struct GradientReport {
  bool passed = false;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates next to a kink
  double max_relative_error = 0;
  std::string worst;
};

struct GradientCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-5;
  /// Relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-3;
  /// A coordinate whose one-sided slopes disagree by more than this
  /// (relative) sits on a kink and is skipped.
  double kink_threshold = 1e-3;
  /// Fail if more than this fraction of coordinates was skipped.
  double max_skipped_fraction = 0.05;
};

/// Central finite differences of `loss` against every element of every
/// target's value tensor.
GradientReport check_gradients(const std::function<double()>& loss, std::vector<GradientTarget>& targets,
                               const GradientCheckOptions& options = {});

}  // namespace inb::oracle
