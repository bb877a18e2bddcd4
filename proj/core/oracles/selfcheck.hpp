#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "inb/bagging.hpp"
#include "inb/layers.hpp"
#include "inb/model.hpp"
#include "reference.hpp"

namespace inb::oracle {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

template <typename T>
Tensor<T> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0);

/// Overwrites every parameter with uniform noise in [lo, hi) so members of
/// a group differ.
template <typename T>
void randomize(std::vector<ParamRef<T>> params, Rng& rng, double lo = -0.5, double hi = 0.5);

/// Library kernels against the nested-loop references (float and double).
CheckResult check_matmul_reference(std::uint64_t seed);
CheckResult check_conv_reference(std::uint64_t seed);
CheckResult check_pool_reference(std::uint64_t seed);

/// Finite-difference checks of one layer in 64-bit with a fixed mask; the
/// loss is sum(output * R) for a random R.
GradientReport gradient_dense_plain(Activation act, std::uint64_t seed);
GradientReport gradient_dense_grouped(Method method, std::size_t n, Activation act, std::uint64_t seed);
GradientReport gradient_conv_plain(Padding padding, std::size_t stride, Activation act, std::uint64_t seed);
GradientReport gradient_conv_grouped(Method method, std::size_t n, Padding padding, Activation act,
                                     std::uint64_t seed);
GradientReport gradient_maxpool(std::size_t window, std::size_t stride, std::uint64_t seed);
GradientReport gradient_global_avg_pool(std::uint64_t seed);
GradientReport gradient_softmax_head(std::uint64_t seed);
/// Whole small model (grouped conv, pooling, grouped dense, softmax head).
GradientReport gradient_model_chain(Method method, std::uint64_t seed);

struct FidelityReport {
  bool passed = false;
  std::size_t layers = 0;
  double max_relative_error = 0;
  std::string worst;
};

/// Random grouped dense layers (k <= 4, n <= 4, both methods) whose member
/// pre-activations are all positive: the combined layer's output must match
/// the brute-force mask expectation.
FidelityReport combination_fidelity_dense(std::size_t trials, std::uint64_t seed, double tolerance = 1e-6);
FidelityReport combination_fidelity_conv(std::size_t trials, std::uint64_t seed, double tolerance = 1e-6);

/// Method A with n = 1 against ReferenceDropoutDense, forward and backward,
/// bit for bit.
CheckResult check_dropout_equivalence(std::uint64_t seed);
/// Method B with n = 1 trains exactly like the plain network.
CheckResult check_plain_equivalence(std::uint64_t seed);
/// Idempotence, mean preservation, member identity, Method B mask
/// independence.
CheckResult check_weight_averaging(std::uint64_t seed);
CheckResult check_model_round_trip(std::uint64_t seed);
CheckResult check_data_round_trip(std::uint64_t seed);

std::vector<CheckResult> run_self_checks(std::uint64_t seed = 1);

}  // namespace inb::oracle
