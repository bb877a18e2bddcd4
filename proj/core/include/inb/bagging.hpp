#pragma once

// Internal node bagging primitives: mask sampling over groups of member
// nodes, the masked group reduction, periodic weight averaging, and the
// analytic combination of a group into one node.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "inb/ops.hpp"
#include "inb/rng.hpp"
#include "inb/tensor.hpp"

namespace inb {

/// Method A: every member kept independently with probability p.
/// Method B: exactly one member per group, chosen uniformly.
enum class Method : std::uint8_t { kA = 0, kB = 1 };

Method parse_method(std::string_view name);
std::string to_string(Method method);

struct GroupSpec {
  std::size_t group_count = 1;  // k
  std::size_t group_size = 1;   // n
  Method method = Method::kA;
  double keep_prob = 0.5;  // Method A only

  void validate() const;
  friend bool operator==(const GroupSpec&, const GroupSpec&) = default;
};

/// Marginal probability E(m) that one member's mask is 1.
double expected_keep(const GroupSpec& spec);

/// Binary mask realisation, laid out [batch, groups, members].
class MaskBatch {
 public:
  MaskBatch() = default;
  MaskBatch(std::size_t batch, std::size_t groups, std::size_t members, std::uint8_t fill = 0);
  static MaskBatch ones(std::size_t batch, std::size_t groups, std::size_t members) {
    return MaskBatch(batch, groups, members, 1);
  }

  std::size_t batch() const { return batch_; }
  std::size_t groups() const { return groups_; }
  std::size_t members() const { return members_; }
  std::span<const std::uint8_t> values() const { return values_; }

  std::uint8_t& at(std::size_t b, std::size_t i, std::size_t j) {
    return values_[(b * groups_ + i) * members_ + j];
  }
  std::uint8_t at(std::size_t b, std::size_t i, std::size_t j) const {
    return values_[(b * groups_ + i) * members_ + j];
  }

  bool is_binary() const;
  /// Exactly one 1 in every (sample, group) slice.
  bool is_one_hot() const;
  double mean() const;

  friend bool operator==(const MaskBatch&, const MaskBatch&) = default;

 private:
  std::size_t batch_ = 0;
  std::size_t groups_ = 0;
  std::size_t members_ = 0;
  std::vector<std::uint8_t> values_;
};

/// Draws a fresh mask for every sample. Masks are not rescaled: the
/// test-time scaling lives in combine_group.
MaskBatch sample_mask(const GroupSpec& spec, std::size_t batch, Rng& rng);

/// s[b,i] = sum_j m[b,i,j] * y[b,i,j] for member outputs [batch, k, n].
template <typename T>
Tensor<T> group_reduce(const Tensor<T>& member_outputs, const MaskBatch& mask);

/// Channel-axis form used by the layers: member_outputs is
/// [batch, k*n, ...] (member j of group i at channel i*n+j), the result is
/// [batch, k, ...]. One mask entry gates a member's whole trailing block.
template <typename T>
Tensor<T> group_reduce_channels(const Tensor<T>& member_outputs, const MaskBatch& mask);
/// Gradient of group_reduce_channels with respect to the member outputs.
template <typename T>
Tensor<T> group_reduce_channels_vjp(const Tensor<T>& upstream, const MaskBatch& mask);

template <typename T>
struct GroupParams {
  Tensor<T> weights;
  Tensor<T> biases;
};

/// In-place group averaging of a buffer laid out [k, n, inner]. Means are
/// accumulated in long double so averaging identical members is exact and
/// the operation is idempotent.
template <typename T>
void average_members(std::span<T> values, std::size_t groups, std::size_t members);

/// Replaces every member's weights [k,n,...] and bias [k,n] by its group mean.
template <typename T>
GroupParams<T> weight_average(const Tensor<T>& member_weights, const Tensor<T>& member_biases);

/// Collapses a buffer [k, n, inner] to [k, inner] as
/// (n * E(m)) * mean_j(values[i, j, :]), i.e. E(m) * sum_j.
template <typename T>
std::vector<T> combine_members(std::span<const T> values, std::size_t groups, std::size_t members,
                               const GroupSpec& spec);

/// One node per group: weights [k,n,...] -> [k,...], biases [k,n] -> [k].
template <typename T>
GroupParams<T> combine_group(const Tensor<T>& member_weights, const Tensor<T>& member_biases,
                             const GroupSpec& spec);

inline constexpr std::size_t kMaxEnumerationGroupSize = 20;

/// Exact expectation over the mask distribution of sum_j m_j f(pre_j), by
/// enumerating every mask (2^n for Method A, n for Method B).
/// member_pre_activations is [k, n]; the result is [k].
template <typename T>
Tensor<T> exact_expected_output(const Tensor<T>& member_pre_activations, const GroupSpec& spec,
                                Activation kind);

}  // namespace inb
