#include "inb/bagging.hpp"

#include <numeric>

#include "inb/errors.hpp"

namespace inb {

Method parse_method(std::string_view name) {
  if (name == "A" || name == "a") return Method::kA;
  if (name == "B" || name == "b") return Method::kB;
  throw ConfigError("unknown sampling method '" + std::string(name) + "' (expected A or B)");
}

std::string to_string(Method method) { return method == Method::kA ? "A" : "B"; }

void GroupSpec::validate() const {
  if (group_count == 0) throw ConfigError("group count must be >= 1");
  if (group_size == 0) throw ConfigError("group size must be >= 1");
  if (method != Method::kA && method != Method::kB) throw ConfigError("invalid sampling method");
  if (method == Method::kA && !(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw ConfigError("keep probability must lie in (0, 1], got " + std::to_string(keep_prob));
  }
}

double expected_keep(const GroupSpec& spec) {
  spec.validate();
  return spec.method == Method::kA ? spec.keep_prob : 1.0 / static_cast<double>(spec.group_size);
}

MaskBatch::MaskBatch(std::size_t batch, std::size_t groups, std::size_t members, std::uint8_t fill)
    : batch_(batch), groups_(groups), members_(members), values_(batch * groups * members, fill) {}

bool MaskBatch::is_binary() const {
  for (auto v : values_)
    if (v > 1) return false;
  return true;
}

bool MaskBatch::is_one_hot() const {
  for (std::size_t s = 0; s < batch_ * groups_; ++s) {
    std::size_t ones = 0;
    for (std::size_t j = 0; j < members_; ++j) ones += values_[s * members_ + j];
    if (ones != 1) return false;
  }
  return is_binary();
}

double MaskBatch::mean() const {
  if (values_.empty()) return 0.0;
  const auto total = std::accumulate(values_.begin(), values_.end(), std::size_t{0});
  return static_cast<double>(total) / static_cast<double>(values_.size());
}

MaskBatch sample_mask(const GroupSpec& spec, std::size_t batch, Rng& rng) {
  spec.validate();
  const std::size_t k = spec.group_count, n = spec.group_size;
  MaskBatch mask(batch, k, n);
  if (spec.method == Method::kA) {
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < n; ++j) mask.at(b, i, j) = rng.bernoulli(spec.keep_prob) ? 1 : 0;
  } else {
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < k; ++i) mask.at(b, i, rng.below(n)) = 1;
  }
  return mask;
}

namespace {

template <typename T>
void check_mask_layout(const Tensor<T>& outputs, const MaskBatch& mask, const char* what) {
  if (outputs.rank() < 2 || outputs.dim(0) != mask.batch() || outputs.dim(1) != mask.groups() * mask.members()) {
    throw ShapeError(std::string(what) + ": tensor " + shape_to_string(outputs.shape()) +
                     " does not match mask [" + std::to_string(mask.batch()) + "," +
                     std::to_string(mask.groups()) + "," + std::to_string(mask.members()) + "]");
  }
}

}  // namespace

template <typename T>
Tensor<T> group_reduce_channels(const Tensor<T>& member_outputs, const MaskBatch& mask) {
  check_mask_layout(member_outputs, mask, "group_reduce");
  const std::size_t batch = mask.batch(), k = mask.groups(), n = mask.members();
  const std::size_t inner = batch * k * n != 0 ? member_outputs.size() / (batch * k * n) : 0;
  Shape out_shape = member_outputs.shape();
  out_shape[1] = k;
  Tensor<T> out(out_shape);
  const T* src = member_outputs.data().data();
  T* dst = out.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < k; ++i) {
      T* o = dst + (b * k + i) * inner;
      const T* y = src + (b * k + i) * n * inner;
      const T m0 = static_cast<T>(mask.at(b, i, 0));
      for (std::size_t s = 0; s < inner; ++s) o[s] = m0 * y[s];
      for (std::size_t j = 1; j < n; ++j) {
        const T m = static_cast<T>(mask.at(b, i, j));
        const T* yj = y + j * inner;
        for (std::size_t s = 0; s < inner; ++s) o[s] += m * yj[s];
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> group_reduce(const Tensor<T>& member_outputs, const MaskBatch& mask) {
  if (member_outputs.rank() != 3 || member_outputs.dim(0) != mask.batch() ||
      member_outputs.dim(1) != mask.groups() || member_outputs.dim(2) != mask.members()) {
    throw ShapeError("group_reduce: member outputs " + shape_to_string(member_outputs.shape()) +
                     " do not match mask [" + std::to_string(mask.batch()) + "," + std::to_string(mask.groups()) +
                     "," + std::to_string(mask.members()) + "]");
  }
  return group_reduce_channels(member_outputs.reshaped({mask.batch(), mask.groups() * mask.members()}), mask);
}

template <typename T>
Tensor<T> group_reduce_channels_vjp(const Tensor<T>& upstream, const MaskBatch& mask) {
  const std::size_t batch = mask.batch(), k = mask.groups(), n = mask.members();
  if (upstream.rank() < 2 || upstream.dim(0) != batch || upstream.dim(1) != k) {
    throw ShapeError("group_reduce_vjp: upstream " + shape_to_string(upstream.shape()) + " does not match mask");
  }
  const std::size_t inner = batch * k != 0 ? upstream.size() / (batch * k) : 0;
  Shape member_shape = upstream.shape();
  member_shape[1] = k * n;
  Tensor<T> grad(member_shape);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < k; ++i) {
      const T* g = upstream.data().data() + (b * k + i) * inner;
      for (std::size_t j = 0; j < n; ++j) {
        const T m = static_cast<T>(mask.at(b, i, j));
        T* dst = grad.data().data() + ((b * k + i) * n + j) * inner;
        for (std::size_t s = 0; s < inner; ++s) dst[s] = m * g[s];
      }
    }
  return grad;
}

template <typename T>
void average_members(std::span<T> values, std::size_t groups, std::size_t members) {
  if (groups * members == 0 || values.size() % (groups * members) != 0) {
    throw ShapeError("average_members: buffer of " + std::to_string(values.size()) +
                     " elements cannot be split into " + std::to_string(groups) + "x" + std::to_string(members));
  }
  const std::size_t inner = values.size() / (groups * members);
  for (std::size_t i = 0; i < groups; ++i) {
    T* group = values.data() + i * members * inner;
    for (std::size_t s = 0; s < inner; ++s) {
      long double sum = 0;
      for (std::size_t j = 0; j < members; ++j) sum += group[j * inner + s];
      const T mean = static_cast<T>(sum / static_cast<long double>(members));
      for (std::size_t j = 0; j < members; ++j) group[j * inner + s] = mean;
    }
  }
}

namespace {

template <typename T>
std::pair<std::size_t, std::size_t> group_dims(const Tensor<T>& weights, const Tensor<T>& biases,
                                               const char* what) {
  if (weights.rank() < 2 || biases.rank() != 2 || weights.dim(0) != biases.dim(0) ||
      weights.dim(1) != biases.dim(1)) {
    throw ShapeError(std::string(what) + ": weights " + shape_to_string(weights.shape()) + " and biases " +
                     shape_to_string(biases.shape()) + " must share leading [k,n]");
  }
  return {weights.dim(0), weights.dim(1)};
}

}  // namespace

template <typename T>
GroupParams<T> weight_average(const Tensor<T>& member_weights, const Tensor<T>& member_biases) {
  const auto [k, n] = group_dims(member_weights, member_biases, "weight_average");
  GroupParams<T> out{member_weights, member_biases};
  average_members(out.weights.data(), k, n);
  average_members(out.biases.data(), k, n);
  return out;
}

template <typename T>
std::vector<T> combine_members(std::span<const T> values, std::size_t groups, std::size_t members,
                               const GroupSpec& spec) {
  spec.validate();
  if (groups != spec.group_count || members != spec.group_size || values.size() % (groups * members) != 0) {
    throw ShapeError("combine: buffer of " + std::to_string(values.size()) + " elements with [k,n]=[" +
                     std::to_string(groups) + "," + std::to_string(members) + "] does not match group spec [" +
                     std::to_string(spec.group_count) + "," + std::to_string(spec.group_size) + "]");
  }
  const std::size_t inner = values.size() / (groups * members);
  // n * E(m): p*n for Method A, exactly 1 for Method B.
  const T scale = spec.method == Method::kA
                      ? static_cast<T>(spec.keep_prob * static_cast<double>(members))
                      : T{1};
  std::vector<T> out(groups * inner);
  for (std::size_t i = 0; i < groups; ++i) {
    const T* group = values.data() + i * members * inner;
    for (std::size_t s = 0; s < inner; ++s) {
      long double sum = 0;
      for (std::size_t j = 0; j < members; ++j) sum += group[j * inner + s];
      const T mean = static_cast<T>(sum / static_cast<long double>(members));
      out[i * inner + s] = scale * mean;
    }
  }
  return out;
}

template <typename T>
GroupParams<T> combine_group(const Tensor<T>& member_weights, const Tensor<T>& member_biases,
                             const GroupSpec& spec) {
  const auto [k, n] = group_dims(member_weights, member_biases, "combine_group");
  Shape wshape(member_weights.shape().begin() + 1, member_weights.shape().end());
  wshape[0] = k;
  return {Tensor<T>(wshape, combine_members(member_weights.data(), k, n, spec)),
          Tensor<T>({k}, combine_members(member_biases.data(), k, n, spec))};
}

template <typename T>
Tensor<T> exact_expected_output(const Tensor<T>& member_pre_activations, const GroupSpec& spec,
                                Activation kind) {
  spec.validate();
  if (member_pre_activations.rank() != 2) {
    throw ShapeError("exact_expected_output: expected [k,n], got " +
                     shape_to_string(member_pre_activations.shape()));
  }
  const std::size_t k = member_pre_activations.dim(0), n = member_pre_activations.dim(1);
  if (n > kMaxEnumerationGroupSize) {
    throw ConfigError("exact_expected_output: group size " + std::to_string(n) + " exceeds enumeration limit " +
                      std::to_string(kMaxEnumerationGroupSize));
  }
  Tensor<T> out({k});
  std::vector<long double> act(n);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < n; ++j) act[j] = ops::activate(kind, member_pre_activations.at(i, j));
    long double expectation = 0;
    if (spec.method == Method::kB) {
      for (std::size_t sel = 0; sel < n; ++sel) expectation += act[sel] / static_cast<long double>(n);
    } else {
      const long double p = spec.keep_prob;
      for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
        long double prob = 1, value = 0;
        for (std::size_t j = 0; j < n; ++j) {
          if (bits >> j & 1U) {
            prob *= p;
            value += act[j];
          } else {
            prob *= 1 - p;
          }
        }
        expectation += prob * value;
      }
    }
    out[i] = static_cast<T>(expectation);
  }
  return out;
}

#define INB_INSTANTIATE_BAGGING(T)                                                                      \
  template Tensor<T> group_reduce(const Tensor<T>&, const MaskBatch&);                                  \
  template Tensor<T> group_reduce_channels(const Tensor<T>&, const MaskBatch&);                         \
  template Tensor<T> group_reduce_channels_vjp(const Tensor<T>&, const MaskBatch&);                     \
  template void average_members(std::span<T>, std::size_t, std::size_t);                               \
  template GroupParams<T> weight_average(const Tensor<T>&, const Tensor<T>&);                           \
  template std::vector<T> combine_members(std::span<const T>, std::size_t, std::size_t, const GroupSpec&); \
  template GroupParams<T> combine_group(const Tensor<T>&, const Tensor<T>&, const GroupSpec&);          \
  template Tensor<T> exact_expected_output(const Tensor<T>&, const GroupSpec&, Activation);

INB_INSTANTIATE_BAGGING(float)
INB_INSTANTIATE_BAGGING(double)

#undef INB_INSTANTIATE_BAGGING

}  // namespace inb
