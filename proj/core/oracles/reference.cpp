#include "reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "inb/errors.hpp"

namespace inb::oracle {

template <typename T>
Tensor<T> naive_matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) throw ShapeError("naive_matmul: bad shapes");
  const std::size_t m = a.dim(0), kk = a.dim(1), n = b.dim(1);
  Tensor<T> out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      long double s = 0;
      for (std::size_t k = 0; k < kk; ++k) s += static_cast<long double>(a.at(i, k)) * b.at(k, j);
      out.at(i, j) = static_cast<T>(s);
    }
  return out;
}

namespace {

struct Extent {
  std::size_t out;
  std::size_t pad_before;
};

Extent extent(std::size_t in, std::size_t kernel, std::size_t stride, bool same) {
  if (same) {
    const std::size_t out = (in + stride - 1) / stride;
    const long long needed = static_cast<long long>((out - 1) * stride + kernel) - static_cast<long long>(in);
    return {out, static_cast<std::size_t>(std::max(0LL, needed) / 2)};
  }
  if (kernel > in) throw ShapeError("naive conv: kernel larger than input");
  return {(in - kernel) / stride + 1, 0};
}

}  // namespace

template <typename T>
Tensor<T> naive_conv2d(const Tensor<T>& input, const Tensor<T>& filters, std::size_t stride, bool same) {
  const std::size_t batch = input.dim(0), channels = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t outs = filters.dim(0), kh = filters.dim(2), kw = filters.dim(3);
  if (filters.dim(1) != channels) throw ShapeError("naive_conv2d: channel mismatch");
  const Extent ey = extent(h, kh, stride, same), ex = extent(w, kw, stride, same);
  Tensor<T> out({batch, outs, ey.out, ex.out});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t o = 0; o < outs; ++o)
      for (std::size_t oy = 0; oy < ey.out; ++oy)
        for (std::size_t ox = 0; ox < ex.out; ++ox) {
          long double s = 0;
          for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t dy = 0; dy < kh; ++dy)
              for (std::size_t dx = 0; dx < kw; ++dx) {
                const long long y = static_cast<long long>(oy * stride + dy) - static_cast<long long>(ey.pad_before);
                const long long x = static_cast<long long>(ox * stride + dx) - static_cast<long long>(ex.pad_before);
                if (y < 0 || x < 0 || y >= static_cast<long long>(h) || x >= static_cast<long long>(w)) continue;
                s += static_cast<long double>(input.at(b, c, static_cast<std::size_t>(y), static_cast<std::size_t>(x))) *
                     filters.at(o, c, dy, dx);
              }
          out.at(b, o, oy, ox) = static_cast<T>(s);
        }
  return out;
}

template <typename T>
Tensor<T> naive_maxpool(const Tensor<T>& input, std::size_t window, std::size_t stride) {
  const std::size_t batch = input.dim(0), channels = input.dim(1), h = input.dim(2), w = input.dim(3);
  const Extent ey = extent(h, window, stride, true), ex = extent(w, window, stride, true);
  Tensor<T> out({batch, channels, ey.out, ex.out});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t oy = 0; oy < ey.out; ++oy)
        for (std::size_t ox = 0; ox < ex.out; ++ox) {
          bool any = false;
          T best{};
          for (std::size_t dy = 0; dy < window; ++dy)
            for (std::size_t dx = 0; dx < window; ++dx) {
              const long long y = static_cast<long long>(oy * stride + dy) - static_cast<long long>(ey.pad_before);
              const long long x = static_cast<long long>(ox * stride + dx) - static_cast<long long>(ex.pad_before);
              if (y < 0 || x < 0 || y >= static_cast<long long>(h) || x >= static_cast<long long>(w)) continue;
              const T v = input.at(b, c, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
              if (!any || v > best) best = v;
              any = true;
            }
          out.at(b, c, oy, ox) = best;
        }
  return out;
}

template <typename T>
Tensor<T> naive_global_avg_pool(const Tensor<T>& input) {
  const std::size_t batch = input.dim(0), channels = input.dim(1), h = input.dim(2), w = input.dim(3);
  Tensor<T> out({batch, channels});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c) {
      long double s = 0;
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) s += input.at(b, c, y, x);
      out.at(b, c) = static_cast<T>(s / static_cast<long double>(h * w));
    }
  return out;
}

double naive_softmax_cross_entropy(const Tensor<double>& logits, std::span<const std::uint8_t> labels) {
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  long double total = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    long double z = 0;
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(static_cast<long double>(logits.at(b, c)));
    total += std::log(z) - logits.at(b, labels[b]);
  }
  return static_cast<double>(total / static_cast<long double>(batch));
}

namespace {

template <typename T>
T apply(Activation a, T x) {
  switch (a) {
    case Activation::kIdentity: return x;
    case Activation::kRelu: return x > T(0) ? x : T(0);
    case Activation::kSigmoid: return T(1) / (T(1) + std::exp(-x));
    case Activation::kTanh: return std::tanh(x);
  }
  return x;
}

template <typename T>
T slope(Activation a, T pre) {
  switch (a) {
    case Activation::kIdentity: return T(1);
    case Activation::kRelu: return pre > T(0) ? T(1) : T(0);
    case Activation::kSigmoid: {
      const T s = apply(a, pre);
      return s * (T(1) - s);
    }
    case Activation::kTanh: {
      const T t = std::tanh(pre);
      return T(1) - t * t;
    }
  }
  return T(1);
}

}  // namespace

template <typename T>
Tensor<T> ReferenceDropoutDense<T>::forward(const Tensor<T>& input, const std::vector<std::uint8_t>& mask) const {
  const std::size_t batch = input.dim(0), in = weights.dim(1), outs = weights.dim(0);
  Tensor<T> out({batch, outs});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t o = 0; o < outs; ++o) {
      T s = T(0);
      for (std::size_t i = 0; i < in; ++i) s += input.at(b, i) * weights.at(o, i);
      s += biases[o];
      out.at(b, o) = mask[b * outs + o] ? apply(activation, s) : T(0);
    }
  return out;
}

template <typename T>
typename ReferenceDropoutDense<T>::Grads ReferenceDropoutDense<T>::backward(const Tensor<T>& input,
                                                                            const std::vector<std::uint8_t>& mask,
                                                                            const Tensor<T>& upstream) const {
  const std::size_t batch = input.dim(0), in = weights.dim(1), outs = weights.dim(0);
  Tensor<T> dpre({batch, outs});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t o = 0; o < outs; ++o) {
      if (!mask[b * outs + o]) continue;
      T s = T(0);
      for (std::size_t i = 0; i < in; ++i) s += input.at(b, i) * weights.at(o, i);
      s += biases[o];
      dpre.at(b, o) = upstream.at(b, o) * slope(activation, s);
    }
  Grads g{Tensor<T>({batch, in}), Tensor<T>(weights.shape()), Tensor<T>(biases.shape())};
  for (std::size_t o = 0; o < outs; ++o)
    for (std::size_t i = 0; i < in; ++i) {
      T s = T(0);
      for (std::size_t b = 0; b < batch; ++b) s += dpre.at(b, o) * input.at(b, i);
      g.weights.at(o, i) = s;
    }
  for (std::size_t o = 0; o < outs; ++o) {
    T s = T(0);
    for (std::size_t b = 0; b < batch; ++b) s += dpre.at(b, o);
    g.biases[o] = s;
  }
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < in; ++i) {
      T s = T(0);
      for (std::size_t o = 0; o < outs; ++o) s += dpre.at(b, o) * weights.at(o, i);
      g.input.at(b, i) = s;
    }
  return g;
}

std::vector<MaskOutcome> enumerate_group_masks(Method method, std::size_t n, double keep_prob) {
  if (n > 20) throw ConfigError("enumerate_group_masks: group too large");
  std::vector<MaskOutcome> out;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
    MaskOutcome m;
    std::size_t ones = 0;
    for (std::size_t j = 0; j < n; ++j) {
      m.members.push_back(static_cast<std::uint8_t>((bits >> j) & 1U));
      ones += m.members.back();
    }
    if (method == Method::kA) {
      m.probability = std::pow(keep_prob, static_cast<double>(ones)) *
                      std::pow(1.0 - keep_prob, static_cast<double>(n - ones));
    } else {
      m.probability = ones == 1 ? 1.0 / static_cast<double>(n) : 0.0;
    }
    if (m.probability > 0) out.push_back(std::move(m));
  }
  return out;
}

namespace {

// Runs forward_train once per outcome of group i (other groups all kept) and
// accumulates probability * output of group i.
template <typename L>
Tensor<double> enumerate_layer(L& layer, const Tensor<double>& input) {
  const GroupSpec spec = layer.spec();
  const std::size_t batch = input.dim(0), k = spec.group_count, n = spec.group_size;
  const auto outcomes = enumerate_group_masks(spec.method, n, spec.keep_prob);
  Tensor<double> result;
  std::vector<long double> acc;
  for (std::size_t i = 0; i < k; ++i) {
    for (const auto& outcome : outcomes) {
      auto mask = MaskBatch::ones(batch, k, n);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t j = 0; j < n; ++j) mask.at(b, i, j) = outcome.members[j];
      const Tensor<double> out = layer.forward_train(input, mask);
      if (result.empty()) {
        result = Tensor<double>(out.shape());
        acc.assign(out.size(), 0.0L);
      }
      const std::size_t inner = out.size() / (batch * k);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t s = 0; s < inner; ++s) {
          const std::size_t idx = (b * k + i) * inner + s;
          acc[idx] += static_cast<long double>(outcome.probability) * out[idx];
        }
    }
  }
  for (std::size_t e = 0; e < acc.size(); ++e) result[e] = static_cast<double>(acc[e]);
  return result;
}

}  // namespace

Tensor<double> enumerated_expectation(DenseGrouped<double>& layer, const Tensor<double>& input) {
  return enumerate_layer(layer, input);
}

Tensor<double> enumerated_expectation(ConvGrouped<double>& layer, const Tensor<double>& input) {
  return enumerate_layer(layer, input);
}

GradientReport check_gradients(const std::function<double()>& loss, std::vector<GradientTarget>& targets,
                               const GradientCheckOptions& options) {
  GradientReport report;
  const double h = options.step;
  for (auto& target : targets) {
    if (target.value->shape() != target.analytic.shape()) {
      throw ShapeError("check_gradients: analytic gradient shape differs for " + target.name);
    }
    for (std::size_t e = 0; e < target.value->size(); ++e) {
      double& x = (*target.value)[e];
      const double saved = x;
      const double f0 = loss();
      x = saved + h;
      const double fp = loss();
      x = saved - h;
      const double fm = loss();
      x = saved;
      const double right = (fp - f0) / h, left = (f0 - fm) / h;
      const double numeric = (fp - fm) / (2 * h);
      if (std::abs(right - left) > options.kink_threshold * std::max({std::abs(right), std::abs(left), 1.0})) {
        ++report.skipped;
        continue;
      }
      const double a = target.analytic[e];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), options.floor});
      ++report.checked;
      if (rel > report.max_relative_error || std::isnan(rel)) {
        report.max_relative_error = std::isnan(rel) ? std::numeric_limits<double>::infinity() : rel;
        std::ostringstream os;
        os << target.name << '[' << e << "] analytic=" << a << " numeric=" << numeric;
        report.worst = os.str();
      }
    }
  }
  const std::size_t total = report.checked + report.skipped;
  report.passed = report.checked > 0 && report.max_relative_error <= options.tolerance &&
                  static_cast<double>(report.skipped) <= options.max_skipped_fraction * static_cast<double>(total);
  return report;
}

template Tensor<float> naive_matmul(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> naive_matmul(const Tensor<double>&, const Tensor<double>&);
template Tensor<float> naive_conv2d(const Tensor<float>&, const Tensor<float>&, std::size_t, bool);
template Tensor<double> naive_conv2d(const Tensor<double>&, const Tensor<double>&, std::size_t, bool);
template Tensor<float> naive_maxpool(const Tensor<float>&, std::size_t, std::size_t);
template Tensor<double> naive_maxpool(const Tensor<double>&, std::size_t, std::size_t);
template Tensor<float> naive_global_avg_pool(const Tensor<float>&);
template Tensor<double> naive_global_avg_pool(const Tensor<double>&);
template struct ReferenceDropoutDense<float>;
template struct ReferenceDropoutDense<double>;

}  // namespace inb::oracle
