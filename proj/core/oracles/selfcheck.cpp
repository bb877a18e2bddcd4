#include "selfcheck.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <filesystem>
#include <sstream>

#include "inb/data.hpp"
#include "inb/errors.hpp"
#include "inb/model_io.hpp"
#include "inb/train.hpp"

namespace inb::oracle {

template <typename T>
Tensor<T> random_tensor(const Shape& shape, Rng& rng, double lo, double hi) {
  Tensor<T> t(shape);
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

template <typename T>
void randomize(std::vector<ParamRef<T>> params, Rng& rng, double lo, double hi) {
  for (auto& p : params)
    for (auto& v : p.value->data()) v = static_cast<T>(rng.uniform(lo, hi));
}

template Tensor<float> random_tensor(const Shape&, Rng&, double, double);
template Tensor<double> random_tensor(const Shape&, Rng&, double, double);
template void randomize(std::vector<ParamRef<float>>, Rng&, double, double);
template void randomize(std::vector<ParamRef<double>>, Rng&, double, double);

namespace {

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) return std::numeric_limits<double>::infinity();
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

CheckResult verdict(std::string name, bool ok, const std::string& detail = {}) {
  return {std::move(name), ok, detail};
}

std::string describe(const GradientReport& r) {
  std::ostringstream os;
  os << "checked=" << r.checked << " skipped=" << r.skipped << " max_rel=" << r.max_relative_error;
  if (!r.worst.empty()) os << " worst: " << r.worst;
  return os.str();
}

long double weighted_sum(const Tensor<double>& out, const Tensor<double>& r) {
  long double s = 0;
  for (std::size_t i = 0; i < out.size(); ++i) s += static_cast<long double>(out[i]) * r[i];
  return s;
}

std::vector<GradientTarget> param_targets(const std::vector<ParamRef<double>>& params) {
  std::vector<GradientTarget> targets;
  for (const auto& p : params) targets.push_back({p.name, p.value, *p.grad});
  return targets;
}

// Runs the analytic pass once, then the finite-difference comparison.
// `fwd` must call the layer's training forward pass.
template <typename L, typename Fwd>
GradientReport layer_check(L& layer, Tensor<double> input, Fwd fwd, Rng& rng, bool params) {
  const Tensor<double> out = fwd(layer, input);
  const Tensor<double> r = random_tensor<double>(out.shape(), rng);
  std::vector<GradientTarget> targets;
  targets.push_back({"input", &input, layer.backward(r, true)});
  if constexpr (requires { layer.parameters(); }) {
    if (params)
      for (auto& t : param_targets(layer.parameters())) targets.push_back(std::move(t));
  }
  auto loss = [&] { return static_cast<double>(weighted_sum(fwd(layer, input), r)); };
  return check_gradients(loss, targets);
}

}  // namespace

CheckResult check_matmul_reference(std::uint64_t seed) {
  Rng rng(seed);
  const auto a = random_tensor<double>({7, 13}, rng), b = random_tensor<double>({13, 5}, rng);
  double err = max_abs_diff(ops::matmul(a, b), naive_matmul(a, b));
  Tensor<double> bt({5, 13});
  for (std::size_t i = 0; i < 13; ++i)
    for (std::size_t j = 0; j < 5; ++j) bt.at(j, i) = b.at(i, j);
  err = std::max(err, max_abs_diff(ops::matmul_nt(a, bt), naive_matmul(a, b)));
  Tensor<double> at({13, 7});
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 13; ++j) at.at(j, i) = a.at(i, j);
  err = std::max(err, max_abs_diff(ops::matmul_tn(at, b), naive_matmul(a, b)));
  const auto af = a.cast<float>(), bf = b.cast<float>();
  const double errf = max_abs_diff(ops::matmul(af, bf), naive_matmul(af, bf));
  std::ostringstream os;
  os << "double max_abs=" << err << " float max_abs=" << errf;
  return verdict("matmul_matches_reference", err < 1e-12 && errf < 1e-5, os.str());
}

CheckResult check_conv_reference(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0;
  for (const std::size_t stride : {1, 2})
    for (const std::size_t kernel : {1, 2, 3})
      for (const bool same : {true, false}) {
        const auto x = random_tensor<double>({2, 3, 7, 6}, rng);
        const auto f = random_tensor<double>({4, 3, kernel, kernel}, rng);
        const auto got = ops::conv2d(x, f, stride, same ? Padding::kSame : Padding::kValid);
        worst = std::max(worst, max_abs_diff(got, naive_conv2d(x, f, stride, same)));
      }
  std::ostringstream os;
  os << "max_abs=" << worst;
  return verdict("conv2d_matches_reference", worst < 1e-12, os.str());
}

CheckResult check_pool_reference(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0;
  for (const std::size_t window : {2, 3})
    for (const std::size_t stride : {1, 2}) {
      const auto x = random_tensor<double>({2, 3, 7, 8}, rng);
      worst = std::max(worst, max_abs_diff(ops::maxpool2d(x, window, stride), naive_maxpool(x, window, stride)));
    }
  const auto x = random_tensor<double>({2, 3, 5, 4}, rng);
  worst = std::max(worst, max_abs_diff(ops::global_avg_pool(x), naive_global_avg_pool(x)));
  std::ostringstream os;
  os << "max_abs=" << worst;
  return verdict("pooling_matches_reference", worst < 1e-12, os.str());
}

GradientReport gradient_dense_plain(Activation act, std::uint64_t seed) {
  Rng rng(seed);
  auto layer = DensePlain<double>::initialize(6, 5, act, rng);
  randomize(layer.parameters(), rng);
  return layer_check(layer, random_tensor<double>({3, 6}, rng),
                     [](DensePlain<double>& l, const Tensor<double>& x) { return l.forward_train(x); }, rng, true);
}

GradientReport gradient_dense_grouped(Method method, std::size_t n, Activation act, std::uint64_t seed) {
  Rng rng(seed);
  const GroupSpec spec{3, n, method, 0.5};
  auto layer = DenseGrouped<double>::initialize(5, spec, act, rng);
  randomize(layer.parameters(), rng);
  auto mask = sample_mask(spec, 4, rng);
  return layer_check(
      layer, random_tensor<double>({4, 5}, rng),
      [&mask](DenseGrouped<double>& l, const Tensor<double>& x) { return l.forward_train(x, mask); }, rng, true);
}

GradientReport gradient_conv_plain(Padding padding, std::size_t stride, Activation act, std::uint64_t seed) {
  Rng rng(seed);
  auto layer = ConvPlain<double>::initialize(2, 3, 3, stride, padding, act, rng);
  randomize(layer.parameters(), rng);
  return layer_check(layer, random_tensor<double>({2, 2, 5, 6}, rng),
                     [](ConvPlain<double>& l, const Tensor<double>& x) { return l.forward_train(x); }, rng, true);
}

GradientReport gradient_conv_grouped(Method method, std::size_t n, Padding padding, Activation act,
                                     std::uint64_t seed) {
  Rng rng(seed);
  const GroupSpec spec{2, n, method, 0.5};
  auto layer = ConvGrouped<double>::initialize(2, spec, 3, 1, padding, act, rng);
  randomize(layer.parameters(), rng);
  auto mask = sample_mask(spec, 2, rng);
  return layer_check(
      layer, random_tensor<double>({2, 2, 5, 5}, rng),
      [&mask](ConvGrouped<double>& l, const Tensor<double>& x) { return l.forward_train(x, mask); }, rng, true);
}

GradientReport gradient_maxpool(std::size_t window, std::size_t stride, std::uint64_t seed) {
  Rng rng(seed);
  MaxPool<double> layer(window, stride);
  return layer_check(layer, random_tensor<double>({2, 2, 7, 6}, rng),
                     [](MaxPool<double>& l, const Tensor<double>& x) { return l.forward_train(x); }, rng, false);
}

GradientReport gradient_global_avg_pool(std::uint64_t seed) {
  Rng rng(seed);
  GlobalAvgPool<double> layer;
  return layer_check(layer, random_tensor<double>({2, 3, 4, 5}, rng),
                     [](GlobalAvgPool<double>& l, const Tensor<double>& x) { return l.forward_train(x); }, rng,
                     false);
}

GradientReport gradient_softmax_head(std::uint64_t seed) {
  Rng rng(seed);
  auto logits = random_tensor<double>({5, 7}, rng, -3.0, 3.0);
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < 5; ++i) labels.push_back(static_cast<std::uint8_t>(rng.below(7)));
  const auto sl = ops::softmax_cross_entropy(logits, labels);
  std::vector<GradientTarget> targets{{"logits", &logits, ops::softmax_cross_entropy_vjp(sl.probs, labels)}};
  return check_gradients([&] { return naive_softmax_cross_entropy(logits, labels); }, targets);
}

GradientReport gradient_model_chain(Method method, std::uint64_t seed) {
  Rng rng(seed);
  Model<double> model;
  model.architecture = "chain";
  model.input_shape = {2, 7, 7};
  model.layers.emplace_back(
      ConvGrouped<double>::initialize(2, GroupSpec{2, 2, method, 0.5}, 3, 1, Padding::kSame, Activation::kTanh, rng));
  model.layers.emplace_back(MaxPool<double>(3, 2));
  model.layers.emplace_back(
      ConvGrouped<double>::initialize(2, GroupSpec{3, 2, method, 0.5}, 3, 1, Padding::kValid, Activation::kRelu, rng));
  model.layers.emplace_back(ConvPlain<double>::initialize(3, 4, 1, 1, Padding::kSame, Activation::kSigmoid, rng));
  model.layers.emplace_back(GlobalAvgPool<double>());
  model.layers.emplace_back(DenseGrouped<double>::initialize(4, GroupSpec{3, 2, method, 0.5}, Activation::kRelu, rng));
  model.layers.emplace_back(DensePlain<double>::initialize(3, 5, Activation::kIdentity, rng));
  auto params = parameters(model);
  randomize(params, rng);
  const auto input = random_tensor<double>({3, 2, 7, 7}, rng);
  std::vector<std::uint8_t> labels{0, 3, 4};
  const auto masks = sample_masks(model, 3, rng);

  const auto logits = forward_train(model, input, masks);
  const auto sl = ops::softmax_cross_entropy(logits, labels);
  backward(model, ops::softmax_cross_entropy_vjp(sl.probs, labels));
  auto targets = param_targets(params);
  auto loss = [&] { return naive_softmax_cross_entropy(forward_train(model, input, masks), labels); };
  return check_gradients(loss, targets);
}

namespace {

void relative_update(FidelityReport& report, const Tensor<double>& combined, const Tensor<double>& expected,
                     const std::string& label) {
  for (std::size_t e = 0; e < expected.size(); ++e) {
    const double rel = std::abs(combined[e] - expected[e]) / std::max(std::abs(expected[e]), 1e-300);
    if (!(rel <= report.max_relative_error)) {
      report.max_relative_error = std::isnan(rel) ? std::numeric_limits<double>::infinity() : rel;
      std::ostringstream os;
      os << label << " element " << e << ": combined=" << combined[e] << " expected=" << expected[e];
      report.worst = os.str();
    }
  }
}

// Lifts every member pre-activation to at least `margin` by raising the
// biases. `pre` is [rows, members].
void make_pre_activations_positive(std::vector<ParamRef<double>> params, const Tensor<double>& pre, double margin) {
  Tensor<double>& bias = *params[1].value;
  const std::size_t members = bias.size();
  const std::size_t rows = pre.size() / members;
  for (std::size_t c = 0; c < members; ++c) {
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < rows; ++r) lowest = std::min(lowest, pre[r * members + c]);
    if (lowest < margin) bias[c] += margin - lowest;
  }
}

}  // namespace

FidelityReport combination_fidelity_dense(std::size_t trials, std::uint64_t seed, double tolerance) {
  Rng rng(seed);
  FidelityReport report;
  for (std::size_t t = 0; t < trials; ++t) {
    const GroupSpec spec{1 + rng.below(4), 1 + rng.below(4), t % 2 == 0 ? Method::kA : Method::kB,
                         rng.uniform(0.1, 1.0)};
    const std::size_t fan_in = 1 + rng.below(6), batch = 1 + rng.below(5);
    auto layer = DenseGrouped<double>::initialize(fan_in, spec, Activation::kRelu, rng);
    randomize(layer.parameters(), rng);
    const auto x = random_tensor<double>({batch, fan_in}, rng);
    make_pre_activations_positive(layer.parameters(), layer.member_pre_activations(x), 0.05);
    const auto expected = enumerated_expectation(layer, x);
    const auto combined = layer.combine().forward(x);
    relative_update(report, combined, expected,
                                          "trial " + std::to_string(t) + " method " + to_string(spec.method));
    ++report.layers;
  }
  report.passed = report.max_relative_error <= tolerance;
  return report;
}

FidelityReport combination_fidelity_conv(std::size_t trials, std::uint64_t seed, double tolerance) {
  Rng rng(seed);
  FidelityReport report;
  for (std::size_t t = 0; t < trials; ++t) {
    const GroupSpec spec{1 + rng.below(3), 1 + rng.below(4), t % 2 == 0 ? Method::kA : Method::kB, 0.5};
    auto layer = ConvGrouped<double>::initialize(2, spec, 3, 1, Padding::kValid, Activation::kRelu, rng);
    randomize(layer.parameters(), rng);
    const auto x = random_tensor<double>({2, 2, 5, 5}, rng);
    const auto pre = layer.member_pre_activations(x);  // [B, k*n, H, W]
    // Channel-major view for the bias adjustment: [B*H*W, k*n].
    const std::size_t kn = pre.dim(1), area = pre.dim(2) * pre.dim(3);
    Tensor<double> rows({pre.dim(0) * area, kn});
    for (std::size_t b = 0; b < pre.dim(0); ++b)
      for (std::size_t c = 0; c < kn; ++c)
        for (std::size_t s = 0; s < area; ++s) rows.at(b * area + s, c) = pre[(b * kn + c) * area + s];
    make_pre_activations_positive(layer.parameters(), rows, 0.05);
    const auto expected = enumerated_expectation(layer, x);
    const auto combined = layer.combine().forward(x);
    relative_update(report, combined, expected, "conv trial " + std::to_string(t));
    ++report.layers;
  }
  report.passed = report.max_relative_error <= tolerance;
  return report;
}

CheckResult check_dropout_equivalence(std::uint64_t seed) {
  Rng rng(seed);
  const GroupSpec spec{6, 1, Method::kA, 0.5};
  auto layer = DenseGrouped<float>::initialize(5, spec, Activation::kRelu, rng);
  randomize(layer.parameters(), rng);
  const auto x = random_tensor<float>({4, 5}, rng);
  const auto mask = sample_mask(spec, 4, rng);
  ReferenceDropoutDense<float> ref{layer.members().weights(), layer.members().biases(), Activation::kRelu};
  const std::vector<std::uint8_t> flat(mask.values().begin(), mask.values().end());
  const auto up = random_tensor<float>({4, 6}, rng);

  const auto out = layer.forward_train(x, mask);
  const auto gx = layer.backward(up, true);
  const auto ref_out = ref.forward(x, flat);
  const auto g = ref.backward(x, flat, up);
  const bool same_out = out == ref_out;
  const bool same_grads = gx == g.input && layer.members().weight_grad() == g.weights &&
                          layer.members().bias_grad() == g.biases;
  return verdict("method_a_n1_equals_dropout", same_out && same_grads,
                 std::string("forward ") + (same_out ? "identical" : "differs") + ", backward " +
                     (same_grads ? "identical" : "differs"));
}

namespace {

Dataset synthetic_digits(std::size_t count, std::uint64_t seed, const std::string& split) {
  Rng rng(seed);
  Dataset d;
  d.name = "synthetic";
  d.split = split;
  d.images = random_tensor<float>({count, 1, 28, 28}, rng, 0.0, 1.0);
  for (std::size_t i = 0; i < count; ++i) {
    const auto label = static_cast<std::uint8_t>(rng.below(10));
    d.labels.push_back(label);
    // A class-dependent bright stripe so there is something to learn.
    for (std::size_t c = 0; c < 28; ++c) d.images.at(i, 0, label * 2 + 3, c) = 1.0f;
  }
  return d;
}

}  // namespace

CheckResult check_plain_equivalence(std::uint64_t seed) {
  const auto train_set = synthetic_digits(150, seed, "train");
  const auto val_set = synthetic_digits(40, seed + 1, "val");
  TrainConfig grouped;
  grouped.width = 8;
  grouped.method = Method::kB;
  grouped.group_size = 1;
  grouped.epochs = 3;
  grouped.batch_size = 32;
  grouped.avg_frequency = 2;
  grouped.seed = seed;
  TrainConfig plain = grouped;
  plain.plain_hidden = true;

  const auto a = train(grouped, train_set, val_set, val_set);
  const auto b = train(plain, train_set, val_set, val_set);
  bool same_trace = a.metrics.size() == b.metrics.size();
  for (std::size_t e = 0; same_trace && e < a.metrics.size(); ++e) {
    const auto &x = a.metrics[e], &y = b.metrics[e];
    same_trace = x.train_loss == y.train_loss && x.train_error == y.train_error && x.val_error == y.val_error &&
                 x.test_error == y.test_error && x.learning_rate == y.learning_rate;
  }
  const auto combined = combine_model(a.model);
  bool same_weights = combined.layers.size() == b.model.layers.size();
  for (std::size_t i = 0; same_weights && i < combined.layers.size(); ++i) {
    const auto& p = std::get<DensePlain<float>>(combined.layers[i]);
    const auto& q = std::get<DensePlain<float>>(b.model.layers[i]);
    same_weights = p.weights() == q.weights() && p.biases() == q.biases();
  }
  return verdict("method_b_n1_equals_plain", same_trace && same_weights,
                 std::string("metrics ") + (same_trace ? "identical" : "differ") + ", final weights " +
                     (same_weights ? "identical" : "differ"));
}

CheckResult check_weight_averaging(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> failures;
  for (const Method method : {Method::kA, Method::kB}) {
    const GroupSpec spec{3, 4, method, 0.5};
    auto layer = DenseGrouped<float>::initialize(5, spec, Activation::kTanh, rng);
    randomize(layer.parameters(), rng);
    const auto before = layer.weights();
    std::vector<long double> means(3 * 5, 0.0L);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t c = 0; c < 5; ++c) {
        for (std::size_t j = 0; j < 4; ++j) means[i * 5 + c] += before.at(i, j, c);
        means[i * 5 + c] /= 4;
      }
    layer.average();
    const auto once = layer.weights();
    bool mean_kept = true;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t c = 0; c < 5; ++c) mean_kept = mean_kept && once.at(i, j, c) == static_cast<float>(means[i * 5 + c]);
    if (!mean_kept) failures.push_back("group mean not preserved");
    if (!layer.members_identical()) failures.push_back("members differ after averaging");
    layer.average();
    if (!(layer.weights() == once)) failures.push_back("averaging is not idempotent");
    if (method == Method::kB) {
      const auto x = random_tensor<float>({3, 5}, rng);
      std::optional<Tensor<float>> first;
      for (std::size_t j = 0; j < 4; ++j) {
        MaskBatch mask(3, 3, 4);
        for (std::size_t b = 0; b < 3; ++b)
          for (std::size_t i = 0; i < 3; ++i) mask.at(b, i, (j + b + i) % 4) = 1;
        const auto out = layer.forward_train(x, mask);
        if (!first) first = out;
        else if (!(out == *first)) failures.push_back("Method B output depends on the mask after averaging");
      }
    }
  }
  std::string detail = failures.empty() ? "all properties hold" : failures.front();
  return verdict("weight_averaging_algebra", failures.empty(), detail);
}

CheckResult check_model_round_trip(std::uint64_t seed) {
  TrainConfig config;
  config.width = 6;
  config.group_size = 3;
  config.seed = seed;
  auto model = build_model(config);
  Rng rng(seed);
  randomize(parameters(model), rng);
  const auto bytes = encode_model(model, describe_config(config));
  const auto back = decode_model<float>(bytes);
  const bool same_bytes = encode_model(back, describe_config(config)) == bytes;
  auto p = parameters(model);
  auto q = parameters(const_cast<Model<float>&>(back));
  bool same_params = p.size() == q.size();
  for (std::size_t i = 0; same_params && i < p.size(); ++i) same_params = *p[i].value == *q[i].value;
  auto wide = decode_model<double>(bytes);
  auto w = parameters(wide);
  bool widened = w.size() == p.size();
  for (std::size_t i = 0; widened && i < p.size(); ++i) widened = p[i].value->cast<double>() == *w[i].value;
  bool truncated_rejected = false;
  try {
    (void)decode_model<float>(std::span(bytes).first(bytes.size() - 7));
  } catch (const ChecksumError&) {
    truncated_rejected = true;
  }
  const bool ok = same_bytes && same_params && widened && truncated_rejected;
  return verdict("model_file_round_trip", ok,
                 std::string("re-encode ") + (same_bytes ? "identical" : "differs") + ", parameters " +
                     (same_params ? "identical" : "differ") + ", widening " + (widened ? "exact" : "inexact") +
                     ", truncation " + (truncated_rejected ? "rejected" : "accepted"));
}

CheckResult check_data_round_trip(std::uint64_t seed) {
  Rng rng(seed);
  const auto dir = std::filesystem::temp_directory_path() / ("inb_selfcheck_" + std::to_string(seed) + "_" +
                                                             std::to_string(rng.next() % 1000000));
  std::filesystem::create_directories(dir);
  std::vector<std::uint8_t> pixels(3 * 28 * 28), labels(3), cifar(2 * 3072), cifar_labels(2);
  for (auto& p : pixels) p = static_cast<std::uint8_t>(rng.below(256));
  for (auto& l : labels) l = static_cast<std::uint8_t>(rng.below(10));
  for (auto& p : cifar) p = static_cast<std::uint8_t>(rng.below(256));
  for (auto& l : cifar_labels) l = static_cast<std::uint8_t>(rng.below(10));
  bool ok = true;
  try {
    write_mnist_idx(dir / "img", dir / "lbl", pixels, 28, 28, labels);
    const auto mnist = load_mnist_idx(dir / "img", dir / "lbl");
    ok = ok && mnist.labels == labels && mnist.images.shape() == Shape{3, 1, 28, 28};
    for (std::size_t i = 0; ok && i < pixels.size(); ++i)
      ok = mnist.images[i] == static_cast<float>(pixels[i]) / 255.0f;
    write_cifar10_binary(dir / "batch.bin", cifar_labels, cifar);
    const auto c = load_cifar10_binary({dir / "batch.bin"});
    ok = ok && c.labels == cifar_labels && c.images.shape() == Shape{2, 3, 32, 32};
    for (std::size_t i = 0; ok && i < cifar.size(); ++i) ok = c.images[i] == static_cast<float>(cifar[i]) / 255.0f;
  } catch (const std::exception& e) {
    std::filesystem::remove_all(dir);
    return verdict("dataset_file_round_trip", false, e.what());
  }
  std::filesystem::remove_all(dir);
  return verdict("dataset_file_round_trip", ok, ok ? "IDX and CIFAR-10 records reload exactly" : "mismatch");
}

std::vector<CheckResult> run_self_checks(std::uint64_t seed) {
  std::vector<CheckResult> out;
  out.push_back(check_matmul_reference(seed));
  out.push_back(check_conv_reference(seed));
  out.push_back(check_pool_reference(seed));

  auto grad = [&out](const std::string& name, const GradientReport& r) {
    out.push_back(verdict("gradient_" + name, r.passed, describe(r)));
  };
  for (const Activation act : {Activation::kRelu, Activation::kSigmoid, Activation::kTanh}) {
    grad("dense_plain_" + to_string(act), gradient_dense_plain(act, seed));
  }
  grad("dense_grouped_A", gradient_dense_grouped(Method::kA, 3, Activation::kRelu, seed));
  grad("dense_grouped_B", gradient_dense_grouped(Method::kB, 3, Activation::kRelu, seed));
  grad("conv_plain_same", gradient_conv_plain(Padding::kSame, 1, Activation::kRelu, seed));
  grad("conv_plain_valid_stride2", gradient_conv_plain(Padding::kValid, 2, Activation::kTanh, seed));
  grad("conv_grouped_A", gradient_conv_grouped(Method::kA, 2, Padding::kSame, Activation::kRelu, seed));
  grad("conv_grouped_B", gradient_conv_grouped(Method::kB, 3, Padding::kValid, Activation::kRelu, seed));
  grad("maxpool", gradient_maxpool(3, 2, seed));
  grad("global_avg_pool", gradient_global_avg_pool(seed));
  grad("softmax_head", gradient_softmax_head(seed));
  grad("model_chain_A", gradient_model_chain(Method::kA, seed));
  grad("model_chain_B", gradient_model_chain(Method::kB, seed));

  auto fidelity = [&out](const std::string& name, const FidelityReport& r) {
    std::ostringstream os;
    os << r.layers << " layers, max_rel=" << r.max_relative_error;
    out.push_back(verdict(name, r.passed, os.str()));
  };
  fidelity("combine_matches_mask_enumeration_dense", combination_fidelity_dense(100, seed));
  fidelity("combine_matches_mask_enumeration_conv", combination_fidelity_conv(20, seed));
  out.push_back(check_dropout_equivalence(seed));
  out.push_back(check_plain_equivalence(seed));
  out.push_back(check_weight_averaging(seed));
  out.push_back(check_model_round_trip(seed));
  out.push_back(check_data_round_trip(seed));
  return out;
}

}  // namespace inb::oracle
