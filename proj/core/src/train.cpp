#include "inb/train.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>

#include "inb/config.hpp"
#include "inb/errors.hpp"

namespace inb {

Architecture parse_architecture(std::string_view name) {
  if (name == "mnist_fc") return Architecture::kMnistFc;
  if (name == "cnn_c") return Architecture::kCnnC;
  throw ConfigError("unknown architecture '" + std::string(name) + "' (expected mnist_fc or cnn_c)");
}

std::string to_string(Architecture arch) { return arch == Architecture::kMnistFc ? "mnist_fc" : "cnn_c"; }

void TrainConfig::validate() const {
  if (!(width > 0.0)) throw ConfigError("width must be positive");
  if (architecture == Architecture::kMnistFc && std::llround(width) < 1) {
    throw ConfigError("mnist_fc width must be at least one group");
  }
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("validation fraction must lie in (0,1)");
  group_spec(1).validate();
  if (schedule) validate_schedule(*schedule);
}

GroupSpec TrainConfig::group_spec(std::size_t group_count) const {
  return GroupSpec{group_count, group_size, method, keep_prob};
}

LrSchedule TrainConfig::resolved_schedule() const {
  if (schedule) return *schedule;
  if (architecture == Architecture::kMnistFc) return mnist_desk_schedule(epochs);
  return PlateauSchedule{};
}

TrainConfig default_train_config(Architecture arch, bool paper_scale) {
  TrainConfig config;
  config.architecture = arch;
  if (arch == Architecture::kMnistFc) {
    config.width = 16;
    config.epochs = paper_scale ? 200 : 30;
    config.data_dir = paper_scale ? "data/mnist" : "data/mnist-desk";
  } else {
    config.width = 1.0;
    config.epochs = paper_scale ? 200 : 20;
    config.train_limit = paper_scale ? 0 : 10000;
    config.data_dir = "data/cifar-10-batches-bin";
  }
  return config;
}

std::vector<std::size_t> cnn_c_widths(double multiplier) {
  std::vector<std::size_t> widths;
  for (const double base : {64.0, 64.0, 128.0, 128.0, 192.0, 192.0}) {
    widths.push_back(static_cast<std::size_t>(std::max<long long>(1, std::llround(base * multiplier))));
  }
  return widths;
}

Model<float> build_model(const TrainConfig& config) {
  config.validate();
  auto rng = Rng::stream(config.seed, streams::kInit);
  Model<float> model;
  model.architecture = to_string(config.architecture);
  const Activation act = config.activation;
  if (config.architecture == Architecture::kMnistFc) {
    model.input_shape = {1, 28, 28};
    const auto k = static_cast<std::size_t>(std::llround(config.width));
    if (config.plain_hidden) {
      model.layers.emplace_back(DensePlain<float>::initialize(784, k, act, rng));
      model.layers.emplace_back(DensePlain<float>::initialize(k, k, act, rng));
    } else {
      model.layers.emplace_back(DenseGrouped<float>::initialize(784, config.group_spec(k), act, rng));
      model.layers.emplace_back(DenseGrouped<float>::initialize(k, config.group_spec(k), act, rng));
    }
    model.layers.emplace_back(DensePlain<float>::initialize(k, 10, Activation::kIdentity, rng));
    return model;
  }

  model.input_shape = {3, 32, 32};
  const auto w = cnn_c_widths(config.width);
  std::size_t channels = 3;
  auto add_conv = [&](std::size_t out, std::size_t kernel, Padding padding) {
    if (config.plain_hidden) {
      model.layers.emplace_back(ConvPlain<float>::initialize(channels, out, kernel, 1, padding, act, rng));
    } else {
      model.layers.emplace_back(
          ConvGrouped<float>::initialize(channels, config.group_spec(out), kernel, 1, padding, act, rng));
    }
    channels = out;
  };
  add_conv(w[0], 3, Padding::kSame);
  add_conv(w[1], 3, Padding::kSame);
  model.layers.emplace_back(MaxPool<float>(3, 2));
  add_conv(w[2], 3, Padding::kSame);
  add_conv(w[3], 3, Padding::kSame);
  model.layers.emplace_back(MaxPool<float>(3, 2));
  add_conv(w[4], 3, Padding::kValid);
  model.layers.emplace_back(ConvPlain<float>::initialize(channels, w[5], 1, 1, Padding::kSame, act, rng));
  model.layers.emplace_back(GlobalAvgPool<float>());
  model.layers.emplace_back(DensePlain<float>::initialize(w[5], 10, Activation::kIdentity, rng));
  return model;
}

EvalMode parse_eval_mode(std::string_view name) {
  if (name == "combined") return EvalMode::kCombined;
  if (name == "expected") return EvalMode::kExpected;
  if (name == "single-member") return EvalMode::kSingleMember;
  throw ConfigError("unknown evaluation mode '" + std::string(name) + "' (expected combined, expected or single-member)");
}

std::string to_string(EvalMode mode) {
  switch (mode) {
    case EvalMode::kCombined: return "combined";
    case EvalMode::kExpected: return "expected";
    case EvalMode::kSingleMember: return "single-member";
  }
  return "?";
}

namespace {

constexpr std::size_t kEvalChunk = 500;

std::size_t argmax_row(const Tensor<float>& logits, std::size_t row) {
  const std::size_t classes = logits.dim(1);
  std::size_t best = 0;
  for (std::size_t c = 1; c < classes; ++c)
    if (logits[row * classes + c] > logits[row * classes + best]) best = c;
  return best;
}

void require_compatible(const Model<float>& model, const Dataset& dataset) {
  if (dataset.size() > 0 && dataset.sample_shape() != model.input_shape) {
    throw ShapeError("dataset samples " + shape_to_string(dataset.sample_shape()) + " do not match model input " +
                     shape_to_string(model.input_shape));
  }
}

std::vector<std::uint8_t> predict_plain(const Model<float>& plain, const Dataset& dataset, bool expected) {
  std::vector<std::uint8_t> out;
  out.reserve(dataset.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < dataset.size(); start += kEvalChunk) {
    const std::size_t end = std::min(dataset.size(), start + kEvalChunk);
    idx.resize(end - start);
    for (std::size_t i = start; i < end; ++i) idx[i - start] = i;
    const auto batch = gather_batch(dataset, idx);
    const auto logits = expected ? forward_expected(plain, batch.images) : forward(plain, batch.images);
    for (std::size_t r = 0; r < idx.size(); ++r) out.push_back(static_cast<std::uint8_t>(argmax_row(logits, r)));
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> predict(const Model<float>& model, const Dataset& dataset, EvalMode mode) {
  require_compatible(model, dataset);
  switch (mode) {
    case EvalMode::kCombined: return predict_plain(combine_model(model), dataset, false);
    case EvalMode::kExpected:
      for (const auto& spec : group_specs(model)) {
        if (spec.group_size > kMaxEnumerationGroupSize) {
          throw ConfigError("expected-mode evaluation cannot enumerate groups of size " +
                            std::to_string(spec.group_size));
        }
      }
      return predict_plain(model, dataset, true);
    case EvalMode::kSingleMember: return predict_plain(single_member_model(model), dataset, false);
  }
  throw ConfigError("invalid evaluation mode");
}

double error_rate(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> labels) {
  if (predicted.size() != labels.size()) throw ShapeError("error_rate: prediction/label count mismatch");
  if (labels.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) wrong += predicted[i] != labels[i];
  return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

double evaluate(const Model<float>& model, const Dataset& dataset, EvalMode mode) {
  return error_rate(predict(model, dataset, mode), dataset.labels);
}

double agreement(const Model<float>& model, const Dataset& dataset, EvalMode a, EvalMode b) {
  const auto pa = predict(model, dataset, a);
  const auto pb = predict(model, dataset, b);
  if (pa.empty()) return 1.0;
  return 1.0 - error_rate(pa, pb);
}

TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& val_set,
                  const Dataset& test_set, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.size() == 0) throw ConfigError("training set is empty");
  const LrSchedule schedule = config.resolved_schedule();
  validate_schedule(schedule);

  TrainResult result{build_model(config), {}, 0};
  Model<float>& model = result.model;
  require_compatible(model, train_set);
  const auto params = parameters(model);
  auto state = make_adam_state(params);
  auto mask_rng = Rng::stream(config.seed, streams::kMask);
  const BatchPlan plan{config.seed, config.batch_size};
  std::vector<double> val_history;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const double lr = lr_at(schedule, epoch, val_history);
    double loss_sum = 0.0;
    std::size_t wrong = 0;
    const auto batches = epoch_batches(train_set.size(), plan, epoch);
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto batch = gather_batch(train_set, batches[bi]);
      const std::size_t n = batch.labels.size();
      const auto masks = sample_masks(model, n, mask_rng);
      Tensor<float> logits;
      ops::SoftmaxLoss<float> sl;
      try {
        logits = forward_train(model, batch.images, masks);
        sl = ops::softmax_cross_entropy(logits, batch.labels);
      } catch (const NumericError&) {
        throw DivergenceError(epoch, bi);
      }
      if (!std::isfinite(sl.loss)) throw DivergenceError(epoch, bi);
      loss_sum += static_cast<double>(sl.loss) * static_cast<double>(n);
      for (std::size_t r = 0; r < n; ++r) wrong += argmax_row(logits, r) != batch.labels[r];
      backward(model, ops::softmax_cross_entropy_vjp(sl.probs, batch.labels));
      try {
        adam_step(params, state, lr);
      } catch (const NumericError&) {
        throw DivergenceError(epoch, bi);
      }
    }

    MetricsRow row;
    row.epoch = epoch + 1;
    row.learning_rate = lr;
    row.train_loss = loss_sum / static_cast<double>(train_set.size());
    row.train_error = static_cast<double>(wrong) / static_cast<double>(train_set.size());
    if (config.avg_frequency > 0 && (epoch + 1) % config.avg_frequency == 0) {
      average_model(model);
      average_optimizer_state(state, params);
      row.averaged = true;
      ++result.averaging_events;
    }
    const auto combined = combine_model(model);
    row.val_error = val_set.size() ? error_rate(predict_plain(combined, val_set, false), val_set.labels) : 0.0;
    row.test_error = test_set.size() ? error_rate(predict_plain(combined, test_set, false), test_set.labels) : 0.0;
    val_history.push_back(row.val_error);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.metrics.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  return result;
}

DatasetBundle prepare_datasets(const TrainConfig& config, const Dataset& full_train, const Dataset& test) {
  const Dataset limited = full_train.head(config.train_limit);
  auto [train_part, val_part] = split_train_val(limited, config.val_fraction, config.seed);
  return {std::move(train_part), std::move(val_part), test};
}

DatasetBundle load_datasets(const TrainConfig& config) {
  const std::filesystem::path dir = config.data_dir;
  if (config.architecture == Architecture::kMnistFc) {
    const auto files = mnist_files(dir);
    return prepare_datasets(config, load_mnist_idx(files.train_images, files.train_labels),
                            load_mnist_idx(files.test_images, files.test_labels));
  }
  return prepare_datasets(config, load_cifar10_binary(cifar10_train_files(dir)),
                          load_cifar10_binary({cifar10_test_file(dir)}));
}

void write_metrics_csv(std::ostream& out, const TrainConfig& config, const std::vector<MetricsRow>& rows) {
  for (const auto& [key, value] : describe_config(config)) out << "# " << key << '=' << value << '\n';
  out << kMetricsHeader << '\n';
  out << std::setprecision(8);
  for (const auto& r : rows) {
    out << r.epoch << ',' << r.train_loss << ',' << r.train_error << ',' << r.val_error << ',' << r.test_error << ','
        << r.seconds << ',' << r.learning_rate << ',' << (r.averaged ? 1 : 0) << '\n';
  }
}

}  // namespace inb
