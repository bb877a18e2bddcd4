#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "inb/bagging.hpp"
#include "inb/data.hpp"
#include "inb/model.hpp"
#include "inb/optim.hpp"

namespace inb {

enum class Architecture : std::uint8_t { kMnistFc = 0, kCnnC = 1 };

Architecture parse_architecture(std::string_view name);
std::string to_string(Architecture arch);

struct TrainConfig {
  Architecture architecture = Architecture::kMnistFc;
  /// Groups per hidden layer (mnist_fc) or filter-count multiplier (cnn_c).
  double width = 16;
  Method method = Method::kA;
  std::size_t group_size = 1;
  double keep_prob = 0.5;
  Activation activation = Activation::kRelu;
  std::size_t epochs = 30;
  std::size_t batch_size = 128;
  /// Empty: mnist_fc uses mnist_desk_schedule(epochs), cnn_c a plateau rule.
  std::optional<LrSchedule> schedule;
  /// Epochs between weight averages; 0 never averages.
  std::size_t avg_frequency = 10;
  std::uint64_t seed = 1;
  std::string data_dir;
  double val_fraction = 0.1;
  /// Use only the first N training images (0 = all).
  std::size_t train_limit = 0;
  /// Baseline: hidden layers are plain layers of the logical width.
  bool plain_hidden = false;

  void validate() const;
  GroupSpec group_spec(std::size_t group_count) const;
  LrSchedule resolved_schedule() const;
};

/// Desk-scale defaults: mnist_fc 30 epochs on all training images; cnn_c 20
/// epochs on 10000 training images. Paper scale: 200 epochs, all images.
TrainConfig default_train_config(Architecture arch, bool paper_scale = false);

/// Conv widths of the CIFAR network for a filter multiplier, in layer order.
std::vector<std::size_t> cnn_c_widths(double multiplier);

/// mnist_fc: 784 -> grouped k -> grouped k -> plain 10.
/// cnn_c: 2x conv3x3, maxpool 3/2, 2x conv3x3, maxpool 3/2, conv3x3 VALID,
/// conv1x1 (plain), global average pooling, plain dense 10.
Model<float> build_model(const TrainConfig& config);

struct MetricsRow {
  std::size_t epoch = 0;
  double train_loss = 0;
  double train_error = 0;
  double val_error = 0;
  double test_error = 0;
  double seconds = 0;
  double learning_rate = 0;
  bool averaged = false;
};

struct TrainResult {
  Model<float> model;
  std::vector<MetricsRow> metrics;
  std::size_t averaging_events = 0;
};

using EpochCallback = std::function<void(const MetricsRow&)>;

/// Runs the full training loop. Deterministic given the config.
TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& val_set,
                  const Dataset& test_set, const EpochCallback& on_epoch = {});

enum class EvalMode : std::uint8_t { kCombined, kExpected, kSingleMember };
EvalMode parse_eval_mode(std::string_view name);
std::string to_string(EvalMode mode);

/// Predicted classes (argmax of the logits, first maximum on ties).
std::vector<std::uint8_t> predict(const Model<float>& model, const Dataset& dataset, EvalMode mode);
/// Classification error in [0,1].
double evaluate(const Model<float>& model, const Dataset& dataset, EvalMode mode);
double error_rate(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> labels);
/// Fraction of samples where the two modes predict the same class.
double agreement(const Model<float>& model, const Dataset& dataset, EvalMode a, EvalMode b);

struct DatasetBundle {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Loads the dataset matching the architecture from config.data_dir
/// (MNIST IDX files or CIFAR-10 binary batches), applies train_limit and
/// splits off the validation set with the run seed.
DatasetBundle load_datasets(const TrainConfig& config);
/// The split step of load_datasets on already-loaded data.
DatasetBundle prepare_datasets(const TrainConfig& config, const Dataset& full_train, const Dataset& test);

/// Metrics CSV columns, in order.
inline constexpr std::string_view kMetricsHeader =
    "epoch,train_loss,train_error,val_error,test_error,seconds,learning_rate,averaged";
/// Writes `# key=value` comment lines for the resolved config, the header
/// and one row per epoch.
void write_metrics_csv(std::ostream& out, const TrainConfig& config, const std::vector<MetricsRow>& rows);

}  // namespace inb
