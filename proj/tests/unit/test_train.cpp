#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "inb/config.hpp"
#include "inb/errors.hpp"
#include "inb/sweep.hpp"
#include "inb/train.hpp"
#include "support.hpp"

namespace inb {
namespace {

using testing::synthetic_mnist;

struct Toy {
  Dataset train = synthetic_mnist(256, 1);
  Dataset val = synthetic_mnist(64, 2, "val");
  Dataset test = synthetic_mnist(64, 3, "test");
};

const Toy& toy() {
  static const Toy t;
  return t;
}

TrainConfig small_config(std::size_t n = 2, std::size_t epochs = 4, std::size_t freq = 2) {
  TrainConfig c;
  c.width = 8;
  c.group_size = n;
  c.epochs = epochs;
  c.avg_frequency = freq;
  c.batch_size = 32;
  return c;
}

TrainResult run(const TrainConfig& c) { return train(c, toy().train, toy().val, toy().test); }

bool same_rows(const std::vector<MetricsRow>& a, const std::vector<MetricsRow>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i];
    const auto& y = b[i];
    if (x.epoch != y.epoch || x.train_loss != y.train_loss || x.train_error != y.train_error ||
        x.val_error != y.val_error || x.test_error != y.test_error || x.learning_rate != y.learning_rate ||
        x.averaged != y.averaged)
      return false;
  }
  return true;
}

TEST(Train, AveragingFiresFloorEpochsOverFrequencyTimes) {
  for (const auto& [epochs, freq, events] :
       std::vector<std::tuple<std::size_t, std::size_t, std::size_t>>{{7, 3, 2}, {4, 1, 4}, {5, 0, 0}, {5, 5, 1}}) {
    const auto r = run(small_config(2, epochs, freq));
    EXPECT_EQ(r.averaging_events, events) << epochs << "/" << freq;
    std::size_t flagged = 0;
    for (const auto& row : r.metrics) {
      const bool expect = freq > 0 && row.epoch % freq == 0;
      EXPECT_EQ(row.averaged, expect) << "epoch " << row.epoch;
      flagged += row.averaged;
    }
    EXPECT_EQ(flagged, events);
  }
}

TEST(Train, FrequencyEqualToEpochsOnlyAveragesAtTheEnd) {
  const auto r = run(small_config(2, 4, 4));
  for (std::size_t i = 0; i + 1 < r.metrics.size(); ++i) EXPECT_FALSE(r.metrics[i].averaged);
  EXPECT_TRUE(r.metrics.back().averaged);
  EXPECT_TRUE(members_identical(r.model));
}

TEST(Train, MembersDivergeWithoutAveragingAndAgreeAfter) {
  EXPECT_FALSE(members_identical(run(small_config(2, 3, 0)).model));
  EXPECT_TRUE(members_identical(run(small_config(2, 3, 3)).model));
}

TEST(Train, MetricsRowsAreWellFormed) {
  const auto r = run(small_config());
  ASSERT_EQ(r.metrics.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& row = r.metrics[i];
    EXPECT_EQ(row.epoch, i + 1);
    for (const double e : {row.train_error, row.val_error, row.test_error}) {
      EXPECT_GE(e, 0.0);
      EXPECT_LE(e, 1.0);
    }
    EXPECT_GT(row.train_loss, 0.0);
    EXPECT_EQ(row.learning_rate, i < 2 ? 1e-3 : 1e-4);
  }
  EXPECT_LT(r.metrics.back().train_loss, r.metrics.front().train_loss);
}

TEST(Train, SameConfigSameTrace) {
  const auto a = run(small_config());
  const auto b = run(small_config());
  EXPECT_TRUE(same_rows(a.metrics, b.metrics));
  const auto pa = parameters(const_cast<Model<float>&>(a.model));
  const auto pb = parameters(const_cast<Model<float>&>(b.model));
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(*pa[i].value, *pb[i].value);
  auto other = small_config();
  other.seed = 2;
  EXPECT_FALSE(same_rows(a.metrics, run(other).metrics));
}

TEST(Train, TestSetNeverInfluencesTraining) {
  const auto c = small_config();
  const auto a = train(c, toy().train, toy().val, toy().test);
  const auto b = train(c, toy().train, toy().val, synthetic_mnist(64, 99, "test"));
  ASSERT_EQ(a.metrics.size(), b.metrics.size());
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    EXPECT_EQ(a.metrics[i].train_loss, b.metrics[i].train_loss);
    EXPECT_EQ(a.metrics[i].val_error, b.metrics[i].val_error);
  }
}

TEST(Train, MethodBSingleMemberTracksPlainNetwork) {
  for (const std::uint64_t seed : {1, 2}) {
    const auto r = oracle::check_plain_equivalence(seed);
    EXPECT_TRUE(r.passed) << r.detail;
  }
}

TEST(Train, DivergenceReportsEpochAndBatch) {
  auto c = small_config();
  c.schedule = PiecewiseSchedule{{{0, 4, 1e30}}};
  try {
    run(c);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_LT(e.epoch(), 4u);
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(Train, CnnRunsOnTinyImages) {
  Dataset d;
  Rng rng(4);
  d.images = oracle::random_tensor<float>({16, 3, 32, 32}, rng, 0.0, 1.0);
  for (std::size_t i = 0; i < 16; ++i) d.labels.push_back(static_cast<std::uint8_t>(i % 10));
  TrainConfig c = default_train_config(Architecture::kCnnC);
  c.width = 0.125;
  c.group_size = 2;
  c.epochs = 1;
  c.batch_size = 8;
  const auto r = train(c, d, d.head(4), d.head(4));
  EXPECT_EQ(r.metrics.size(), 1u);
  EXPECT_EQ(r.metrics[0].learning_rate, 1e-3);
}

TEST(Train, RejectsMismatchedData) {
  TrainConfig c = default_train_config(Architecture::kCnnC);
  c.epochs = 1;
  EXPECT_THROW(train(c, toy().train, toy().val, toy().test), Error);
}

TEST(Evaluate, HardWiredConstantModel) {
  auto model = build_model(small_config(1));
  for (auto& p : parameters(model))
    for (auto& v : p.value->data()) v = 0.0f;
  std::get<DensePlain<float>>(model.layers.back()).biases()[3] = 1.0f;
  Dataset d = synthetic_mnist(20, 5);
  std::fill(d.labels.begin(), d.labels.end(), 3);
  EXPECT_EQ(evaluate(model, d, EvalMode::kCombined), 0.0);
  EXPECT_EQ(evaluate(model, d, EvalMode::kExpected), 0.0);
  EXPECT_EQ(evaluate(model, d, EvalMode::kSingleMember), 0.0);
  std::fill(d.labels.begin(), d.labels.end(), 4);
  EXPECT_EQ(evaluate(model, d, EvalMode::kCombined), 1.0);
}

TEST(Evaluate, SingleMemberMethodBAgreesWithCombined) {
  auto c = small_config(1, 2, 0);
  c.method = Method::kB;
  const auto r = run(c);
  EXPECT_EQ(predict(r.model, toy().test, EvalMode::kCombined), predict(r.model, toy().test, EvalMode::kSingleMember));
  EXPECT_EQ(agreement(r.model, toy().test, EvalMode::kCombined, EvalMode::kSingleMember), 1.0);
}

TEST(Evaluate, ExpectedModeNeedsEnumerableGroups) {
  auto c = small_config(21);
  c.width = 2;
  const auto model = build_model(c);
  EXPECT_THROW(evaluate(model, toy().test.head(2), EvalMode::kExpected), ConfigError);
  EXPECT_NO_THROW(evaluate(model, toy().test.head(2), EvalMode::kCombined));
}

TEST(Evaluate, ErrorRateAndModeNames) {
  const std::vector<std::uint8_t> p{1, 2, 3, 4}, l{1, 0, 3, 0};
  EXPECT_EQ(error_rate(p, l), 0.5);
  for (const auto m : {EvalMode::kCombined, EvalMode::kExpected, EvalMode::kSingleMember})
    EXPECT_EQ(parse_eval_mode(to_string(m)), m);
  EXPECT_EQ(to_string(EvalMode::kSingleMember), "single-member");
  EXPECT_THROW(parse_eval_mode("ensemble"), ConfigError);
}

TEST(Config, DefaultsPerArchitecture) {
  const auto fc = default_train_config(Architecture::kMnistFc);
  EXPECT_EQ(fc.epochs, 30u);
  EXPECT_EQ(fc.batch_size, 128u);
  EXPECT_EQ(fc.avg_frequency, 10u);
  EXPECT_EQ(fc.resolved_schedule(), LrSchedule{mnist_desk_schedule(30)});
  const auto cnn = default_train_config(Architecture::kCnnC);
  EXPECT_EQ(cnn.epochs, 20u);
  EXPECT_EQ(cnn.train_limit, 10000u);
  EXPECT_TRUE(std::holds_alternative<PlateauSchedule>(cnn.resolved_schedule()));
  EXPECT_EQ(default_train_config(Architecture::kMnistFc, true).epochs, 200u);
  EXPECT_EQ(default_train_config(Architecture::kMnistFc, true).resolved_schedule(), LrSchedule{mnist_paper_schedule()});
  EXPECT_EQ(default_train_config(Architecture::kCnnC, true).train_limit, 0u);
}

TEST(Config, FileThenFlagsWithFlagsWinning) {
  std::istringstream file("# run\narch = mnist_fc\nwidth=32\n\nepochs = 12\nseed=4\n");
  auto settings = parse_key_values(file);
  settings.emplace_back("width", "64");
  settings.emplace_back("method", "B");
  const auto c = resolve_config(settings);
  EXPECT_EQ(c.width, 64.0);
  EXPECT_EQ(c.epochs, 12u);
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.method, Method::kB);
  EXPECT_EQ(c.resolved_schedule(), LrSchedule{mnist_desk_schedule(12)});
}

TEST(Config, ArchitectureDefaultsApplyBeforeSettings) {
  const auto c = resolve_config({{"epochs", "3"}, {"arch", "cnn_c"}});
  EXPECT_EQ(c.architecture, Architecture::kCnnC);
  EXPECT_EQ(c.epochs, 3u);
  EXPECT_EQ(c.train_limit, 10000u);
}

TEST(Config, UnknownOrMalformedSettingsAreRejected) {
  TrainConfig c;
  EXPECT_THROW(apply_setting(c, "learning-rate", "1"), ConfigError);
  EXPECT_THROW(apply_setting(c, "epochs", "ten"), ConfigError);
  EXPECT_THROW(apply_setting(c, "method", "C"), ConfigError);
  EXPECT_THROW(apply_setting(c, "keep-prob", "0.5x"), ConfigError);
  std::istringstream bad("width 32\n");
  EXPECT_THROW(parse_key_values(bad), ConfigError);
}

TEST(Config, DescriptionRoundTrips) {
  auto c = small_config(3, 7, 2);
  c.method = Method::kB;
  c.activation = Activation::kTanh;
  c.schedule = PlateauSchedule{2e-3, 0.5, 3, 1e-6};
  c.data_dir = "some/dir";
  const auto described = describe_config(c);
  EXPECT_EQ(described.size(), config_keys().size());
  EXPECT_EQ(describe_config(resolve_config(described)), described);
}

TEST(Config, CsvEchoesResolvedConfig) {
  const auto c = small_config();
  std::ostringstream out;
  write_metrics_csv(out, c, run(c).metrics);
  std::istringstream in(out.str());
  std::string line;
  std::size_t comments = 0;
  while (std::getline(in, line) && line.starts_with("# ")) ++comments;
  EXPECT_EQ(comments, config_keys().size());
  EXPECT_EQ(line, kMetricsHeader);
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4u);
  EXPECT_NE(out.str().find("# group-size=2\n"), std::string::npos);
  EXPECT_NE(out.str().find("# avg-frequency=2\n"), std::string::npos);
}

TEST(Sweep, GridCardinality) {
  SweepGrid g;
  g.base = small_config();
  g.widths = {16};
  g.methods = {Method::kA};
  g.group_sizes = {1, 2, 4};
  g.seeds = {1, 2, 3};
  const auto configs = expand_grid(g);
  EXPECT_EQ(configs.size(), 9u);
  std::set<std::pair<std::size_t, std::uint64_t>> seen;
  for (const auto& c : configs) seen.emplace(c.group_size, c.seed);
  EXPECT_EQ(seen.size(), 9u);
}

TEST(Sweep, DryRunParameterArithmetic) {
  SweepGrid g;
  g.base = small_config();
  g.widths = {16, 32};
  g.group_sizes = {1, 2, 4};
  g.seeds = {2, 1};
  const auto rows = run_sweep(expand_grid(g), {2, true, {}});
  ASSERT_EQ(rows.size(), 12u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.status, "dry-run");
    const std::size_t k = static_cast<std::size_t>(r.config.width);
    const std::size_t hidden = 784 * k + k + k * k + k;
    const std::size_t head = k * 10 + 10;
    EXPECT_EQ(r.grouped_params, hidden * r.config.group_size + head);
    EXPECT_EQ(r.combined_params, (r.grouped_params - head) / r.config.group_size + head);
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& a = rows[i - 1].config;
    const auto& b = rows[i].config;
    EXPECT_LE(std::tie(a.width, a.group_size, a.seed), std::tie(b.width, b.group_size, b.seed));
  }
}

TEST(Sweep, ResultsIndependentOfParallelismAndFailuresRecorded) {
  testing::TempDir dir;
  testing::write_synthetic_mnist_dir(dir.path(), 200, 50, 11);
  SweepGrid g;
  g.base = small_config(1, 2, 1);
  g.base.data_dir = dir.path().string();
  g.group_sizes = {1, 2};
  g.seeds = {1, 2};
  auto configs = expand_grid(g);
  TrainConfig broken = configs[0];
  broken.data_dir = (dir / "missing").string();
  broken.seed = 9;
  configs.push_back(broken);

  const auto serial = run_sweep(configs, {1, false, {}});
  const auto parallel = run_sweep(configs, {3, false, {}});
  ASSERT_EQ(serial.size(), 5u);
  ASSERT_EQ(parallel.size(), 5u);
  std::size_t errors = 0;
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].status, parallel[i].status);
    EXPECT_EQ(serial[i].final_test_error, parallel[i].final_test_error);
    EXPECT_EQ(serial[i].config.seed, parallel[i].config.seed);
    if (serial[i].status.starts_with("error:")) ++errors;
    else EXPECT_EQ(serial[i].status, "ok");
  }
  EXPECT_EQ(errors, 1u);

  std::ostringstream csv;
  write_sweep_csv(csv, serial);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kSweepHeader);
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 5u);
}

TEST(Sweep, Presets) {
  for (const auto& name : sweep_preset_names()) {
    const auto desk = sweep_preset(name, false);
    const auto full = sweep_preset(name, true);
    EXPECT_EQ(full.base.epochs, 200u) << name;
    EXPECT_LT(desk.base.epochs, 200u) << name;
    EXPECT_EQ(desk.seeds.size(), 3u);
  }
  const auto fig6 = sweep_preset("fig6", true);
  EXPECT_EQ(fig6.avg_frequencies, (std::vector<std::size_t>{1, 10, 50, 200}));
  EXPECT_EQ(expand_grid(sweep_preset("fig4-mnist", false)).size(), 5u * 3 * 3);
  EXPECT_THROW(sweep_preset("fig9", false), ConfigError);
}

}  // namespace
}  // namespace inb
