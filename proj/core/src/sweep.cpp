#include "inb/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <tuple>

#include "inb/errors.hpp"

namespace inb {

std::vector<TrainConfig> expand_grid(const SweepGrid& grid) {
  auto axis = [](const auto& values, const auto& fallback) {
    using V = std::decay_t<decltype(fallback)>;
    return values.empty() ? std::vector<V>{fallback} : std::vector<V>(values.begin(), values.end());
  };
  const TrainConfig& b = grid.base;
  std::vector<TrainConfig> out;
  for (const double width : axis(grid.widths, b.width))
    for (const Method method : axis(grid.methods, b.method))
      for (const std::size_t n : axis(grid.group_sizes, b.group_size))
        for (const double p : axis(grid.keep_probs, b.keep_prob))
          for (const std::size_t freq : axis(grid.avg_frequencies, b.avg_frequency))
            for (const Activation act : axis(grid.activations, b.activation))
              for (const std::uint64_t seed : axis(grid.seeds, b.seed)) {
                TrainConfig c = b;
                c.width = width;
                c.method = method;
                c.group_size = n;
                c.keep_prob = p;
                c.avg_frequency = freq;
                c.activation = act;
                c.seed = seed;
                out.push_back(c);
              }
  return out;
}

const std::vector<std::string>& sweep_preset_names() {
  static const std::vector<std::string> names = {"fig4-mnist", "fig4-cifar", "fig5-mnist",
                                                 "fig5-cifar", "fig6",       "fig8"};
  return names;
}

SweepGrid sweep_preset(std::string_view name, bool paper_scale) {
  const bool cifar = name == "fig4-cifar" || name == "fig5-cifar";
  SweepGrid grid;
  grid.base = default_train_config(cifar ? Architecture::kCnnC : Architecture::kMnistFc, paper_scale);
  grid.seeds = {1, 2, 3};
  grid.group_sizes = {1, 2, 4};
  if (name == "fig4-mnist" || name == "fig5-mnist") {
    grid.widths = {16, 32, 64, 128, 256};
    grid.methods = {name == "fig4-mnist" ? Method::kA : Method::kB};
  } else if (cifar) {
    grid.widths = {0.25, 0.5, 1.0};
    grid.methods = {name == "fig4-cifar" ? Method::kA : Method::kB};
  } else if (name == "fig6") {
    grid.widths = {256};
    grid.methods = {Method::kA, Method::kB};
    grid.group_sizes = {2, 4};
    const std::size_t e = grid.base.epochs;
    grid.avg_frequencies = {1, std::max<std::size_t>(1, e / 20), std::max<std::size_t>(1, e / 4), e};
    std::sort(grid.avg_frequencies.begin(), grid.avg_frequencies.end());
    grid.avg_frequencies.erase(std::unique(grid.avg_frequencies.begin(), grid.avg_frequencies.end()),
                               grid.avg_frequencies.end());
  } else if (name == "fig8") {
    grid.widths = {64};
    grid.methods = {Method::kA, Method::kB};
    grid.activations = {Activation::kRelu, Activation::kSigmoid, Activation::kTanh};
  } else {
    throw ConfigError("unknown sweep preset '" + std::string(name) + "'");
  }
  return grid;
}

namespace {

struct RawData {
  Dataset train;
  Dataset test;
};

// Loads each (architecture, directory) pair once and shares it across runs.
class DataCache {
 public:
  std::shared_ptr<const RawData> get(const TrainConfig& config) {
    const auto key = std::make_pair(config.architecture, config.data_dir);
    std::lock_guard lock(mutex_);
    auto& slot = cache_[key];
    if (!slot) {
      auto raw = std::make_shared<RawData>();
      if (config.architecture == Architecture::kMnistFc) {
        const auto files = mnist_files(config.data_dir);
        raw->train = load_mnist_idx(files.train_images, files.train_labels);
        raw->test = load_mnist_idx(files.test_images, files.test_labels);
      } else {
        raw->train = load_cifar10_binary(cifar10_train_files(config.data_dir));
        raw->test = load_cifar10_binary({cifar10_test_file(config.data_dir)});
      }
      slot = std::move(raw);
    }
    return slot;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<Architecture, std::string>, std::shared_ptr<const RawData>> cache_;
};

auto sort_key(const SweepRow& r) {
  const auto& c = r.config;
  return std::make_tuple(c.width, static_cast<int>(c.method), c.group_size, c.seed, c.avg_frequency,
                         static_cast<int>(c.activation), c.keep_prob);
}

SweepRow run_one(const TrainConfig& config, DataCache& cache, bool dry_run) {
  SweepRow row;
  row.config = config;
  const auto started = std::chrono::steady_clock::now();
  try {
    config.validate();
    const auto model = build_model(config);
    row.grouped_params = parameter_count(model);
    row.combined_params = parameter_count(combine_model(model));
    if (dry_run) {
      row.status = "dry-run";
    } else {
      const auto raw = cache.get(config);
      const auto data = prepare_datasets(config, raw->train, raw->test);
      const auto result = train(config, data.train, data.val, data.test);
      row.final_test_error = result.metrics.back().test_error;
      row.status = "ok";
    }
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return row;
}

}  // namespace

std::vector<SweepRow> run_sweep(const std::vector<TrainConfig>& configs, const SweepOptions& options) {
  std::vector<SweepRow> rows(configs.size());
  DataCache cache;
  std::mutex report_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      rows[i] = run_one(configs[i], cache, options.dry_run);
      if (options.on_row) {
        std::lock_guard lock(report_mutex);
        options.on_row(rows[i]);
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, std::max<std::size_t>(1, configs.size()));
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  std::stable_sort(rows.begin(), rows.end(),
                   [](const SweepRow& a, const SweepRow& b) { return sort_key(a) < sort_key(b); });
  return rows;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

}  // namespace

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepHeader << '\n' << std::setprecision(8);
  for (const auto& r : rows) {
    const auto& c = r.config;
    out << to_string(c.architecture) << ',' << c.width << ',' << to_string(c.method) << ',' << c.group_size << ','
        << c.keep_prob << ',' << c.avg_frequency << ',' << to_string(c.activation) << ',' << c.seed << ','
        << c.epochs << ',' << r.final_test_error << ',' << r.grouped_params << ',' << r.combined_params << ','
        << r.seconds << ',' << csv_field(r.status) << '\n';
  }
}

}  // namespace inb
