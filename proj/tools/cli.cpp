#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include "inb/config.hpp"
#include "inb/errors.hpp"
#include "inb/model_io.hpp"
#include "inb/sweep.hpp"
#include "inb/train.hpp"
#include "selfcheck.hpp"

namespace inb::cli {

namespace {

// One string slot per config key, filled from --key flags.
struct ConfigFlags {
  std::string config_path;
  bool paper_scale = false;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "key=value config file; flags override its entries");
    app.add_flag("--paper-scale", paper_scale, "Paper-scale defaults (200 epochs, full datasets)");
    for (const auto& key : config_keys()) {
      options.emplace_back(key, app.add_option("--" + key, values[key], "config key '" + key + "'"));
    }
  }

  TrainConfig resolve() const {
    KeyValues settings;
    if (!config_path.empty()) settings = read_config_file(config_path);
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) settings.emplace_back(key, values.at(key));
    return resolve_config(settings, paper_scale);
  }
};

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

template <typename V, typename F>
std::vector<V> parse_list(const std::string& text, F parse_one) {
  std::vector<V> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(parse_one(item));
  }
  return out;
}

std::size_t parse_count(const std::string& s) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty() || s[0] == '-') throw ConfigError("expected a non-negative integer, got '" + s + "'");
  return static_cast<std::size_t>(v);
}

double parse_real(const std::string& s) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) throw ConfigError("expected a number, got '" + s + "'");
  return v;
}

// "1,2,5" or "1-3" or a mix.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : parse_list<std::string>(text, [](const std::string& s) { return s; })) {
    const auto dash = item.find('-');
    if (dash == std::string::npos || dash == 0) {
      out.push_back(parse_count(item));
      continue;
    }
    const auto lo = parse_count(item.substr(0, dash)), hi = parse_count(item.substr(dash + 1));
    if (hi < lo) throw ConfigError("empty seed range '" + item + "'");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
  }
  return out;
}

struct ParamReport {
  std::size_t before = 0, after = 0, grouped_before = 0, grouped_after = 0;
};

ParamReport parameter_report(const Model<float>& model, const Model<float>& combined) {
  ParamReport r;
  r.before = parameter_count(model);
  r.after = parameter_count(combined);
  r.grouped_before = grouped_parameter_count(model);
  r.grouped_after = r.after - (r.before - r.grouped_before);
  return r;
}

std::string ratio(std::size_t a, std::size_t b) { return b == 0 ? "n/a" : fixed(static_cast<double>(a) / b, 2) + "x"; }

void write_text_file(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + tmp);
    f << text;
    if (!f.flush()) throw Error("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error("cannot rename " + tmp + " to " + path);
}

Dataset eval_dataset(const Model<float>& model, const std::string& data_dir, const std::string& split) {
  const Architecture arch = parse_architecture(model.architecture);
  const std::string dir = data_dir.empty() ? default_train_config(arch).data_dir : data_dir;
  if (split != "test" && split != "train") throw ConfigError("--split must be test or train");
  if (arch == Architecture::kMnistFc) {
    const auto f = mnist_files(dir);
    return split == "test" ? load_mnist_idx(f.test_images, f.test_labels)
                           : load_mnist_idx(f.train_images, f.train_labels);
  }
  return split == "test" ? load_cifar10_binary({cifar10_test_file(dir)}) : load_cifar10_binary(cifar10_train_files(dir));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Internal node bagging: train, combine, evaluate and sweep grouped networks", "inb"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model; writes the model file and a metrics CSV");
  ConfigFlags train_flags;
  train_flags.attach(*train_cmd);
  std::string out_model = "model.inb", out_metrics = "metrics.csv";
  bool quiet = false;
  train_cmd->add_option("--out-model", out_model, "Model file to write");
  train_cmd->add_option("--out-metrics", out_metrics, "Metrics CSV to write");
  train_cmd->add_flag("--quiet", quiet, "No per-epoch log lines");

  // combine
  auto* combine_cmd = app.add_subcommand("combine", "Collapse every group into one node");
  std::string combine_in, combine_out;
  combine_cmd->add_option("--model", combine_in, "Trained model file")->required();
  combine_cmd->add_option("--out", combine_out, "Combined model file to write")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Classification error of a model on a dataset split");
  std::string eval_model, eval_mode = "combined", eval_compare, eval_dir, eval_split = "test";
  std::size_t eval_limit = 0;
  eval_cmd->add_option("--model", eval_model, "Model file")->required();
  eval_cmd->add_option("--mode", eval_mode, "combined | expected | single-member");
  eval_cmd->add_option("--compare", eval_compare, "Second mode; prints the label agreement rate");
  eval_cmd->add_option("--data-dir", eval_dir, "Dataset directory (default: the model's training data)");
  eval_cmd->add_option("--split", eval_split, "test | train");
  eval_cmd->add_option("--limit", eval_limit, "Use only the first N samples (0 = all)");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Train a grid of configs and aggregate the results");
  ConfigFlags sweep_flags;
  sweep_flags.attach(*sweep_cmd);
  std::string preset, widths, methods, group_sizes, keep_probs, frequencies, activations, seeds;
  std::string sweep_out = "sweep.csv";
  std::size_t jobs = std::max(1U, std::thread::hardware_concurrency());
  bool dry_run = false;
  sweep_cmd->add_option("--preset", preset, "Named grid: fig4-mnist fig4-cifar fig5-mnist fig5-cifar fig6 fig8");
  sweep_cmd->add_option("--widths", widths, "Comma-separated widths");
  sweep_cmd->add_option("--methods", methods, "Comma-separated methods (A,B)");
  sweep_cmd->add_option("--group-sizes", group_sizes, "Comma-separated group sizes");
  sweep_cmd->add_option("--keep-probs", keep_probs, "Comma-separated keep probabilities");
  sweep_cmd->add_option("--avg-frequencies", frequencies, "Comma-separated averaging frequencies");
  sweep_cmd->add_option("--activations", activations, "Comma-separated activations");
  sweep_cmd->add_option("--seeds", seeds, "Seeds, e.g. 1,2,3 or 1-3");
  sweep_cmd->add_option("--jobs", jobs, "Parallel runs");
  sweep_cmd->add_option("--out", sweep_out, "Aggregated CSV to write");
  sweep_cmd->add_flag("--dry-run", dry_run, "Resolve and build every config without training");

  // check
  auto* check_cmd = app.add_subcommand("check", "Run the oracle suite and report pass/fail per property");
  std::uint64_t check_seed = 1;
  check_cmd->add_option("--seed", check_seed, "Seed for the random test cases");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error[usage]: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) {
      const TrainConfig config = train_flags.resolve();
      const auto data = load_datasets(config);
      const auto result = train(config, data.train, data.val, data.test, [&](const MetricsRow& r) {
        if (quiet) return;
        out << "epoch " << r.epoch << '/' << config.epochs << " loss=" << fixed(r.train_loss, 4)
            << " train_err=" << fixed(r.train_error, 4) << " val_err=" << fixed(r.val_error, 4)
            << " test_err=" << fixed(r.test_error, 4) << " lr=" << r.learning_rate
            << (r.averaged ? " averaged" : "") << " (" << fixed(r.seconds, 1) << "s)" << std::endl;
      });
      save_model(result.model, out_model, describe_config(config));
      std::ostringstream csv;
      write_metrics_csv(csv, config, result.metrics);
      write_text_file(out_metrics, csv.str());
      out << "wrote " << out_model << " and " << out_metrics << " (" << result.metrics.size() << " epochs, "
          << result.averaging_events << " averaging events)" << std::endl;
      return kExitOk;
    }

    if (combine_cmd->parsed()) {
      const auto model = load_model<float>(combine_in);
      const auto combined = combine_model(model);
      save_model(combined, combine_out, load_model_config(combine_in));
      const auto r = parameter_report(model, combined);
      out << "parameters " << r.before << " -> " << r.after << " (" << ratio(r.before, r.after)
          << " reduction); grouped layers " << r.grouped_before << " -> " << r.grouped_after << " ("
          << ratio(r.grouped_before, r.grouped_after) << ")" << std::endl;
      return kExitOk;
    }

    if (eval_cmd->parsed()) {
      const auto model = load_model<float>(eval_model);
      const EvalMode mode = parse_eval_mode(eval_mode);
      Dataset data = eval_dataset(model, eval_dir, eval_split).head(eval_limit);
      const auto predicted = predict(model, data, mode);
      out << "mode=" << to_string(mode) << " split=" << eval_split << " samples=" << data.size()
          << " error=" << fixed(error_rate(predicted, data.labels), 4);
      if (!eval_compare.empty()) {
        const EvalMode other = parse_eval_mode(eval_compare);
        const auto other_pred = predict(model, data, other);
        out << " compare=" << to_string(other) << " compare_error=" << fixed(error_rate(other_pred, data.labels), 4)
            << " agreement=" << fixed(1.0 - error_rate(predicted, other_pred), 4);
      }
      out << std::endl;
      return kExitOk;
    }

    if (sweep_cmd->parsed()) {
      SweepGrid grid;
      if (!preset.empty()) {
        grid = sweep_preset(preset, sweep_flags.paper_scale);
        KeyValues settings = describe_config(grid.base);
        if (!sweep_flags.config_path.empty())
          for (auto& kv : read_config_file(sweep_flags.config_path)) settings.push_back(kv);
        for (const auto& [key, opt] : sweep_flags.options)
          if (opt->count() > 0) settings.emplace_back(key, sweep_flags.values.at(key));
        // The preset's schedule follows its epoch count unless overridden.
        std::erase_if(settings, [](const auto& kv) { return kv.first == "lr-schedule"; });
        for (const auto& [key, opt] : sweep_flags.options)
          if (key == "lr-schedule" && opt->count() > 0) settings.emplace_back(key, sweep_flags.values.at(key));
        grid.base = resolve_config(settings, sweep_flags.paper_scale);
      } else {
        grid.base = sweep_flags.resolve();
      }
      if (!widths.empty()) grid.widths = parse_list<double>(widths, parse_real);
      if (!methods.empty()) grid.methods = parse_list<Method>(methods, [](const std::string& s) { return parse_method(s); });
      if (!group_sizes.empty()) grid.group_sizes = parse_list<std::size_t>(group_sizes, parse_count);
      if (!keep_probs.empty()) grid.keep_probs = parse_list<double>(keep_probs, parse_real);
      if (!frequencies.empty()) grid.avg_frequencies = parse_list<std::size_t>(frequencies, parse_count);
      if (!activations.empty())
        grid.activations =
            parse_list<Activation>(activations, [](const std::string& s) { return parse_activation(s); });
      if (!seeds.empty()) grid.seeds = parse_seeds(seeds);
      const auto configs = expand_grid(grid);
      for (const auto& c : configs) c.validate();
      out << "sweep: " << configs.size() << " runs, " << jobs << " jobs"
          << (dry_run ? " (dry run)" : "") << std::endl;
      SweepOptions options;
      options.jobs = jobs;
      options.dry_run = dry_run;
      options.on_row = [&](const SweepRow& r) {
        out << to_string(r.config.architecture) << " width=" << r.config.width << " method=" << to_string(r.config.method)
            << " n=" << r.config.group_size << " freq=" << r.config.avg_frequency << " act=" << to_string(r.config.activation)
            << " seed=" << r.config.seed << " epochs=" << r.config.epochs << ": " << r.status;
        if (r.status == "ok") out << " test_err=" << fixed(r.final_test_error, 4);
        out << std::endl;
      };
      const auto rows = run_sweep(configs, options);
      std::ostringstream csv;
      write_sweep_csv(csv, rows);
      write_text_file(sweep_out, csv.str());
      std::size_t failed = 0;
      for (const auto& r : rows) failed += r.status.rfind("error", 0) == 0;
      out << "wrote " << sweep_out << " (" << rows.size() << " rows, " << failed << " failed)" << std::endl;
      return failed == 0 ? kExitOk : kExitFailure;
    }

    if (check_cmd->parsed()) {
      std::size_t failed = 0;
      const auto results = oracle::run_self_checks(check_seed);
      for (const auto& r : results) {
        out << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")" << std::endl;
        failed += !r.passed;
      }
      out << results.size() - failed << '/' << results.size() << " checks passed" << std::endl;
      return failed == 0 ? kExitOk : kExitFailure;
    }
  } catch (const ConfigError& e) {
    err << "error[config]: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error[data]: " << e.what() << '\n';
    return kExitData;
  } catch (const DivergenceError& e) {
    err << "error[divergence]: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const ModelFileError& e) {
    err << "error[model-file]: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace inb::cli
