#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "inb/train.hpp"

namespace inb {

/// Cartesian grid over the listed axes; an empty axis keeps the base value.
struct SweepGrid {
  TrainConfig base;
  std::vector<double> widths;
  std::vector<Method> methods;
  std::vector<std::size_t> group_sizes;
  std::vector<double> keep_probs;
  std::vector<std::size_t> avg_frequencies;
  std::vector<Activation> activations;
  std::vector<std::uint64_t> seeds;
};

std::vector<TrainConfig> expand_grid(const SweepGrid& grid);

/// Named grids following the experiment figures: fig4-mnist, fig4-cifar
/// (Method A over width and group size), fig5-mnist, fig5-cifar (Method B),
/// fig6 (averaging frequency at width 256), fig8 (activations).
/// paper_scale switches to 200 epochs on the full datasets.
SweepGrid sweep_preset(std::string_view name, bool paper_scale);
const std::vector<std::string>& sweep_preset_names();

struct SweepRow {
  TrainConfig config;
  double final_test_error = 0;
  std::size_t grouped_params = 0;
  std::size_t combined_params = 0;
  double seconds = 0;
  /// "ok", "dry-run" or "error: <message>"
  std::string status;
};

struct SweepOptions {
  std::size_t jobs = 1;
  /// Build models and check data/config without training.
  bool dry_run = false;
  /// Called after every finished run (serialised).
  std::function<void(const SweepRow&)> on_row;
};

/// Runs every config, `jobs` at a time. Each run owns its seed, so results
/// do not depend on scheduling. Rows come back sorted by width, method,
/// group size, seed (then frequency, activation and keep probability).
std::vector<SweepRow> run_sweep(const std::vector<TrainConfig>& configs, const SweepOptions& options);

inline constexpr std::string_view kSweepHeader =
    "arch,width,method,group_size,keep_prob,avg_frequency,activation,seed,epochs,final_test_error,"
    "grouped_params,combined_params,seconds,status";
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace inb
