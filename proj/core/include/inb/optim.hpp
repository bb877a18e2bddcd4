#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "inb/layers.hpp"
#include "inb/tensor.hpp"

namespace inb {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment accumulators, one per parameter tensor, plus the
/// shared step counter.
template <typename T>
struct AdamState {
  std::vector<Tensor<T>> first;
  std::vector<Tensor<T>> second;
  std::uint64_t step = 0;
};

template <typename T>
AdamState<T> make_adam_state(const std::vector<ParamRef<T>>& params);

/// One bias-corrected Adam update of every parameter from its gradient.
/// Throws NumericError naming the parameter when a gradient is not finite.
template <typename T>
void adam_step(const std::vector<ParamRef<T>>& params, AdamState<T>& state, double lr,
               const AdamConfig& config = {});

/// Averages the moment accumulators of grouped parameters within each group,
/// the same way weight averaging treats the parameters themselves.
template <typename T>
void average_optimizer_state(AdamState<T>& state, const std::vector<ParamRef<T>>& params);

/// [begin_epoch, end_epoch) at a fixed rate.
struct LrSegment {
  std::size_t begin_epoch = 0;
  std::size_t end_epoch = 0;
  double rate = 1e-3;
  friend bool operator==(const LrSegment&, const LrSegment&) = default;
};

struct PiecewiseSchedule {
  std::vector<LrSegment> segments;
  friend bool operator==(const PiecewiseSchedule&, const PiecewiseSchedule&) = default;
};

/// Multiply the rate by `factor` whenever validation error has not improved
/// for `patience` epochs, never going below `min_rate`.
struct PlateauSchedule {
  double initial_rate = 1e-3;
  double factor = 0.1;
  std::size_t patience = 5;
  double min_rate = 1e-5;
  friend bool operator==(const PlateauSchedule&, const PlateauSchedule&) = default;
};

using LrSchedule = std::variant<PiecewiseSchedule, PlateauSchedule>;

void validate_schedule(const LrSchedule& schedule);

/// Learning rate for `epoch`. `validation_errors` holds the errors of the
/// epochs before it; only the plateau rule reads it. Epochs past the last
/// piecewise segment keep the last rate.
double lr_at(const LrSchedule& schedule, std::size_t epoch, std::span<const double> validation_errors);

/// 100 epochs at 1e-3 followed by 100 at 1e-4.
PiecewiseSchedule mnist_paper_schedule();
/// The same two-phase shape compressed to `epochs`: first half 1e-3, rest 1e-4.
PiecewiseSchedule mnist_desk_schedule(std::size_t epochs);

/// Text form used by config files and CSV headers:
///   piecewise:0-100@0.001,100-200@0.0001
///   plateau:0.001,0.1,5,1e-05      (initial,factor,patience,min)
std::string to_string(const LrSchedule& schedule);
LrSchedule parse_schedule(std::string_view text);

}  // namespace inb
