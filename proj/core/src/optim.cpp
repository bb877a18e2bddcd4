#include "inb/optim.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "inb/bagging.hpp"
#include "inb/errors.hpp"

namespace inb {

template <typename T>
AdamState<T> make_adam_state(const std::vector<ParamRef<T>>& params) {
  AdamState<T> state;
  for (const auto& p : params) {
    state.first.emplace_back(p.value->shape());
    state.second.emplace_back(p.value->shape());
  }
  return state;
}

template <typename T>
void adam_step(const std::vector<ParamRef<T>>& params, AdamState<T>& state, double lr, const AdamConfig& config) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (state.first.size() != params.size() || state.second.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state tracks " + std::to_string(state.first.size()) +
                     " tensors, got " + std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (p.grad->shape() != p.value->shape() || state.first[i].shape() != p.value->shape()) {
      throw ShapeError("adam_step: shape mismatch for parameter " + p.name);
    }
    if (!p.grad->all_finite()) throw NumericError("adam_step: non-finite gradient for parameter " + p.name);
  }
  ++state.step;
  const T b1 = static_cast<T>(config.beta1);
  const T b2 = static_cast<T>(config.beta2);
  const T one_minus_b1 = static_cast<T>(1.0 - config.beta1);
  const T one_minus_b2 = static_cast<T>(1.0 - config.beta2);
  const T correction1 = static_cast<T>(1.0 - std::pow(config.beta1, static_cast<double>(state.step)));
  const T correction2 = static_cast<T>(1.0 - std::pow(config.beta2, static_cast<double>(state.step)));
  const T rate = static_cast<T>(lr);
  const T eps = static_cast<T>(config.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i].value->data();
    const auto grad = params[i].grad->data();
    auto m = state.first[i].data();
    auto v = state.second[i].data();
    for (std::size_t e = 0; e < value.size(); ++e) {
      const T g = grad[e];
      m[e] = b1 * m[e] + one_minus_b1 * g;
      v[e] = b2 * v[e] + one_minus_b2 * g * g;
      const T m_hat = m[e] / correction1;
      const T v_hat = v[e] / correction2;
      value[e] -= rate * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template <typename T>
void average_optimizer_state(AdamState<T>& state, const std::vector<ParamRef<T>>& params) {
  if (state.first.size() != params.size() || state.second.size() != params.size()) {
    throw ShapeError("average_optimizer_state: state tracks " + std::to_string(state.first.size()) +
                     " tensors, model has " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (state.first[i].shape() != p.value->shape() || state.second[i].shape() != p.value->shape()) {
      throw ShapeError("average_optimizer_state: moment shape mismatch for parameter " + p.name);
    }
    if (p.groups == 0) continue;
    average_members(state.first[i].data(), p.groups, p.members);
    average_members(state.second[i].data(), p.groups, p.members);
  }
}

void validate_schedule(const LrSchedule& schedule) {
  if (const auto* pw = std::get_if<PiecewiseSchedule>(&schedule)) {
    if (pw->segments.empty()) throw ConfigError("piecewise schedule needs at least one segment");
    std::size_t expected_begin = 0;
    for (const auto& s : pw->segments) {
      if (s.begin_epoch != expected_begin) {
        throw ConfigError("piecewise schedule segments must be contiguous from epoch 0 (segment starts at " +
                          std::to_string(s.begin_epoch) + ", expected " + std::to_string(expected_begin) + ")");
      }
      if (s.end_epoch <= s.begin_epoch) throw ConfigError("piecewise schedule segment has empty span");
      if (!(s.rate > 0.0)) throw ConfigError("learning rates must be positive");
      expected_begin = s.end_epoch;
    }
  } else {
    const auto& pl = std::get<PlateauSchedule>(schedule);
    if (!(pl.initial_rate > 0.0) || !(pl.factor > 0.0 && pl.factor < 1.0) || pl.patience == 0 ||
        !(pl.min_rate > 0.0)) {
      throw ConfigError("plateau schedule needs rate > 0, factor in (0,1), patience >= 1, min rate > 0");
    }
  }
}

double lr_at(const LrSchedule& schedule, std::size_t epoch, std::span<const double> validation_errors) {
  if (const auto* pw = std::get_if<PiecewiseSchedule>(&schedule)) {
    for (const auto& s : pw->segments)
      if (epoch >= s.begin_epoch && epoch < s.end_epoch) return s.rate;
    if (pw->segments.empty()) throw ConfigError("empty piecewise schedule");
    return pw->segments.back().rate;
  }
  const auto& pl = std::get<PlateauSchedule>(schedule);
  double rate = pl.initial_rate;
  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  const std::size_t seen = std::min(epoch, validation_errors.size());
  for (std::size_t e = 0; e < seen; ++e) {
    if (validation_errors[e] < best) {
      best = validation_errors[e];
      stale = 0;
    } else if (++stale >= pl.patience) {
      rate = std::max(rate * pl.factor, pl.min_rate);
      stale = 0;
    }
  }
  return rate;
}

PiecewiseSchedule mnist_paper_schedule() { return {{{0, 100, 1e-3}, {100, 200, 1e-4}}}; }

PiecewiseSchedule mnist_desk_schedule(std::size_t epochs) {
  if (epochs < 2) return {{{0, std::max<std::size_t>(epochs, 1), 1e-3}}};
  const std::size_t half = epochs / 2;
  return {{{0, half, 1e-3}, {half, epochs, 1e-4}}};
}

std::string to_string(const LrSchedule& schedule) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10 - 2);
  if (const auto* pw = std::get_if<PiecewiseSchedule>(&schedule)) {
    os << "piecewise:";
    for (std::size_t i = 0; i < pw->segments.size(); ++i) {
      const auto& s = pw->segments[i];
      if (i) os << ',';
      os << s.begin_epoch << '-' << s.end_epoch << '@' << s.rate;
    }
  } else {
    const auto& pl = std::get<PlateauSchedule>(schedule);
    os << "plateau:" << pl.initial_rate << ',' << pl.factor << ',' << pl.patience << ',' << pl.min_rate;
  }
  return os.str();
}

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ConfigError("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("schedule: '" + s + "' is not a number");
  }
}

std::size_t to_size(const std::string& s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("schedule: '" + s + "' is not an integer");
  return v;
}

}  // namespace

LrSchedule parse_schedule(std::string_view text) {
  LrSchedule schedule;
  if (text.starts_with("piecewise:")) {
    PiecewiseSchedule pw;
    for (const auto& seg : split(text.substr(10), ',')) {
      const auto at = seg.find('@');
      const auto dash = seg.find('-');
      if (at == std::string::npos || dash == std::string::npos || dash > at) {
        throw ConfigError("schedule segment '" + seg + "' must look like begin-end@rate");
      }
      pw.segments.push_back({to_size(seg.substr(0, dash)), to_size(seg.substr(dash + 1, at - dash - 1)),
                             to_double(seg.substr(at + 1))});
    }
    schedule = pw;
  } else if (text.starts_with("plateau:")) {
    const auto parts = split(text.substr(8), ',');
    if (parts.size() != 4) throw ConfigError("plateau schedule needs initial,factor,patience,min");
    schedule = PlateauSchedule{to_double(parts[0]), to_double(parts[1]), to_size(parts[2]), to_double(parts[3])};
  } else {
    throw ConfigError("unknown schedule '" + std::string(text) + "' (expected piecewise:... or plateau:...)");
  }
  validate_schedule(schedule);
  return schedule;
}

template AdamState<float> make_adam_state(const std::vector<ParamRef<float>>&);
template AdamState<double> make_adam_state(const std::vector<ParamRef<double>>&);
template void adam_step(const std::vector<ParamRef<float>>&, AdamState<float>&, double, const AdamConfig&);
template void adam_step(const std::vector<ParamRef<double>>&, AdamState<double>&, double, const AdamConfig&);
template void average_optimizer_state(AdamState<float>&, const std::vector<ParamRef<float>>&);
template void average_optimizer_state(AdamState<double>&, const std::vector<ParamRef<double>>&);

}  // namespace inb
