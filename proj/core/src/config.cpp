#include "inb/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "inb/errors.hpp"

namespace inb {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename N>
N parse_number(std::string_view key, std::string_view text) {
  N value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("invalid value '" + std::string(text) + "' for " + std::string(key));
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "1" || text == "true" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "no") return false;
  throw ConfigError("invalid value '" + std::string(text) + "' for " + std::string(key) + " (expected true/false)");
}

std::string format_double(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "arch",          "width",  "method",       "group-size",   "keep-prob",   "activation",
      "epochs",        "batch-size", "lr-schedule", "avg-frequency", "seed",      "data-dir",
      "val-fraction",  "train-limit", "plain-hidden"};
  return keys;
}

KeyValues parse_key_values(std::istream& in, const std::string& source) {
  KeyValues out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(std::string_view(text).substr(0, eq));
    std::string value = trim(std::string_view(text).substr(eq + 1));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_key_values(in, path.string());
}

void apply_setting(TrainConfig& c, std::string_view key, std::string_view value) {
  if (key == "arch") {
    c.architecture = parse_architecture(value);
  } else if (key == "width") {
    c.width = parse_number<double>(key, value);
  } else if (key == "method") {
    c.method = parse_method(value);
  } else if (key == "group-size") {
    c.group_size = parse_number<std::size_t>(key, value);
  } else if (key == "keep-prob") {
    c.keep_prob = parse_number<double>(key, value);
  } else if (key == "activation") {
    c.activation = parse_activation(value);
  } else if (key == "epochs") {
    c.epochs = parse_number<std::size_t>(key, value);
  } else if (key == "batch-size") {
    c.batch_size = parse_number<std::size_t>(key, value);
  } else if (key == "lr-schedule") {
    if (value == "default") {
      c.schedule.reset();
    } else {
      c.schedule = parse_schedule(value);
    }
  } else if (key == "avg-frequency") {
    c.avg_frequency = parse_number<std::size_t>(key, value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "data-dir") {
    c.data_dir = std::string(value);
  } else if (key == "val-fraction") {
    c.val_fraction = parse_number<double>(key, value);
  } else if (key == "train-limit") {
    c.train_limit = parse_number<std::size_t>(key, value);
  } else if (key == "plain-hidden") {
    c.plain_hidden = parse_bool(key, value);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

TrainConfig resolve_config(const KeyValues& settings, bool paper_scale) {
  Architecture arch = Architecture::kMnistFc;
  for (const auto& [key, value] : settings)
    if (key == "arch") arch = parse_architecture(value);
  TrainConfig config = default_train_config(arch, paper_scale);
  for (const auto& [key, value] : settings) apply_setting(config, key, value);
  config.validate();
  return config;
}

KeyValues describe_config(const TrainConfig& c) {
  return {{"arch", to_string(c.architecture)},
          {"width", format_double(c.width)},
          {"method", to_string(c.method)},
          {"group-size", std::to_string(c.group_size)},
          {"keep-prob", format_double(c.keep_prob)},
          {"activation", to_string(c.activation)},
          {"epochs", std::to_string(c.epochs)},
          {"batch-size", std::to_string(c.batch_size)},
          {"lr-schedule", to_string(c.resolved_schedule())},
          {"avg-frequency", std::to_string(c.avg_frequency)},
          {"seed", std::to_string(c.seed)},
          {"data-dir", c.data_dir},
          {"val-fraction", format_double(c.val_fraction)},
          {"train-limit", std::to_string(c.train_limit)},
          {"plain-hidden", c.plain_hidden ? "true" : "false"}};
}

}  // namespace inb
