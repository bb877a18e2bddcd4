#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "inb/train.hpp"

namespace inb {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Keys accepted in config files; each is also a CLI flag (--key).
const std::vector<std::string>& config_keys();

/// `key = value` lines; blank lines and lines starting with '#' are skipped.
KeyValues parse_key_values(std::istream& in, const std::string& source = "config");
KeyValues read_config_file(const std::filesystem::path& path);

/// Sets one field from its text form. Throws ConfigError on an unknown key
/// or a malformed value.
void apply_setting(TrainConfig& config, std::string_view key, std::string_view value);

/// Starts from the defaults of the architecture named in `settings` (last
/// occurrence wins, mnist_fc when absent), then applies the settings in
/// order, so later entries override earlier ones.
TrainConfig resolve_config(const KeyValues& settings, bool paper_scale = false);

/// Every key with its resolved value, in config_keys() order.
KeyValues describe_config(const TrainConfig& config);

}  // namespace inb
