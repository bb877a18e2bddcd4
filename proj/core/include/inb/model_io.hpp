#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "inb/config.hpp"
#include "inb/model.hpp"

namespace inb {

/// Layout is described in docs/model_format.md.
inline constexpr char kModelMagic[8] = {'I', 'N', 'B', 'M', 'O', 'D', 'E', 'L'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Parameters are stored as 32-bit floats; a double model is narrowed.
/// `config` is stored alongside (may be empty).
template <typename T>
std::vector<std::uint8_t> encode_model(const Model<T>& model, const KeyValues& config = {});

/// Throws ModelMagicError, ModelVersionError or ChecksumError (also used for
/// truncated files); other structural problems raise ModelFileError.
template <typename T>
Model<T> decode_model(std::span<const std::uint8_t> bytes);
KeyValues decode_model_config(std::span<const std::uint8_t> bytes);

/// Writes to a temporary file next to `path`, then renames it into place.
template <typename T>
void save_model(const Model<T>& model, const std::filesystem::path& path, const KeyValues& config = {});
template <typename T>
Model<T> load_model(const std::filesystem::path& path);
KeyValues load_model_config(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace inb
