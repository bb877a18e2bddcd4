#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "inb/data.hpp"
#include "inb/rng.hpp"
#include "selfcheck.hpp"

namespace inb::testing {

class TempDir {
 public:
  TempDir() {
    std::random_device device;
    do {
      const std::uint64_t tag = (std::uint64_t{device()} << 32) ^ device();
      path_ = std::filesystem::temp_directory_path() / ("inb_test_" + std::to_string(tag));
    } while (!std::filesystem::create_directories(path_));
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Random 28x28 digits with a label-dependent bright row, so a small net can
/// learn them.
inline Dataset synthetic_mnist(std::size_t count, std::uint64_t seed, const std::string& split = "train") {
  Rng rng(seed);
  Dataset d;
  d.name = "synthetic";
  d.split = split;
  d.images = oracle::random_tensor<float>({count, 1, 28, 28}, rng, 0.0, 0.3);
  for (std::size_t i = 0; i < count; ++i) {
    const auto label = static_cast<std::uint8_t>(rng.below(10));
    d.labels.push_back(label);
    for (std::size_t c = 0; c < 28; ++c) d.images.at(i, 0, label * 2 + 4, c) = 1.0f;
  }
  return d;
}

/// Writes train/test IDX files for synthetic digits into `dir`.
inline void write_synthetic_mnist_dir(const std::filesystem::path& dir, std::size_t train_count,
                                      std::size_t test_count, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  const auto files = mnist_files(dir);
  auto write = [](const Dataset& d, const std::filesystem::path& img, const std::filesystem::path& lbl) {
    std::vector<std::uint8_t> pixels(d.images.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<std::uint8_t>(d.images[i] * 255.0f + 0.5f);
    write_mnist_idx(img, lbl, pixels, 28, 28, d.labels);
  };
  write(synthetic_mnist(train_count, seed), files.train_images, files.train_labels);
  write(synthetic_mnist(test_count, seed + 1000, "test"), files.test_images, files.test_labels);
}

}  // namespace inb::testing
