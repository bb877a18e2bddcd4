#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "inb/rng.hpp"
#include "inb/tensor.hpp"

namespace inb {

/// Images scaled to [0,1] and class labels in [0,10).
struct Dataset {
  std::string name;
  std::string split;
  Tensor<float> images;  // [N, C, H, W]
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  /// [C, H, W]
  Shape sample_shape() const;
  Dataset subset(std::span<const std::size_t> indices, std::string split_name) const;
  /// First `count` samples (all of them when count is 0 or too large).
  Dataset head(std::size_t count) const;
};

/// Reads an IDX image file (magic 2051) and label file (magic 2049).
Dataset load_mnist_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// Writes `count` images of rows x cols bytes and their labels as IDX files.
void write_mnist_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                     std::span<const std::uint8_t> pixels, std::size_t rows, std::size_t cols,
                     std::span<const std::uint8_t> labels);

inline constexpr std::size_t kCifarRecordBytes = 3073;

/// Concatenates CIFAR-10 binary batch files in the given order. Each record
/// is one label byte followed by 3072 pixel bytes (R, G, B planes of 32x32).
Dataset load_cifar10_binary(const std::vector<std::filesystem::path>& files);

/// Writes records (label + 3072 pixels each) in CIFAR-10 binary layout.
void write_cifar10_binary(const std::filesystem::path& path, std::span<const std::uint8_t> labels,
                          std::span<const std::uint8_t> pixels);

/// Standard file names inside a dataset directory.
struct MnistFiles {
  std::filesystem::path train_images, train_labels, test_images, test_labels;
};
MnistFiles mnist_files(const std::filesystem::path& dir);
std::vector<std::filesystem::path> cifar10_train_files(const std::filesystem::path& dir);
std::filesystem::path cifar10_test_file(const std::filesystem::path& dir);

/// Fisher-Yates permutation of [0, n).
std::vector<std::size_t> permutation(std::size_t n, Rng& rng);

/// Seeded permutation, first round(N * val_fraction) samples go to validation.
std::pair<Dataset, Dataset> split_train_val(const Dataset& dataset, double val_fraction, std::uint64_t seed);

struct BatchPlan {
  std::uint64_t seed = 1;
  std::size_t batch_size = 128;
};

/// Index batches for one epoch: a fresh shuffle per (seed, epoch); the last
/// batch may be short.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t dataset_size, const BatchPlan& plan,
                                                    std::size_t epoch);

struct Batch {
  Tensor<float> images;
  std::vector<std::uint8_t> labels;
};
Batch gather_batch(const Dataset& dataset, std::span<const std::size_t> indices);

}  // namespace inb
