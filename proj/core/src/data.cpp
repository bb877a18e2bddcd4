#include "inb/data.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>

#include "inb/errors.hpp"

namespace inb {
namespace {

constexpr std::uint32_t kIdxImageMagic = 2051;
constexpr std::uint32_t kIdxLabelMagic = 2049;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
  return static_cast<std::uint32_t>(bytes[offset]) << 24 | static_cast<std::uint32_t>(bytes[offset + 1]) << 16 |
         static_cast<std::uint32_t>(bytes[offset + 2]) << 8 | static_cast<std::uint32_t>(bytes[offset + 3]);
}

void append_be32(std::vector<std::uint8_t>& bytes, std::uint32_t v) {
  bytes.push_back(static_cast<std::uint8_t>(v >> 24));
  bytes.push_back(static_cast<std::uint8_t>(v >> 16));
  bytes.push_back(static_cast<std::uint8_t>(v >> 8));
  bytes.push_back(static_cast<std::uint8_t>(v));
}

void check_labels(std::span<const std::uint8_t> labels, const std::string& source) {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] > 9) {
      throw LabelRangeError(source + ": label " + std::to_string(labels[i]) + " at record " + std::to_string(i) +
                            " is outside [0,10)");
    }
}

}  // namespace

Shape Dataset::sample_shape() const {
  if (images.rank() != 4) return {};
  return {images.dim(1), images.dim(2), images.dim(3)};
}

Dataset Dataset::subset(std::span<const std::size_t> indices, std::string split_name) const {
  auto batch = gather_batch(*this, indices);
  return Dataset{name, std::move(split_name), std::move(batch.images), std::move(batch.labels)};
}

Dataset Dataset::head(std::size_t count) const {
  if (count == 0 || count >= size()) return *this;
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = i;
  return subset(idx, split);
}

Dataset load_mnist_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);
  if (img.size() < 16) throw TruncatedFileError(images_path.string() + ": IDX image header is truncated");
  if (lab.size() < 8) throw TruncatedFileError(labels_path.string() + ": IDX label header is truncated");
  if (const auto magic = read_be32(img, 0); magic != kIdxImageMagic) {
    throw BadMagicError(images_path.string() + ": IDX image magic " + std::to_string(magic) + ", expected 2051");
  }
  if (const auto magic = read_be32(lab, 0); magic != kIdxLabelMagic) {
    throw BadMagicError(labels_path.string() + ": IDX label magic " + std::to_string(magic) + ", expected 2049");
  }
  const std::size_t count = read_be32(img, 4), rows = read_be32(img, 8), cols = read_be32(img, 12);
  const std::size_t label_count = read_be32(lab, 4);
  if (img.size() < 16 + count * rows * cols) {
    throw TruncatedFileError(images_path.string() + ": header declares " + std::to_string(count) + " images of " +
                             std::to_string(rows) + "x" + std::to_string(cols) + " but the file holds " +
                             std::to_string(img.size() - 16) + " pixel bytes");
  }
  if (lab.size() < 8 + label_count) {
    throw TruncatedFileError(labels_path.string() + ": header declares " + std::to_string(label_count) +
                             " labels but the file holds " + std::to_string(lab.size() - 8));
  }
  if (count != label_count) {
    throw CountMismatchError("IDX image count " + std::to_string(count) + " does not match label count " +
                             std::to_string(label_count));
  }
  Dataset ds;
  ds.name = "mnist";
  ds.split = images_path.filename().string();
  ds.labels.assign(lab.begin() + 8, lab.begin() + 8 + static_cast<std::ptrdiff_t>(count));
  check_labels(ds.labels, labels_path.string());
  std::vector<float> pixels(count * rows * cols);
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<float>(img[16 + i]) / 255.0f;
  ds.images = Tensor<float>({count, 1, rows, cols}, std::move(pixels));
  return ds;
}

void write_mnist_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                     std::span<const std::uint8_t> pixels, std::size_t rows, std::size_t cols,
                     std::span<const std::uint8_t> labels) {
  if (pixels.size() != labels.size() * rows * cols) {
    throw CountMismatchError("write_mnist_idx: " + std::to_string(pixels.size()) + " pixel bytes for " +
                             std::to_string(labels.size()) + " images");
  }
  std::vector<std::uint8_t> img;
  append_be32(img, kIdxImageMagic);
  append_be32(img, static_cast<std::uint32_t>(labels.size()));
  append_be32(img, static_cast<std::uint32_t>(rows));
  append_be32(img, static_cast<std::uint32_t>(cols));
  img.insert(img.end(), pixels.begin(), pixels.end());
  std::vector<std::uint8_t> lab;
  append_be32(lab, kIdxLabelMagic);
  append_be32(lab, static_cast<std::uint32_t>(labels.size()));
  lab.insert(lab.end(), labels.begin(), labels.end());
  write_file(images_path, img);
  write_file(labels_path, lab);
}

Dataset load_cifar10_binary(const std::vector<std::filesystem::path>& files) {
  std::vector<std::uint8_t> labels;
  std::vector<float> pixels;
  for (const auto& path : files) {
    const auto bytes = read_file(path);
    if (bytes.empty()) {
      std::clog << "warning: CIFAR-10 file " << path.string() << " is empty\n";
      continue;
    }
    if (bytes.size() % kCifarRecordBytes != 0) {
      throw RecordSizeError(path.string() + ": size " + std::to_string(bytes.size()) +
                            " is not a multiple of the 3073-byte record");
    }
    const std::size_t records = bytes.size() / kCifarRecordBytes;
    for (std::size_t r = 0; r < records; ++r) {
      const std::uint8_t* rec = bytes.data() + r * kCifarRecordBytes;
      if (rec[0] > 9) {
        throw LabelRangeError(path.string() + ": label byte " + std::to_string(rec[0]) + " at record " +
                              std::to_string(r) + " is outside [0,10)");
      }
      labels.push_back(rec[0]);
      for (std::size_t i = 1; i < kCifarRecordBytes; ++i) pixels.push_back(static_cast<float>(rec[i]) / 255.0f);
    }
  }
  Dataset ds;
  ds.name = "cifar10";
  ds.split = files.empty() ? "" : files.front().filename().string();
  const std::size_t n = labels.size();
  ds.labels = std::move(labels);
  ds.images = Tensor<float>({n, 3, 32, 32}, std::move(pixels));
  return ds;
}

void write_cifar10_binary(const std::filesystem::path& path, std::span<const std::uint8_t> labels,
                          std::span<const std::uint8_t> pixels) {
  if (pixels.size() != labels.size() * (kCifarRecordBytes - 1)) {
    throw CountMismatchError("write_cifar10_binary: " + std::to_string(pixels.size()) + " pixel bytes for " +
                             std::to_string(labels.size()) + " records");
  }
  std::vector<std::uint8_t> bytes;
  bytes.reserve(labels.size() * kCifarRecordBytes);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    bytes.push_back(labels[r]);
    const auto rec = pixels.subspan(r * (kCifarRecordBytes - 1), kCifarRecordBytes - 1);
    bytes.insert(bytes.end(), rec.begin(), rec.end());
  }
  write_file(path, bytes);
}

MnistFiles mnist_files(const std::filesystem::path& dir) {
  return {dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte", dir / "t10k-images-idx3-ubyte",
          dir / "t10k-labels-idx1-ubyte"};
}

std::vector<std::filesystem::path> cifar10_train_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (int i = 1; i <= 5; ++i) files.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
  return files;
}

std::filesystem::path cifar10_test_file(const std::filesystem::path& dir) { return dir / "test_batch.bin"; }

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  return perm;
}

std::pair<Dataset, Dataset> split_train_val(const Dataset& dataset, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ConfigError("validation fraction must lie in (0,1), got " + std::to_string(val_fraction));
  }
  auto rng = Rng::stream(seed, streams::kSplit);
  const auto perm = permutation(dataset.size(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(dataset.size()) * val_fraction));
  const std::span<const std::size_t> all(perm);
  return {dataset.subset(all.subspan(n_val), "train"), dataset.subset(all.first(n_val), "val")};
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t dataset_size, const BatchPlan& plan,
                                                    std::size_t epoch) {
  if (plan.batch_size == 0) throw ConfigError("batch size must be >= 1");
  auto rng = Rng::stream(splitmix64(plan.seed) ^ epoch, streams::kShuffle);
  const auto perm = permutation(dataset_size, rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < dataset_size; start += plan.batch_size) {
    const std::size_t end = std::min(dataset_size, start + plan.batch_size);
    batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                         perm.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

Batch gather_batch(const Dataset& dataset, std::span<const std::size_t> indices) {
  const Shape sample = dataset.sample_shape();
  const std::size_t per = shape_size(sample);
  Batch batch;
  batch.labels.reserve(indices.size());
  std::vector<float> pixels(indices.size() * per);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    if (src >= dataset.size()) throw ShapeError("batch index " + std::to_string(src) + " out of range");
    std::copy_n(dataset.images.data().begin() + static_cast<std::ptrdiff_t>(src * per), per,
                pixels.begin() + static_cast<std::ptrdiff_t>(i * per));
    batch.labels.push_back(dataset.labels[src]);
  }
  Shape shape{indices.size()};
  shape.insert(shape.end(), sample.begin(), sample.end());
  batch.images = Tensor<float>(std::move(shape), std::move(pixels));
  return batch;
}

}  // namespace inb
