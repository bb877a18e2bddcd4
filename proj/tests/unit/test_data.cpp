#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "inb/data.hpp"
#include "inb/errors.hpp"
#include "support.hpp"

namespace inb {
namespace {

using testing::TempDir;

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void put_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (24 - 8 * i));
}

struct IdxPair {
  TempDir dir;
  std::filesystem::path images = dir / "images";
  std::filesystem::path labels = dir / "labels";
  std::vector<std::uint8_t> pixels;

  explicit IdxPair(std::size_t count = 2) {
    pixels.resize(count * 4 * 3);
    for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<std::uint8_t>((i * 37) % 256);
    std::vector<std::uint8_t> lab(count);
    for (std::size_t i = 0; i < count; ++i) lab[i] = static_cast<std::uint8_t>((i * 3) % 10);
    write_mnist_idx(images, labels, pixels, 4, 3, lab);
  }
};

TEST(MnistIdx, TwoImageRoundTripIsExact) {
  IdxPair f(2);
  const auto d = load_mnist_idx(f.images, f.labels);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.images.shape(), (Shape{2, 1, 4, 3}));
  EXPECT_EQ(d.sample_shape(), (Shape{1, 4, 3}));
  EXPECT_EQ(d.labels, (std::vector<std::uint8_t>{0, 3}));
  for (std::size_t i = 0; i < f.pixels.size(); ++i) {
    EXPECT_EQ(d.images[i], static_cast<float>(f.pixels[i]) / 255.0f);
    EXPECT_EQ(static_cast<int>(std::lround(d.images[i] * 255.0f)), f.pixels[i]);
  }
}

TEST(MnistIdx, HeaderIsBigEndian) {
  IdxPair f(2);
  const auto img = read_bytes(f.images);
  EXPECT_EQ(img.size(), 16u + 24u);
  EXPECT_EQ((std::vector<std::uint8_t>(img.begin(), img.begin() + 16)),
            (std::vector<std::uint8_t>{0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 4, 0, 0, 0, 3}));
  const auto lab = read_bytes(f.labels);
  EXPECT_EQ((std::vector<std::uint8_t>(lab.begin(), lab.begin() + 8)),
            (std::vector<std::uint8_t>{0, 0, 8, 1, 0, 0, 0, 2}));
}

TEST(MnistIdx, WrongMagicIsBadMagic) {
  IdxPair f;
  auto img = read_bytes(f.images);
  put_u32(img, 0, 2049);
  write_bytes(f.images, img);
  EXPECT_THROW(load_mnist_idx(f.images, f.labels), BadMagicError);
  IdxPair g;
  auto lab = read_bytes(g.labels);
  put_u32(lab, 0, 2051);
  write_bytes(g.labels, lab);
  EXPECT_THROW(load_mnist_idx(g.images, g.labels), BadMagicError);
}

TEST(MnistIdx, TruncationIsTruncatedFile) {
  IdxPair f;
  auto img = read_bytes(f.images);
  img.pop_back();
  write_bytes(f.images, img);
  EXPECT_THROW(load_mnist_idx(f.images, f.labels), TruncatedFileError);
  IdxPair g;
  write_bytes(g.labels, {0, 0, 8});
  EXPECT_THROW(load_mnist_idx(g.images, g.labels), TruncatedFileError);
}

TEST(MnistIdx, CountMismatch) {
  IdxPair f(3);
  IdxPair other(2);
  EXPECT_THROW(load_mnist_idx(f.images, other.labels), CountMismatchError);
}

TEST(MnistIdx, LabelOutOfRange) {
  IdxPair f;
  auto lab = read_bytes(f.labels);
  lab.back() = 10;
  write_bytes(f.labels, lab);
  EXPECT_THROW(load_mnist_idx(f.images, f.labels), LabelRangeError);
}

TEST(MnistIdx, MissingFile) {
  TempDir dir;
  EXPECT_THROW(load_mnist_idx(dir / "nope", dir / "nope2"), MissingFileError);
}

TEST(MnistIdx, ErrorsAreDistinctTypes) {
  // Every parser failure is a DataError, but callers can tell them apart.
  IdxPair f;
  auto img = read_bytes(f.images);
  put_u32(img, 0, 1234);
  write_bytes(f.images, img);
  try {
    load_mnist_idx(f.images, f.labels);
    FAIL();
  } catch (const TruncatedFileError&) {
    FAIL() << "bad magic reported as truncation";
  } catch (const BadMagicError& e) {
    EXPECT_NE(std::string(e.what()).find("1234"), std::string::npos);
  }
}

TEST(MnistIdx, DeskDataIfPresent) {
  const auto files = mnist_files(INB_DATA_DIR "/mnist-desk");
  if (!std::filesystem::exists(files.train_images)) GTEST_SKIP() << "no desk MNIST data";
  const auto train = load_mnist_idx(files.train_images, files.train_labels);
  const auto test = load_mnist_idx(files.test_images, files.test_labels);
  EXPECT_EQ(train.sample_shape(), (Shape{1, 28, 28}));
  EXPECT_EQ(train.size(), 8000u);
  EXPECT_EQ(test.size(), 2000u);
  for (const float v : train.images.data()) {
    ASSERT_GE(v, 0.0f);
    ASSERT_LE(v, 1.0f);
  }
}

TEST(MnistIdx, OfficialFilesIfPresent) {
  const auto files = mnist_files(INB_DATA_DIR "/mnist");
  if (!std::filesystem::exists(files.train_images)) GTEST_SKIP() << "full MNIST not downloaded";
  EXPECT_EQ(load_mnist_idx(files.train_images, files.train_labels).size(), 60000u);
  EXPECT_EQ(load_mnist_idx(files.test_images, files.test_labels).size(), 10000u);
}

TEST(Cifar, SingleRecordRoundTrip) {
  TempDir dir;
  std::vector<std::uint8_t> pixels(3072);
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<std::uint8_t>(i % 256);
  const std::vector<std::uint8_t> labels{7};
  write_cifar10_binary(dir / "b.bin", labels, pixels);
  const auto raw = read_bytes(dir / "b.bin");
  ASSERT_EQ(raw.size(), kCifarRecordBytes);
  EXPECT_EQ(raw[0], 7);
  const auto d = load_cifar10_binary({dir / "b.bin"});
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.labels[0], 7);
  EXPECT_EQ(d.images.shape(), (Shape{1, 3, 32, 32}));
  for (std::size_t i = 0; i < 3072; ++i) ASSERT_EQ(d.images[i], static_cast<float>(pixels[i]) / 255.0f);
  // Planes are R, G, B of 1024 bytes each.
  EXPECT_EQ(d.images.at(0, 1, 0, 0), static_cast<float>(1024 % 256) / 255.0f);
  EXPECT_EQ(d.images.at(0, 2, 0, 5), static_cast<float>((2048 + 5) % 256) / 255.0f);
}

TEST(Cifar, FilesConcatenateInOrder) {
  TempDir dir;
  std::vector<std::uint8_t> p(3072 * 2, 9);
  write_cifar10_binary(dir / "a.bin", std::vector<std::uint8_t>{1, 2}, p);
  write_cifar10_binary(dir / "b.bin", std::vector<std::uint8_t>{3}, std::vector<std::uint8_t>(3072, 5));
  const auto ab = load_cifar10_binary({dir / "a.bin", dir / "b.bin"});
  EXPECT_EQ(ab.labels, (std::vector<std::uint8_t>{1, 2, 3}));
  const auto again = load_cifar10_binary({dir / "a.bin", dir / "b.bin"});
  EXPECT_EQ(again.images, ab.images);
}

TEST(Cifar, EmptyFileIsEmptyDatasetWithWarning) {
  TempDir dir;
  write_bytes(dir / "empty.bin", {});
  std::ostringstream captured;
  auto* old = std::clog.rdbuf(captured.rdbuf());
  const auto d = load_cifar10_binary({dir / "empty.bin"});
  std::clog.rdbuf(old);
  EXPECT_EQ(d.size(), 0u);
  EXPECT_NE(captured.str().find("warning"), std::string::npos);
}

TEST(Cifar, RecordSizeMustDivide) {
  TempDir dir;
  write_bytes(dir / "bad.bin", std::vector<std::uint8_t>(3073 + 10, 1));
  EXPECT_THROW(load_cifar10_binary({dir / "bad.bin"}), RecordSizeError);
}

TEST(Cifar, LabelAboveNine) {
  TempDir dir;
  std::vector<std::uint8_t> rec(3073, 0);
  rec[0] = 10;
  write_bytes(dir / "bad.bin", rec);
  EXPECT_THROW(load_cifar10_binary({dir / "bad.bin"}), LabelRangeError);
}

TEST(Cifar, StandardFileNames) {
  const auto files = cifar10_train_files("d");
  ASSERT_EQ(files.size(), 5u);
  EXPECT_EQ(files[0].filename(), "data_batch_1.bin");
  EXPECT_EQ(files[4].filename(), "data_batch_5.bin");
  EXPECT_EQ(cifar10_test_file("d").filename(), "test_batch.bin");
}

Dataset indexed(std::size_t n) {
  Dataset d;
  d.images = Tensor<float>({n, 1, 1, 1});
  for (std::size_t i = 0; i < n; ++i) {
    d.images[i] = static_cast<float>(i);
    d.labels.push_back(static_cast<std::uint8_t>(i % 10));
  }
  return d;
}

std::vector<std::size_t> ids(const Dataset& d) {
  std::vector<std::size_t> out;
  for (const float v : d.images.data()) out.push_back(static_cast<std::size_t>(v));
  return out;
}

TEST(Split, TenPercentOfFiftyThousand) {
  const auto [train, val] = split_train_val(indexed(50000), 0.1, 1);
  EXPECT_EQ(train.size(), 45000u);
  EXPECT_EQ(val.size(), 5000u);
}

TEST(Split, DisjointAndExhaustive) {
  const auto [train, val] = split_train_val(indexed(1000), 0.25, 3);
  auto all = ids(train);
  const auto v = ids(val);
  all.insert(all.end(), v.begin(), v.end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expect(1000);
  std::iota(expect.begin(), expect.end(), 0);
  EXPECT_EQ(all, expect);
  for (std::size_t i = 0; i < train.size(); ++i) EXPECT_EQ(train.labels[i], ids(train)[i] % 10);
}

TEST(Split, SeedDeterminism) {
  const auto d = indexed(500);
  EXPECT_EQ(ids(split_train_val(d, 0.1, 7).second), ids(split_train_val(d, 0.1, 7).second));
  EXPECT_NE(ids(split_train_val(d, 0.1, 7).second), ids(split_train_val(d, 0.1, 8).second));
}

TEST(Split, FractionMustBeInsideUnitInterval) {
  EXPECT_THROW(split_train_val(indexed(10), 0.0, 1), ConfigError);
  EXPECT_THROW(split_train_val(indexed(10), 1.0, 1), ConfigError);
}

TEST(Batches, FinalPartialBatchIncluded) {
  const auto batches = epoch_batches(10, {1, 4}, 0);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[0].size(), 4u);
  EXPECT_EQ(batches[1].size(), 4u);
  EXPECT_EQ(batches[2].size(), 2u);
}

TEST(Batches, EpochIsAPermutation) {
  for (std::size_t epoch = 0; epoch < 3; ++epoch) {
    std::vector<std::size_t> all;
    for (const auto& b : epoch_batches(37, {5, 8}, epoch)) all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(37);
    std::iota(expect.begin(), expect.end(), 0);
    EXPECT_EQ(all, expect);
  }
}

TEST(Batches, DeterministicPerSeedAndEpoch) {
  EXPECT_EQ(epoch_batches(100, {3, 16}, 2), epoch_batches(100, {3, 16}, 2));
  EXPECT_NE(epoch_batches(100, {3, 16}, 2), epoch_batches(100, {3, 16}, 3));
  EXPECT_NE(epoch_batches(100, {3, 16}, 2), epoch_batches(100, {4, 16}, 2));
}

TEST(Batches, GatherCopiesSamples) {
  const auto d = indexed(20);
  const std::vector<std::size_t> pick{7, 3, 19};
  const auto b = gather_batch(d, pick);
  EXPECT_EQ(b.images.shape(), (Shape{3, 1, 1, 1}));
  EXPECT_EQ(b.images[0], 7.0f);
  EXPECT_EQ(b.images[2], 19.0f);
  EXPECT_EQ(b.labels, (std::vector<std::uint8_t>{7, 3, 9}));
  EXPECT_THROW(gather_batch(d, std::vector<std::size_t>{20}), ShapeError);
  EXPECT_THROW(epoch_batches(10, {1, 0}, 0), ConfigError);
}

TEST(Dataset, HeadAndSubset) {
  const auto d = indexed(10);
  EXPECT_EQ(d.head(3).size(), 3u);
  EXPECT_EQ(d.head(0).size(), 10u);
  EXPECT_EQ(d.head(50).size(), 10u);
  const std::vector<std::size_t> pick{9, 0};
  EXPECT_EQ(ids(d.subset(pick, "x")), (std::vector<std::size_t>{9, 0}));
}

}  // namespace
}  // namespace inb
