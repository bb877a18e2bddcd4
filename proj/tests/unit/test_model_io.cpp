#include <gtest/gtest.h>

#include <fstream>

#include "inb/errors.hpp"
#include "inb/model_io.hpp"
#include "inb/train.hpp"
#include "support.hpp"

namespace inb {
namespace {

using testing::TempDir;

template <typename T>
void expect_same_parameters(Model<T> a, Model<T> b) {
  ASSERT_EQ(a.layers.size(), b.layers.size());
  for (std::size_t i = 0; i < a.layers.size(); ++i) EXPECT_EQ(a.layers[i].index(), b.layers[i].index()) << i;
  const auto pa = parameters(a);
  const auto pb = parameters(b);
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(*pa[i].value, *pb[i].value) << pa[i].name;
  EXPECT_EQ(group_specs(a), group_specs(b));
}

Model<float> trained_like(TrainConfig c) {
  auto model = build_model(c);
  Rng rng(c.seed + 100);
  oracle::randomize(parameters(model), rng);
  return model;
}

TrainConfig fc(std::size_t n, Method m = Method::kA) {
  TrainConfig c;
  c.width = 6;
  c.group_size = n;
  c.method = m;
  c.keep_prob = 0.3;
  return c;
}

TrainConfig cnn(std::size_t n) {
  TrainConfig c = default_train_config(Architecture::kCnnC);
  c.width = 0.125;
  c.group_size = n;
  c.method = Method::kB;
  return c;
}

TEST(ModelIo, RoundTripIsBitIdentical) {
  TempDir dir;
  for (const auto& c : {fc(3), fc(1, Method::kB), cnn(2)}) {
    const auto model = trained_like(c);
    save_model(model, dir / "m.inb", describe_config(c));
    const auto loaded = load_model<float>(dir / "m.inb");
    EXPECT_EQ(loaded.architecture, model.architecture);
    EXPECT_EQ(loaded.input_shape, model.input_shape);
    expect_same_parameters(model, loaded);
    EXPECT_EQ(load_model_config(dir / "m.inb"), describe_config(c));
  }
}

TEST(ModelIo, PoolAndConvSettingsSurvive) {
  const auto model = trained_like(cnn(2));
  const auto loaded = decode_model<float>(encode_model(model));
  EXPECT_EQ(std::get<MaxPool<float>>(loaded.layers[2]).window(), 3u);
  EXPECT_EQ(std::get<ConvGrouped<float>>(loaded.layers[6]).members().padding(), Padding::kValid);
  EXPECT_EQ(std::get<ConvGrouped<float>>(loaded.layers[0]).spec(), (GroupSpec{8, 2, Method::kB, 0.5}));
}

TEST(ModelIo, EncodingIsCanonical) {
  TempDir dir;
  const auto c = fc(2);
  save_model(trained_like(c), dir / "a.inb", describe_config(c));
  const auto first = read_file_bytes(dir / "a.inb");
  save_model(load_model<float>(dir / "a.inb"), dir / "b.inb", load_model_config(dir / "a.inb"));
  EXPECT_EQ(read_file_bytes(dir / "b.inb"), first);
}

TEST(ModelIo, EvaluationUnchangedAfterReload) {
  TempDir dir;
  const auto model = trained_like(fc(2));
  save_model(model, dir / "m.inb");
  const auto loaded = load_model<float>(dir / "m.inb");
  const auto data = testing::synthetic_mnist(100, 4);
  for (const auto mode : {EvalMode::kCombined, EvalMode::kExpected, EvalMode::kSingleMember}) {
    EXPECT_EQ(predict(loaded, data, mode), predict(model, data, mode));
    EXPECT_EQ(evaluate(loaded, data, mode), evaluate(model, data, mode));
  }
}

TEST(ModelIo, CombinedModelLoadsAsPlainLayers) {
  TempDir dir;
  for (const auto& c : {fc(3), cnn(2)}) {
    save_model(combine_model(trained_like(c)), dir / "c.inb");
    const auto loaded = load_model<float>(dir / "c.inb");
    EXPECT_FALSE(has_grouped_layers(loaded));
    for (const auto& layer : loaded.layers) EXPECT_FALSE(is_grouped(layer));
  }
}

TEST(ModelIo, TruncatedFileIsChecksumError) {
  const auto bytes = encode_model(trained_like(fc(2)));
  for (const std::size_t keep : {bytes.size() - 1, bytes.size() - 4, bytes.size() / 2, std::size_t{20}, std::size_t{10}})
    EXPECT_THROW(decode_model<float>(std::span(bytes).first(keep)), ChecksumError) << keep;
}

TEST(ModelIo, CorruptedPayloadIsChecksumError) {
  auto bytes = encode_model(trained_like(fc(2)));
  bytes[bytes.size() / 2] ^= 0x40;
  EXPECT_THROW(decode_model<float>(bytes), ChecksumError);
  auto extra = encode_model(trained_like(fc(2)));
  extra.push_back(0);
  EXPECT_THROW(decode_model<float>(extra), ChecksumError);
}

TEST(ModelIo, BadMagic) {
  auto bytes = encode_model(trained_like(fc(1)));
  bytes[0] = 'X';
  EXPECT_THROW(decode_model<float>(bytes), ModelMagicError);
  const std::vector<std::uint8_t> text{'h', 'e', 'l', 'l', 'o'};
  EXPECT_THROW(decode_model<float>(text), ModelMagicError);
}

TEST(ModelIo, VersionBumpNamesBothVersions) {
  auto bytes = encode_model(trained_like(fc(1)));
  ASSERT_EQ(bytes[8], kModelFormatVersion);
  bytes[8] = 2;
  try {
    decode_model<float>(bytes);
    FAIL() << "expected version error";
  } catch (const ModelVersionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("version 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("version 1"), std::string::npos) << msg;
  }
}

TEST(ModelIo, HeaderLayout) {
  const auto bytes = encode_model(trained_like(fc(1)));
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "INBMODEL");
  std::uint64_t length = 0;
  for (int i = 0; i < 8; ++i) length |= static_cast<std::uint64_t>(bytes[12 + i]) << (8 * i);
  EXPECT_EQ(length + 8 + 4 + 8 + 4, bytes.size());
}

TEST(ModelIo, WideningTo64BitIsLossless) {
  const auto model = trained_like(fc(2));
  const auto wide = decode_model<double>(encode_model(model));
  auto narrow_model = model;
  const auto pn = parameters(narrow_model);
  auto wide_model = wide;
  const auto pw = parameters(wide_model);
  ASSERT_EQ(pn.size(), pw.size());
  for (std::size_t i = 0; i < pn.size(); ++i) {
    ASSERT_EQ(pn[i].value->shape(), pw[i].value->shape());
    for (std::size_t e = 0; e < pn[i].value->size(); ++e)
      ASSERT_EQ(static_cast<double>((*pn[i].value)[e]), (*pw[i].value)[e]);
  }
  EXPECT_EQ(encode_model(wide), encode_model(model));
}

TEST(ModelIo, MissingFile) {
  TempDir dir;
  EXPECT_THROW(load_model<float>(dir / "none.inb"), MissingFileError);
}

TEST(ModelIo, SaveLeavesNoTemporaryFiles) {
  TempDir dir;
  save_model(trained_like(fc(1)), dir / "m.inb");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++files;
  EXPECT_EQ(files, 1u);
}

TEST(ModelIo, SelfCheckPasses) {
  const auto r = oracle::check_model_round_trip(3);
  EXPECT_TRUE(r.passed) << r.detail;
}

}  // namespace
}  // namespace inb
