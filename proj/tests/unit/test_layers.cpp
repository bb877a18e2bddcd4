#include <gtest/gtest.h>

#include "inb/errors.hpp"
#include "inb/layers.hpp"
#include "reference.hpp"
#include "selfcheck.hpp"

namespace inb {
namespace {

using oracle::random_tensor;

TEST(Init, GroupMembersStartIdentical) {
  Rng rng(1);
  const auto dense = DenseGrouped<float>::initialize(10, {4, 3, Method::kA, 0.5}, Activation::kRelu, rng);
  EXPECT_TRUE(dense.members_identical());
  const auto conv = ConvGrouped<float>::initialize(3, {4, 3, Method::kB, 0.5}, 3, 1, Padding::kSame,
                                                   Activation::kRelu, rng);
  EXPECT_TRUE(conv.members_identical());
}

TEST(Init, SingleMemberGroupsMatchPlainInit) {
  Rng a(7), b(7);
  const auto grouped = DenseGrouped<float>::initialize(12, {5, 1, Method::kB, 0.5}, Activation::kRelu, a);
  const auto plain = DensePlain<float>::initialize(12, 5, Activation::kRelu, b);
  EXPECT_EQ(grouped.members().weights(), plain.weights());
  EXPECT_EQ(grouped.members().biases(), plain.biases());
  Rng c(8), d(8);
  const auto gconv = ConvGrouped<float>::initialize(3, {6, 1, Method::kA, 0.5}, 3, 1, Padding::kSame,
                                                    Activation::kRelu, c);
  const auto pconv = ConvPlain<float>::initialize(3, 6, 3, 1, Padding::kSame, Activation::kRelu, d);
  EXPECT_EQ(gconv.members().filters(), pconv.filters());
}

TEST(Init, CombiningFreshMethodBLayerGivesThePlainInit) {
  Rng a(9), b(9);
  const auto grouped = DenseGrouped<float>::initialize(12, {5, 4, Method::kB, 0.5}, Activation::kRelu, a);
  const auto plain = DensePlain<float>::initialize(12, 5, Activation::kRelu, b);
  const auto combined = grouped.combine();
  EXPECT_EQ(combined.weights(), plain.weights());
  EXPECT_EQ(combined.biases(), plain.biases());
}

TEST(Init, UniformWithinFanLimitAndZeroBias) {
  Rng rng(2);
  const auto layer = DenseGrouped<double>::initialize(30, {10, 4, Method::kA, 0.5}, Activation::kRelu, rng);
  const double limit = std::sqrt(6.0 / (30 + 10));
  double lo = 1, hi = -1;
  for (const double w : layer.members().weights().data()) {
    EXPECT_LE(std::abs(w), limit);
    lo = std::min(lo, w);
    hi = std::max(hi, w);
  }
  EXPECT_LT(lo, -0.5 * limit);
  EXPECT_GT(hi, 0.5 * limit);
  for (const double b : layer.members().biases().data()) EXPECT_EQ(b, 0.0);
}

TEST(Init, SeedDeterminism) {
  Rng a(3), b(3), c(4);
  const GroupSpec spec{4, 2, Method::kA, 0.5};
  const auto x = DenseGrouped<float>::initialize(8, spec, Activation::kRelu, a);
  const auto y = DenseGrouped<float>::initialize(8, spec, Activation::kRelu, b);
  const auto z = DenseGrouped<float>::initialize(8, spec, Activation::kRelu, c);
  EXPECT_EQ(x.members().weights(), y.members().weights());
  EXPECT_FALSE(x.members().weights() == z.members().weights());
}

TEST(ForwardTrain, MethodBSingleMemberEqualsPlainLayer) {
  Rng rng(4);
  const GroupSpec spec{6, 1, Method::kB, 0.5};
  auto grouped = DenseGrouped<float>::initialize(5, spec, Activation::kTanh, rng);
  oracle::randomize(grouped.parameters(), rng);
  DensePlain<float> plain = grouped.members();
  const auto x = random_tensor<float>({4, 5}, rng);
  const auto mask = sample_mask(spec, 4, rng);
  EXPECT_EQ(grouped.forward_train(x, mask), plain.forward(x));
  EXPECT_EQ(grouped.forward_train(x, mask), plain.forward_train(x));
  const auto up = random_tensor<float>({4, 6}, rng);
  EXPECT_EQ(grouped.backward(up), plain.backward(up));
  EXPECT_EQ(grouped.members().weight_grad(), plain.weight_grad());
  EXPECT_EQ(grouped.members().bias_grad(), plain.bias_grad());

  auto gconv = ConvGrouped<float>::initialize(2, spec, 3, 1, Padding::kSame, Activation::kRelu, rng);
  oracle::randomize(gconv.parameters(), rng);
  ConvPlain<float> pconv = gconv.members();
  const auto xi = random_tensor<float>({2, 2, 5, 5}, rng);
  EXPECT_EQ(gconv.forward_train(xi, sample_mask(spec, 2, rng)), pconv.forward(xi));
}

TEST(ForwardTrain, AllOnesSingleMemberEqualsPlainForAnyMethod) {
  Rng rng(5);
  const GroupSpec spec{3, 1, Method::kA, 0.7};
  auto grouped = DenseGrouped<float>::initialize(4, spec, Activation::kSigmoid, rng);
  oracle::randomize(grouped.parameters(), rng);
  const auto x = random_tensor<float>({3, 4}, rng);
  EXPECT_EQ(grouped.forward_train(x, MaskBatch::ones(3, 3, 1)), grouped.members().forward(x));
}

TEST(ForwardTrain, AllZeroMaskGivesZeroOutput) {
  Rng rng(6);
  auto layer = DenseGrouped<float>::initialize(4, {3, 2, Method::kA, 0.5}, Activation::kRelu, rng);
  oracle::randomize(layer.parameters(), rng);
  const auto out = layer.forward_train(random_tensor<float>({2, 4}, rng), MaskBatch(2, 3, 2));
  for (const float v : out.data()) EXPECT_EQ(v, 0.0f);
}

TEST(ForwardTrain, MethodASingleMemberIsDropoutBitExact) {
  for (const std::uint64_t seed : {1, 2, 3}) {
    const auto r = oracle::check_dropout_equivalence(seed);
    EXPECT_TRUE(r.passed) << r.detail;
  }
}

TEST(ForwardTrain, ConvMaskingIsPerFeatureMap) {
  // On 1x1 inputs with a 1x1 kernel, a grouped conv is a grouped dense layer.
  Rng rng(7);
  const GroupSpec spec{3, 2, Method::kA, 0.5};
  auto conv = ConvGrouped<double>::initialize(4, spec, 1, 1, Padding::kSame, Activation::kRelu, rng);
  oracle::randomize(conv.parameters(), rng);
  DenseGrouped<double> dense(spec, conv.filters().reshaped({3, 2, 4}), conv.biases(), Activation::kRelu);
  const auto x = random_tensor<double>({5, 4}, rng);
  const auto mask = sample_mask(spec, 5, rng);
  EXPECT_EQ(conv.forward_train(x.reshaped({5, 4, 1, 1}), mask).reshaped({5, 3}), dense.forward_train(x, mask));

  // Larger maps: the whole map of a dropped member disappears.
  auto wide = ConvGrouped<double>::initialize(2, spec, 3, 1, Padding::kSame, Activation::kRelu, rng);
  oracle::randomize(wide.parameters(), rng);
  const auto xi = random_tensor<double>({1, 2, 4, 4}, rng);
  MaskBatch m(1, 3, 2);
  m.at(0, 1, 0) = 1;
  const auto out = wide.forward_train(xi, m);
  const auto member_maps = ops::activation(Activation::kRelu, wide.member_pre_activations(xi));
  for (std::size_t s = 0; s < 16; ++s) {
    EXPECT_EQ(out[0 * 16 + s], 0.0);
    EXPECT_EQ(out[1 * 16 + s], member_maps[2 * 16 + s]);
    EXPECT_EQ(out[2 * 16 + s], 0.0);
  }
}

TEST(ForwardTrain, RejectsMaskOfWrongShape) {
  Rng rng(8);
  auto layer = DenseGrouped<float>::initialize(4, {3, 2, Method::kA, 0.5}, Activation::kRelu, rng);
  EXPECT_THROW(layer.forward_train(Tensor<float>({2, 4}), MaskBatch(2, 3, 3)), ShapeError);
  EXPECT_THROW(layer.forward_train(Tensor<float>({2, 5}), MaskBatch(2, 3, 2)), ShapeError);
}

TEST(Backward, RequiresRecordedForward) {
  Rng rng(9);
  auto layer = DenseGrouped<float>::initialize(4, {3, 2, Method::kA, 0.5}, Activation::kRelu, rng);
  EXPECT_THROW(layer.backward(Tensor<float>({1, 3})), StateError);
  auto plain = DensePlain<float>::initialize(4, 3, Activation::kRelu, rng);
  EXPECT_THROW(plain.backward(Tensor<float>({1, 3})), StateError);
  MaxPool<float> pool(2, 2);
  EXPECT_THROW(pool.backward(Tensor<float>({1, 1, 1, 1})), StateError);
  GlobalAvgPool<float> gap;
  EXPECT_THROW(gap.backward(Tensor<float>({1, 1})), StateError);
}

TEST(Backward, MaskedOutMemberGetsZeroGradient) {
  Rng rng(10);
  const GroupSpec spec{2, 3, Method::kA, 0.5};
  auto layer = DenseGrouped<double>::initialize(4, spec, Activation::kRelu, rng);
  oracle::randomize(layer.parameters(), rng);
  auto mask = MaskBatch::ones(5, 2, 3);
  for (std::size_t b = 0; b < 5; ++b) mask.at(b, 1, 2) = 0;
  layer.forward_train(random_tensor<double>({5, 4}, rng), mask);
  layer.backward(random_tensor<double>({5, 2}, rng));
  const auto wg = layer.weight_grad();
  const auto bg = layer.bias_grad();
  for (std::size_t f = 0; f < 4; ++f) EXPECT_EQ(wg.at(1, 2, f), 0.0);
  EXPECT_EQ(bg.at(1, 2), 0.0);
}

TEST(Gradients, DenseLayers) {
  for (const auto act : {Activation::kRelu, Activation::kSigmoid, Activation::kTanh}) {
    const auto r = oracle::gradient_dense_plain(act, 11);
    EXPECT_TRUE(r.passed) << to_string(act) << ": " << r.worst << " rel " << r.max_relative_error;
  }
  for (const Method m : {Method::kA, Method::kB})
    for (const std::size_t n : {1, 2, 4})
      for (const auto act : {Activation::kRelu, Activation::kTanh}) {
        const auto r = oracle::gradient_dense_grouped(m, n, act, 12 + n);
        EXPECT_TRUE(r.passed) << to_string(m) << " n=" << n << ": " << r.worst << " rel " << r.max_relative_error;
      }
}

TEST(Gradients, ConvLayers) {
  for (const auto padding : {Padding::kSame, Padding::kValid})
    for (const std::size_t stride : {1, 2}) {
      const auto r = oracle::gradient_conv_plain(padding, stride, Activation::kRelu, 13);
      EXPECT_TRUE(r.passed) << r.worst << " rel " << r.max_relative_error;
    }
  for (const Method m : {Method::kA, Method::kB})
    for (const auto padding : {Padding::kSame, Padding::kValid}) {
      const auto r = oracle::gradient_conv_grouped(m, 3, padding, Activation::kRelu, 14);
      EXPECT_TRUE(r.passed) << r.worst << " rel " << r.max_relative_error;
    }
}

TEST(Gradients, PoolingAndHead) {
  for (const std::size_t window : {2, 3}) {
    const auto r = oracle::gradient_maxpool(window, 2, 15);
    EXPECT_TRUE(r.passed) << r.worst;
  }
  EXPECT_TRUE(oracle::gradient_global_avg_pool(16).passed);
  EXPECT_TRUE(oracle::gradient_softmax_head(17).passed);
}

TEST(Gradients, CheckerCatchesAWrongGradient) {
  Rng rng(18);
  auto x = random_tensor<double>({4}, rng);
  Tensor<double> wrong({4});
  for (std::size_t i = 0; i < 4; ++i) wrong[i] = 2 * x[i] * 1.001;  // true gradient of sum(x^2) is 2x
  std::vector<oracle::GradientTarget> targets{{"x", &x, wrong}};
  const auto r = oracle::check_gradients(
      [&] {
        double s = 0;
        for (const double v : x.data()) s += v * v;
        return s;
      },
      targets);
  EXPECT_FALSE(r.passed);
}

TEST(Combine, MethodBAfterAveragingEqualsAnyMember) {
  Rng rng(19);
  const GroupSpec spec{3, 4, Method::kB, 0.5};
  auto layer = DenseGrouped<float>::initialize(5, spec, Activation::kRelu, rng);
  oracle::randomize(layer.parameters(), rng);
  layer.average();
  const auto combined = layer.combine();
  for (std::size_t j = 0; j < 4; ++j) {
    const auto member = layer.single_member(j);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t f = 0; f < 5; ++f) EXPECT_EQ(combined.weights().at(i, f), layer.weights().at(i, j, f));
    EXPECT_EQ(member.weights(), combined.weights());
  }
}

TEST(Combine, MethodASingleMemberHalvesParameters) {
  Rng rng(20);
  auto layer = DenseGrouped<float>::initialize(5, {3, 1, Method::kA, 0.5}, Activation::kRelu, rng);
  oracle::randomize(layer.parameters(), rng);
  const auto combined = layer.combine();
  for (std::size_t i = 0; i < combined.weights().size(); ++i)
    EXPECT_EQ(combined.weights()[i], 0.5f * layer.members().weights()[i]);
  for (std::size_t i = 0; i < combined.biases().size(); ++i)
    EXPECT_EQ(combined.biases()[i], 0.5f * layer.members().biases()[i]);
}

TEST(Combine, ParameterCountDividesByGroupSize) {
  Rng rng(21);
  for (const std::size_t n : {1, 2, 3, 5}) {
    const auto dense = DenseGrouped<float>::initialize(7, {4, n, Method::kA, 0.5}, Activation::kRelu, rng);
    EXPECT_EQ(dense.combine().parameter_count() * n, dense.parameter_count());
    const auto conv = ConvGrouped<float>::initialize(3, {4, n, Method::kB, 0.5}, 3, 1, Padding::kSame,
                                                     Activation::kRelu, rng);
    EXPECT_EQ(conv.combine().parameter_count() * n, conv.parameter_count());
  }
}

TEST(Combine, ConvCombinationMatchesEnumeration) {
  const auto r = oracle::combination_fidelity_conv(30, 22);
  EXPECT_TRUE(r.passed) << r.worst;
}

TEST(Averaging, AlgebraHoldsBitExactly) {
  for (const std::uint64_t seed : {1, 2, 3}) {
    const auto r = oracle::check_weight_averaging(seed);
    EXPECT_TRUE(r.passed) << r.detail;
  }
}

TEST(Averaging, ConvMembersIdenticalAfterAveraging) {
  Rng rng(23);
  auto conv = ConvGrouped<float>::initialize(3, {4, 3, Method::kA, 0.5}, 3, 1, Padding::kSame, Activation::kRelu, rng);
  oracle::randomize(conv.parameters(), rng);
  EXPECT_FALSE(conv.members_identical());
  conv.average();
  EXPECT_TRUE(conv.members_identical());
}

TEST(SingleMember, RejectsOutOfRangeMember) {
  Rng rng(24);
  const auto layer = DenseGrouped<float>::initialize(5, {3, 2, Method::kA, 0.5}, Activation::kRelu, rng);
  EXPECT_THROW((void)layer.single_member(2), ConfigError);
}

}  // namespace
}  // namespace inb
