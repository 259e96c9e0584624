#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <memory>
#include <random>

#include "scenefuse/nn/adam.hpp"
#include "scenefuse/nn/layers.hpp"
#include "scenefuse/nn/loss.hpp"
#include "scenefuse/nn/mixup.hpp"
#include "scenefuse/nn/network.hpp"
#include "scenefuse/nn/trainer.hpp"
#include "support/grad_check.hpp"

using namespace sf;
using namespace sf::nn;
using namespace sf::test;

namespace {

template <class F>
std::optional<ErrorKind> error_kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace

template <typename T>
class LayerGradient : public ::testing::Test {};
using Precisions = ::testing::Types<double, float>;
TYPED_TEST_SUITE(LayerGradient, Precisions);

TYPED_TEST(LayerGradient, AllLayerKinds) {
  using T = TypeParam;
  const double h = Tolerance<T>::step, bound = Tolerance<T>::bound;
  std::mt19937_64 rng(21);
  std::vector<std::pair<std::unique_ptr<Layer<T>>, Tensor<T>>> cases;
  cases.emplace_back(std::make_unique<Conv3x3<T>>("conv", 2, 3), random_tensor<T>({2, 5, 5, 2}, rng));
  cases.emplace_back(std::make_unique<BatchNorm<T>>("bn", 3), random_tensor<T>({4, 2, 2, 3}, rng));
  cases.emplace_back(std::make_unique<Relu<T>>("relu"), kink_free_tensor<T>({2, 3, 3, 2}, rng));
  cases.emplace_back(std::make_unique<AvgPool2x2<T>>("ap"), random_tensor<T>({2, 4, 4, 2}, rng));
  cases.emplace_back(std::make_unique<GlobalAvgPool<T>>("gap"), random_tensor<T>({2, 3, 3, 4}, rng));
  cases.emplace_back(std::make_unique<Dense<T>>("fc", 4, 3), random_tensor<T>({3, 4}, rng));
  cases.emplace_back(std::make_unique<Softmax<T>>("sm"), random_tensor<T>({3, 5}, rng));
  cases.emplace_back(std::make_unique<Dropout<T>>("dr", 0.4), random_tensor<T>({3, 6}, rng));
  ASSERT_EQ(cases.size(), 8u);
  for (auto& [layer, x] : cases) {
    randomize_params(*layer, rng);
    const auto check = gradient_check<T>(*layer, x, h);
    EXPECT_LT(check.input_error, bound) << to_string(layer->kind());
    EXPECT_LT(check.param_error, bound) << to_string(layer->kind());
  }
}

TEST(LayerGradient, DenseFourByThreeWeights) {
  std::mt19937_64 rng(5);
  Dense<double> fc("fc", 4, 3);
  Rng init(1);
  fc.initialize(init);
  EXPECT_EQ(fc.weight().shape(), (Shape{4, 3}));
  const auto check = gradient_check<double>(fc, random_tensor<double>({2, 4}, rng), 1e-6);
  EXPECT_LT(check.param_error, 1e-5);
  EXPECT_LT(check.input_error, 1e-5);
}

TEST(Layers, SoftmaxOfZerosIsUniform) {
  Softmax<double> sm("sm");
  ForwardContext ctx;
  const auto y = sm.forward(Tensor<double>({1, 10}), ctx);
  for (double v : y.values()) EXPECT_NEAR(v, 0.1, 1e-15);
}

TEST(Layers, SoftmaxPositiveAndNormalized) {
  std::mt19937_64 rng(3);
  Softmax<float> sm("sm");
  ForwardContext ctx;
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_tensor<float>({4, 10}, rng, -80.0, 80.0);
    const auto y = sm.forward(x, ctx);
    for (std::size_t b = 0; b < 4; ++b) {
      double sum = 0;
      for (std::size_t c = 0; c < 10; ++c) {
        EXPECT_GT(y[b * 10 + c], 0.0f);
        sum += y[b * 10 + c];
      }
      EXPECT_NEAR(sum, 1.0, 1e-6);
    }
  }
}

TEST(Layers, ConvDiracKernelIsIdentity) {
  std::mt19937_64 rng(4);
  Conv3x3<double> conv("conv", 2, 2);
  for (std::size_t c = 0; c < 2; ++c) conv.weight()[((1 * 3 + 1) * 2 + c) * 2 + c] = 1.0;
  const auto x = random_tensor<double>({2, 5, 4, 2}, rng);
  ForwardContext ctx;
  EXPECT_EQ(conv.forward(x, ctx), x);
}

TEST(Layers, ReluBackwardAtNegativeInputIsZero) {
  Relu<double> relu("relu");
  ForwardContext ctx{Mode::train};
  relu.forward(Tensor<double>({1, 2}, std::vector<double>{-1.0, 2.0}), ctx);
  const auto g = relu.backward(Tensor<double>({1, 2}, 1.0));
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 1.0);
}

TEST(Layers, ShapeFlow) {
  ForwardContext ctx;
  Conv3x3<float> conv("c", 6, 64);
  EXPECT_EQ(conv.output_shape({128, 128, 6}), (Shape{128, 128, 64}));
  AvgPool2x2<float> ap("ap");
  EXPECT_EQ(ap.output_shape({128, 128, 64}), (Shape{64, 64, 64}));
  EXPECT_EQ(error_kind_of([&] { ap.output_shape({5, 4, 2}); }), ErrorKind::shape);
  GlobalAvgPool<float> gap("gap");
  EXPECT_EQ(gap.output_shape({4, 4, 512}), (Shape{512}));
  EXPECT_EQ(error_kind_of([&] { conv.forward(Tensor<float>({1, 4, 4, 3}), ctx); }), ErrorKind::shape);
  Dense<float> fc("fc", 8, 2);
  EXPECT_EQ(error_kind_of([&] { fc.forward(Tensor<float>({1, 7}), ctx); }), ErrorKind::shape);
}

TEST(Layers, BatchNormSingleSampleInTrainMode) {
  BatchNorm<double> bn("bn", 2);
  ForwardContext train{Mode::train};
  EXPECT_EQ(error_kind_of([&] { bn.forward(Tensor<double>({1, 2}), train); }), ErrorKind::degenerate_batch);
  ForwardContext eval;
  EXPECT_NO_THROW(bn.forward(Tensor<double>({1, 2}), eval));
}

TEST(Layers, BatchNormRunningStatistics) {
  BatchNorm<double> bn("bn", 1);
  ForwardContext train{Mode::train};
  bn.forward(Tensor<double>({2, 1}, std::vector<double>{1.0, 3.0}), train);
  EXPECT_NEAR(bn.running_mean()[0], 0.1 * 2.0, 1e-15);
  EXPECT_NEAR(bn.running_var()[0], 0.9 + 0.1 * 1.0, 1e-15);
  ForwardContext eval;
  const auto y = bn.forward(Tensor<double>({1, 1}, std::vector<double>{0.2}), eval);
  EXPECT_NEAR(y[0], 0.0, 1e-12);
}

TEST(Layers, BackwardWithoutForwardIsStateError) {
  Dense<double> fc("fc", 2, 2);
  EXPECT_EQ(error_kind_of([&] { fc.backward(Tensor<double>({1, 2})); }), ErrorKind::state);
  Relu<double> relu("r");
  ForwardContext eval;
  relu.forward(Tensor<double>({1, 2}), eval);
  EXPECT_EQ(error_kind_of([&] { relu.backward(Tensor<double>({1, 2})); }), ErrorKind::state);
}

TEST(Layers, DropoutInvertedScalingAndEvalIdentity) {
  Dropout<double> dr("dr", 0.25);
  Rng rng(9);
  ForwardContext train{Mode::train, &rng, true};
  const Tensor<double> x({1, 20000}, 1.0);
  const auto y = dr.forward(x, train);
  double sum = 0;
  for (double v : y.values()) {
    EXPECT_TRUE(v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-12);
    sum += v;
  }
  EXPECT_NEAR(sum / 20000.0, 1.0, 0.03);
  ForwardContext eval;
  EXPECT_EQ(dr.forward(x, eval), x);
  EXPECT_EQ(error_kind_of([] { Dropout<double>("bad", 1.0); }), ErrorKind::spec);
}

TEST(KlLoss, Examples) {
  const Tensor<double> y({1, 2}, std::vector<double>{1.0, 0.0});
  const Tensor<double> half({1, 2}, std::vector<double>{0.5, 0.5});
  EXPECT_NEAR(kl_loss<double>(y, y, {}, 0.0, nullptr).loss, 0.0, 1e-9);
  EXPECT_NEAR(kl_loss<double>(y, half, {}, 0.0, nullptr).loss, 0.693147, 1e-6);

  Tensor<double> w({1}, 3.0), g({1});
  const std::vector<ParamRef<double>> params = {{"w", &w, &g}};
  const auto r = kl_loss<double>(y, y, params, 2.0, nullptr);
  EXPECT_NEAR(r.loss, 9.0, 1e-12);
  EXPECT_NEAR(g[0], 6.0, 1e-12);
}

TEST(KlLoss, RejectsUnnormalizedLabels) {
  const Tensor<double> y({1, 2}, std::vector<double>{0.7, 0.7});
  EXPECT_EQ(error_kind_of([&] { kl_loss<double>(y, y, {}, 0.0, nullptr); }), ErrorKind::label);
  const Tensor<double> neg({1, 2}, std::vector<double>{1.5, -0.5});
  EXPECT_EQ(error_kind_of([&] { kl_loss<double>(neg, neg, {}, 0.0, nullptr); }), ErrorKind::label);
}

TEST(KlLoss, LowerBoundedByRegularizer) {
  std::mt19937_64 rng(6);
  Tensor<double> w = random_tensor<double>({5}, rng), g({5});
  const std::vector<ParamRef<double>> params = {{"w", &w, &g}};
  double norm = 0;
  for (double v : w.values()) norm += v * v;
  Softmax<double> sm("sm");
  ForwardContext ctx;
  for (int trial = 0; trial < 100; ++trial) {
    const auto y = sm.forward(random_tensor<double>({3, 10}, rng, -3, 3), ctx);
    const auto y_hat = sm.forward(random_tensor<double>({3, 10}, rng, -3, 3), ctx);
    EXPECT_NEAR(kl_loss<double>(y, y, params, 0.3, nullptr).loss, 0.15 * norm, 1e-9);
    EXPECT_GE(kl_loss<double>(y, y_hat, params, 0.3, nullptr).loss, 0.15 * norm);
  }
}

TEST(KlLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  Softmax<double> sm("sm");
  ForwardContext ctx;
  const auto y = sm.forward(random_tensor<double>({2, 4}, rng), ctx);
  auto y_hat = sm.forward(random_tensor<double>({2, 4}, rng), ctx);
  Tensor<double> grad;
  kl_loss<double>(y, y_hat, {}, 0.0, &grad);
  std::vector<double> analytic, numeric;
  for (std::size_t i = 0; i < y_hat.size(); ++i) {
    const double saved = y_hat[i];
    y_hat[i] = saved + 1e-7;
    const double up = kl_loss<double>(y, y_hat, {}, 0.0, nullptr).loss;
    y_hat[i] = saved - 1e-7;
    const double down = kl_loss<double>(y, y_hat, {}, 0.0, nullptr).loss;
    y_hat[i] = saved;
    analytic.push_back(grad[i]);
    numeric.push_back((up - down) / 2e-7);
  }
  EXPECT_LT(relative_error(analytic, numeric), 1e-5);
}

TEST(Mixup, UnitCoefficientIsIdentity) {
  std::mt19937_64 rng(8);
  const auto x = random_tensor<double>({4, 3}, rng);
  const auto y = one_hot<double>(std::vector<int>{0, 1, 2, 3}, 4);
  Rng draw_rng(1);
  MixupDraw draw = draw_mixup(4, 0.4, draw_rng);
  draw.coefficient = 1.0;
  const auto [mx, my] = mixup_batch(x, y, draw);
  EXPECT_EQ(mx, x);
  EXPECT_EQ(my, y);
}

TEST(Mixup, MidpointOfTwoOneHots) {
  const auto y = one_hot<double>(std::vector<int>{0, 1}, 10);
  const Tensor<double> x({2, 1}, std::vector<double>{0.0, 2.0});
  const MixupDraw draw{0.5, {1, 0}};
  const auto [mx, my] = mixup_batch(x, y, draw);
  EXPECT_EQ(my[0], 0.5);
  EXPECT_EQ(my[1], 0.5);
  EXPECT_EQ(mx[0], 1.0);
}

TEST(Mixup, ConvexHullAndLabelMass) {
  std::mt19937_64 rng(10);
  Rng draw_rng(2);
  std::uniform_int_distribution<int> label(0, 9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_tensor<float>({6, 2, 2, 3}, rng);
    std::vector<int> ids(6);
    for (auto& v : ids) v = label(rng);
    const auto y = one_hot<float>(ids, 10);
    const auto draw = draw_mixup(6, 0.4, draw_rng);
    ASSERT_GE(draw.coefficient, 0.0);
    ASSERT_LE(draw.coefficient, 1.0);
    std::vector<int> seen(6, 0);
    for (auto j : draw.partner) ++seen[j];
    EXPECT_EQ(seen, std::vector<int>(6, 1));
    const auto [mx, my] = mixup_batch(x, y, draw);
    const std::size_t stride = 12;
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t k = 0; k < stride; ++k) {
        const float a = x[i * stride + k], b = x[draw.partner[i] * stride + k];
        EXPECT_GE(mx[i * stride + k], std::min(a, b) - 1e-6f);
        EXPECT_LE(mx[i * stride + k], std::max(a, b) + 1e-6f);
      }
      double mass = 0;
      for (std::size_t c = 0; c < 10; ++c) mass += my[i * 10 + c];
      EXPECT_NEAR(mass, 1.0, 1e-6);
    }
  }
}

TEST(Mixup, Errors) {
  Rng rng(1);
  EXPECT_EQ(error_kind_of([&] { draw_mixup(1, 0.4, rng); }), ErrorKind::too_small_batch);
  const Tensor<double> x({1, 2}), y({1, 2}, std::vector<double>{1, 0});
  EXPECT_EQ(error_kind_of([&] { mixup_batch(x, y, MixupDraw{0.5, {0}}); }), ErrorKind::too_small_batch);
  EXPECT_EQ(error_kind_of([&] { sample_beta(0.0, rng); }), ErrorKind::spec);
}

TEST(Mixup, BetaSampleMoments) {
  Rng rng(3);
  double sum = 0, sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double b = sample_beta(0.4, rng);
    sum += b;
    sq += b * b;
  }
  const double mean = sum / n, var = sq / n - mean * mean;
  EXPECT_NEAR(mean, 0.5, 0.01);
  // Beta(a, a) variance: 1 / (4 (2a + 1)).
  EXPECT_NEAR(var, 1.0 / (4.0 * 1.8), 0.01);
}

TEST(AdamOptimizer, ZeroGradientLeavesParameters) {
  Tensor<double> w({3}, std::vector<double>{1, 2, 3}), g({3});
  Adam<double> adam({{"w", &w, &g}}, {0.1});
  adam.step();
  EXPECT_EQ(w.values()[0], 1.0);
  EXPECT_EQ(w.values()[2], 3.0);
}

TEST(AdamOptimizer, FirstStepClosedForm) {
  Tensor<double> w({1}, 0.0), g({1}, 2.0);
  Adam<double> adam({{"w", &w, &g}}, {0.1});
  adam.step();
  // m_hat = 2, v_hat = 4, update = -0.1 * 2 / (2 + 1e-8).
  EXPECT_NEAR(w[0], -0.1 * 2.0 / (2.0 + 1e-8), 1e-15);
  EXPECT_NEAR(w[0], -0.1, 1e-8);
}

TEST(AdamOptimizer, QuadraticBowlDecreases) {
  Tensor<double> w({2}, std::vector<double>{1.5, -2.0}), g({2});
  Adam<double> adam({{"w", &w, &g}}, {0.05});
  auto loss = [&] { return w[0] * w[0] + 3 * w[1] * w[1]; };
  double previous = loss();
  for (int step = 0; step < 2; ++step) {
    g[0] = 2 * w[0];
    g[1] = 6 * w[1];
    adam.step();
    EXPECT_LT(loss(), previous);
    previous = loss();
  }
}

TEST(AdamOptimizer, NonFiniteGradientAbortsStep) {
  Tensor<double> a({1}, 1.0), ga({1}, 1.0), b({1}, 1.0), gb({1}, std::nan(""));
  Adam<double> adam({{"a", &a, &ga}, {"b", &b, &gb}}, {0.1});
  EXPECT_EQ(error_kind_of([&] { adam.step(); }), ErrorKind::numeric);
  EXPECT_EQ(a[0], 1.0);
  EXPECT_EQ(adam.steps(), 0u);
}

namespace {

Network<double> small_mlp(std::size_t in, std::size_t hidden, std::size_t classes, double dropout = 0.0) {
  Network<double> net;
  net.add<Dense<double>>("fc1", in, hidden);
  net.add<Relu<double>>("relu1");
  net.add<Dropout<double>>("dr1", dropout);
  net.add<Dense<double>>("fc2", hidden, classes);
  net.add<Softmax<double>>("softmax");
  Rng rng(17);
  net.initialize(rng);
  return net;
}

LabeledData<double> separable_toy(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  LabeledData<double> data;
  data.inputs = Tensor<double>({n, 4});
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(i % 2);
    for (std::size_t k = 0; k < 4; ++k) data.inputs[i * 4 + k] = (labels[i] ? 1.0 : -1.0) + noise(rng);
  }
  data.labels = one_hot<double>(labels, 2);
  return data;
}

}  // namespace

TEST(Training, SeparableToyLossDecreases) {
  auto net = small_mlp(4, 8, 2);
  const auto data = separable_toy(64, 1);
  TrainingConfig config;
  config.epochs = 10;
  config.learning_rate = 1e-2;
  config.batch_size = 16;
  config.mixup = false;
  config.seed = 3;
  const auto result = train(net, data, config);
  ASSERT_EQ(result.epoch_loss.size(), 10u);
  for (std::size_t e = 1; e < 10; ++e) EXPECT_LE(result.epoch_loss[e], result.epoch_loss[e - 1] + 1e-9);
  EXPECT_LT(result.epoch_loss.back(), 0.5 * result.epoch_loss.front());
}

TEST(Training, LargeL2ShrinksWeights) {
  auto net = small_mlp(4, 8, 2);
  auto data = separable_toy(32, 2);
  data.labels.fill(0.5);
  auto norm = [&] {
    double s = 0;
    for (auto& p : net.parameters()) {
      for (double v : p.value->values()) s += v * v;
    }
    return s;
  };
  const double before = norm();
  TrainingConfig config;
  config.epochs = 20;
  config.l2 = 1e3;
  config.learning_rate = 1e-2;
  config.seed = 1;
  double previous = before;
  train(net, data, config, [&](std::size_t, double) {
    EXPECT_LT(norm(), previous);
    previous = norm();
  });
  EXPECT_LT(norm(), 0.5 * before);
}

TEST(Training, SameSeedIsBitwiseReproducible) {
  const auto data = separable_toy(40, 3);
  TrainingConfig config;
  config.epochs = 5;
  config.learning_rate = 1e-3;
  config.batch_size = 8;
  config.seed = 42;
  auto a = small_mlp(4, 8, 2, 0.3);
  auto b = small_mlp(4, 8, 2, 0.3);
  const auto ra = train(a, data, config);
  const auto rb = train(b, data, config);
  EXPECT_EQ(ra.epoch_loss, rb.epoch_loss);
  auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(*pa[i].value, *pb[i].value);
}

TEST(Training, EmptyDatasetIsDataError) {
  auto net = small_mlp(4, 8, 2);
  LabeledData<double> empty;
  empty.inputs = Tensor<double>({0, 4});
  empty.labels = Tensor<double>({0, 2});
  EXPECT_EQ(error_kind_of([&] { train(net, empty, TrainingConfig{}); }), ErrorKind::data);
}

TEST(Training, BatchesCoverEverySampleOnce) {
  Rng rng(1);
  const auto batches = shuffled_batches(10, 4, rng);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[0].size(), 4u);
  EXPECT_EQ(batches[2].size(), 2u);
  std::vector<int> seen(10, 0);
  for (const auto& b : batches) {
    for (auto i : b) ++seen[i];
  }
  EXPECT_EQ(seen, std::vector<int>(10, 1));
  EXPECT_EQ(shuffled_batches(9, 4, rng).size(), 2u);
  EXPECT_EQ(shuffled_batches(1, 4, rng).size(), 1u);
}

TEST(PredictClip, MeanOfPatchSoftmaxes) {
  std::mt19937_64 rng(12);
  auto net = small_mlp(4, 8, 3);
  const auto patches = random_tensor<double>({10, 4}, rng);
  const auto probs = predict_probabilities(net, patches);
  const auto clip = predict_clip(net, patches);
  double sum = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0;
    for (std::size_t k = 0; k < 10; ++k) mean += probs[k * 3 + c];
    EXPECT_NEAR(clip[c], mean / 10.0, 1e-12);
    sum += clip[c];
  }
  EXPECT_NEAR(sum, 1.0, 1e-6);
}

TEST(PredictClip, IdenticalPatchesAndEmpty) {
  auto net = small_mlp(4, 8, 3);
  Tensor<double> one({1, 4}, std::vector<double>{0.1, -0.2, 0.3, 0.5});
  Tensor<double> repeated({5, 4});
  for (std::size_t i = 0; i < 20; ++i) repeated[i] = one[i % 4];
  const auto single = predict_clip(net, one);
  const auto clip = predict_clip(net, repeated);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(clip[c], single[c], 1e-15);
  EXPECT_EQ(error_kind_of([&] { predict_clip(net, Tensor<double>({0, 4})); }), ErrorKind::data);
}
