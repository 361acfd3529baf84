#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fui/data/synthetic.hpp"
#include "fui/models/model.hpp"

using namespace fui;
using namespace fui::models;
using vecnum::ParamVector;
using vecnum::RngStream;

namespace {

ModelSpec softmax(std::size_t d, int k, double l2 = 1e-3) {
  return ModelSpec{ModelKind::kSoftmaxRegression, d, k, 0, l2};
}

ModelSpec mlp(std::size_t d, int k, std::size_t h, double l2 = 1e-3) { return ModelSpec{ModelKind::kMlp, d, k, h, l2}; }

ParamVector random_vector(std::size_t n, std::mt19937_64& eng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = normal(eng);
  return ParamVector(v);
}

LabeledDataset make_data(std::size_t n, std::size_t d, int k, std::mt19937_64& eng) {
  std::normal_distribution<double> normal;
  std::vector<double> f(n * d);
  for (auto& x : f) x = normal(eng);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(eng() % static_cast<std::uint64_t>(k));
  return LabeledDataset(d, k, f, y);
}

}  // namespace

TEST(ModelSpec, ParamDimension) {
  EXPECT_EQ(softmax(3, 4).param_dim(), 16u);
  EXPECT_EQ(mlp(3, 4, 5).param_dim(), 5u * 3 + 4 * 5 + 5 + 4);
  EXPECT_THROW(mlp(3, 4, 0).validate(), ParameterError);
  EXPECT_THROW(softmax(3, 1).validate(), ParameterError);
  EXPECT_THROW(softmax(3, 2, -1.0).validate(), ParameterError);
}

TEST(LabeledDataset, RejectsBadLabelsAndFeatures) {
  EXPECT_THROW(LabeledDataset(1, 2, {0.0}, {2}), ParameterError);
  EXPECT_THROW(LabeledDataset(1, 2, {std::nan("")}, {0}), ParameterError);
  EXPECT_THROW(LabeledDataset(2, 2, {0.0}, {0}), ParameterError);
}

TEST(Loss, ZeroWeightsBalancedBinaryIsLn2) {
  const LabeledDataset data(1, 2, {1.0, -1.0, 0.5, 2.0}, {0, 1, 0, 1});
  EXPECT_NEAR(loss(softmax(1, 2), ParamVector(4), data), std::log(2.0), 1e-12);
}

TEST(Loss, ZeroWeightsTenClassesIsLn10) {
  std::mt19937_64 eng(1);
  const auto data = make_data(50, 3, 10, eng);
  EXPECT_NEAR(loss(softmax(3, 10), ParamVector(40), data), std::log(10.0), 1e-12);
}

TEST(Loss, SaturatedSampleLeavesOnlyRegularizer) {
  // One sample x = 1 with label 1; weight for class 1 is 800, so the logit
  // margin makes the cross-entropy vanish in double precision.
  const auto spec = softmax(1, 2, 0.01);
  const LabeledDataset data(1, 2, {1.0}, {1});
  const ParamVector w{0.0, 800.0, 0.0, 0.0};
  EXPECT_NEAR(loss(spec, w, data), 0.5 * 0.01 * 800.0 * 800.0, 1e-9);
  const ParamVector g = grad(spec, w, data);
  EXPECT_LT(g.distance(w * 0.01), 1e-12);
  EXPECT_DOUBLE_EQ(accuracy(spec, w, data), 1.0);
}

TEST(Loss, DimensionMismatchIsParameterError) {
  const LabeledDataset data(1, 2, {1.0}, {1});
  EXPECT_THROW(loss(softmax(1, 2), ParamVector(3), data), ParameterError);
  EXPECT_THROW(grad(softmax(2, 2), ParamVector(6), data), ParameterError);
}

TEST(Grad, SymmetricDataCancelsWeightBlock) {
  // Each class is symmetric about the origin, so its feature sum is zero.
  const LabeledDataset data(2, 2, {1.0, 2.0, -1.0, -2.0, 2.0, 1.0, -2.0, -1.0}, {0, 0, 1, 1});
  const ParamVector g = grad(softmax(2, 2), ParamVector(6), data);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(g[i], 0.0, 1e-15);
}

TEST(Grad, MatchesCentralDifferences) {
  std::mt19937_64 eng(7);
  int probes = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const bool use_mlp = trial % 2 == 1;
    const int k = 2 + trial % 3;
    const std::size_t d = 1 + static_cast<std::size_t>(trial % 4);
    const ModelSpec spec = use_mlp ? mlp(d, k, 4, 0.01) : softmax(d, k, 0.01);
    const auto data = make_data(20, d, k, eng);
    const ParamVector w = random_vector(spec.param_dim(), eng, 0.7);
    const ParamVector g = grad(spec, w, data);
    for (int dir = 0; dir < 2; ++dir) {
      const ParamVector v = random_vector(spec.param_dim(), eng);
      const double h = 1e-5;
      const double fd = (loss(spec, w + v * h, data) - loss(spec, w - v * h, data)) / (2.0 * h);
      const double an = g.dot(v);
      EXPECT_NEAR(fd, an, 1e-4 * std::max(1.0, std::abs(an))) << "trial " << trial;
      ++probes;
    }
  }
  EXPECT_GE(probes, 100);
}

TEST(Loss, StrongConvexityOfRegularizedSoftmax) {
  std::mt19937_64 eng(3);
  const double l2 = 0.05;
  const auto spec = softmax(3, 3, l2);
  const auto data = make_data(40, 3, 3, eng);
  for (int i = 0; i < 200; ++i) {
    const ParamVector w = random_vector(spec.param_dim(), eng, 2.0);
    const ParamVector w2 = random_vector(spec.param_dim(), eng, 2.0);
    const double lhs = loss(spec, w2, data);
    const double rhs = loss(spec, w, data) + grad(spec, w, data).dot(w2 - w) + 0.5 * l2 * (w2 - w).squared_norm();
    EXPECT_GE(lhs, rhs - 1e-8);
  }
}

TEST(Loss, SummedCrossEntropyMatchesMeanLoss) {
  std::mt19937_64 eng(4);
  const auto spec = mlp(4, 3, 6, 0.02);
  const auto data = make_data(37, 4, 3, eng);
  const ParamVector w = random_vector(spec.param_dim(), eng);
  const double mean = loss(spec, w, data) - 0.5 * spec.l2_reg * w.squared_norm();
  EXPECT_NEAR(summed_cross_entropy(spec, w, data), 37.0 * mean, 1e-9);
}

TEST(LocalSgd, ZeroEpochsReturnsStart) {
  std::mt19937_64 eng(5);
  const auto spec = softmax(2, 2);
  const auto data = make_data(10, 2, 2, eng);
  const ParamVector w0 = random_vector(6, eng);
  EXPECT_EQ(local_sgd(spec, w0, data, SgdOptions{0.1, 5, 0}, RngStream(1)), w0);
}

TEST(LocalSgd, ZeroFeaturesDecayWeightsGeometrically) {
  const double lr = 0.1, l2 = 0.5;
  const auto spec = softmax(1, 2, l2);
  const LabeledDataset data(1, 2, std::vector<double>(10, 0.0), {0, 1, 0, 1, 0, 1, 0, 1, 0, 1});
  const ParamVector w0{1.5, -2.0, 0.0, 0.0};
  // 3 epochs of batches of 4 over 10 rows: 3 steps per epoch.
  const ParamVector w = local_sgd(spec, w0, data, SgdOptions{lr, 4, 3}, RngStream(2));
  const double factor = std::pow(1.0 - lr * l2, 9);
  EXPECT_NEAR(w[0], 1.5 * factor, 1e-12);
  EXPECT_NEAR(w[1], -2.0 * factor, 1e-12);
}

TEST(LocalSgd, DeterministicAndDecreasesLoss) {
  const auto spec = softmax(4, 3);
  const auto data = data::gen_synthetic(3, 4, 600, 0.7, RngStream(10));
  const ParamVector w0(spec.param_dim());
  const SgdOptions opt{0.05, 32, 2};
  const ParamVector a = local_sgd(spec, w0, data, opt, RngStream(3));
  EXPECT_EQ(a, local_sgd(spec, w0, data, opt, RngStream(3)));
  EXPECT_LT(loss(spec, a, data), loss(spec, w0, data));
}

TEST(LocalSgd, BatchLargerThanDataIsClamped) {
  const auto spec = softmax(2, 2);
  const auto data = data::gen_synthetic(2, 2, 10, 0.5, RngStream(10));
  const ParamVector w0(spec.param_dim());
  EXPECT_EQ(local_sgd(spec, w0, data, SgdOptions{0.1, 1000, 1}, RngStream(1)),
            local_sgd(spec, w0, data, SgdOptions{0.1, 10, 1}, RngStream(1)));
}

TEST(LocalSgd, EmptyDataIsError) {
  EXPECT_THROW(local_sgd(softmax(2, 2), ParamVector(6), LabeledDataset(), SgdOptions{}, RngStream(1)),
               ParameterError);
}

TEST(Accuracy, ZeroWeightsPredictClassZero) {
  const LabeledDataset data(1, 2, {1.0, 2.0, 3.0, 4.0, 5.0}, {0, 1, 0, 1, 1});
  EXPECT_DOUBLE_EQ(accuracy(softmax(1, 2), ParamVector(4), data), 0.4);
  EXPECT_THROW(accuracy(softmax(1, 2), ParamVector(4), LabeledDataset()), ParameterError);
}

TEST(Accuracy, SeparableBlobsAfterTraining) {
  for (const auto& spec : {softmax(3, 3), mlp(3, 3, 8)}) {
    const auto data = data::gen_synthetic(3, 3, 600, 0.1, RngStream(4));
    const ParamVector w0 = initial_parameters(spec, RngStream(5));
    const ParamVector w = local_sgd(spec, w0, data, SgdOptions{0.5, 20, 20}, RngStream(6));
    EXPECT_GE(accuracy(spec, w, data), 0.95) << to_string(spec.kind);
  }
}

TEST(Scores, ExampleScoresAgreeWithPredictProba) {
  std::mt19937_64 eng(8);
  const auto spec = mlp(3, 4, 5);
  const auto data = make_data(10, 3, 4, eng);
  const ParamVector w = random_vector(spec.param_dim(), eng);
  const auto scores = example_scores(spec, w, data);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto p = predict_proba(spec, w, data.row(i));
    double total = 0.0;
    for (double v : p) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(scores[i].loss, -std::log(p[static_cast<std::size_t>(data.label(i))]), 1e-12);
    EXPECT_NEAR(scores[i].max_prob, *std::max_element(p.begin(), p.end()), 1e-15);
  }
}

TEST(InitialParameters, SoftmaxZeroMlpSeeded) {
  EXPECT_EQ(initial_parameters(softmax(3, 2), RngStream(1)), ParamVector(8));
  const auto spec = mlp(3, 2, 4);
  EXPECT_EQ(initial_parameters(spec, RngStream(1)), initial_parameters(spec, RngStream(1)));
  EXPECT_GT(initial_parameters(spec, RngStream(1)).norm(), 0.0);
}
