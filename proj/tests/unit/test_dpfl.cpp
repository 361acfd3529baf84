#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "fui/data/partition.hpp"
#include "fui/data/synthetic.hpp"
#include "fui/dpfl/engine.hpp"

using namespace fui;
using namespace fui::dpfl;
using vecnum::ParamVector;
using vecnum::RngStream;

namespace {

DpflConfig small_config() {
  DpflConfig cfg;
  cfg.spec = models::ModelSpec{models::ModelKind::kSoftmaxRegression, 4, 3, 0, 1e-3};
  cfg.eta = 5.0;
  cfg.clip = 2.0;
  cfg.rounds = 4;
  cfg.sgd = models::SgdOptions{0.05, 20, 1};
  return cfg;
}

std::vector<models::LabeledDataset> small_clients(std::size_t n, std::size_t per_client = 60) {
  const auto data = data::gen_synthetic(3, 4, n * per_client, 0.7, RngStream(100));
  return data::split_by_plan(data, data::partition_even(data, n, RngStream(101)));
}

}  // namespace

TEST(Sigma, Uplink) {
  EXPECT_NEAR(uplink_sigma(PrivacyParams{5.0, 1.0, 100, 1, 1, 1}), 0.004, 1e-15);
  EXPECT_NEAR(uplink_sigma(PrivacyParams{4.0, 2.0, 50, 1, 1, 1}), 0.02, 1e-15);
  EXPECT_EQ(uplink_sigma(PrivacyParams{4.0, 0.0, 50, 1, 1, 1}), 0.0);
}

TEST(Sigma, Downlink) {
  EXPECT_EQ(downlink_sigma(PrivacyParams{5.0, 1.0, 100, 3, 1, 10}), 0.0);
  EXPECT_NEAR(downlink_sigma(PrivacyParams{5.0, 1.0, 100, 4, 1, 10}), 0.0024, 1e-15);
  // T = L sqrt(N) exactly.
  EXPECT_EQ(downlink_sigma(PrivacyParams{5.0, 1.0, 100, 6, 2, 9}), 0.0);
  EXPECT_GT(downlink_sigma(PrivacyParams{5.0, 1.0, 100, 7, 2, 9}), 0.0);
}

TEST(Sigma, InvalidParams) {
  EXPECT_THROW(uplink_sigma(PrivacyParams{0.0, 1.0, 100, 1, 1, 1}), ParameterError);
  EXPECT_THROW(downlink_sigma(PrivacyParams{1.0, 1.0, 0, 1, 1, 1}), ParameterError);
}

TEST(Clip, Examples) {
  const ParamVector half{0.3, 0.4};
  EXPECT_EQ(clip(half, 1.0), half);
  const ParamVector c = clip(ParamVector{3.0, 4.0}, 1.0);
  EXPECT_NEAR(c[0], 0.6, 1e-15);
  EXPECT_NEAR(c[1], 0.8, 1e-15);
  EXPECT_EQ(clip(ParamVector(3), 1.0), ParamVector(3));
  EXPECT_THROW(clip(half, 0.0), ParameterError);
}

TEST(Clip, NormBoundOnRandomVectors) {
  std::mt19937_64 eng(1);
  std::normal_distribution<double> normal(0.0, 10.0);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> v(7);
    for (auto& x : v) x = normal(eng);
    const double c = 0.1 + std::abs(normal(eng));
    EXPECT_LE(clip(ParamVector(v), c).norm(), c + 1e-12);
  }
}

TEST(Aggregate, Examples) {
  const std::vector<ParamVector> same{{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}};
  const std::vector<std::size_t> sizes3{1, 5, 9};
  const ParamVector a = aggregate(same, sizes3);
  EXPECT_NEAR(a[0], 1.0, 1e-15);
  EXPECT_NEAR(a[1], 2.0, 1e-15);

  const std::vector<ParamVector> two{{0.0}, {4.0}};
  const std::vector<std::size_t> sizes2{1, 3};
  EXPECT_DOUBLE_EQ(aggregate(two, sizes2)[0], 3.0);

  const std::vector<std::size_t> equal{7, 7};
  EXPECT_DOUBLE_EQ(aggregate(two, equal)[0], 2.0);

  EXPECT_THROW(aggregate(std::vector<ParamVector>{}, std::vector<std::size_t>{}), ParameterError);
}

TEST(Aggregate, PermutationInvariant) {
  std::mt19937_64 eng(2);
  std::normal_distribution<double> normal;
  std::vector<ParamVector> ws;
  std::vector<std::size_t> sizes;
  for (int i = 0; i < 6; ++i) {
    ws.push_back(ParamVector{normal(eng), normal(eng), normal(eng)});
    sizes.push_back(1 + eng() % 50);
  }
  const ParamVector ref = aggregate(ws, sizes);
  std::vector<std::size_t> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(perm.begin(), perm.end(), eng);
    std::vector<ParamVector> pw;
    std::vector<std::size_t> ps;
    for (auto p : perm) {
      pw.push_back(ws[p]);
      ps.push_back(sizes[p]);
    }
    EXPECT_LT(aggregate(pw, ps).distance(ref), 1e-14);
  }
}

TEST(RunDpfl, ZeroRoundsKeepsInitialModel) {
  auto cfg = small_config();
  cfg.rounds = 0;
  const auto hist = run_dpfl(cfg, small_clients(3), RngStream(1));
  EXPECT_EQ(hist.num_rounds(), 0);
  EXPECT_EQ(hist.final_broadcast(), ParamVector(cfg.spec.param_dim()));
}

TEST(RunDpfl, NoiseFreeSingleClientBroadcastsClippedSgd) {
  auto cfg = small_config();
  cfg.rounds = 1;
  cfg.eta = 1e300;  // sigma_U ~ 1e-300, invisible next to O(1) weights
  cfg.clip = 0.5;
  const auto clients = small_clients(1);
  const RngStream rng(9);
  const auto hist = run_dpfl(cfg, clients, rng);
  const ParamVector expected = clip(
      models::local_sgd(cfg.spec, ParamVector(cfg.spec.param_dim()), clients[0], cfg.sgd,
                        rng.child("round", 1).child("client", 0).child("sgd")),
      cfg.clip);
  EXPECT_LT(hist.final_broadcast().distance(expected), 1e-250);
  EXPECT_EQ(hist.sigma_downlink, 0.0);
}

TEST(RunDpfl, SubmissionsRecomputableFromRngPaths) {
  const auto cfg = small_config();
  const auto clients = small_clients(5);
  const RngStream rng(3);
  const auto hist = run_dpfl(cfg, clients, rng);
  ASSERT_EQ(hist.num_rounds(), 4);
  for (int t = 1; t <= 4; ++t) {
    const auto& rec = hist.round(t);
    ASSERT_EQ(rec.submissions.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_LE(rec.clipped[i].norm(), cfg.clip + 1e-12);
      const auto noise = vecnum::gaussian_sample(hist.sigma_uplink, cfg.spec.param_dim(),
                                                 rng.child("round", t).child("client", i).child("uplink"));
      EXPECT_EQ(rec.submissions[i], rec.clipped[i] + noise);
    }
    EXPECT_EQ(rec.global, aggregate(rec.submissions, hist.client_sizes));
  }
}

TEST(RunDpfl, ZeroDownlinkSigmaBroadcastsGlobalBitwise) {
  const auto cfg = small_config();  // T = 4 = sqrt(16)
  const auto hist = run_dpfl(cfg, small_clients(16, 20), RngStream(4));
  ASSERT_EQ(hist.sigma_downlink, 0.0);
  for (int t = 1; t <= 4; ++t) EXPECT_EQ(hist.round(t).broadcast, hist.round(t).global);
}

TEST(RunDpfl, PositiveDownlinkSigmaAddsRecomputableNoise) {
  auto cfg = small_config();
  cfg.rounds = 5;  // 25 > 1 * 4
  const RngStream rng(5);
  const auto hist = run_dpfl(cfg, small_clients(4), rng);
  ASSERT_GT(hist.sigma_downlink, 0.0);
  for (int t = 1; t <= 5; ++t) {
    const auto noise = vecnum::gaussian_sample(hist.sigma_downlink, cfg.spec.param_dim(),
                                               rng.child("round", t).child("downlink"));
    EXPECT_EQ(hist.round(t).broadcast, hist.round(t).global + noise);
  }
}

TEST(RunDpfl, ReplayIsBitwiseAndThreadIndependent) {
  auto cfg = small_config();
  const auto clients = small_clients(6);
  const auto a = run_dpfl(cfg, clients, RngStream(11));
  cfg.threads = 4;
  const auto b = run_dpfl(cfg, clients, RngStream(11));
  for (int t = 1; t <= cfg.rounds; ++t) {
    EXPECT_EQ(a.round(t).global, b.round(t).global);
    EXPECT_EQ(a.round(t).broadcast, b.round(t).broadcast);
    EXPECT_EQ(a.round(t).submissions, b.round(t).submissions);
  }
}

TEST(RunDpfl, PrivacyParamsFromPartition) {
  const auto hist = run_dpfl(small_config(), small_clients(7, 30), RngStream(1));
  EXPECT_EQ(hist.privacy.clients, 7u);
  EXPECT_EQ(hist.privacy.m, *std::min_element(hist.client_sizes.begin(), hist.client_sizes.end()));
  EXPECT_DOUBLE_EQ(hist.sigma_uplink, uplink_sigma(hist.privacy));
}

TEST(RunDpfl, TrainingImprovesTestAccuracy) {
  DpflConfig cfg;
  cfg.spec = models::ModelSpec{models::ModelKind::kSoftmaxRegression, 10, 4, 0, 1e-3};
  cfg.eta = 5.0;
  cfg.clip = 2.0;
  cfg.rounds = 10;
  cfg.sgd = models::SgdOptions{0.001, 100, 10};
  const data::BlobGenerator gen{4, 10, 0.7, 1.0};
  const auto train = gen.sample(20000, RngStream(1).child("train"));
  const auto test = gen.sample(4000, RngStream(1).child("test"));
  const auto plan = data::partition_even(train, 10, RngStream(2));
  const auto hist = run_dpfl(cfg, train, plan, RngStream(3));
  EXPECT_GT(models::accuracy(cfg.spec, hist.final_broadcast(), test),
            models::accuracy(cfg.spec, hist.initial, test) + 0.2);
}

TEST(RunDpfl, ErrorsCarryRoundAndClient) {
  auto cfg = small_config();
  cfg.spec.input_dim = 5;  // clients have 4 features
  try {
    run_dpfl(cfg, small_clients(2), RngStream(1));
    FAIL() << "expected ParameterError";
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("round 1 client 0"), std::string::npos) << e.what();
  }
}
