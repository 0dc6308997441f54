#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "plft/adam_trainer.hpp"
#include "plft/error.hpp"

using namespace plft;

TEST(AdamUpdate, ZeroGradientIsNoOp) {
  const TrainConfig cfg;
  auto step = adam_update_element(0.37, 0.0, 0.0, 0.0, 1, cfg);
  EXPECT_EQ(step.theta, 0.37);
  EXPECT_EQ(step.m, 0.0);
  EXPECT_EQ(step.v, 0.0);
}

TEST(AdamUpdate, FirstStepHandValues) {
  const TrainConfig cfg;
  auto step = adam_update_element(1.0, 0.5, 0.0, 0.0, 1, cfg);
  EXPECT_NEAR(step.m, 0.05, 1e-15);
  EXPECT_NEAR(step.v, 0.00025, 1e-18);
  // m_hat = 0.5, v_hat = 0.25.
  EXPECT_NEAR(step.theta, 1.0 - 0.001 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(1.0 - step.theta, 0.001, 1e-10);
}

TEST(AdamUpdate, FirstStepMagnitudeIsEta) {
  TrainConfig cfg;
  cfg.eta = 0.01;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> mag(-6.0, 3.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double grad = (trial % 2 ? 1.0 : -1.0) * std::pow(10.0, mag(rng));
    auto step = adam_update_element(0.0, grad, 0.0, 0.0, 1, cfg);
    EXPECT_NEAR(std::abs(step.theta), cfg.eta, cfg.eta * 1e-2);
    EXPECT_EQ(std::signbit(step.theta), !std::signbit(grad));
  }
}

TEST(AdamUpdate, BiasCorrectionUsesUpdateCount) {
  const TrainConfig cfg;
  auto step = adam_update_element(0.0, 1.0, 0.2, 0.3, 5, cfg);
  const double m = 0.9 * 0.2 + 0.1;
  const double v = 0.999 * 0.3 + 0.001;
  const double expected = -0.001 * (m / (1 - std::pow(0.9, 5))) /
                          (std::sqrt(v / (1 - std::pow(0.999, 5))) + 1e-8);
  EXPECT_NEAR(step.theta, expected, 1e-15);
}

TEST(AdamUpdate, RejectsBadInput) {
  const TrainConfig cfg;
  EXPECT_THROW(adam_update_element(0.0, 1.0, 0.0, 0.0, 0, cfg), InvalidArgument);
  EXPECT_THROW(adam_update_element(0.0, std::nan(""), 0.0, 0.0, 1, cfg), InvalidArgument);
  EXPECT_THROW(adam_update_element(INFINITY, 1.0, 0.0, 0.0, 1, cfg), InvalidArgument);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  auto bad = cfg;
  bad.max_epochs = 0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.beta1 = 1.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.eta = 0.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.pass_order = {FactorMode::U, FactorMode::U, FactorMode::S};
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(TrainConfig, Defaults) {
  const TrainConfig cfg;
  EXPECT_EQ(cfg.beta1, 0.9);
  EXPECT_EQ(cfg.beta2, 0.999);
  EXPECT_EQ(cfg.tau, 1e-8);
  EXPECT_EQ(cfg.alpha, 1.5);
  EXPECT_EQ(cfg.lambda, 0.01);
  EXPECT_EQ(cfg.eta, 0.001);
  EXPECT_EQ(cfg.max_epochs, 1000u);
  EXPECT_EQ(cfg.tol, 1e-5);
}

TEST(TrainLayer, SingleEntryFitsExactly) {
  auto t = SparseTensor::from_entries({1, 1, 1}, {{0, 0, 0, 1.0}});
  TrainConfig cfg;
  cfg.lambda = 0.0;
  cfg.eta = 0.01;
  cfg.tol = 1e-12;
  cfg.seed = 5;
  auto res = train_layer(t, 1, cfg);
  ASSERT_EQ(res.train_rmse_trace.size(), res.epochs_run);
  EXPECT_LE(res.epochs_run, 1000u);
  EXPECT_LT(res.train_rmse_trace.back(), 1e-3);
  EXPECT_LT(res.train_rmse_trace.back(), res.train_rmse_trace.front());
}

TEST(TrainLayer, SingleEpochRun) {
  auto t = SparseTensor::from_entries({2, 2, 1}, {{0, 0, 0, 1.0}, {1, 1, 0, 2.0}});
  TrainConfig cfg;
  cfg.max_epochs = 1;
  auto res = train_layer(t, 2, cfg);
  EXPECT_EQ(res.epochs_run, 1u);
  EXPECT_FALSE(res.converged);
  EXPECT_EQ(res.train_rmse_trace.size(), 1u);
}

TEST(TrainLayer, Deterministic) {
  std::vector<Entry> entries;
  for (Index i = 0; i < 5; ++i) entries.push_back({i, (i * 3) % 5, i % 2, 1.0 + i});
  auto t = SparseTensor::from_entries({5, 5, 2}, entries);
  TrainConfig cfg;
  cfg.seed = 77;
  cfg.max_epochs = 50;
  auto a = train_layer(t, 3, cfg);
  auto b = train_layer(t, 3, cfg);
  EXPECT_EQ(a.factors, b.factors);
  EXPECT_EQ(a.train_rmse_trace, b.train_rmse_trace);
  EXPECT_EQ(a.epochs_run, b.epochs_run);

  cfg.seed = 78;
  EXPECT_NE(train_layer(t, 3, cfg).factors, a.factors);
}

TEST(TrainLayer, ZeroGradientIsFixedPoint) {
  auto t = SparseTensor::from_entries({2, 2, 1}, {{0, 0, 0, 0.0}, {1, 1, 0, 0.0}});
  TrainConfig cfg;
  cfg.lambda = 0.0;
  cfg.max_epochs = 25;
  FactorMatrices zero({2, 2, 1}, 3);
  auto res = train_layer_from(t, zero, cfg);
  EXPECT_EQ(res.factors, zero);
  EXPECT_TRUE(res.converged);
}

TEST(TrainLayer, SinkSeesEveryEpoch) {
  auto t = SparseTensor::from_entries({2, 2, 1}, {{0, 0, 0, 1.0}, {1, 1, 0, 2.0}});
  TrainConfig cfg;
  cfg.max_epochs = 30;
  std::vector<std::pair<std::size_t, double>> seen;
  auto res = train_layer(t, 2, cfg, 1, [&](std::size_t e, double r) { seen.emplace_back(e, r); });
  ASSERT_EQ(seen.size(), res.epochs_run);
  for (std::size_t e = 0; e < seen.size(); ++e) {
    EXPECT_EQ(seen[e].first, e + 1);
    EXPECT_EQ(seen[e].second, res.train_rmse_trace[e]);
  }
}

TEST(TrainLayer, ConvergenceStopsOnSmallRmseChange) {
  auto t = SparseTensor::from_entries({3, 3, 1}, {{0, 0, 0, 1.0}, {1, 1, 0, 2.0}, {2, 0, 0, 3.0}});
  TrainConfig cfg;
  cfg.tol = 1e-3;
  auto res = train_layer(t, 2, cfg);
  ASSERT_TRUE(res.converged);
  const auto& tr = res.train_rmse_trace;
  ASSERT_GE(tr.size(), 2u);
  EXPECT_LT(std::abs(tr[tr.size() - 1] - tr[tr.size() - 2]), cfg.tol);
  for (std::size_t e = 1; e + 1 < tr.size(); ++e) EXPECT_GE(std::abs(tr[e] - tr[e - 1]), cfg.tol);
}

TEST(TrainLayer, LayerIdChangesInitialization) {
  auto t = SparseTensor::from_entries({2, 2, 1}, {{0, 0, 0, 1.0}, {1, 1, 0, 2.0}});
  TrainConfig cfg;
  cfg.max_epochs = 3;
  EXPECT_NE(train_layer(t, 2, cfg, 1).factors, train_layer(t, 2, cfg, 2).factors);
}

TEST(TrainLayer, NonNegativeClamp) {
  std::vector<Entry> entries;
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) entries.push_back({i, j, 0, (i + j) % 2 ? -1.0 : 1.0});
  auto t = SparseTensor::from_entries({4, 4, 1}, entries);
  TrainConfig cfg;
  cfg.eta = 0.05;
  cfg.max_epochs = 200;

  auto free = train_layer(t, 3, cfg);
  bool any_negative = false;
  for (const Matrix* m : {&free.factors.u, &free.factors.s, &free.factors.t})
    for (double x : m->data()) any_negative |= x < 0.0;
  EXPECT_TRUE(any_negative);

  cfg.nonneg = true;
  auto clamped = train_layer(t, 3, cfg);
  for (const Matrix* m : {&clamped.factors.u, &clamped.factors.s, &clamped.factors.t})
    for (double x : m->data()) EXPECT_GE(x, 0.0);
}

TEST(TrainLayer, Errors) {
  TrainConfig cfg;
  EXPECT_THROW(train_layer(SparseTensor({2, 2, 1}), 2, cfg), InvalidArgument);
  auto t = SparseTensor::from_entries({2, 2, 1}, {{0, 0, 0, 1.0}});
  EXPECT_THROW(train_layer(t, 0, cfg), InvalidArgument);
  EXPECT_THROW(train_layer_from(t, FactorMatrices({3, 2, 1}, 2), cfg), InvalidArgument);
}

TEST(MomentState, ShapesTrackFactors) {
  FactorMatrices f({4, 3, 2}, 5);
  MomentState m(f);
  EXPECT_EQ(m.u.m.rows(), 4u);
  EXPECT_EQ(m.s.v.rows(), 3u);
  EXPECT_EQ(m.t.m.cols(), 5u);
  EXPECT_EQ(m[FactorMode::T].steps.size(), 10u);
}
