#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "plft/error.hpp"
#include "plft/sampler.hpp"

using namespace plft;

namespace {

using Cell = std::array<Index, 3>;

SparseTensor tensor_of(TensorDims dims, std::initializer_list<Cell> cells) {
  std::vector<Entry> entries;
  for (auto [i, j, k] : cells) entries.push_back({i, j, k, 1.0});
  return SparseTensor::from_entries(dims, entries);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST(SelectTargets, MidpointBetweenKnownPair) {
  auto t = tensor_of({1, 5, 1}, {{0, 0, 0}, {0, 4, 0}});
  auto plan = select_targets(t, 1, 3);
  ASSERT_EQ(plan.fulfilled, 1u);
  EXPECT_EQ(plan.requested, 1u);
  EXPECT_EQ(plan.targets[0], (Cell{0, 2, 0}));
}

TEST(SelectTargets, LeftmostPairsFirstThenRoundRobin) {
  // Row (k=0, i=0): present {0, 3, 9}, gaps 3 and 6 -> midpoints 1, 6.
  // Row (k=0, i=1): present {2, 3, 7}, pair (2,3) has gap 1 -> midpoint 5.
  // Row (k=1, i=0): present {4, 8} -> midpoint 6.
  auto t = tensor_of({2, 10, 2}, {{0, 0, 0}, {0, 3, 0}, {0, 9, 0}, {1, 2, 0}, {1, 3, 0},
                                  {1, 7, 0}, {0, 4, 1}, {0, 8, 1}});
  // Row (k=1, i=1) is empty; it draws a random column, so skip checking it.
  auto plan = select_targets(t, 5, 9);
  ASSERT_EQ(plan.fulfilled, 5u);
  EXPECT_EQ(plan.targets[0], (Cell{0, 1, 0}));
  EXPECT_EQ(plan.targets[1], (Cell{1, 5, 0}));
  EXPECT_EQ(plan.targets[2], (Cell{0, 6, 1}));
  EXPECT_EQ(plan.targets[3][0], 1u);
  EXPECT_EQ(plan.targets[3][2], 1u);
  EXPECT_EQ(plan.targets[4], (Cell{0, 6, 0}));
}

TEST(SelectTargets, FullyKnownTensorYieldsNothing) {
  std::vector<Entry> all;
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j)
      for (Index k = 0; k < 2; ++k) all.push_back({i, j, k, 1.0});
  auto t = SparseTensor::from_entries({3, 3, 2}, all);
  auto plan = select_targets(t, 10, 1);
  EXPECT_EQ(plan.fulfilled, 0u);
  EXPECT_EQ(plan.requested, 10u);
  EXPECT_TRUE(plan.targets.empty());
}

TEST(SelectTargets, EmptyRowRandomIsSeedDeterministic) {
  SparseTensor t({1, 50, 1});
  auto a = select_targets(t, 1, 42);
  auto b = select_targets(t, 1, 42);
  ASSERT_EQ(a.fulfilled, 1u);
  EXPECT_EQ(a.targets, b.targets);

  std::set<Index> columns;
  for (std::uint64_t seed = 0; seed < 40; ++seed) columns.insert(select_targets(t, 1, seed).targets[0][1]);
  EXPECT_GT(columns.size(), 10u);
}

TEST(SelectTargets, ZeroCount) {
  auto t = tensor_of({1, 5, 1}, {{0, 0, 0}, {0, 4, 0}});
  auto plan = select_targets(t, 0, 1);
  EXPECT_EQ(plan.fulfilled, 0u);
  EXPECT_EQ(plan.requested, 0u);
}

TEST(SelectTargets, SkipsExcludedMidpoint) {
  auto t = tensor_of({1, 9, 1}, {{0, 0, 0}, {0, 4, 0}, {0, 8, 0}});
  KeySet excluded{pack_key(t.dims(), 0, 2, 0)};
  auto plan = select_targets(t, 1, 1, excluded);
  ASSERT_EQ(plan.fulfilled, 1u);
  EXPECT_EQ(plan.targets[0], (Cell{0, 6, 0}));
}

TEST(SelectTargets, ShortOnlyWhenBlanksRunOut) {
  auto t = tensor_of({2, 3, 1}, {{0, 0, 0}, {1, 1, 0}});
  KeySet excluded{pack_key(t.dims(), 0, 2, 0)};
  // 6 cells, 2 present, 1 excluded -> 3 eligible blanks.
  auto plan = select_targets(t, 10, 5, excluded);
  EXPECT_EQ(plan.fulfilled, 3u);
}

TEST(SelectTargets, PropertiesOnRandomTensors) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const TensorDims dims{1 + rng() % 7, 1 + rng() % 12, 1 + rng() % 3};
    const std::size_t cells = dims.cell_count();
    std::vector<Entry> entries;
    KeySet excluded;
    for (Index i = 0; i < dims.i_size; ++i)
      for (Index j = 0; j < dims.j_size; ++j)
        for (Index k = 0; k < dims.k_size; ++k) {
          const auto roll = rng() % 10;
          if (roll < 3) entries.push_back({i, j, k, 1.0});
          else if (roll == 3) excluded.insert(pack_key(dims, i, j, k));
        }
    auto t = SparseTensor::from_entries(dims, entries);
    const std::size_t eligible = cells - t.size() - excluded.size();
    const std::size_t count = rng() % (cells + 3);
    auto plan = select_targets(t, count, rng(), excluded);

    std::set<Cell> unique(plan.targets.begin(), plan.targets.end());
    EXPECT_EQ(unique.size(), plan.targets.size());
    EXPECT_EQ(plan.fulfilled, plan.targets.size());
    EXPECT_LE(plan.fulfilled, plan.requested);
    EXPECT_EQ(plan.fulfilled, std::min(count, eligible));
    for (auto [i, j, k] : plan.targets) {
      ASSERT_TRUE(dims.contains(i, j, k));
      EXPECT_FALSE(t.contains(i, j, k));
      EXPECT_FALSE(excluded.contains(pack_key(dims, i, j, k)));
    }
  }
}

TEST(SelectTargets, DoublingCountWithAbundantBlanks) {
  std::vector<Entry> entries;
  for (Index i = 0; i < 30; ++i) entries.push_back({i, (i * 7) % 30, i % 3, 2.0});
  auto t = SparseTensor::from_entries({30, 30, 3}, entries);
  auto plan = select_targets(t, t.size(), 4);
  EXPECT_EQ(plan.fulfilled, t.size());
}

TEST(Activate, Branches) {
  const ValueBounds b{1.0, 5.0};
  EXPECT_EQ(activate(3.0, b), 3.0);
  EXPECT_EQ(activate(0.0, b), 1.5);
  EXPECT_NEAR(activate(20.0, b), 5.0 / (1.0 + std::exp(-20.0)), 1e-15);
  EXPECT_NEAR(activate(20.0, b), 4.99999999, 1e-8);
  EXPECT_NEAR(activate(-10.0, b), 1.0000453978687, 1e-12);
  EXPECT_EQ(activate(1.0, b), 1.0);
  EXPECT_EQ(activate(5.0, b), 5.0);
  // Far below the range the sum rounds onto an endpoint.
  EXPECT_GT(activate(-60.0, {3.0, 5.0}), 3.0);
  EXPECT_LT(activate(40.0, {50.0, 60.0}), 51.0);
}

TEST(Activate, RangeProperties) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int trial = 0; trial < 20000; ++trial) {
    double lo = u(rng), hi = u(rng);
    if (lo > hi) std::swap(lo, hi);
    const ValueBounds b{lo, hi};
    const double y = u(rng);
    const double out = activate(y, b);
    ASSERT_TRUE(std::isfinite(out));
    if (y >= lo && y <= hi) {
      EXPECT_EQ(out, y);
    } else if (y < lo) {
      EXPECT_GT(out, lo);
      EXPECT_LT(out, lo + 1.0);
      // Off from the plain formula by at most one ulp at an endpoint.
      const double ulp = std::max(std::abs(std::nextafter(lo, INFINITY) - lo),
                                  std::abs(std::nextafter(lo + 1.0, INFINITY) - (lo + 1.0)));
      EXPECT_LE(std::abs(out - (lo + sigmoid(y))), ulp);
    } else if (hi > 0.0 && y > std::max(hi, 0.0)) {
      EXPECT_GT(out, hi / 2.0);
      EXPECT_LE(out, hi);
    }
  }
}

TEST(Activate, RejectsNonFinite) {
  EXPECT_THROW(activate(std::nan(""), {1, 5}), InvalidArgument);
  EXPECT_THROW(activate(INFINITY, {1, 5}), InvalidArgument);
  EXPECT_THROW(activate(0.0, {5, 1}), InvalidArgument);
}

TEST(GenerateSynthetic, EmptyPlan) {
  FactorMatrices f({2, 2, 1}, 1);
  EXPECT_TRUE(generate_synthetic(f, {}, {1, 5}).empty());
}

TEST(GenerateSynthetic, IdentityBranchKeepsPrediction) {
  FactorMatrices f({2, 2, 1}, 1);
  f.u(1, 0) = 1.5, f.s(0, 0) = 2.0, f.t(0, 0) = 1.0;
  SamplePlan plan{{{1, 0, 0}}, 1, 1};
  auto omega = generate_synthetic(f, plan, {1, 5});
  ASSERT_EQ(omega.size(), 1u);
  EXPECT_EQ(omega[0].value, 3.0);
  EXPECT_EQ(omega[0].origin, Origin::Synthetic);
}

TEST(GenerateSynthetic, ValuesStayInActivationRange) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const ValueBounds b{1.0, 5.0};
  for (int trial = 0; trial < 100; ++trial) {
    FactorMatrices f({3, 3, 2}, 2);
    for (Matrix* m : {&f.u, &f.s, &f.t})
      for (double& x : m->data()) x = u(rng);
    SamplePlan plan{{{0, 1, 0}, {2, 2, 1}, {1, 0, 1}}, 3, 3};
    auto omega = generate_synthetic(f, plan, b);
    ASSERT_EQ(omega.size(), 3u);
    for (std::size_t p = 0; p < 3; ++p) {
      EXPECT_EQ(omega[p].i, plan.targets[p][0]);
      EXPECT_EQ(omega[p].j, plan.targets[p][1]);
      EXPECT_EQ(omega[p].k, plan.targets[p][2]);
      const double v = omega[p].value;
      EXPECT_TRUE((v > 0.0 && v < b.y_min + 1.0) || (v >= b.y_min && v <= b.y_max)) << v;
    }
  }
  FactorMatrices f({1, 1, 1}, 1);
  SamplePlan outside{{{0, 1, 0}}, 1, 1};
  EXPECT_THROW(generate_synthetic(f, outside, b), InvalidArgument);
}
