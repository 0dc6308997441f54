#ifndef PLFT_SAMPLER_HPP
#define PLFT_SAMPLER_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "plft/cp_model.hpp"
#include "plft/tensor_store.hpp"

namespace plft {

struct SamplePlan {
  std::vector<std::array<Index, 3>> targets;  // (i, j, k)
  std::size_t requested = 0;
  std::size_t fulfilled = 0;
};

/// Chooses up to `count` blank cells for synthesis.
///
/// Rows (k, i) are visited round-robin, k-major, one target per visit. A row
/// holding at least two present columns yields the floor-midpoint of its next
/// unconsumed adjacent pair with a gap of at least 2; once those run out, or
/// when the row holds at most one present column, a seeded uniformly random
/// blank column is drawn instead. Cells in `excluded` (held-out coordinates)
/// are never chosen. The plan falls short only when no eligible blanks remain.
SamplePlan select_targets(const SparseTensor& tensor, std::size_t count, std::uint64_t seed,
                          const KeySet& excluded = {});

/// Clamps a prediction into the observed value range through a sigmoid:
/// below y_min maps to y_min + sigmoid(y), above y_max to y_max * sigmoid(y),
/// identity in between.
double activate(double y_hat, const ValueBounds& bounds);

/// Predicts and activates every planned target; entries are tagged Synthetic
/// and follow plan order.
std::vector<Entry> generate_synthetic(const FactorMatrices& factors, const SamplePlan& plan,
                                      const ValueBounds& bounds);

}  // namespace plft

#endif  // PLFT_SAMPLER_HPP
