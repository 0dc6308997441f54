#include "plft/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "plft/error.hpp"

namespace plft {

namespace {

struct RowState {
  std::size_t next_pair = 0;
  std::size_t available = 0;  // eligible blank columns not yet chosen
  std::vector<Index> chosen;  // sorted
};

class TargetSelector {
 public:
  TargetSelector(const SparseTensor& tensor, const KeySet& excluded, std::uint64_t seed)
      : tensor_(tensor), dims_(tensor.dims()), excluded_(excluded), rng_(seed) {
    rows_.resize(dims_.k_size * dims_.i_size);
    std::vector<std::size_t> excluded_blanks(rows_.size(), 0);
    for (std::uint64_t key : excluded_) {
      const auto k = static_cast<Index>(key % dims_.k_size);
      const auto j = static_cast<Index>((key / dims_.k_size) % dims_.j_size);
      const auto i = static_cast<Index>(key / (dims_.k_size * dims_.j_size));
      if (i < dims_.i_size && !tensor_.contains(i, j, k)) ++excluded_blanks[row_id(k, i)];
    }
    for (Index k = 0; k < dims_.k_size; ++k) {
      for (Index i = 0; i < dims_.i_size; ++i) {
        const std::size_t id = row_id(k, i);
        rows_[id].available = dims_.j_size - tensor_.row(k, i).size() - excluded_blanks[id];
      }
    }
  }

  SamplePlan run(std::size_t count) {
    SamplePlan plan;
    plan.requested = count;
    std::vector<std::size_t> alive;
    for (std::size_t id = 0; id < rows_.size(); ++id) {
      if (rows_[id].available > 0) alive.push_back(id);
    }
    while (plan.targets.size() < count && !alive.empty()) {
      std::vector<std::size_t> still_alive;
      still_alive.reserve(alive.size());
      for (std::size_t id : alive) {
        if (plan.targets.size() == count) {
          still_alive.push_back(id);
          continue;
        }
        const auto k = static_cast<Index>(id / dims_.i_size);
        const auto i = static_cast<Index>(id % dims_.i_size);
        plan.targets.push_back({i, visit(id, k, i), k});
        if (rows_[id].available > 0) still_alive.push_back(id);
      }
      alive = std::move(still_alive);
    }
    plan.fulfilled = plan.targets.size();
    return plan;
  }

 private:
  std::size_t row_id(Index k, Index i) const { return static_cast<std::size_t>(k) * dims_.i_size + i; }

  bool is_excluded(Index i, Index j, Index k) const {
    return !excluded_.empty() && excluded_.contains(pack_key(dims_, i, j, k));
  }

  bool eligible(const RowState& row, Index i, Index j, Index k) const {
    return !tensor_.contains(i, j, k) && !is_excluded(i, j, k) &&
           !std::binary_search(row.chosen.begin(), row.chosen.end(), j);
  }

  // Emits one column for row (k, i); requires row.available > 0.
  Index visit(std::size_t id, Index k, Index i) {
    RowState& row = rows_[id];
    const auto present = tensor_.row(k, i);
    if (present.size() >= 2) {
      while (row.next_pair + 1 < present.size()) {
        const Index a = present[row.next_pair];
        const Index b = present[row.next_pair + 1];
        ++row.next_pair;
        if (b - a < 2) continue;
        const Index mid = a + (b - a) / 2;
        if (is_excluded(i, mid, k)) continue;
        return take(row, mid);
      }
    }
    return take(row, random_blank(row, i, k));
  }

  Index random_blank(const RowState& row, Index i, Index k) {
    std::uniform_int_distribution<Index> col(0, static_cast<Index>(dims_.j_size - 1));
    for (int attempt = 0; attempt < 32; ++attempt) {
      const Index j = col(rng_);
      if (eligible(row, i, j, k)) return j;
    }
    // Dense row: draw uniformly from the explicit candidate list.
    std::vector<Index> candidates;
    candidates.reserve(row.available);
    for (Index j = 0; j < dims_.j_size; ++j) {
      if (eligible(row, i, j, k)) candidates.push_back(j);
    }
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    return candidates[pick(rng_)];
  }

  static Index take(RowState& row, Index j) {
    row.chosen.insert(std::upper_bound(row.chosen.begin(), row.chosen.end(), j), j);
    --row.available;
    return j;
  }

  const SparseTensor& tensor_;
  const TensorDims& dims_;
  const KeySet& excluded_;
  std::mt19937_64 rng_;
  std::vector<RowState> rows_;
};

}  // namespace

SamplePlan select_targets(const SparseTensor& tensor, std::size_t count, std::uint64_t seed,
                          const KeySet& excluded) {
  if (count == 0) return {};
  return TargetSelector(tensor, excluded, seed).run(count);
}

double activate(double y_hat, const ValueBounds& bounds) {
  if (!std::isfinite(y_hat) || !std::isfinite(bounds.y_min) || !std::isfinite(bounds.y_max)) {
    throw InvalidArgument("activate received a non-finite input");
  }
  if (bounds.y_min > bounds.y_max) {
    throw InvalidArgument(fmt::format("invalid bounds [{}, {}]", bounds.y_min, bounds.y_max));
  }
  const double sigmoid = 1.0 / (1.0 + std::exp(-y_hat));
  if (y_hat < bounds.y_min) {
    // Keep the result strictly inside (y_min, y_min + 1) when the sum rounds onto an endpoint.
    const double lo = bounds.y_min;
    const double hi = lo + 1.0;
    const double out = lo + sigmoid;
    if (out <= lo) return std::min(std::nextafter(lo, hi), std::nextafter(hi, lo));
    if (out >= hi) return std::max(std::nextafter(hi, lo), std::nextafter(lo, hi));
    return out;
  }
  if (y_hat > bounds.y_max) return bounds.y_max * sigmoid;
  return y_hat;
}

std::vector<Entry> generate_synthetic(const FactorMatrices& factors, const SamplePlan& plan,
                                      const ValueBounds& bounds) {
  std::vector<Entry> omega;
  omega.reserve(plan.targets.size());
  for (const auto& [i, j, k] : plan.targets) {
    omega.push_back({i, j, k, activate(predict(factors, i, j, k), bounds), Origin::Synthetic});
  }
  return omega;
}

}  // namespace plft
