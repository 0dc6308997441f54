#include "plft/synth_gen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include <fmt/format.h>

#include "plft/error.hpp"
#include "plft/seed.hpp"

namespace plft {

std::size_t SynthSpec::observed_count() const {
  return static_cast<std::size_t>(std::floor(density * static_cast<double>(dims.cell_count()) + 1e-9));
}

void SynthSpec::validate() const {
  dims.validate();
  if (true_rank == 0) throw InvalidArgument("true rank must be at least 1");
  if (!(density > 0.0 && density <= 1.0)) throw InvalidArgument("density must lie in (0, 1]");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw InvalidArgument("noise sigma must be finite and non-negative");
  }
  if (!(value_low >= 0.0 && value_low < value_high) || !std::isfinite(value_high)) {
    throw InvalidArgument(
        fmt::format("value range must satisfy 0 <= low < high, got ({}, {})", value_low, value_high));
  }
  if (observed_count() < 3) {
    throw InvalidArgument(fmt::format("density {} keeps {} cells; at least 3 are required", density,
                                      observed_count()));
  }
}

SynthTensor generate(const SynthSpec& spec) {
  spec.validate();
  const auto& dims = spec.dims;
  const double rank = static_cast<double>(spec.true_rank);

  std::mt19937_64 factor_rng(derive_seed(spec.seed, 0));
  std::uniform_real_distribution<double> element(std::cbrt(spec.value_low / rank),
                                                 std::cbrt(spec.value_high / rank));
  FactorMatrices truth(dims, spec.true_rank);
  for (Matrix* m : {&truth.u, &truth.s, &truth.t}) {
    for (double& x : m->data()) x = element(factor_rng);
  }

  // Floyd's algorithm: uniform subset without replacement.
  const std::uint64_t cells = dims.cell_count();
  const std::uint64_t keep = spec.observed_count();
  std::mt19937_64 mask_rng(derive_seed(spec.seed, 1));
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(keep);
  for (std::uint64_t top = cells - keep; top < cells; ++top) {
    const std::uint64_t c = std::uniform_int_distribution<std::uint64_t>(0, top)(mask_rng);
    if (!chosen.insert(c).second) chosen.insert(top);
  }
  std::vector<std::uint64_t> keys(chosen.begin(), chosen.end());
  std::sort(keys.begin(), keys.end());

  std::mt19937_64 noise_rng(derive_seed(spec.seed, 2));
  std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);
  std::vector<Entry> entries;
  entries.reserve(keys.size());
  for (std::uint64_t key : keys) {
    const auto k = static_cast<Index>(key % dims.k_size);
    const auto j = static_cast<Index>((key / dims.k_size) % dims.j_size);
    const auto i = static_cast<Index>(key / (dims.k_size * dims.j_size));
    double value = predict_unchecked(truth, i, j, k);
    if (spec.noise_sigma > 0.0) value += noise(noise_rng);
    entries.push_back({i, j, k, value, Origin::Known});
  }
  return {SparseTensor::from_entries(dims, std::move(entries)), std::move(truth)};
}

}  // namespace plft
