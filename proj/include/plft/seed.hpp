#ifndef PLFT_SEED_HPP
#define PLFT_SEED_HPP

#include <cstdint>

namespace plft {

// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for stream `stream` of component `index` under base seed `base`.
/// Pure function of its arguments, so adding layers never perturbs earlier ones.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index,
                                    std::uint64_t stream = 0) {
  return mix_seed(mix_seed(mix_seed(base) ^ index) ^ (stream + 0x5851f42d4c957f2dULL));
}

}  // namespace plft

#endif  // PLFT_SEED_HPP
