#ifndef PLFT_SYNTH_GEN_HPP
#define PLFT_SYNTH_GEN_HPP

#include <cstdint>

#include "plft/cp_model.hpp"
#include "plft/tensor_store.hpp"

namespace plft {

struct SynthSpec {
  TensorDims dims;
  std::size_t true_rank = 5;
  double density = 0.03;
  double noise_sigma = 0.0;
  double value_low = 1.0;
  double value_high = 5.0;
  std::uint64_t seed = 0;

  std::size_t observed_count() const;
  void validate() const;
};

struct SynthTensor {
  SparseTensor observed;
  FactorMatrices ground_truth;
};

/// Draws positive ground-truth factors whose elements lie in
/// [cbrt(low / R), cbrt(high / R)], so every noiseless cell lies in
/// [low, high]. Observes floor(density * cells) cells chosen uniformly
/// without replacement and adds N(0, noise_sigma^2) noise to them.
SynthTensor generate(const SynthSpec& spec);

}  // namespace plft

#endif  // PLFT_SYNTH_GEN_HPP
