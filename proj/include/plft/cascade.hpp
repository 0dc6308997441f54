#ifndef PLFT_CASCADE_HPP
#define PLFT_CASCADE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "plft/adam_trainer.hpp"
#include "plft/eval_metrics.hpp"
#include "plft/tensor_store.hpp"

namespace plft {

struct CascadeConfig {
  std::size_t n_layers = 10;
  std::size_t rank = 20;
  TrainConfig train;
  // When false, best_layer is always the last layer.
  bool select_best_by_validation = true;
  // Start layer n > 1 from layer n-1's factors instead of a fresh draw.
  bool warm_start = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LayerRecord {
  std::size_t layer = 0;  // 1-based
  LayerResult result;
  std::size_t input_size = 0;  // entries the layer trained on
  std::size_t omega_size = 0;  // synthetic entries generated after training
  std::optional<MetricPair> validation;
};

struct CascadeResult {
  std::vector<LayerRecord> per_layer;
  FactorMatrices final_factors;
  SparseTensor final_input;  // training set plus all merged synthetic entries
  std::size_t best_layer = 0;  // 1-based

  const LayerRecord& layer(std::size_t n) const { return per_layer.at(n - 1); }
  const FactorMatrices& best_factors() const { return layer(best_layer).result.factors; }
};

/// Receives (layer, epoch, training RMSE) for every epoch of every layer.
using CascadeSink = std::function<void(std::size_t layer, std::size_t epoch, double train_rmse)>;

/// Seed of layer n's training stream: train_layer(..., cfg.train with this seed, n)
/// reproduces the cascade's layer n exactly when given the same input tensor.
std::uint64_t layer_train_seed(const CascadeConfig& cfg);

/// Runs the N-layer cascade. Layers 1..N-1 train, then sample as many blank
/// cells as their input currently holds, predict and activate them, and merge
/// them as synthetic entries into the next layer's input. Layer N only trains.
/// Validation and test coordinates are never sampled.
CascadeResult run_cascade(const CascadeConfig& cfg, const DatasetSplit& split,
                          const CascadeSink& sink = {});

double predict_with(const CascadeResult& result, Index i, Index j, Index k, bool use_best);

}  // namespace plft

#endif  // PLFT_CASCADE_HPP
