#include "plft/cascade.hpp"

#include <fmt/format.h>

#include "plft/error.hpp"
#include "plft/sampler.hpp"
#include "plft/seed.hpp"

namespace plft {

void CascadeConfig::validate() const {
  if (n_layers == 0) throw InvalidArgument("n_layers must be at least 1");
  if (rank == 0) throw InvalidArgument("rank must be at least 1");
  train.validate();
}

std::uint64_t layer_train_seed(const CascadeConfig& cfg) { return cfg.seed; }

CascadeResult run_cascade(const CascadeConfig& cfg, const DatasetSplit& split,
                          const CascadeSink& sink) {
  cfg.validate();
  if (split.train.empty()) throw InvalidArgument("training set is empty");

  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = layer_train_seed(cfg);

  KeySet held_out = key_set(split.train.dims(), split.validation);
  for (const auto& e : split.test) held_out.insert(pack_key(split.train.dims(), e));
  const ValueBounds bounds = value_bounds(split.train);

  CascadeResult out;
  out.per_layer.reserve(cfg.n_layers);
  SparseTensor current = split.train;
  for (std::size_t n = 1; n <= cfg.n_layers; ++n) {
    EpochSink epoch_sink;
    if (sink) epoch_sink = [&sink, n](std::size_t epoch, double rmse) { sink(n, epoch, rmse); };

    LayerRecord rec;
    rec.layer = n;
    rec.input_size = current.size();
    if (cfg.warm_start && n > 1) {
      rec.result = train_layer_from(current, out.per_layer.back().result.factors, train_cfg, n,
                                    epoch_sink);
    } else {
      rec.result = train_layer(current, cfg.rank, train_cfg, n, epoch_sink);
    }
    if (!split.validation.empty()) rec.validation = evaluate(rec.result.factors, split.validation);

    if (n < cfg.n_layers) {
      const SamplePlan plan =
          select_targets(current, current.size(), derive_seed(cfg.seed, n, 2), held_out);
      const auto omega = generate_synthetic(rec.result.factors, plan, bounds);
      rec.omega_size = omega.size();
      current = merge_synthetic(current, omega);
    }
    out.per_layer.push_back(std::move(rec));
  }

  out.final_factors = out.per_layer.back().result.factors;
  out.final_input = std::move(current);
  out.best_layer = cfg.n_layers;
  if (cfg.select_best_by_validation && !split.validation.empty()) {
    double best = out.per_layer.front().validation->rmse;
    out.best_layer = 1;
    for (const auto& rec : out.per_layer) {
      if (rec.validation->rmse < best) {
        best = rec.validation->rmse;
        out.best_layer = rec.layer;
      }
    }
  }
  return out;
}

double predict_with(const CascadeResult& result, Index i, Index j, Index k, bool use_best) {
  return predict(use_best ? result.best_factors() : result.final_factors, i, j, k);
}

}  // namespace plft
