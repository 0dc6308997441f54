#ifndef PLFT_ADAM_TRAINER_HPP
#define PLFT_ADAM_TRAINER_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "plft/cp_model.hpp"
#include "plft/tensor_store.hpp"

namespace plft {

enum class FactorMode : std::uint8_t { U, S, T };

struct TrainConfig {
  double eta = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double tau = 1e-8;
  double lambda = 0.01;
  double alpha = 1.5;
  std::size_t max_epochs = 1000;
  double tol = 1e-5;
  std::uint64_t seed = 0;
  // Project factor elements onto [0, inf) after every update.
  bool nonneg = false;
  std::array<FactorMode, 3> pass_order = {FactorMode::U, FactorMode::T, FactorMode::S};

  LossParams loss_params() const { return {lambda, alpha}; }
  void validate() const;
};

/// First/second moment estimates for one factor matrix, with a per-element
/// update counter used for bias correction.
struct MomentBuffers {
  Matrix m;
  Matrix v;
  std::vector<std::uint64_t> steps;

  MomentBuffers() = default;
  MomentBuffers(std::size_t rows, std::size_t cols)
      : m(rows, cols), v(rows, cols), steps(rows * cols, 0) {}
};

struct MomentState {
  MomentBuffers u;
  MomentBuffers s;
  MomentBuffers t;

  explicit MomentState(const FactorMatrices& f)
      : u(f.u.rows(), f.u.cols()), s(f.s.rows(), f.s.cols()), t(f.t.rows(), f.t.cols()) {}

  MomentBuffers& operator[](FactorMode mode) {
    return mode == FactorMode::U ? u : mode == FactorMode::S ? s : t;
  }
};

struct AdamStep {
  double theta;
  double m;
  double v;
};

/// One bias-corrected Adam step for a single parameter at update count x >= 1.
AdamStep adam_update_element(double theta, double grad, double m_prev, double v_prev,
                             std::uint64_t x, const TrainConfig& cfg);

struct LayerResult {
  FactorMatrices factors;
  std::size_t epochs_run = 0;
  std::vector<double> train_rmse_trace;
  bool converged = false;
};

/// Receives (epoch, training RMSE) after each epoch; epochs count from 1.
using EpochSink = std::function<void(std::size_t epoch, double train_rmse)>;

/// Trains one cascade layer from fresh factors seeded by (cfg.seed, layer).
/// Each epoch visits all entries in a seeded shuffled order, once per factor
/// matrix in cfg.pass_order, updating only that matrix's elements. Stops at
/// max_epochs or when consecutive training RMSEs differ by less than tol.
LayerResult train_layer(const SparseTensor& tensor, std::size_t rank, const TrainConfig& cfg,
                        std::size_t layer = 1, const EpochSink& sink = {});

/// Same as train_layer, starting from `initial` instead of fresh factors.
LayerResult train_layer_from(const SparseTensor& tensor, FactorMatrices initial,
                             const TrainConfig& cfg, std::size_t layer = 1,
                             const EpochSink& sink = {});

/// Unweighted RMSE of the factors over every entry of the tensor.
double training_rmse(const FactorMatrices& factors, const SparseTensor& tensor);

}  // namespace plft

#endif  // PLFT_ADAM_TRAINER_HPP
