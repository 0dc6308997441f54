#include "plft/adam_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "plft/error.hpp"
#include "plft/seed.hpp"

namespace plft {

namespace {

struct AdamCoeffs {
  double eta, beta1, beta2, tau;
};

inline AdamStep adam_step(double theta, double grad, double m_prev, double v_prev,
                          std::uint64_t x, const AdamCoeffs& c) {
  const double m = c.beta1 * m_prev + (1.0 - c.beta1) * grad;
  const double v = c.beta2 * v_prev + (1.0 - c.beta2) * grad * grad;
  const double xd = static_cast<double>(x);
  const double m_hat = m / (1.0 - std::pow(c.beta1, xd));
  const double v_hat = v / (1.0 - std::pow(c.beta2, xd));
  return {theta - c.eta * m_hat / (std::sqrt(v_hat) + c.tau), m, v};
}

Matrix& factor(FactorMatrices& f, FactorMode mode) {
  return mode == FactorMode::U ? f.u : mode == FactorMode::S ? f.s : f.t;
}

// Updates the row of `mode` touched by entry `e`, holding the other two fixed.
void update_row(FactorMatrices& f, MomentBuffers& mom, FactorMode mode, const Entry& e,
                const TrainConfig& cfg, const AdamCoeffs& coeffs) {
  const double rho = e.value - predict_unchecked(f, e.i, e.j, e.k);
  const double w = e.origin == Origin::Known ? 1.0 : cfg.alpha;
  const double c = -2.0 * w * rho;
  const double reg = 2.0 * cfg.lambda;

  std::size_t row_id = 0;
  std::span<const double> a, b;
  switch (mode) {
    case FactorMode::U:
      row_id = e.i, a = f.s.row(e.j), b = f.t.row(e.k);
      break;
    case FactorMode::S:
      row_id = e.j, a = f.u.row(e.i), b = f.t.row(e.k);
      break;
    case FactorMode::T:
      row_id = e.k, a = f.u.row(e.i), b = f.s.row(e.j);
      break;
  }
  auto theta = factor(f, mode).row(row_id);
  auto m = mom.m.row(row_id);
  auto v = mom.v.row(row_id);
  const std::size_t base = row_id * theta.size();
  // Each gradient component depends only on its own theta[r] and the fixed
  // rows a, b, so in-place sequential updates equal a simultaneous step.
  for (std::size_t r = 0; r < theta.size(); ++r) {
    const double grad = c * a[r] * b[r] + reg * theta[r];
    const auto step = adam_step(theta[r], grad, m[r], v[r], ++mom.steps[base + r], coeffs);
    theta[r] = cfg.nonneg ? std::max(step.theta, 0.0) : step.theta;
    m[r] = step.m;
    v[r] = step.v;
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("eta must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidArgument("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("beta2 must lie in [0, 1)");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("tau must be positive");
  if (!(tol > 0.0) || !std::isfinite(tol)) throw InvalidArgument("tol must be positive");
  if (max_epochs == 0) throw InvalidArgument("max_epochs must be at least 1");
  loss_params().validate();
  auto order = pass_order;
  std::sort(order.begin(), order.end());
  if (order != std::array{FactorMode::U, FactorMode::S, FactorMode::T}) {
    throw InvalidArgument("pass_order must visit U, S and T exactly once");
  }
}

AdamStep adam_update_element(double theta, double grad, double m_prev, double v_prev,
                             std::uint64_t x, const TrainConfig& cfg) {
  if (x == 0) throw InvalidArgument("Adam update count must be at least 1");
  if (!std::isfinite(theta) || !std::isfinite(grad) || !std::isfinite(m_prev) ||
      !std::isfinite(v_prev)) {
    throw InvalidArgument("Adam update received a non-finite input");
  }
  return adam_step(theta, grad, m_prev, v_prev, x, {cfg.eta, cfg.beta1, cfg.beta2, cfg.tau});
}

double training_rmse(const FactorMatrices& factors, const SparseTensor& tensor) {
  double acc = 0.0;
  for (const auto& e : tensor.entries()) {
    const double rho = e.value - predict_unchecked(factors, e.i, e.j, e.k);
    acc += rho * rho;
  }
  return std::sqrt(acc / static_cast<double>(tensor.size()));
}

LayerResult train_layer(const SparseTensor& tensor, std::size_t rank, const TrainConfig& cfg,
                        std::size_t layer, const EpochSink& sink) {
  if (rank == 0) throw InvalidArgument("rank must be at least 1");
  return train_layer_from(tensor, init_factors(tensor.dims(), rank, derive_seed(cfg.seed, layer, 0)),
                          cfg, layer, sink);
}

LayerResult train_layer_from(const SparseTensor& tensor, FactorMatrices initial,
                             const TrainConfig& cfg, std::size_t layer, const EpochSink& sink) {
  cfg.validate();
  if (tensor.empty()) throw InvalidArgument("cannot train on an empty tensor");
  if (initial.rank() == 0) throw InvalidArgument("rank must be at least 1");
  if (initial.dims() != tensor.dims()) {
    throw InvalidArgument("initial factor shapes do not match tensor dims");
  }

  LayerResult result;
  result.factors = std::move(initial);
  FactorMatrices& f = result.factors;
  MomentState moments(f);
  const AdamCoeffs coeffs{cfg.eta, cfg.beta1, cfg.beta2, cfg.tau};

  const auto entries = tensor.entries();
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, layer, 1));

  double prev_rmse = 0.0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (FactorMode mode : cfg.pass_order) {
      for (std::size_t idx : order) update_row(f, moments[mode], mode, entries[idx], cfg, coeffs);
    }
    const double rmse = training_rmse(f, tensor);
    if (!std::isfinite(rmse)) {
      throw DataError(fmt::format("training diverged at layer {} epoch {}", layer, epoch));
    }
    result.train_rmse_trace.push_back(rmse);
    result.epochs_run = epoch;
    if (sink) sink(epoch, rmse);
    if (epoch > 1 && std::abs(rmse - prev_rmse) < cfg.tol) {
      result.converged = true;
      break;
    }
    prev_rmse = rmse;
  }
  return result;
}

}  // namespace plft
