#ifndef PLFT_EVAL_METRICS_HPP
#define PLFT_EVAL_METRICS_HPP

#include <span>

#include "plft/cp_model.hpp"
#include "plft/tensor_store.hpp"

namespace plft {

struct MetricPair {
  double rmse = 0.0;
  double mae = 0.0;
  std::size_t n = 0;
};

/// RMSE and MAE of the factors' predictions over a held-out entry list.
MetricPair evaluate(const FactorMatrices& factors, std::span<const Entry> holdout);

struct WilcoxonReport {
  double w_plus = 0.0;
  double w_minus = 0.0;
  double p_value = 1.0;
  std::size_t n_effective = 0;
};

/// Exact two-sided Wilcoxon signed-rank test on paired error metrics.
/// Differences are taken as b - a, so W+ collects the ranks of pairs where `a`
/// has the smaller error. Zero differences are dropped and tied magnitudes
/// share their average rank; the null distribution is the full set of 2^n
/// sign assignments over those ranks.
WilcoxonReport wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

/// Central-difference gradient of entry_loss over u_i., s_j. and t_k.
EntryGradients finite_diff_gradient(const FactorMatrices& factors, const Entry& entry,
                                    const LossParams& params, double h);

}  // namespace plft

#endif  // PLFT_EVAL_METRICS_HPP
