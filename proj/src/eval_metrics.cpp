#include "plft/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "plft/error.hpp"

namespace plft {

MetricPair evaluate(const FactorMatrices& factors, std::span<const Entry> holdout) {
  if (holdout.empty()) throw InvalidArgument("cannot evaluate on an empty holdout set");
  double sq = 0.0;
  double abs_sum = 0.0;
  for (const auto& e : holdout) {
    const double rho = e.value - predict(factors, e.i, e.j, e.k);
    sq += rho * rho;
    abs_sum += std::abs(rho);
  }
  const auto n = static_cast<double>(holdout.size());
  return {std::sqrt(sq / n), abs_sum / n, holdout.size()};
}

WilcoxonReport wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidArgument(fmt::format("paired lists differ in length ({} vs {})", a.size(), b.size()));
  }
  if (a.empty()) throw InvalidArgument("paired lists are empty");

  std::vector<double> diffs;
  for (std::size_t p = 0; p < a.size(); ++p) {
    const double d = b[p] - a[p];
    if (!std::isfinite(d)) throw InvalidArgument("paired values must be finite");
    if (d != 0.0) diffs.push_back(d);
  }
  const std::size_t n = diffs.size();
  if (n == 0) throw InvalidArgument("all paired differences are zero; the test is undefined");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return std::abs(diffs[x]) < std::abs(diffs[y]); });

  // Doubled average ranks keep tied ranks integral: a tie group spanning
  // 1-based positions lo..hi gets rank (lo + hi) / 2, doubled to lo + hi.
  std::vector<std::uint64_t> rank2(n);
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo;
    while (hi + 1 < n && std::abs(diffs[order[hi + 1]]) == std::abs(diffs[order[lo]])) ++hi;
    for (std::size_t p = lo; p <= hi; ++p) rank2[order[p]] = (lo + 1) + (hi + 1);
    lo = hi + 1;
  }

  std::uint64_t w2_plus = 0;
  std::uint64_t w2_total = 0;
  for (std::size_t p = 0; p < n; ++p) {
    w2_total += rank2[p];
    if (diffs[p] > 0.0) w2_plus += rank2[p];
  }

  // counts[s] = number of sign assignments whose doubled W+ equals s.
  std::vector<double> counts(w2_total + 1, 0.0);
  counts[0] = 1.0;
  std::uint64_t reach = 0;
  for (std::uint64_t r : rank2) {
    reach += r;
    for (std::uint64_t s = reach; s >= r; --s) {
      counts[s] += counts[s - r];
      if (s == r) break;
    }
  }
  double below = 0.0;
  double above = 0.0;
  for (std::uint64_t s = 0; s <= w2_total; ++s) {
    if (s <= w2_plus) below += counts[s];
    if (s >= w2_plus) above += counts[s];
  }
  const double total = std::ldexp(1.0, static_cast<int>(n));

  WilcoxonReport report;
  report.w_plus = static_cast<double>(w2_plus) / 2.0;
  report.w_minus = static_cast<double>(w2_total - w2_plus) / 2.0;
  report.n_effective = n;
  report.p_value = std::min(1.0, 2.0 * std::min(below, above) / total);
  return report;
}

EntryGradients finite_diff_gradient(const FactorMatrices& factors, const Entry& entry,
                                    const LossParams& params, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("step size h must be positive");
  const std::size_t rank = factors.rank();
  FactorMatrices probe = factors;
  EntryGradients g{std::vector<double>(rank), std::vector<double>(rank), std::vector<double>(rank)};

  auto differentiate = [&](Matrix& m, std::size_t row, std::vector<double>& out) {
    for (std::size_t r = 0; r < rank; ++r) {
      const double saved = m(row, r);
      m(row, r) = saved + h;
      const double up = entry_loss(probe, entry, params);
      m(row, r) = saved - h;
      const double down = entry_loss(probe, entry, params);
      m(row, r) = saved;
      out[r] = (up - down) / (2.0 * h);
    }
  };
  // entry_loss validates indices before any row access.
  entry_loss(probe, entry, params);
  differentiate(probe.u, entry.i, g.u);
  differentiate(probe.s, entry.j, g.s);
  differentiate(probe.t, entry.k, g.t);
  return g;
}

}  // namespace plft
