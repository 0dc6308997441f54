#ifndef PLFT_TOOLS_CLI_HPP
#define PLFT_TOOLS_CLI_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "plft/cp_model.hpp"

namespace plft::cli {

inline constexpr const char* kToolVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Dispatches `args` (without the program name) to a subcommand.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

using GradientFn =
    std::function<EntryGradients(const FactorMatrices&, const Entry&, const LossParams&)>;

struct GradcheckReport {
  std::size_t instances = 0;
  double max_rel_error = 0.0;
};

/// Compares `gradient` against central finite differences on random small
/// instances (dims up to 6x6x3, rank up to 4, lambda in {0, 0.01}, alpha in
/// {1, 1.5}, Known and Synthetic entries). Relative error per element is
/// |a - f| / max(|a|, |f|, 1e-6).
GradcheckReport run_gradcheck(std::size_t instances, std::uint64_t seed, double h,
                              const GradientFn& gradient);

inline constexpr double kGradcheckThreshold = 1e-4;

}  // namespace plft::cli

#endif  // PLFT_TOOLS_CLI_HPP
