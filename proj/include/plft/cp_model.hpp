#ifndef PLFT_CP_MODEL_HPP
#define PLFT_CP_MODEL_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "plft/tensor_store.hpp"

namespace plft {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Factor matrices U (|I| x R), S (|J| x R), T (|K| x R). Column r of the three
/// jointly defines the rank-one tensor u_r o s_r o t_r.
struct FactorMatrices {
  Matrix u;
  Matrix s;
  Matrix t;

  FactorMatrices() = default;
  FactorMatrices(const TensorDims& dims, std::size_t rank)
      : u(dims.i_size, rank), s(dims.j_size, rank), t(dims.k_size, rank) {}

  std::size_t rank() const { return u.cols(); }
  TensorDims dims() const { return {u.rows(), s.rows(), t.rows()}; }

  friend bool operator==(const FactorMatrices&, const FactorMatrices&) = default;
};

struct LossParams {
  double lambda = 0.01;
  double alpha = 1.5;

  void validate() const;
  /// Residual weight: 1 for Known entries, alpha for Synthetic ones.
  double weight(Origin origin) const { return origin == Origin::Known ? 1.0 : alpha; }
};

/// Elements drawn independently and uniformly from (0, 0.1].
FactorMatrices init_factors(const TensorDims& dims, std::size_t rank, std::uint64_t seed);

/// Unchecked rank-R prediction; summation runs over r in ascending order.
inline double predict_unchecked(const FactorMatrices& f, Index i, Index j, Index k) {
  const auto ur = f.u.row(i);
  const auto sr = f.s.row(j);
  const auto tr = f.t.row(k);
  double acc = 0.0;
  for (std::size_t r = 0; r < ur.size(); ++r) acc += ur[r] * sr[r] * tr[r];
  return acc;
}

double predict(const FactorMatrices& factors, Index i, Index j, Index k);

/// Dense i x j x k values, cell (i, j, k) at ((i * J) + j) * K + k.
struct DenseTensor {
  TensorDims dims;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return values[(i * dims.j_size + j) * dims.k_size + k];
  }
};

inline constexpr std::size_t kDefaultDenseCap = 1'000'000;

/// Full reconstruction, for small-tensor oracles only.
DenseTensor reconstruct_dense(const FactorMatrices& factors,
                              std::size_t max_cells = kDefaultDenseCap);

/// Squared residual (weighted by origin) plus the entry-coupled regularizer
/// lambda * sum_r (u_ir^2 + s_jr^2 + t_kr^2).
double entry_loss(const FactorMatrices& factors, const Entry& entry, const LossParams& params);

/// Sum of entry losses, with `known` weighted 1 and `synthetic` weighted alpha
/// irrespective of the entries' origin tags.
double loss(const FactorMatrices& factors, std::span<const Entry> known,
            std::span<const Entry> synthetic, const LossParams& params);

/// Loss over a tensor, weighting each entry by its origin.
double loss(const FactorMatrices& factors, const SparseTensor& tensor, const LossParams& params);

struct EntryGradients {
  std::vector<double> u;
  std::vector<double> s;
  std::vector<double> t;
};

/// Analytic gradient of entry_loss with respect to u_i., s_j. and t_k.
EntryGradients entry_gradients(const FactorMatrices& factors, const Entry& entry,
                               const LossParams& params);

void write_factors(std::ostream& out, const FactorMatrices& factors);
FactorMatrices read_factors(std::istream& in, const std::string& source = "<stream>");
void save_factors(const std::filesystem::path& path, const FactorMatrices& factors);
FactorMatrices load_factors(const std::filesystem::path& path);

}  // namespace plft

#endif  // PLFT_CP_MODEL_HPP
