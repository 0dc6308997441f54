#ifndef PLFT_TENSOR_STORE_HPP
#define PLFT_TENSOR_STORE_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

namespace plft {

using Index = std::uint32_t;

/// Extents of a third-order tensor: |I| x |J| x |K| (K indexes relations).
struct TensorDims {
  std::size_t i_size = 1;
  std::size_t j_size = 1;
  std::size_t k_size = 1;

  std::size_t cell_count() const { return i_size * j_size * k_size; }
  bool contains(std::size_t i, std::size_t j, std::size_t k) const {
    return i < i_size && j < j_size && k < k_size;
  }
  void validate() const;

  friend bool operator==(const TensorDims&, const TensorDims&) = default;
};

enum class Origin : std::uint8_t { Known, Synthetic };

struct Entry {
  Index i = 0;
  Index j = 0;
  Index k = 0;
  double value = 0.0;
  Origin origin = Origin::Known;

  friend bool operator==(const Entry&, const Entry&) = default;
};

/// Packs (i, j, k) into one ordered 64-bit key; ordering is lexicographic in (i, j, k).
std::uint64_t pack_key(const TensorDims& dims, Index i, Index j, Index k);
inline std::uint64_t pack_key(const TensorDims& dims, const Entry& e) {
  return pack_key(dims, e.i, e.j, e.k);
}

using KeySet = std::unordered_set<std::uint64_t>;
KeySet key_set(const TensorDims& dims, std::span<const Entry> entries);

/// For each (k, i) slice row, the ascending column indices present. Row (k, i)
/// lives at position k * i_size + i.
using RowIndex = std::vector<std::vector<Index>>;
RowIndex build_row_index(const TensorDims& dims, std::span<const Entry> entries);

struct ValueBounds {
  double y_min = 0.0;
  double y_max = 0.0;
};

/// Sparse HDI tensor. Entries are kept sorted by (i, j, k); cells not stored
/// are unknown. Immutable once built: merging produces a new tensor.
class SparseTensor {
 public:
  SparseTensor() : SparseTensor(TensorDims{}) {}
  explicit SparseTensor(TensorDims dims);

  /// Validates bounds, finiteness and key uniqueness; throws DataError.
  static SparseTensor from_entries(TensorDims dims, std::vector<Entry> entries);

  const TensorDims& dims() const { return dims_; }
  std::span<const Entry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t known_count() const;
  std::size_t synthetic_count() const { return size() - known_count(); }

  bool contains(Index i, Index j, Index k) const;
  const RowIndex& row_index() const { return row_index_; }
  std::span<const Index> row(Index k, Index i) const {
    return row_index_[static_cast<std::size_t>(k) * dims_.i_size + i];
  }

  friend bool operator==(const SparseTensor& a, const SparseTensor& b) {
    return a.dims_ == b.dims_ && a.entries_ == b.entries_;
  }

 private:
  TensorDims dims_;
  std::vector<Entry> entries_;
  RowIndex row_index_;
};

/// Parses the COO text format. `source` names the input in error messages.
SparseTensor read_coo(std::istream& in, const TensorDims& dims,
                      const std::string& source = "<stream>");
SparseTensor load_coo(const std::filesystem::path& path, const TensorDims& dims);

/// Writes entries as `i j k value` lines with round-trip precision.
void write_coo(std::ostream& out, std::span<const Entry> entries);
void save_coo(const std::filesystem::path& path, std::span<const Entry> entries);

struct DatasetSplit {
  SparseTensor train;
  std::vector<Entry> validation;
  std::vector<Entry> test;
};

/// Seeded shuffle into train/validation/test. Validation and test receive
/// floor(ratio * n) entries; the remainder goes to train.
DatasetSplit split(const SparseTensor& tensor, std::array<double, 3> ratios,
                   std::uint64_t seed);

/// Ascending column indices of present entries in row i of relation slice k.
std::vector<Index> slice_row(const SparseTensor& tensor, Index k, Index i);

/// Appends synthetic entries, returning the next-layer input tensor.
SparseTensor merge_synthetic(const SparseTensor& tensor, std::span<const Entry> omega);

/// Min/max over Known entries only.
ValueBounds value_bounds(const SparseTensor& tensor);

double density(const SparseTensor& tensor);

}  // namespace plft

#endif  // PLFT_TENSOR_STORE_HPP
