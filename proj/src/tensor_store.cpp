#include "plft/tensor_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "plft/error.hpp"

namespace plft {

void TensorDims::validate() const {
  if (i_size == 0 || j_size == 0 || k_size == 0) {
    throw InvalidArgument(
        fmt::format("tensor dims must be positive, got {}x{}x{}", i_size, j_size, k_size));
  }
  constexpr auto kMaxIndex = std::numeric_limits<Index>::max();
  if (i_size > kMaxIndex || j_size > kMaxIndex || k_size > kMaxIndex) {
    throw InvalidArgument("tensor dims exceed 32-bit index range");
  }
}

std::uint64_t pack_key(const TensorDims& dims, Index i, Index j, Index k) {
  return (static_cast<std::uint64_t>(i) * dims.j_size + j) * dims.k_size + k;
}

KeySet key_set(const TensorDims& dims, std::span<const Entry> entries) {
  KeySet keys;
  keys.reserve(entries.size());
  for (const auto& e : entries) keys.insert(pack_key(dims, e));
  return keys;
}

RowIndex build_row_index(const TensorDims& dims, std::span<const Entry> entries) {
  RowIndex index(dims.k_size * dims.i_size);
  for (const auto& e : entries) {
    index[static_cast<std::size_t>(e.k) * dims.i_size + e.i].push_back(e.j);
  }
  for (auto& row : index) std::sort(row.begin(), row.end());
  return index;
}

SparseTensor::SparseTensor(TensorDims dims) : dims_(dims) {
  dims_.validate();
  row_index_.resize(dims_.k_size * dims_.i_size);
}

SparseTensor SparseTensor::from_entries(TensorDims dims, std::vector<Entry> entries) {
  SparseTensor t(dims);
  for (const auto& e : entries) {
    if (!dims.contains(e.i, e.j, e.k)) {
      throw DataError(fmt::format("entry ({}, {}, {}) outside dims {}x{}x{}", e.i, e.j, e.k,
                                  dims.i_size, dims.j_size, dims.k_size));
    }
    if (!std::isfinite(e.value)) {
      throw DataError(fmt::format("entry ({}, {}, {}) has non-finite value", e.i, e.j, e.k));
    }
  }
  std::sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
    return pack_key(dims, a) < pack_key(dims, b);
  });
  auto dup = std::adjacent_find(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
    return pack_key(dims, a) == pack_key(dims, b);
  });
  if (dup != entries.end()) {
    throw DataError(fmt::format("duplicate entry key ({}, {}, {})", dup->i, dup->j, dup->k));
  }
  t.row_index_ = build_row_index(dims, entries);
  t.entries_ = std::move(entries);
  return t;
}

std::size_t SparseTensor::known_count() const {
  return static_cast<std::size_t>(std::count_if(
      entries_.begin(), entries_.end(), [](const Entry& e) { return e.origin == Origin::Known; }));
}

bool SparseTensor::contains(Index i, Index j, Index k) const {
  if (!dims_.contains(i, j, k)) return false;
  auto r = row(k, i);
  return std::binary_search(r.begin(), r.end(), j);
}

namespace {

template <typename T>
bool parse_token(std::string_view tok, T& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if constexpr (std::is_floating_point_v<T>) {
    // from_chars rejects a leading '+'; accept it for decimal input.
    if (first != last && *first == '+') ++first;
  }
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

SparseTensor read_coo(std::istream& in, const TensorDims& dims, const std::string& source) {
  dims.validate();
  std::vector<Entry> entries;
  KeySet seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::vector<std::string> tokens;
    for (std::string tok; ls >> tok;) tokens.push_back(std::move(tok));
    if (tokens.empty() || tokens.front().front() == '#') continue;
    auto fail = [&](const std::string& what) {
      return DataError(fmt::format("{}:{}: {}", source, line_no, what));
    };
    if (tokens.size() != 4) {
      throw fail(fmt::format("expected 4 fields (i j k value), found {}", tokens.size()));
    }
    std::uint64_t idx[3];
    for (int m = 0; m < 3; ++m) {
      if (!parse_token(tokens[m], idx[m])) {
        throw fail(fmt::format("field {} is not a non-negative integer: '{}'", m + 1, tokens[m]));
      }
    }
    double value = 0.0;
    if (!parse_token(tokens[3], value) || !std::isfinite(value)) {
      throw fail(fmt::format("value is not a finite real: '{}'", tokens[3]));
    }
    const std::size_t sizes[3] = {dims.i_size, dims.j_size, dims.k_size};
    constexpr char names[3] = {'i', 'j', 'k'};
    for (int m = 0; m < 3; ++m) {
      if (idx[m] >= sizes[m]) {
        throw fail(fmt::format("{} index {} out of range [0, {})", names[m], idx[m], sizes[m]));
      }
    }
    Entry e{static_cast<Index>(idx[0]), static_cast<Index>(idx[1]), static_cast<Index>(idx[2]),
            value, Origin::Known};
    if (!seen.insert(pack_key(dims, e)).second) {
      throw fail(fmt::format("duplicate key ({}, {}, {})", e.i, e.j, e.k));
    }
    entries.push_back(e);
  }
  return SparseTensor::from_entries(dims, std::move(entries));
}

SparseTensor load_coo(const std::filesystem::path& path, const TensorDims& dims) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  return read_coo(in, dims, path.string());
}

void write_coo(std::ostream& out, std::span<const Entry> entries) {
  for (const auto& e : entries) {
    fmt::print(out, "{} {} {} {}\n", e.i, e.j, e.k, e.value);
  }
}

void save_coo(const std::filesystem::path& path, std::span<const Entry> entries) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  write_coo(out, entries);
  if (!out) throw DataError(fmt::format("write to '{}' failed", path.string()));
}

DatasetSplit split(const SparseTensor& tensor, std::array<double, 3> ratios, std::uint64_t seed) {
  for (double r : ratios) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument("split ratios must be non-negative");
  }
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InvalidArgument(fmt::format("split ratios must sum to 1, got {}", sum));
  }
  const std::size_t n = tensor.size();
  if (n < 3) throw InvalidArgument(fmt::format("split needs at least 3 entries, got {}", n));

  // Tolerance absorbs representation error such as 0.29 * 100 = 28.999...
  auto part = [n](double r) {
    return static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9));
  };
  const std::size_t n_val = part(ratios[1]);
  const std::size_t n_test = part(ratios[2]);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  auto all = tensor.entries();
  DatasetSplit out;
  out.validation.reserve(n_val);
  out.test.reserve(n_test);
  std::vector<Entry> train;
  train.reserve(n - n_val - n_test);
  for (std::size_t p = 0; p < n; ++p) {
    const Entry& e = all[order[p]];
    if (p < n_val) {
      out.validation.push_back(e);
    } else if (p < n_val + n_test) {
      out.test.push_back(e);
    } else {
      train.push_back(e);
    }
  }
  out.train = SparseTensor::from_entries(tensor.dims(), std::move(train));
  return out;
}

std::vector<Index> slice_row(const SparseTensor& tensor, Index k, Index i) {
  const auto& d = tensor.dims();
  if (k >= d.k_size || i >= d.i_size) {
    throw InvalidArgument(fmt::format("slice row (k={}, i={}) out of range", k, i));
  }
  auto r = tensor.row(k, i);
  return {r.begin(), r.end()};
}

SparseTensor merge_synthetic(const SparseTensor& tensor, std::span<const Entry> omega) {
  if (omega.empty()) return tensor;
  const auto& d = tensor.dims();
  std::vector<Entry> merged(tensor.entries().begin(), tensor.entries().end());
  merged.reserve(merged.size() + omega.size());
  for (const auto& e : omega) {
    if (!d.contains(e.i, e.j, e.k)) {
      throw DataError(fmt::format("synthetic entry ({}, {}, {}) outside dims", e.i, e.j, e.k));
    }
    if (tensor.contains(e.i, e.j, e.k)) {
      throw DataError(
          fmt::format("synthetic entry ({}, {}, {}) collides with an existing entry", e.i, e.j, e.k));
    }
    Entry s = e;
    s.origin = Origin::Synthetic;
    merged.push_back(s);
  }
  // from_entries rejects collisions within omega itself.
  return SparseTensor::from_entries(d, std::move(merged));
}

ValueBounds value_bounds(const SparseTensor& tensor) {
  ValueBounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  bool any = false;
  for (const auto& e : tensor.entries()) {
    if (e.origin != Origin::Known) continue;
    b.y_min = std::min(b.y_min, e.value);
    b.y_max = std::max(b.y_max, e.value);
    any = true;
  }
  if (!any) throw InvalidArgument("value_bounds of a tensor without known entries");
  return b;
}

double density(const SparseTensor& tensor) {
  return static_cast<double>(tensor.size()) / static_cast<double>(tensor.dims().cell_count());
}

}  // namespace plft
