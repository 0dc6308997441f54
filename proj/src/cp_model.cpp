#include "plft/cp_model.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <random>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "plft/error.hpp"

namespace plft {

namespace {

void check_index(const FactorMatrices& f, Index i, Index j, Index k) {
  if (i >= f.u.rows() || j >= f.s.rows() || k >= f.t.rows()) {
    throw InvalidArgument(fmt::format("index ({}, {}, {}) outside factor dims {}x{}x{}", i, j, k,
                                      f.u.rows(), f.s.rows(), f.t.rows()));
  }
}

double row_sq_norm(std::span<const double> row) {
  double acc = 0.0;
  for (double x : row) acc += x * x;
  return acc;
}

}  // namespace

void LossParams::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("lambda must be finite and non-negative");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("alpha must be finite and non-negative");
  }
}

FactorMatrices init_factors(const TensorDims& dims, std::size_t rank, std::uint64_t seed) {
  dims.validate();
  if (rank == 0) throw InvalidArgument("rank must be at least 1");
  FactorMatrices f(dims, rank);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&] {
    // 0.1 * (1 - U) with U in [0, 1) lands in (0, 0.1].
    double x;
    do {
      x = 0.1 * (1.0 - unit(rng));
    } while (!(x > 0.0 && x <= 0.1));
    return x;
  };
  for (Matrix* m : {&f.u, &f.s, &f.t}) {
    for (double& x : m->data()) x = draw();
  }
  return f;
}

double predict(const FactorMatrices& factors, Index i, Index j, Index k) {
  check_index(factors, i, j, k);
  return predict_unchecked(factors, i, j, k);
}

DenseTensor reconstruct_dense(const FactorMatrices& factors, std::size_t max_cells) {
  const TensorDims dims = factors.dims();
  if (dims.cell_count() > max_cells) {
    throw InvalidArgument(fmt::format("dense reconstruction of {} cells exceeds cap {}",
                                      dims.cell_count(), max_cells));
  }
  DenseTensor out{dims, std::vector<double>(dims.cell_count())};
  std::size_t pos = 0;
  for (Index i = 0; i < dims.i_size; ++i) {
    for (Index j = 0; j < dims.j_size; ++j) {
      for (Index k = 0; k < dims.k_size; ++k) {
        out.values[pos++] = predict_unchecked(factors, i, j, k);
      }
    }
  }
  return out;
}

double entry_loss(const FactorMatrices& factors, const Entry& entry, const LossParams& params) {
  check_index(factors, entry.i, entry.j, entry.k);
  const double rho = entry.value - predict_unchecked(factors, entry.i, entry.j, entry.k);
  const double reg = row_sq_norm(factors.u.row(entry.i)) + row_sq_norm(factors.s.row(entry.j)) +
                     row_sq_norm(factors.t.row(entry.k));
  return params.weight(entry.origin) * rho * rho + params.lambda * reg;
}

double loss(const FactorMatrices& factors, std::span<const Entry> known,
            std::span<const Entry> synthetic, const LossParams& params) {
  double acc = 0.0;
  for (Entry e : known) {
    e.origin = Origin::Known;
    acc += entry_loss(factors, e, params);
  }
  for (Entry e : synthetic) {
    e.origin = Origin::Synthetic;
    acc += entry_loss(factors, e, params);
  }
  return acc;
}

double loss(const FactorMatrices& factors, const SparseTensor& tensor, const LossParams& params) {
  double acc = 0.0;
  for (const auto& e : tensor.entries()) acc += entry_loss(factors, e, params);
  return acc;
}

EntryGradients entry_gradients(const FactorMatrices& factors, const Entry& entry,
                               const LossParams& params) {
  check_index(factors, entry.i, entry.j, entry.k);
  const std::size_t rank = factors.rank();
  const auto u = factors.u.row(entry.i);
  const auto s = factors.s.row(entry.j);
  const auto t = factors.t.row(entry.k);
  const double rho = entry.value - predict_unchecked(factors, entry.i, entry.j, entry.k);
  const double c = -2.0 * params.weight(entry.origin) * rho;
  const double reg = 2.0 * params.lambda;

  EntryGradients g{std::vector<double>(rank), std::vector<double>(rank), std::vector<double>(rank)};
  for (std::size_t r = 0; r < rank; ++r) {
    g.u[r] = c * s[r] * t[r] + reg * u[r];
    g.s[r] = c * u[r] * t[r] + reg * s[r];
    g.t[r] = c * u[r] * s[r] + reg * t[r];
  }
  return g;
}

void write_factors(std::ostream& out, const FactorMatrices& factors) {
  const TensorDims d = factors.dims();
  fmt::print(out, "PLFT-FACTORS v1 {} {} {} {}\n", d.i_size, d.j_size, d.k_size, factors.rank());
  for (const Matrix* m : {&factors.u, &factors.s, &factors.t}) {
    for (std::size_t r = 0; r < m->rows(); ++r) {
      const auto row = m->row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        fmt::print(out, c == 0 ? "{:.17g}" : " {:.17g}", row[c]);
      }
      out << '\n';
    }
  }
}

FactorMatrices read_factors(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": missing factor header");
  std::istringstream header(line);
  std::string magic, version;
  std::size_t i_size = 0, j_size = 0, k_size = 0, rank = 0;
  header >> magic >> version >> i_size >> j_size >> k_size >> rank;
  if (!header || magic != "PLFT-FACTORS" || version != "v1") {
    throw DataError(fmt::format("{}:1: expected 'PLFT-FACTORS v1 I J K R' header", source));
  }
  TensorDims dims{i_size, j_size, k_size};
  try {
    dims.validate();
  } catch (const InvalidArgument& e) {
    throw DataError(fmt::format("{}:1: {}", source, e.what()));
  }
  if (rank == 0) throw DataError(fmt::format("{}:1: rank must be positive", source));

  FactorMatrices f(dims, rank);
  std::size_t line_no = 1;
  for (Matrix* m : {&f.u, &f.s, &f.t}) {
    for (std::size_t r = 0; r < m->rows(); ++r) {
      ++line_no;
      if (!std::getline(in, line)) {
        throw DataError(fmt::format("{}:{}: unexpected end of factor file", source, line_no));
      }
      std::istringstream ls(line);
      auto row = m->row(r);
      for (double& x : row) {
        if (!(ls >> x) || !std::isfinite(x)) {
          throw DataError(fmt::format("{}:{}: expected {} finite reals", source, line_no, rank));
        }
      }
      std::string extra;
      if (ls >> extra) {
        throw DataError(fmt::format("{}:{}: expected {} finite reals", source, line_no, rank));
      }
    }
  }
  return f;
}

void save_factors(const std::filesystem::path& path, const FactorMatrices& factors) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  write_factors(out, factors);
}

FactorMatrices load_factors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  return read_factors(in, path.string());
}

}  // namespace plft
