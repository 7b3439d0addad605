#include "tsnmf/synthetic.hpp"

#include <limits>
#include <string>

#include "tsnmf/error.hpp"
#include "tsnmf/random.hpp"

namespace tsnmf::matio {

void SyntheticSpec::validate() const {
  if (n == 0) throw UsageError("n must be >= 1");
  if (r == 0) throw UsageError("r must be >= 1");
  if (r > n) {
    throw UsageError("r = " + std::to_string(r) + " exceeds n = " +
                     std::to_string(n));
  }
  if (m < n) throw UsageError("m must be >= n");
  if (!(noise >= 0.0)) throw UsageError("noise magnitude must be >= 0");
  if (permutation == PermutationKind::swap_tenfold && r > 2 &&
      10ULL * (r - 1) >= n) {
    throw UsageError("tenfold permutation needs n > 10(r-1) = " +
                     std::to_string(10ULL * (r - 1)));
  }
}

std::vector<std::uint32_t> SyntheticSpec::column_sources() const {
  std::vector<std::uint32_t> source(n);
  for (std::uint32_t c = 0; c < n; ++c) source[c] = c;
  if (permutation == PermutationKind::swap_tenfold) {
    for (std::uint32_t i = 2; i < r; ++i) {
      std::swap(source[i], source[10 * i]);
    }
  }
  return source;
}

std::vector<std::uint32_t> SyntheticSpec::extreme_columns() const {
  auto source = column_sources();
  std::vector<std::uint32_t> extremes(r);
  for (std::uint32_t c = 0; c < n; ++c) {
    if (source[c] < r) extremes[source[c]] = c;
  }
  return extremes;
}

Matrix SyntheticSpec::true_coefficients() const {
  Matrix base(r, n);
  base.leftCols(r).setIdentity();
  for (std::uint32_t q = 0; q < n - r; ++q) {
    for (std::uint32_t p = 0; p < r; ++p) {
      base(p, r + q) = rng::uniform(seed, rng::Stream::coefficients, p, q);
    }
  }
  auto source = column_sources();
  Matrix h(r, n);
  for (std::uint32_t c = 0; c < n; ++c) h.col(c) = base.col(source[c]);
  return h;
}

GeneratedMatrix generate_separable(const SyntheticSpec& spec,
                                   const std::filesystem::path& path,
                                   std::size_t chunk_rows) {
  spec.validate();
  if (chunk_rows == 0) throw UsageError("chunk rows must be >= 1");

  // Row-major copy so each row of H is contiguous for the update below.
  RowMatrix h = spec.true_coefficients();
  MatrixHeader header{spec.m, spec.n};
  MatrixWriter writer(path, header);

  RowMatrix block;
  Vector w(spec.r);
  for (std::uint64_t start = 0; start < spec.m; start += chunk_rows) {
    auto rows = std::min<std::uint64_t>(chunk_rows, spec.m - start);
    block.setZero(static_cast<Eigen::Index>(rows), spec.n);
    for (std::uint64_t k = 0; k < rows; ++k) {
      std::uint64_t i = start + k;
      auto x = block.row(static_cast<Eigen::Index>(k));
      // Fixed accumulation order over p keeps entries independent of chunking.
      for (std::uint32_t p = 0; p < spec.r; ++p) {
        x += rng::uniform(spec.seed, rng::Stream::basis, i, p) * h.row(p);
      }
      if (spec.noise > 0.0) {
        for (std::uint32_t c = 0; c < spec.n; ++c) {
          x(c) += spec.noise * rng::uniform(spec.seed, rng::Stream::noise, i, c);
        }
      }
    }
    writer.write_rows(block);
  }
  writer.finish();
  return {header, spec.extreme_columns()};
}

Matrix kronecker_rows(const Matrix& a) {
  const auto ma = a.rows();
  const auto na = a.cols();
  Matrix x(ma * ma, na * na);
  for (Eigen::Index i = 0; i < ma; ++i) {
    for (Eigen::Index j = 0; j < ma; ++j) {
      for (Eigen::Index s = 0; s < na; ++s) {
        for (Eigen::Index t = 0; t < na; ++t) {
          x(i * ma + j, s * na + t) = a(i, s) * a(j, t);
        }
      }
    }
  }
  return x;
}

MatrixHeader expand_kronecker(const std::filesystem::path& input,
                              const std::filesystem::path& output,
                              TextOptions text) {
  Matrix a = read_matrix(input, text);
  const auto ma = static_cast<std::uint64_t>(a.rows());
  const auto na = static_cast<std::uint64_t>(a.cols());

  constexpr auto max_cols = std::numeric_limits<std::uint32_t>::max();
  constexpr auto max_bytes =
      static_cast<std::uint64_t>(std::numeric_limits<std::streamoff>::max());
  if (na > 0 && na > max_cols / na) {
    throw DataError("kronecker output has too many columns");
  }
  if (ma > 0 && ma > std::numeric_limits<std::uint64_t>::max() / ma) {
    throw DataError("kronecker output size overflows the file format");
  }
  MatrixHeader header{ma * ma, static_cast<std::uint32_t>(na * na)};
  std::uint64_t payload = 0;
  try {
    payload = header.payload_bytes();
  } catch (const DataError&) {
    throw DataError("kronecker output size overflows the file format");
  }
  if (payload > max_bytes - kHeaderBytes) {
    throw DataError("kronecker output size overflows the file format");
  }

  MatrixWriter writer(output, header);
  RowMatrix row(1, header.cols);
  for (std::uint64_t i = 0; i < ma; ++i) {
    for (std::uint64_t j = 0; j < ma; ++j) {
      for (std::uint64_t s = 0; s < na; ++s) {
        for (std::uint64_t t = 0; t < na; ++t) {
          row(0, static_cast<Eigen::Index>(s * na + t)) =
              a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) *
              a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(t));
        }
      }
      writer.write_rows(std::span<const double>(row.data(), row.size()));
    }
  }
  writer.finish();
  return header;
}

}  // namespace tsnmf::matio
