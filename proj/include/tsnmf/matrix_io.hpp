#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

namespace tsnmf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace matio {

// Binary layout, little-endian:
//   offset 0  u16  magic "SN"
//   offset 2  u16  version (1)
//   offset 4  u64  rows
//   offset 12 u32  cols
//   offset 16 f64  payload, row-major, rows * cols values
inline constexpr std::size_t kHeaderBytes = 16;
inline constexpr std::uint16_t kMagic = 0x4e53;  // "SN" on disk
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kDefaultChunkRows = 8192;

struct MatrixHeader {
  std::uint64_t rows = 0;
  std::uint32_t cols = 0;

  std::uint64_t payload_bytes() const;
  std::uint64_t file_bytes() const { return kHeaderBytes + payload_bytes(); }
};

std::array<unsigned char, kHeaderBytes> encode_header(const MatrixHeader& h);
MatrixHeader decode_header(std::span<const unsigned char, kHeaderBytes> bytes);

/// A contiguous block of rows [row_offset, row_offset + data.rows()).
struct RowChunk {
  std::uint64_t row_offset = 0;
  RowMatrix data;

  Eigen::Index rows() const { return data.rows(); }
  Eigen::Index cols() const { return data.cols(); }
};

struct ReadCounters {
  std::uint64_t rows = 0;
  std::uint64_t bytes = 0;   // including header / line terminators
  std::uint64_t chunks = 0;
  std::uint64_t passes = 0;  // completed traversals to end of data
};

/// Single-consumer stream of row chunks over one matrix source.
class ChunkReader {
public:
  virtual ~ChunkReader() = default;

  virtual std::uint32_t cols() const = 0;
  /// Declared row count, when the format carries one.
  virtual std::optional<std::uint64_t> declared_rows() const = 0;
  /// Next chunk, or nullopt once all rows have been produced.
  virtual std::optional<RowChunk> next() = 0;

  const ReadCounters& counters() const { return counters_; }
  /// FNV-1a 64 over every byte consumed so far.
  std::uint64_t content_hash() const { return hash_; }
  const std::filesystem::path& path() const { return path_; }

protected:
  explicit ChunkReader(std::filesystem::path path) : path_(std::move(path)) {}
  void account(const void* bytes, std::size_t count);

  ReadCounters counters_;

private:
  std::filesystem::path path_;
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

class BinaryChunkReader final : public ChunkReader {
public:
  BinaryChunkReader(const std::filesystem::path& path,
                    std::size_t target_chunk_rows = kDefaultChunkRows);

  std::uint32_t cols() const override { return header_.cols; }
  std::optional<std::uint64_t> declared_rows() const override {
    return header_.rows;
  }
  std::optional<RowChunk> next() override;

  const MatrixHeader& header() const { return header_; }

  /// Restrict the stream to rows [begin, end). Used by readers that split a
  /// file across workers. Must be called before the first next().
  void restrict_rows(std::uint64_t begin, std::uint64_t end);

private:
  std::ifstream in_;
  MatrixHeader header_;
  std::size_t chunk_rows_;
  std::uint64_t next_row_ = 0;
  std::uint64_t end_row_ = 0;
};

struct TextOptions {
  /// Field separator; '\0' splits on any run of spaces or tabs.
  char separator = ',';
};

/// Delimited text, one row per line. Blank lines are skipped.
class TextChunkReader final : public ChunkReader {
public:
  TextChunkReader(const std::filesystem::path& path,
                  std::size_t target_chunk_rows = kDefaultChunkRows,
                  TextOptions options = {});

  std::uint32_t cols() const override { return cols_; }
  std::optional<std::uint64_t> declared_rows() const override {
    return std::nullopt;
  }
  std::optional<RowChunk> next() override;

private:
  bool parse_line(const std::string& line, std::vector<double>& out);

  std::ifstream in_;
  std::size_t chunk_rows_;
  TextOptions options_;
  std::uint32_t cols_ = 0;
  std::uint64_t next_row_ = 0;
  std::uint64_t line_no_ = 0;
  std::vector<double> pending_;  // first row, parsed to learn the width
  bool done_ = false;
};

bool is_binary_matrix(const std::filesystem::path& path);

/// Opens a binary matrix, or a text matrix when the file lacks the magic.
std::unique_ptr<ChunkReader> open_reader(
    const std::filesystem::path& path,
    std::size_t target_chunk_rows = kDefaultChunkRows,
    TextOptions text = {});

/// Streams rows into a binary matrix file with a declared row count.
class MatrixWriter {
public:
  MatrixWriter(const std::filesystem::path& path, MatrixHeader header);
  ~MatrixWriter();

  MatrixWriter(const MatrixWriter&) = delete;
  MatrixWriter& operator=(const MatrixWriter&) = delete;

  /// Appends row-major values; size must be a multiple of cols.
  void write_rows(std::span<const double> values);
  template <typename Derived>
  void write_rows(const Eigen::DenseBase<Derived>& block) {
    RowMatrix tmp = block;
    write_rows(std::span<const double>(tmp.data(), tmp.size()));
  }

  /// Flushes and checks that exactly header.rows rows were written.
  void finish();

  std::uint64_t rows_written() const { return rows_written_; }

private:
  std::ofstream out_;
  std::filesystem::path path_;
  MatrixHeader header_;
  std::uint64_t rows_written_ = 0;
  bool finished_ = false;
};

void write_matrix(const std::filesystem::path& path, const Matrix& m);
/// Reads a whole matrix into memory; intended for small artifacts and tests.
Matrix read_matrix(const std::filesystem::path& path,
                   TextOptions text = {});
void write_text(const std::filesystem::path& path, const Matrix& m,
                char separator = ',');

/// Bytes read by every ChunkReader in this process, per canonical path.
std::uint64_t bytes_read_total(const std::filesystem::path& path);
void reset_read_ledger();

}  // namespace matio
}  // namespace tsnmf
