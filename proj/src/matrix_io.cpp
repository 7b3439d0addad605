#include "tsnmf/matrix_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <vector>

#include "tsnmf/error.hpp"

namespace fs = std::filesystem;

namespace tsnmf::matio {

static_assert(std::endian::native == std::endian::little,
              "payload is read in place; big-endian hosts are unsupported");

namespace {

template <typename T>
void put_le(unsigned char* out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out[i] = static_cast<unsigned char>(value >> (8 * i));
  }
}

template <typename T>
T get_le(const unsigned char* in) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(in[i]) << (8 * i);
  }
  return value;
}

std::mutex ledger_mutex;
std::map<std::string, std::uint64_t>& ledger() {
  static std::map<std::string, std::uint64_t> bytes;
  return bytes;
}

std::string ledger_key(const fs::path& path) {
  std::error_code ec;
  auto canonical = fs::weakly_canonical(path, ec);
  return ec ? path.string() : canonical.string();
}

void check_finite(const RowChunk& chunk) {
  for (Eigen::Index i = 0; i < chunk.data.rows(); ++i) {
    for (Eigen::Index j = 0; j < chunk.data.cols(); ++j) {
      if (!std::isfinite(chunk.data(i, j))) {
        std::ostringstream msg;
        msg << "non-finite entry at row " << chunk.row_offset + i
            << ", col " << j;
        throw DataError(msg.str());
      }
    }
  }
}

}  // namespace

std::uint64_t MatrixHeader::payload_bytes() const {
  constexpr auto max = std::numeric_limits<std::uint64_t>::max();
  if (cols != 0 && rows > max / cols / sizeof(double)) {
    throw DataError("matrix size overflows a 64-bit byte count");
  }
  return rows * cols * sizeof(double);
}

std::array<unsigned char, kHeaderBytes> encode_header(const MatrixHeader& h) {
  std::array<unsigned char, kHeaderBytes> out{};
  put_le<std::uint16_t>(out.data(), kMagic);
  put_le<std::uint16_t>(out.data() + 2, kVersion);
  put_le<std::uint64_t>(out.data() + 4, h.rows);
  put_le<std::uint32_t>(out.data() + 12, h.cols);
  return out;
}

MatrixHeader decode_header(std::span<const unsigned char, kHeaderBytes> bytes) {
  if (get_le<std::uint16_t>(bytes.data()) != kMagic) {
    throw DataError("malformed header: bad magic");
  }
  auto version = get_le<std::uint16_t>(bytes.data() + 2);
  if (version != kVersion) {
    throw DataError("malformed header: unsupported version " +
                    std::to_string(version));
  }
  MatrixHeader h;
  h.rows = get_le<std::uint64_t>(bytes.data() + 4);
  h.cols = get_le<std::uint32_t>(bytes.data() + 12);
  if (h.cols == 0) throw DataError("malformed header: zero columns");
  return h;
}

void ChunkReader::account(const void* bytes, std::size_t count) {
  auto p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < count; ++i) {
    hash_ ^= p[i];
    hash_ *= 0x100000001b3ULL;
  }
  counters_.bytes += count;
  std::lock_guard lock(ledger_mutex);
  ledger()[ledger_key(path_)] += count;
}

// ---------------------------------------------------------------------------

BinaryChunkReader::BinaryChunkReader(const fs::path& path,
                                     std::size_t target_chunk_rows)
    : ChunkReader(path), chunk_rows_(target_chunk_rows) {
  if (target_chunk_rows == 0) throw UsageError("chunk rows must be >= 1");
  in_.open(path, std::ios::binary);
  if (!in_) throw DataError("cannot open " + path.string());

  std::error_code ec;
  auto size = fs::file_size(path, ec);
  if (ec) throw DataError("cannot stat " + path.string());
  if (size < kHeaderBytes) {
    throw DataError("payload shorter than declared: " + path.string() +
                    " has " + std::to_string(size) +
                    " bytes, smaller than the header");
  }

  std::array<unsigned char, kHeaderBytes> raw{};
  in_.read(reinterpret_cast<char*>(raw.data()), kHeaderBytes);
  header_ = decode_header(raw);
  account(raw.data(), raw.size());

  auto payload = size - kHeaderBytes;
  if (payload < header_.payload_bytes()) {
    throw DataError("payload shorter than declared: header says " +
                    std::to_string(header_.rows) + "x" +
                    std::to_string(header_.cols) + " but file holds " +
                    std::to_string(payload / sizeof(double)) + " values");
  }
  if (payload > header_.payload_bytes()) {
    throw DataError("payload longer than declared");
  }
  end_row_ = header_.rows;
}

void BinaryChunkReader::restrict_rows(std::uint64_t begin, std::uint64_t end) {
  if (counters_.chunks != 0) {
    throw UsageError("restrict_rows after reading started");
  }
  if (begin > end || end > header_.rows) {
    throw UsageError("row range out of bounds");
  }
  next_row_ = begin;
  end_row_ = end;
  in_.seekg(static_cast<std::streamoff>(kHeaderBytes +
                                        begin * header_.cols * sizeof(double)));
}

std::optional<RowChunk> BinaryChunkReader::next() {
  if (next_row_ >= end_row_) return std::nullopt;
  auto rows = std::min<std::uint64_t>(chunk_rows_, end_row_ - next_row_);

  RowChunk chunk;
  chunk.row_offset = next_row_;
  chunk.data.resize(static_cast<Eigen::Index>(rows), header_.cols);
  auto bytes = static_cast<std::streamsize>(rows * header_.cols * sizeof(double));
  in_.read(reinterpret_cast<char*>(chunk.data.data()), bytes);
  if (in_.gcount() != bytes) {
    throw DataError("payload shorter than declared: read failed at row " +
                    std::to_string(next_row_));
  }
  account(chunk.data.data(), static_cast<std::size_t>(bytes));
  check_finite(chunk);

  next_row_ += rows;
  counters_.rows += rows;
  ++counters_.chunks;
  if (next_row_ == end_row_) ++counters_.passes;
  return chunk;
}

// ---------------------------------------------------------------------------

TextChunkReader::TextChunkReader(const fs::path& path,
                                 std::size_t target_chunk_rows,
                                 TextOptions options)
    : ChunkReader(path), chunk_rows_(target_chunk_rows), options_(options) {
  if (target_chunk_rows == 0) throw UsageError("chunk rows must be >= 1");
  in_.open(path);
  if (!in_) throw DataError("cannot open " + path.string());

  std::string line;
  while (std::getline(in_, line)) {
    account(line.data(), line.size() + 1);
    ++line_no_;
    if (parse_line(line, pending_)) break;
  }
  if (pending_.empty()) {
    throw DataError("payload shorter than declared: no rows in " +
                    path.string());
  }
  cols_ = static_cast<std::uint32_t>(pending_.size());
}

bool TextChunkReader::parse_line(const std::string& line,
                                 std::vector<double>& out) {
  out.clear();
  const char* p = line.data();
  const char* end = p + line.size();
  if (end != p && end[-1] == '\r') --end;

  auto is_space = [](char c) { return c == ' ' || c == '\t'; };
  bool whitespace_mode = options_.separator == '\0';
  while (p < end) {
    while (p < end && is_space(*p)) ++p;
    if (p == end) break;
    double value = 0.0;
    auto [next, ec] = std::from_chars(p, end, value);
    if (ec != std::errc()) {
      throw DataError("cannot parse value on line " + std::to_string(line_no_));
    }
    out.push_back(value);
    p = next;
    while (p < end && is_space(*p)) ++p;
    if (p < end && !whitespace_mode) {
      if (*p != options_.separator) {
        throw DataError("unexpected character on line " +
                        std::to_string(line_no_));
      }
      ++p;
    }
  }
  return !out.empty();
}

std::optional<RowChunk> TextChunkReader::next() {
  if (done_) return std::nullopt;

  std::vector<double> values;
  values.reserve(chunk_rows_ * cols_);
  std::size_t rows = 0;
  auto take = [&](const std::vector<double>& row) {
    if (row.size() != cols_) {
      throw DataError("line " + std::to_string(line_no_) + " has " +
                      std::to_string(row.size()) + " values, expected " +
                      std::to_string(cols_));
    }
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  };

  if (!pending_.empty()) {
    take(pending_);
    pending_.clear();
  }
  std::string line;
  std::vector<double> row;
  while (rows < chunk_rows_ && std::getline(in_, line)) {
    account(line.data(), line.size() + 1);
    ++line_no_;
    if (parse_line(line, row)) take(row);
  }
  if (rows < chunk_rows_) {
    done_ = true;
    ++counters_.passes;
  }
  if (rows == 0) return std::nullopt;

  RowChunk chunk;
  chunk.row_offset = next_row_;
  chunk.data = Eigen::Map<RowMatrix>(values.data(),
                                     static_cast<Eigen::Index>(rows), cols_);
  check_finite(chunk);
  next_row_ += rows;
  counters_.rows += rows;
  ++counters_.chunks;
  return chunk;
}

// ---------------------------------------------------------------------------

bool is_binary_matrix(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char magic[2] = {0, 0};
  in.read(reinterpret_cast<char*>(magic), 2);
  return in.gcount() == 2 && get_le<std::uint16_t>(magic) == kMagic;
}

std::unique_ptr<ChunkReader> open_reader(const fs::path& path,
                                         std::size_t target_chunk_rows,
                                         TextOptions text) {
  if (!fs::exists(path)) throw DataError("no such file: " + path.string());
  auto ext = path.extension().string();
  bool texty = ext == ".txt" || ext == ".csv" || ext == ".tsv";
  if (!texty || is_binary_matrix(path)) {
    return std::make_unique<BinaryChunkReader>(path, target_chunk_rows);
  }
  if (ext == ".tsv" && text.separator == ',') text.separator = '\t';
  return std::make_unique<TextChunkReader>(path, target_chunk_rows, text);
}

// ---------------------------------------------------------------------------

MatrixWriter::MatrixWriter(const fs::path& path, MatrixHeader header)
    : path_(path), header_(header) {
  if (header.cols == 0) throw UsageError("matrix must have at least one column");
  (void)header.payload_bytes();
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw DataError("cannot create " + path.string());
  auto raw = encode_header(header);
  out_.write(reinterpret_cast<const char*>(raw.data()), raw.size());
}

MatrixWriter::~MatrixWriter() = default;

void MatrixWriter::write_rows(std::span<const double> values) {
  if (values.size() % header_.cols != 0) {
    throw UsageError("partial row written to " + path_.string());
  }
  auto rows = values.size() / header_.cols;
  if (rows_written_ + rows > header_.rows) {
    throw UsageError("more rows written than declared to " + path_.string());
  }
  out_.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size_bytes()));
  if (!out_) throw DataError("write failed: " + path_.string());
  rows_written_ += rows;
}

void MatrixWriter::finish() {
  if (finished_) return;
  finished_ = true;
  out_.flush();
  if (!out_) throw DataError("write failed: " + path_.string());
  if (rows_written_ != header_.rows) {
    throw UsageError("wrote " + std::to_string(rows_written_) +
                     " rows but declared " + std::to_string(header_.rows));
  }
  out_.close();
}

void write_matrix(const fs::path& path, const Matrix& m) {
  MatrixWriter writer(path, {static_cast<std::uint64_t>(m.rows()),
                             static_cast<std::uint32_t>(m.cols())});
  writer.write_rows(m);
  writer.finish();
}

Matrix read_matrix(const fs::path& path, TextOptions text) {
  auto reader = open_reader(path, kDefaultChunkRows, text);
  std::vector<RowChunk> chunks;
  std::uint64_t rows = 0;
  while (auto chunk = reader->next()) {
    rows += static_cast<std::uint64_t>(chunk->rows());
    chunks.push_back(std::move(*chunk));
  }
  Matrix out(static_cast<Eigen::Index>(rows), reader->cols());
  for (const auto& c : chunks) {
    out.middleRows(static_cast<Eigen::Index>(c.row_offset), c.rows()) = c.data;
  }
  return out;
}

void write_text(const fs::path& path, const Matrix& m, char separator) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot create " + path.string());
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << separator;
      out << m(i, j);
    }
    out << '\n';
  }
}

std::uint64_t bytes_read_total(const fs::path& path) {
  std::lock_guard lock(ledger_mutex);
  auto it = ledger().find(ledger_key(path));
  return it == ledger().end() ? 0 : it->second;
}

void reset_read_ledger() {
  std::lock_guard lock(ledger_mutex);
  ledger().clear();
}

}  // namespace tsnmf::matio
