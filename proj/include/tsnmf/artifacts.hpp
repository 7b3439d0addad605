#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "tsnmf/select.hpp"
#include "tsnmf/sketch.hpp"
#include "tsnmf/sweep.hpp"
#include "tsnmf/tsqr.hpp"

namespace tsnmf::artifacts {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// Small matrices are stored as <stem>.bin in the binary matrix format next to
// a <stem>.json sidecar describing what the matrix is.

void save_factor(const fs::path& stem, const tsqr::TriangularFactor& r,
                 tsqr::NormKind norm_kind = tsqr::NormKind::none);
tsqr::TriangularFactor load_factor(const fs::path& stem);

/// Stored as a 2 x n matrix: row 0 holds l1, row 1 holds l2.
void save_stats(const fs::path& stem, const tsqr::ColumnStats& stats);
tsqr::ColumnStats load_stats(const fs::path& stem);

void save_sketch(const fs::path& stem, const sketch::SketchResult& s);
sketch::SketchResult load_sketch(const fs::path& stem);

json read_json(const fs::path& path);
void write_json(const fs::path& path, const json& value);

json to_json(const select::ExtremeSet& k);
select::ExtremeSet extreme_set_from_json(const json& j);

void write_sweep_csv(const fs::path& path, const nnls::SweepReport& report);
json sweep_to_json(const nnls::SweepReport& report);

std::string hex64(std::uint64_t value);

/// Identifies the input a cache directory was computed from.
struct CacheManifest {
  std::string input;
  std::uint64_t size = 0;
  std::int64_t mtime = 0;
  std::uint64_t content_hash = 0;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::optional<std::size_t> sketch_rows;
  std::uint64_t seed = 0;

  json to_json() const;
  static CacheManifest from_json(const json& j);
  /// Same file by (size, mtime), without reading it.
  bool matches_stat(const fs::path& input_path) const;
};

std::int64_t mtime_of(const fs::path& path);

}  // namespace tsnmf::artifacts
