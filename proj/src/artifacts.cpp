#include "tsnmf/artifacts.hpp"

#include <cstdio>
#include <fstream>

#include "tsnmf/error.hpp"

namespace tsnmf::artifacts {

namespace {

fs::path bin_path(const fs::path& stem) {
  auto p = stem;
  p += ".bin";
  return p;
}

fs::path json_path(const fs::path& stem) {
  auto p = stem;
  p += ".json";
  return p;
}

void expect_kind(const json& j, const char* kind, const fs::path& stem) {
  if (!j.contains("kind") || j["kind"] != kind) {
    throw DataError(stem.string() + ": sidecar is not a " + kind);
  }
}

}  // namespace

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& value) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot create " + path.string());
  out << value.dump(2) << '\n';
}

void save_factor(const fs::path& stem, const tsqr::TriangularFactor& r,
                 tsqr::NormKind norm_kind) {
  matio::write_matrix(bin_path(stem), r.matrix());
  write_json(json_path(stem), {{"kind", "triangular_factor"},
                               {"n", r.n()},
                               {"norm_kind", tsqr::to_string(norm_kind)}});
}

tsqr::TriangularFactor load_factor(const fs::path& stem) {
  auto meta = read_json(json_path(stem));
  expect_kind(meta, "triangular_factor", stem);
  auto m = matio::read_matrix(bin_path(stem));
  if (m.cols() != meta["n"].get<Eigen::Index>()) {
    throw DataError(stem.string() + ": sidecar dimension disagrees with matrix");
  }
  return tsqr::TriangularFactor(std::move(m));
}

void save_stats(const fs::path& stem, const tsqr::ColumnStats& stats) {
  Matrix m(2, stats.l1.size());
  m.row(0) = stats.l1.transpose();
  m.row(1) = stats.l2.transpose();
  matio::write_matrix(bin_path(stem), m);
  write_json(json_path(stem), {{"kind", "column_stats"},
                               {"n", stats.l1.size()},
                               {"rows", json::array({"l1", "l2"})}});
}

tsqr::ColumnStats load_stats(const fs::path& stem) {
  auto meta = read_json(json_path(stem));
  expect_kind(meta, "column_stats", stem);
  auto m = matio::read_matrix(bin_path(stem));
  if (m.rows() != 2) throw DataError(stem.string() + ": expected 2 rows");
  return {m.row(0).transpose(), m.row(1).transpose()};
}

void save_sketch(const fs::path& stem, const sketch::SketchResult& s) {
  matio::write_matrix(bin_path(stem), s.entries);
  write_json(json_path(stem), {{"kind", "sketch"},
                               {"k", s.k()},
                               {"n", s.n()},
                               {"seed", s.seed},
                               {"scaled", s.scaled}});
}

sketch::SketchResult load_sketch(const fs::path& stem) {
  auto meta = read_json(json_path(stem));
  expect_kind(meta, "sketch", stem);
  sketch::SketchResult s;
  s.entries = matio::read_matrix(bin_path(stem));
  s.seed = meta["seed"].get<std::uint64_t>();
  s.scaled = meta["scaled"].get<bool>();
  if (s.k() != meta["k"].get<Eigen::Index>()) {
    throw DataError(stem.string() + ": sidecar k disagrees with matrix");
  }
  return s;
}

json to_json(const select::ExtremeSet& k) {
  return {{"algorithm", select::to_string(k.algorithm)},
          {"r", k.requested},
          {"indices", k.indices},
          {"shortfall", k.shortfall()}};
}

select::ExtremeSet extreme_set_from_json(const json& j) {
  select::ExtremeSet k;
  k.algorithm = select::parse_algorithm(j.at("algorithm").get<std::string>());
  k.requested = j.at("r").get<std::size_t>();
  k.indices = j.at("indices").get<std::vector<Eigen::Index>>();
  return k;
}

void write_sweep_csv(const fs::path& path, const nnls::SweepReport& report) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot create " + path.string());
  out << "r,algorithm,residual,seconds\n";
  char buf[64];
  for (const auto& c : report.cells) {
    out << c.r << ',' << select::to_string(c.algorithm) << ',';
    if (c.residual) {
      std::snprintf(buf, sizeof buf, "%.17g", *c.residual);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.6f", c.seconds);
    out << ',' << buf << '\n';
  }
}

json sweep_to_json(const nnls::SweepReport& report) {
  json cells = json::array();
  for (const auto& c : report.cells) {
    json cell = {{"r", c.r},
                 {"algorithm", select::to_string(c.algorithm)},
                 {"residual", c.residual ? json(*c.residual) : json(nullptr)},
                 {"indices", c.indices},
                 {"shortfall", c.shortfall},
                 {"seconds", c.seconds}};
    if (!c.error.empty()) cell["error"] = c.error;
    cells.push_back(std::move(cell));
  }
  json selection = json::object();
  for (const auto& [alg, secs] : report.selection_seconds) {
    selection[select::to_string(alg)] = secs;
  }
  return {{"cells", cells}, {"selection_seconds", selection}};
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

std::int64_t mtime_of(const fs::path& path) {
  return static_cast<std::int64_t>(
      fs::last_write_time(path).time_since_epoch().count());
}

json CacheManifest::to_json() const {
  json j = {{"input", input},
            {"size", size},
            {"mtime", mtime},
            {"content_hash", hex64(content_hash)},
            {"rows", rows},
            {"cols", cols},
            {"seed", seed}};
  j["sketch_rows"] = sketch_rows ? json(*sketch_rows) : json(nullptr);
  return j;
}

CacheManifest CacheManifest::from_json(const json& j) {
  CacheManifest m;
  m.input = j.at("input").get<std::string>();
  m.size = j.at("size").get<std::uint64_t>();
  m.mtime = j.at("mtime").get<std::int64_t>();
  m.content_hash = std::stoull(j.at("content_hash").get<std::string>(), nullptr, 16);
  m.rows = j.at("rows").get<std::uint64_t>();
  m.cols = j.at("cols").get<std::uint64_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  if (!j.at("sketch_rows").is_null()) {
    m.sketch_rows = j["sketch_rows"].get<std::size_t>();
  }
  return m;
}

bool CacheManifest::matches_stat(const fs::path& input_path) const {
  std::error_code ec;
  auto sz = fs::file_size(input_path, ec);
  if (ec) return false;
  return sz == size && mtime_of(input_path) == mtime;
}

}  // namespace tsnmf::artifacts
