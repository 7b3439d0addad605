#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "tsnmf/artifacts.hpp"
#include "tsnmf/error.hpp"
#include "tsnmf/matrix_io.hpp"
#include "tsnmf/stream_pass.hpp"
#include "tsnmf/sweep.hpp"
#include "tsnmf/synthetic.hpp"

namespace tsnmf::cli {

namespace fs = std::filesystem;
using artifacts::json;

namespace {

/// Parses "20", "1..30" or "2,4,8".
std::vector<std::size_t> parse_ranks(const std::string& text) {
  auto number = [&](std::string_view s) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw UsageError("bad rank '" + std::string(s) + "'");
    }
    return v;
  };
  std::vector<std::size_t> out;
  if (auto dots = text.find(".."); dots != std::string::npos) {
    auto lo = number(std::string_view(text).substr(0, dots));
    auto hi = number(std::string_view(text).substr(dots + 2));
    if (lo == 0 || hi < lo) throw UsageError("bad rank range '" + text + "'");
    for (auto r = lo; r <= hi; ++r) out.push_back(r);
  } else {
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) out.push_back(number(part));
  }
  if (out.empty()) throw UsageError("empty rank list");
  for (auto r : out) {
    if (r == 0) throw UsageError("rank must be >= 1");
  }
  return out;
}

std::vector<select::Algorithm> parse_algorithms(const std::string& text) {
  std::vector<select::Algorithm> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    auto a = select::parse_algorithm(part);
    if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
  }
  if (out.empty()) throw UsageError("no algorithm given");
  return out;
}

/// Where a failure happened; reported in the error JSON.
struct Stage {
  std::string name = "args";
};

/// Flags shared by factorize and sweep.
struct RunConfig {
  std::string input;
  std::size_t chunk_rows = matio::kDefaultChunkRows;
  std::string algorithms = "spa";
  std::string ranks = "1";
  std::string reduction = "svd";
  std::string norm = "l1";
  std::optional<std::size_t> sketch_rows;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string order = "balanced";
  std::string out_dir = "out";
  std::string separator = ",";
  bool verbose = false;

  std::vector<select::Algorithm> algs;
  std::vector<std::size_t> rs;
  bool sketch_explicit = false;
  tsqr::NormKind spa_norm = tsqr::NormKind::l1;
  nnls::Reduction red = nnls::Reduction::svd;

  void add_flags(CLI::App& app) {
    app.add_option("-i,--input", input, "matrix file (binary or delimited text)")
        ->required();
    app.add_option("--chunk-rows", chunk_rows, "rows per streamed chunk")
        ->check(CLI::PositiveNumber);
    app.add_option("--alg", algorithms, "comma list of spa, xray, gp");
    app.add_option("--r", ranks, "rank, list (2,4) or range (1..30)");
    app.add_option("--reduction", reduction, "qr or svd");
    app.add_option("--norm", norm, "column normalization for spa: l1 or none");
    app.add_option("--sketch-k", sketch_rows, "Gaussian sketch rows");
    app.add_option("--seed", seed, "sketch seed");
    app.add_option("--threads", threads, "worker threads")
        ->check(CLI::PositiveNumber);
    app.add_option("--order", order, "combine order: balanced or first-come");
    app.add_option("-o,--out", out_dir, "output directory");
    app.add_option("--sep", separator, "text field separator ('ws' = blanks)");
    app.add_flag("-v,--verbose", verbose, "print the pass ledger");
  }

  void validate() {
    sketch_explicit = sketch_rows.has_value();
    algs = parse_algorithms(algorithms);
    rs = parse_ranks(ranks);
    red = nnls::parse_reduction(reduction);
    spa_norm = tsqr::parse_norm_kind(norm);
    if (spa_norm == tsqr::NormKind::l2) {
      throw UsageError("--norm must be l1 or none");
    }
    if (order != "balanced" && order != "first-come") {
      throw UsageError("--order must be balanced or first-come");
    }
    bool gp = std::find(algs.begin(), algs.end(), select::Algorithm::gp) !=
              algs.end();
    if (gp && spa_norm == tsqr::NormKind::none) {
      throw UsageError("gp requires l1 normalization (drop --norm none)");
    }
    if (gp && sketch_rows && *sketch_rows == 0) {
      throw UsageError("gp requires --sketch-k >= 1");
    }
    if (gp && !sketch_rows) {
      sketch_rows = sketch::default_sketch_rows(max_rank());
    }
  }

  std::size_t max_rank() const { return *std::max_element(rs.begin(), rs.end()); }

  matio::TextOptions text() const {
    if (separator == "ws") return {'\0'};
    if (separator == "\\t" || separator == "tab") return {'\t'};
    if (separator.size() != 1) throw UsageError("--sep must be one character");
    return {separator[0]};
  }

  tsqr::PassOptions pass_options() const {
    tsqr::PassOptions o;
    o.sketch_rows = sketch_rows;
    o.seed = seed;
    o.threads = threads;
    o.order = order == "first-come" ? tsqr::CombineOrder::first_come
                                    : tsqr::CombineOrder::balanced_tree;
    return o;
  }
};

struct PassArtifacts {
  tsqr::TriangularFactor r;
  tsqr::ColumnStats stats;
  std::optional<sketch::SketchResult> sketch;
  artifacts::CacheManifest manifest;
  std::optional<tsqr::PassLedger> ledger;  // empty when loaded from cache
  std::uint64_t input_bytes_read = 0;
};

fs::path cache_dir(const fs::path& out, std::uint64_t hash) {
  return out / "cache" / artifacts::hex64(hash);
}

void print_ledger(std::ostream& out, const tsqr::PassLedger& l,
                  std::uint64_t file_bytes) {
  out << "pass ledger\n"
      << "  rows read        " << l.rows << '\n'
      << "  chunks           " << l.chunks << '\n'
      << "  bytes read       " << l.bytes_read << " of " << file_bytes << '\n'
      << "  combine depth    " << l.tree_depth << '\n'
      << "  sketch blocks    " << l.sketch_blocks << '\n'
      << "  reduced bytes    " << l.reduced_bytes << '\n';
}

/// One streaming pass over cfg.input, then persists the reduced data.
PassArtifacts stream_and_cache(const RunConfig& cfg, Stage& stage) {
  stage.name = "read";
  auto reader = matio::open_reader(cfg.input, cfg.chunk_rows, cfg.text());
  const auto n = static_cast<std::size_t>(reader->cols());
  if (cfg.max_rank() > n) {
    throw UsageError("max r = " + std::to_string(cfg.max_rank()) +
                     " exceeds n = " + std::to_string(n));
  }
  stage.name = "pass";
  auto result = tsqr::stream_pass(*reader, cfg.pass_options());

  PassArtifacts a;
  a.manifest.input = fs::absolute(cfg.input).string();
  a.manifest.size = fs::file_size(cfg.input);
  a.manifest.mtime = artifacts::mtime_of(cfg.input);
  a.manifest.content_hash = result.ledger.content_hash;
  a.manifest.rows = result.ledger.rows;
  a.manifest.cols = n;
  a.manifest.sketch_rows = cfg.sketch_rows;
  a.manifest.seed = cfg.seed;
  a.input_bytes_read = result.ledger.bytes_read;

  stage.name = "write";
  auto dir = cache_dir(cfg.out_dir, a.manifest.content_hash);
  fs::create_directories(dir);
  artifacts::save_factor(dir / "R", result.r);
  artifacts::save_stats(dir / "stats", result.stats);
  if (result.sketch) artifacts::save_sketch(dir / "sketch", *result.sketch);
  artifacts::write_json(fs::path(cfg.out_dir) / "manifest.json",
                        a.manifest.to_json());

  a.r = std::move(result.r);
  a.stats = std::move(result.stats);
  a.sketch = std::move(result.sketch);
  a.ledger = result.ledger;
  return a;
}

/// Reuses cached reduced data when the manifest matches the input and holds
/// the needed sketch; otherwise streams once.
PassArtifacts load_or_stream(RunConfig& cfg, Stage& stage) {
  auto manifest_path = fs::path(cfg.out_dir) / "manifest.json";
  if (fs::exists(manifest_path)) {
    stage.name = "cache";
    auto m = artifacts::CacheManifest::from_json(artifacts::read_json(manifest_path));
    bool same_input = m.input == fs::absolute(cfg.input).string() &&
                      m.matches_stat(cfg.input);
    // Without an explicit --sketch-k any cached sketch with the same seed will do.
    bool sketch_ok = !cfg.sketch_rows ||
                     (m.seed == cfg.seed && m.sketch_rows &&
                      (!cfg.sketch_explicit || m.sketch_rows == cfg.sketch_rows));
    auto dir = cache_dir(cfg.out_dir, m.content_hash);
    if (same_input && sketch_ok && fs::exists(dir / "R.bin")) {
      if (cfg.max_rank() > m.cols) {
        throw UsageError("max r = " + std::to_string(cfg.max_rank()) +
                         " exceeds n = " + std::to_string(m.cols));
      }
      if (cfg.sketch_rows) cfg.sketch_rows = m.sketch_rows;
      PassArtifacts a;
      a.manifest = m;
      a.r = artifacts::load_factor(dir / "R");
      a.stats = artifacts::load_stats(dir / "stats");
      if (cfg.sketch_rows) a.sketch = artifacts::load_sketch(dir / "sketch");
      return a;
    }
  }
  return stream_and_cache(cfg, stage);
}

json run_record(const PassArtifacts& a) {
  json j = {{"input", a.manifest.input},
            {"input_bytes", a.manifest.size},
            {"input_bytes_read", a.input_bytes_read},
            {"passes", a.ledger ? 1 : 0},
            {"content_hash", artifacts::hex64(a.manifest.content_hash)},
            {"rows", a.manifest.rows},
            {"cols", a.manifest.cols}};
  if (a.ledger) {
    j["chunks"] = a.ledger->chunks;
    j["combine_depth"] = a.ledger->tree_depth;
    j["sketch_blocks"] = a.ledger->sketch_blocks;
    j["reduced_bytes"] = a.ledger->reduced_bytes;
  }
  return j;
}

int cmd_factorize(RunConfig& cfg, std::ostream& out, Stage& stage) {
  stage.name = "args";
  cfg.validate();
  auto a = stream_and_cache(cfg, stage);
  if (cfg.verbose && a.ledger) print_ledger(out, *a.ledger, a.manifest.size);

  nnls::ReducedProblem problem(a.r, a.stats, a.sketch, cfg.red, cfg.spa_norm);
  const fs::path dir = cfg.out_dir;
  json results = json::array();
  for (auto alg : cfg.algs) {
    for (auto r : cfg.rs) {
      stage.name = "select";
      auto k = problem.select(alg, r);
      stage.name = "nnls";
      auto f = nnls::evaluate(problem, std::move(k));
      stage.name = "write";
      auto stem = dir / (std::string(select::to_string(alg)) + "_r" + std::to_string(r));
      artifacts::write_json(stem.string() + ".extremes.json",
                            artifacts::to_json(f.extremes));
      matio::write_matrix(stem.string() + ".H.bin", f.h.h);
      auto entry = artifacts::to_json(f.extremes);
      entry["residual"] = f.residual;
      results.push_back(entry);
      out << select::to_string(alg) << " r=" << r
          << " residual=" << f.residual << " K=";
      for (std::size_t i = 0; i < f.extremes.indices.size(); ++i) {
        out << (i ? "," : "") << f.extremes.indices[i];
      }
      out << '\n';
    }
  }
  artifacts::write_json(dir / "factorization.json",
                        {{"reduction", nnls::to_string(cfg.red)},
                         {"norm", tsqr::to_string(cfg.spa_norm)},
                         {"sketch_rows", cfg.sketch_rows ? json(*cfg.sketch_rows)
                                                         : json(nullptr)},
                         {"seed", cfg.seed},
                         {"results", results}});
  artifacts::write_json(dir / "run.json", run_record(a));
  return ok;
}

int cmd_sweep(RunConfig& cfg, std::ostream& out, Stage& stage) {
  stage.name = "args";
  cfg.validate();
  auto a = load_or_stream(cfg, stage);
  if (cfg.verbose) {
    if (a.ledger) {
      print_ledger(out, *a.ledger, a.manifest.size);
    } else {
      out << "reduced data loaded from cache; input not read\n";
    }
  }
  stage.name = "sweep";
  nnls::ReducedProblem problem(a.r, a.stats, a.sketch, cfg.red, cfg.spa_norm);
  auto report = nnls::sweep(problem, cfg.algs, cfg.rs);

  stage.name = "write";
  const fs::path dir = cfg.out_dir;
  artifacts::write_sweep_csv(dir / "sweep.csv", report);
  artifacts::write_json(dir / "sweep.json", artifacts::sweep_to_json(report));
  artifacts::write_json(dir / "sweep_run.json", run_record(a));
  for (const auto& c : report.cells) {
    out << select::to_string(c.algorithm) << " r=" << c.r << " residual=";
    if (c.residual) {
      out << *c.residual;
    } else {
      out << "error: " << c.error;
    }
    out << '\n';
  }
  return ok;
}

struct GenerateArgs {
  std::uint64_t m = 0;
  std::uint32_t n = 0;
  std::uint32_t r = 0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string permutation = "tenfold";
  std::size_t chunk_rows = matio::kDefaultChunkRows;
  std::string out = "synthetic.bin";
};

int cmd_generate(const GenerateArgs& g, std::ostream& out, Stage& stage) {
  stage.name = "args";
  matio::SyntheticSpec spec;
  spec.m = g.m;
  spec.n = g.n;
  spec.r = g.r;
  spec.noise = g.noise;
  spec.seed = g.seed;
  if (g.permutation == "tenfold") {
    spec.permutation = matio::PermutationKind::swap_tenfold;
  } else if (g.permutation == "identity") {
    spec.permutation = matio::PermutationKind::identity;
  } else {
    throw UsageError("--perm must be tenfold or identity");
  }
  spec.validate();

  stage.name = "write";
  auto generated = matio::generate_separable(spec, g.out, g.chunk_rows);
  fs::path stem = g.out;
  stem.replace_extension();
  matio::write_matrix(stem.string() + ".h_true.bin", spec.true_coefficients());
  artifacts::write_json(stem.string() + ".truth.json",
                        {{"m", spec.m},
                         {"n", spec.n},
                         {"r", spec.r},
                         {"noise", spec.noise},
                         {"seed", spec.seed},
                         {"permutation", g.permutation},
                         {"extremes", generated.extremes}});
  out << "wrote " << g.out << " (" << spec.m << "x" << spec.n << ") K*=";
  for (std::size_t i = 0; i < generated.extremes.size(); ++i) {
    out << (i ? "," : "") << generated.extremes[i];
  }
  out << '\n';
  return ok;
}

int cmd_kron(const std::string& input, const std::string& output,
             const std::string& sep, std::ostream& out, Stage& stage) {
  stage.name = "write";
  matio::TextOptions text;
  if (sep == "ws") {
    text.separator = '\0';
  } else if (sep.size() == 1) {
    text.separator = sep[0];
  } else {
    throw UsageError("--sep must be one character");
  }
  auto h = matio::expand_kronecker(input, output, text);
  out << "wrote " << output << " (" << h.rows << "x" << h.cols << ")\n";
  return ok;
}

int cmd_inspect(const std::string& input, std::ostream& out, Stage& stage) {
  stage.name = "read";
  fs::path p = input;
  if (fs::is_directory(p)) p /= "manifest.json";
  if (!fs::exists(p)) throw DataError("no such file: " + p.string());
  if (p.extension() == ".json") {
    out << artifacts::read_json(p).dump(2) << '\n';
    return ok;
  }
  json j;
  if (matio::is_binary_matrix(p)) {
    matio::BinaryChunkReader reader(p);
    j = {{"format", "binary"},
         {"rows", reader.header().rows},
         {"cols", reader.header().cols},
         {"bytes", fs::file_size(p)}};
  } else {
    auto reader = matio::open_reader(p);
    std::uint64_t rows = 0;
    while (auto c = reader->next()) rows += static_cast<std::uint64_t>(c->rows());
    j = {{"format", "text"}, {"rows", rows}, {"cols", reader->cols()}};
  }
  out << j.dump(2) << '\n';
  return ok;
}

void report_error(std::ostream& err, const Stage& stage,
                  const std::string& message, const std::string& out_dir) {
  json j = {{"stage", stage.name}, {"message", message}};
  err << j.dump() << '\n';
  if (!out_dir.empty()) {
    try {
      artifacts::write_json(fs::path(out_dir) / "error.json", j);
    } catch (...) {
    }
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Single-pass separable NMF for tall-and-skinny matrices"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "write a synthetic separable matrix");
  generate->add_option("--m", gen.m, "rows")->required();
  generate->add_option("--n", gen.n, "columns")->required();
  generate->add_option("--r", gen.r, "separation rank")->required();
  generate->add_option("--noise", gen.noise, "noise magnitude");
  generate->add_option("--seed", gen.seed, "generator seed");
  generate->add_option("--perm", gen.permutation, "tenfold or identity");
  generate->add_option("--chunk-rows", gen.chunk_rows, "rows per write")
      ->check(CLI::PositiveNumber);
  generate->add_option("-o,--out", gen.out, "output matrix path");

  std::string kron_in, kron_out = "kron.bin", kron_sep = ",";
  auto* kron = app.add_subcommand("kron", "expand A into the Kronecker square A (x) A");
  kron->add_option("-i,--input", kron_in, "matrix A")->required();
  kron->add_option("-o,--out", kron_out, "output matrix path");
  kron->add_option("--sep", kron_sep, "text field separator ('ws' = blanks)");

  RunConfig fact_cfg;
  auto* factorize = app.add_subcommand("factorize", "one pass, then select and fit H");
  fact_cfg.add_flags(*factorize);

  RunConfig sweep_cfg;
  sweep_cfg.ranks = "1..10";
  auto* sweep = app.add_subcommand("sweep", "residual curves over a range of r");
  sweep_cfg.add_flags(*sweep);

  std::string inspect_in;
  auto* inspect = app.add_subcommand("inspect", "describe a matrix, sidecar or output dir");
  inspect->add_option("input", inspect_in, "path")->required();

  std::vector<std::string> argv_storage{"tsnmf"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());

  Stage stage;
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::ParseError& e) {
    report_error(err, stage, e.what(), "");
    return usage;
  }

  std::string out_dir;
  if (factorize->parsed()) out_dir = fact_cfg.out_dir;
  if (sweep->parsed()) out_dir = sweep_cfg.out_dir;

  try {
    if (generate->parsed()) return cmd_generate(gen, out, stage);
    if (kron->parsed()) return cmd_kron(kron_in, kron_out, kron_sep, out, stage);
    if (factorize->parsed()) return cmd_factorize(fact_cfg, out, stage);
    if (sweep->parsed()) return cmd_sweep(sweep_cfg, out, stage);
    if (inspect->parsed()) return cmd_inspect(inspect_in, out, stage);
  } catch (const Error& e) {
    report_error(err, stage, e.what(), out_dir);
    switch (e.kind()) {
      case ErrorKind::usage: return usage;
      case ErrorKind::data: return data;
      case ErrorKind::numerical: return numerical;
    }
  } catch (const std::exception& e) {
    report_error(err, stage, e.what(), out_dir);
    return data;
  }
  return usage;
}

}  // namespace tsnmf::cli
