#include "tsnmf/sweep.hpp"

#include <algorithm>
#include <chrono>

#include "tsnmf/error.hpp"

namespace tsnmf::nnls {

const char* to_string(Reduction r) { return r == Reduction::qr ? "qr" : "svd"; }

Reduction parse_reduction(const std::string& text) {
  if (text == "qr") return Reduction::qr;
  if (text == "svd") return Reduction::svd;
  throw UsageError("unknown reduction '" + text + "'");
}

ReducedProblem::ReducedProblem(tsqr::TriangularFactor r,
                               tsqr::ColumnStats stats,
                               std::optional<sketch::SketchResult> sketch,
                               Reduction reduction, tsqr::NormKind spa_norm)
    : r_(std::move(r)),
      stats_(std::move(stats)),
      sketch_(std::move(sketch)),
      reduction_(reduction),
      spa_norm_(spa_norm) {
  if (stats_.l1.size() != r_.n() || stats_.l2.size() != r_.n()) {
    throw UsageError("column stats do not match the triangular factor");
  }
  if (sketch_ && sketch_->n() != r_.n()) {
    throw UsageError("sketch does not match the triangular factor");
  }
  reduced_ = reduction == Reduction::qr ? r_.matrix()
                                        : tsqr::rsvd(r_).reduced();
}

select::ExtremeSet ReducedProblem::select(select::Algorithm algorithm,
                                          std::size_t r) const {
  switch (algorithm) {
    case select::Algorithm::spa:
      if (spa_norm_ == tsqr::NormKind::none) return select::spa(reduced_, r);
      // Scaling columns commutes with the orthogonal reduction, so this is
      // the reduced form of X D^{-1}.
      return select::spa(
          tsqr::scale_columns(reduced_, stats_.norms(spa_norm_)), r);
    case select::Algorithm::xray:
      return select::xray_greedy(reduced_, r);
    case select::Algorithm::gp: {
      if (!sketch_) throw UsageError("gp needs a sketch (sketch rows >= 1)");
      auto scaled = sketch_->scaled ? *sketch_
                                    : sketch::scale_columns(*sketch_, stats_);
      return select::gp_select(scaled, r);
    }
  }
  throw UsageError("unknown algorithm");
}

Factorization evaluate(const ReducedProblem& problem, select::ExtremeSet k) {
  Factorization f;
  f.h = compute_h(problem.reduced(), k.indices);
  f.residual = relative_residual(problem.reduced(), f.h);
  f.extremes = std::move(k);
  return f;
}

Factorization factorize(const ReducedProblem& problem,
                        select::Algorithm algorithm, std::size_t r) {
  return evaluate(problem, problem.select(algorithm, r));
}

std::optional<double> SweepReport::residual(select::Algorithm algorithm,
                                            std::size_t r) const {
  for (const auto& c : cells) {
    if (c.algorithm == algorithm && c.r == r) return c.residual;
  }
  return std::nullopt;
}

SweepReport sweep(const ReducedProblem& problem,
                  std::span<const select::Algorithm> algorithms,
                  std::span<const std::size_t> r_values) {
  using clock = std::chrono::steady_clock;
  SweepReport report;
  if (r_values.empty()) return report;
  const auto r_max = *std::max_element(r_values.begin(), r_values.end());
  if (r_max > static_cast<std::size_t>(problem.n())) {
    throw UsageError("max r = " + std::to_string(r_max) + " exceeds n = " +
                     std::to_string(problem.n()));
  }

  for (auto algorithm : algorithms) {
    std::optional<select::ExtremeSet> full;
    std::string selection_error;
    auto start = clock::now();
    try {
      full = problem.select(algorithm, r_max);
    } catch (const std::exception& e) {
      selection_error = e.what();
    }
    report.selection_seconds.emplace_back(
        algorithm, std::chrono::duration<double>(clock::now() - start).count());

    for (auto r : r_values) {
      SweepCell cell;
      cell.r = r;
      cell.algorithm = algorithm;
      if (!full) {
        cell.error = selection_error;
        report.cells.push_back(std::move(cell));
        continue;
      }
      auto k = full->prefix(r);
      cell.indices = k.indices;
      cell.shortfall = k.shortfall();
      auto cell_start = clock::now();
      try {
        if (k.indices.empty()) throw UsageError("r = 0 selects nothing");
        cell.residual = evaluate(problem, std::move(k)).residual;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      cell.seconds =
          std::chrono::duration<double>(clock::now() - cell_start).count();
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace tsnmf::nnls
