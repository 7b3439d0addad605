#include "tsnmf/select.hpp"

#include <algorithm>
#include <limits>

#include "tsnmf/error.hpp"
#include "tsnmf/nnls.hpp"

namespace tsnmf::select {

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::spa: return "spa";
    case Algorithm::xray: return "xray";
    case Algorithm::gp: return "gp";
  }
  return "spa";
}

Algorithm parse_algorithm(const std::string& text) {
  if (text == "spa") return Algorithm::spa;
  if (text == "xray") return Algorithm::xray;
  if (text == "gp") return Algorithm::gp;
  throw UsageError("unknown algorithm '" + text + "'");
}

ExtremeSet ExtremeSet::prefix(std::size_t r) const {
  ExtremeSet out;
  out.algorithm = algorithm;
  out.requested = r;
  auto take = std::min(r, indices.size());
  out.indices.assign(indices.begin(), indices.begin() + static_cast<long>(take));
  return out;
}

namespace {

void check_rank(std::size_t r, Eigen::Index n) {
  if (r > static_cast<std::size_t>(n)) {
    throw UsageError("r = " + std::to_string(r) + " exceeds n = " +
                     std::to_string(n));
  }
}

/// Lowest index wins ties: only a strictly larger score replaces the best.
Eigen::Index argmax_unselected(const Vector& score,
                               const std::vector<bool>& selected) {
  Eigen::Index best = -1;
  for (Eigen::Index j = 0; j < score.size(); ++j) {
    if (selected[static_cast<std::size_t>(j)]) continue;
    if (best < 0 || score(j) > score(best)) best = j;
  }
  return best;
}

}  // namespace

ExtremeSet spa(const Matrix& reduced, std::size_t r) {
  check_rank(r, reduced.cols());
  ExtremeSet out;
  out.algorithm = Algorithm::spa;
  out.requested = r;

  Matrix m = reduced;
  std::vector<bool> selected(static_cast<std::size_t>(m.cols()), false);
  const double initial = m.colwise().norm().maxCoeff();
  const double floor = kSpaZeroResidual * initial;

  for (std::size_t t = 0; t < r; ++t) {
    Vector norms = m.colwise().squaredNorm().transpose();
    auto j = argmax_unselected(norms, selected);
    if (j < 0 || !(std::sqrt(norms(j)) > floor)) break;

    selected[static_cast<std::size_t>(j)] = true;
    out.indices.push_back(j);

    // M <- (I - u u^T / ||u||^2) M
    const Vector u = m.col(j);
    const Eigen::RowVectorXd proj = (u.transpose() * m) / norms(j);
    m.noalias() -= u * proj;
  }
  return out;
}

ExtremeSet xray_greedy(const Matrix& reduced, std::size_t r) {
  check_rank(r, reduced.cols());
  ExtremeSet out;
  out.algorithm = Algorithm::xray;
  out.requested = r;

  const auto n = reduced.cols();
  const Vector col_norms = reduced.colwise().norm().transpose();
  std::vector<bool> selected(static_cast<std::size_t>(n), false);
  Matrix residual = reduced;

  constexpr double minus_inf = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < r; ++t) {
    // Column j of residual^T M is Res^T M(:, j).
    const Matrix corr = residual.transpose() * reduced;
    Vector score(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      score(j) = col_norms(j) > 0.0 ? corr.col(j).norm() / col_norms(j)
                                    : minus_inf;
    }
    auto j = argmax_unselected(score, selected);
    if (j < 0 || score(j) == minus_inf) break;

    selected[static_cast<std::size_t>(j)] = true;
    out.indices.push_back(j);

    auto h = nnls::compute_h(reduced, out.indices);
    Matrix basis(reduced.rows(), static_cast<Eigen::Index>(out.indices.size()));
    for (std::size_t i = 0; i < out.indices.size(); ++i) {
      basis.col(static_cast<Eigen::Index>(i)) = reduced.col(out.indices[i]);
    }
    residual = reduced - basis * h.h;
  }
  return out;
}

ExtremeSet gp_select(const sketch::SketchResult& sketch, std::size_t r) {
  check_rank(r, sketch.n());
  ExtremeSet out;
  out.algorithm = Algorithm::gp;
  out.requested = r;

  const auto& s = sketch.entries;
  std::vector<bool> taken(static_cast<std::size_t>(s.cols()), false);
  auto add = [&](Eigen::Index j) {
    if (out.indices.size() < r && !taken[static_cast<std::size_t>(j)]) {
      taken[static_cast<std::size_t>(j)] = true;
      out.indices.push_back(j);
    }
  };
  for (Eigen::Index row = 0; row < s.rows() && out.indices.size() < r; ++row) {
    Eigen::Index lo = 0;
    Eigen::Index hi = 0;
    for (Eigen::Index j = 1; j < s.cols(); ++j) {
      if (s(row, j) < s(row, lo)) lo = j;
      if (s(row, j) > s(row, hi)) hi = j;
    }
    add(lo);
    add(hi);
  }
  return out;
}

}  // namespace tsnmf::select
