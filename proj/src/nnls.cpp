#include "tsnmf/nnls.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace tsnmf::nnls {

KktReport check_kkt(const Matrix& a, const Vector& b, const Vector& y,
                    double tau) {
  KktReport report;
  report.tau = tau;
  report.b_norm_sq = b.squaredNorm();
  const Vector g = a.transpose() * (a * y - b);
  report.min_y = y.size() ? y.minCoeff() : 0.0;
  report.min_gradient = g.size() ? g.minCoeff() : 0.0;
  report.complementarity = std::abs(y.dot(g));
  return report;
}

IterationLimit::IterationLimit(Vector best, KktReport kkt)
    : NumericalError("nnls: iteration limit exceeded (min gradient " +
                     std::to_string(kkt.min_gradient) + ")"),
      best_(std::move(best)),
      kkt_(kkt) {}

namespace {

/// Least-squares solution restricted to the passive columns; other entries 0.
Vector passive_solve(const Matrix& a, const Vector& b,
                     const std::vector<Eigen::Index>& passive) {
  Matrix sub(a.rows(), static_cast<Eigen::Index>(passive.size()));
  for (std::size_t i = 0; i < passive.size(); ++i) {
    sub.col(static_cast<Eigen::Index>(i)) = a.col(passive[i]);
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(sub);
  Vector zp = cod.solve(b);
  Vector z = Vector::Zero(a.cols());
  for (std::size_t i = 0; i < passive.size(); ++i) {
    z(passive[i]) = zp(static_cast<Eigen::Index>(i));
  }
  return z;
}

}  // namespace

Vector nnls_solve(const Matrix& a, const Vector& b) {
  if (a.rows() != b.size()) throw UsageError("nnls: a and b row mismatch");
  if (a.rows() == 0 || a.cols() == 0) throw UsageError("nnls: empty problem");
  if (!a.allFinite() || !b.allFinite()) {
    throw DataError("nnls: non-finite input");
  }

  const auto q = a.cols();
  Vector y = Vector::Zero(q);
  const double b_norm = b.norm();
  if (b_norm == 0.0) return y;

  // Scale-relative threshold for "gradient still points into the feasible
  // set"; absolute tolerances misbehave on reduced factors with large norms.
  const double tol = 64.0 * std::numeric_limits<double>::epsilon() *
                     a.norm() * b_norm * static_cast<double>(q);

  std::vector<bool> passive(static_cast<std::size_t>(q), false);
  std::vector<bool> blocked(static_cast<std::size_t>(q), false);
  std::size_t iterations = 0;

  auto passive_list = [&] {
    std::vector<Eigen::Index> list;
    for (Eigen::Index j = 0; j < q; ++j) {
      if (passive[static_cast<std::size_t>(j)]) list.push_back(j);
    }
    return list;
  };

  Vector w = a.transpose() * (b - a * y);
  while (true) {
    Eigen::Index enter = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < q; ++j) {
      auto js = static_cast<std::size_t>(j);
      if (!passive[js] && !blocked[js] && w(j) > best) {
        best = w(j);
        enter = j;
      }
    }
    if (enter < 0) break;
    passive[static_cast<std::size_t>(enter)] = true;

    bool first = true;
    while (true) {
      if (++iterations > kMaxIterations) {
        throw IterationLimit(y, check_kkt(a, b, y));
      }
      Vector z = passive_solve(a, b, passive_list());

      if (first && z(enter) <= 0.0) {
        // Round-off (or a dependent column) made the entering variable
        // useless; keep it out until the iterate moves.
        passive[static_cast<std::size_t>(enter)] = false;
        blocked[static_cast<std::size_t>(enter)] = true;
        break;
      }
      first = false;

      double alpha = 1.0;
      Eigen::Index blocking = -1;
      for (Eigen::Index j = 0; j < q; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
          const double step = y(j) / (y(j) - z(j));
          if (blocking < 0 || step < alpha) {
            alpha = step;
            blocking = j;
          }
        }
      }
      if (blocking < 0) {
        y = z;
        std::fill(blocked.begin(), blocked.end(), false);
        break;
      }
      y += alpha * (z - y);
      y(blocking) = 0.0;
      for (Eigen::Index j = 0; j < q; ++j) {
        auto js = static_cast<std::size_t>(j);
        if (passive[js] && y(j) <= 0.0) {
          passive[js] = false;
          y(j) = 0.0;
        }
      }
    }
    w = a.transpose() * (b - a * y);
  }
  return y;
}

CoefficientMatrix compute_h(const Matrix& reduced,
                            const std::vector<Eigen::Index>& extremes) {
  const auto n = reduced.cols();
  const auto q = static_cast<Eigen::Index>(extremes.size());
  if (q == 0) throw UsageError("compute_h: empty extreme set");
  for (auto k : extremes) {
    if (k < 0 || k >= n) {
      throw UsageError("compute_h: extreme index " + std::to_string(k) +
                       " out of range");
    }
  }

  Matrix basis(reduced.rows(), q);
  for (Eigen::Index i = 0; i < q; ++i) basis.col(i) = reduced.col(extremes[i]);

  // ||B y - c|| = ||T y - (Q^T c)_top|| + const for B = Q [T; 0].
  Eigen::HouseholderQR<Matrix> qr(basis);
  const auto height = std::min(basis.rows(), q);
  Matrix t = qr.matrixQR().topRows(height).triangularView<Eigen::Upper>();
  Matrix rhs = qr.householderQ().transpose() * reduced;
  rhs.conservativeResize(height, Eigen::NoChange);

  CoefficientMatrix out;
  out.extremes = extremes;
  out.h.resize(q, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    try {
      out.h.col(i) = nnls_solve(t, rhs.col(i));
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "column " << i << ": " << e.what();
      if (e.kind() == ErrorKind::numerical) throw NumericalError(msg.str());
      throw DataError(msg.str());
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < q; ++i) {
      double& v = out.h(i, j);
      if (v < 0.0) {
        if (v > -kSnapTolerance) {
          v = 0.0;
        } else {
          throw NumericalError("compute_h: negative coefficient " +
                               std::to_string(v) + " at column " +
                               std::to_string(j));
        }
      }
    }
  }
  return out;
}

double relative_residual(const Matrix& reduced, const CoefficientMatrix& h) {
  const double total = reduced.squaredNorm();
  if (total == 0.0) throw DataError("relative residual of a zero matrix");
  const auto q = static_cast<Eigen::Index>(h.extremes.size());
  if (h.h.rows() != q || h.h.cols() != reduced.cols()) {
    throw UsageError("relative_residual: shape mismatch");
  }
  Matrix basis(reduced.rows(), q);
  for (Eigen::Index i = 0; i < q; ++i) basis.col(i) = reduced.col(h.extremes[i]);
  return (reduced - basis * h.h).squaredNorm() / total;
}

}  // namespace tsnmf::nnls
