#pragma once

#include <cstddef>
#include <vector>

#include "tsnmf/error.hpp"
#include "tsnmf/matrix_io.hpp"
#include "tsnmf/select.hpp"

namespace tsnmf::nnls {

inline constexpr double kKktTolerance = 1e-8;
inline constexpr std::size_t kMaxIterations = 10000;
/// Negative entries of H above this are round-off and get snapped to zero.
inline constexpr double kSnapTolerance = 1e-12;

struct KktReport {
  double min_y = 0.0;
  double min_gradient = 0.0;    // min_j (a^T (a y - b))_j
  double complementarity = 0.0; // |y^T g|
  double tau = kKktTolerance;
  double b_norm_sq = 0.0;

  bool ok() const {
    return min_y >= 0.0 && min_gradient >= -tau &&
           complementarity <= tau * b_norm_sq;
  }
};

KktReport check_kkt(const Matrix& a, const Vector& b, const Vector& y,
                    double tau = kKktTolerance);

/// Thrown when the active-set loop exceeds kMaxIterations.
class IterationLimit : public NumericalError {
public:
  IterationLimit(Vector best, KktReport kkt);
  const Vector& best() const { return best_; }
  const KktReport& kkt() const { return kkt_; }

private:
  Vector best_;
  KktReport kkt_;
};

/// argmin_{y >= 0} ||a y - b||_2 by the Lawson-Hanson active-set method.
Vector nnls_solve(const Matrix& a, const Vector& b);

/// H together with the columns it refers to.
struct CoefficientMatrix {
  Matrix h;  // |K| x n, row q pairs with column extremes[q]
  std::vector<Eigen::Index> extremes;
};

/// H(:, i) = argmin_{y >= 0} ||M(:, K) y - M(:, i)||. M(:, K) is reduced once
/// more by its own QR, so each column solves a |K| x |K| problem.
CoefficientMatrix compute_h(const Matrix& reduced,
                            const std::vector<Eigen::Index>& extremes);

/// ||M - M(:, K) H||_F^2 / ||M||_F^2.
double relative_residual(const Matrix& reduced, const CoefficientMatrix& h);

}  // namespace tsnmf::nnls
