#include <set>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tsnmf/error.hpp"
#include "tsnmf/nnls.hpp"
#include "tsnmf/synthetic.hpp"

using namespace tsnmf;
using tsnmf::testing::ScratchDir;
namespace fs = std::filesystem;

namespace {

matio::SyntheticSpec spec_of(std::uint64_t m, std::uint32_t n, std::uint32_t r,
                             double noise, std::uint64_t seed,
                             matio::PermutationKind p) {
  matio::SyntheticSpec s;
  s.m = m;
  s.n = n;
  s.r = r;
  s.noise = noise;
  s.seed = seed;
  s.permutation = p;
  return s;
}

Matrix columns(const Matrix& x, const std::vector<std::uint32_t>& k) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(k.size()));
  for (std::size_t i = 0; i < k.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = x.col(k[i]);
  return out;
}

}  // namespace

TEST(Synthetic, TenfoldExtremes) {
  auto s = spec_of(1000, 200, 20, 0.0, 1, matio::PermutationKind::swap_tenfold);
  auto k = s.extreme_columns();
  // Swapping i <-> 10i in order 2..19 sends source 10 to column 100 and
  // source 100 back to column 10, so column 10 is not extreme.
  std::vector<std::uint32_t> expect{0, 1};
  for (std::uint32_t i = 2; i < 20; ++i) expect.push_back(10 * i);
  EXPECT_EQ(k, expect);
  std::set<std::uint32_t> distinct(k.begin(), k.end());
  EXPECT_EQ(distinct.size(), 20u);
}

TEST(Synthetic, IdentityAtFullRankIsExtremeEverywhere) {
  ScratchDir dir;
  auto s = spec_of(50, 6, 6, 0.0, 3, matio::PermutationKind::identity);
  auto g = matio::generate_separable(s, dir / "x.bin");
  std::vector<std::uint32_t> all{0, 1, 2, 3, 4, 5};
  EXPECT_EQ(g.extremes, all);
  EXPECT_EQ(s.true_coefficients(), Matrix::Identity(6, 6));
}

TEST(Synthetic, ValidationErrors) {
  EXPECT_THROW(spec_of(300, 200, 300, 0, 1, matio::PermutationKind::identity).validate(),
               UsageError);
  EXPECT_THROW(spec_of(300, 20, 3, -1e-3, 1, matio::PermutationKind::identity).validate(),
               UsageError);
  // 10(r-1) must be a column.
  EXPECT_THROW(spec_of(300, 50, 20, 0, 1, matio::PermutationKind::swap_tenfold).validate(),
               UsageError);
}

TEST(Synthetic, ChunkSizeDoesNotChangeBytes) {
  ScratchDir dir;
  auto s = spec_of(333, 30, 3, 1e-3, 5, matio::PermutationKind::swap_tenfold);
  matio::generate_separable(s, dir / "a.bin", 1);
  matio::generate_separable(s, dir / "b.bin", 100);
  Matrix a = matio::read_matrix(dir / "a.bin");
  Matrix b = matio::read_matrix(dir / "b.bin");
  EXPECT_TRUE((a.array() == b.array()).all());
}

TEST(Synthetic, NoiselessIsExactlySeparable) {
  ScratchDir dir;
  auto s = spec_of(1000, 10, 3, 0.0, 7, matio::PermutationKind::identity);
  auto g = matio::generate_separable(s, dir / "x.bin", 64);
  Matrix x = matio::read_matrix(dir / "x.bin");
  ASSERT_EQ(x.rows(), 1000);
  Matrix xk = columns(x, g.extremes);

  // Full-space NNLS on every column.
  double resid = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Vector y = nnls::nnls_solve(xk, x.col(j));
    resid += (xk * y - x.col(j)).squaredNorm();
  }
  EXPECT_LE(std::sqrt(resid) / x.norm(), 1e-10);

  // And the generator's own coefficients reproduce X.
  EXPECT_LE((xk * s.true_coefficients() - x).norm() / x.norm(), 1e-12);
  EXPECT_TRUE((x.array() >= 0.0).all());
}

TEST(Synthetic, NoiseIsBounded) {
  ScratchDir dir;
  auto clean = spec_of(400, 30, 3, 0.0, 9, matio::PermutationKind::swap_tenfold);
  auto noisy = clean;
  noisy.noise = 1e-3;
  matio::generate_separable(clean, dir / "c.bin");
  matio::generate_separable(noisy, dir / "n.bin");
  Matrix d = matio::read_matrix(dir / "n.bin") - matio::read_matrix(dir / "c.bin");
  EXPECT_GE(d.minCoeff(), -1e-15);
  EXPECT_LE(d.maxCoeff(), 1e-3 + 1e-15);
  EXPECT_GT(d.maxCoeff(), 5e-4);
}
