#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "softrod/banded.hpp"
#include "softrod/errors.hpp"

using namespace softrod;

namespace {

BandedMatrix random_spd(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  BandedMatrix a(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < std::min(n, i + k + 1); ++j) {
      const double v = u(rng);
      a.at(i, j) = v;
      a.at(j, i) = v;
    }
    a.at(i, i) = 2.0 * static_cast<double>(k) + 1.0 + u(rng);
  }
  return a;
}

Eigen::VectorXd random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd b(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = g(rng);
  return b;
}

}  // namespace

TEST(BandedMatrix, OutOfBandWriteThrows) {
  BandedMatrix a(10, 2);
  EXPECT_NO_THROW(a.at(3, 5));
  EXPECT_THROW(a.at(3, 6), InvalidParameterError);
  EXPECT_EQ(a(0, 9), 0.0);
}

TEST(BandedMatrix, MultiplyMatchesDense) {
  const BandedMatrix a = random_spd(30, 4, 1);
  const Eigen::VectorXd x = random_vector(30, 2);
  EXPECT_LT((a.multiply(x) - a.to_dense() * x).norm(), 1e-12);
}

TEST(BandedMatrix, IsolateDofReplacesRowAndColumn) {
  BandedMatrix a = random_spd(12, 3, 4);
  a.isolate_dof(5);
  const Eigen::MatrixXd d = a.to_dense();
  for (int j = 0; j < 12; ++j) {
    EXPECT_EQ(d(5, j), j == 5 ? 1.0 : 0.0);
    EXPECT_EQ(d(j, 5), j == 5 ? 1.0 : 0.0);
  }
}

TEST(SolveBanded, IdentityReturnsRhs) {
  BandedMatrix a(83, kRodHalfBandwidth);
  for (std::size_t i = 0; i < 83; ++i) a.at(i, i) = 1.0;
  const Eigen::VectorXd b = random_vector(83, 7);
  EXPECT_EQ(solve_banded(a, b), b);
}

TEST(SolveBanded, RandomSpdMatchesDenseSolve) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const BandedMatrix a = random_spd(83, kRodHalfBandwidth, seed);
    const Eigen::VectorXd b = random_vector(83, seed + 100);
    const Eigen::VectorXd x = solve_banded(a, b);
    const Eigen::VectorXd ref = a.to_dense().partialPivLu().solve(b);
    EXPECT_LT((x - ref).norm() / ref.norm(), 1e-9);
  }
}

TEST(SolveBanded, DiscreteLaplacianClosedForm) {
  // -x_{i-1} + 2 x_i - x_{i+1} = 1 with zero boundary values has the
  // solution x_i = i (n + 1 - i) / 2, i = 1..n.
  const std::size_t n = 50;
  BandedMatrix a(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    a.at(i, i) = 2.0;
    if (i > 0) a.at(i, i - 1) = -1.0;
    if (i + 1 < n) a.at(i, i + 1) = -1.0;
  }
  const Eigen::VectorXd x = solve_banded(a, Eigen::VectorXd::Ones(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double k = static_cast<double>(i + 1);
    EXPECT_NEAR(x[static_cast<Eigen::Index>(i)], 0.5 * k * (n + 1 - k), 1e-9);
  }
}

TEST(SolveBanded, SingularThrows) {
  BandedMatrix a(5, 1);
  for (std::size_t i = 0; i < 4; ++i) a.at(i, i) = 1.0;
  EXPECT_THROW(solve_banded(a, Eigen::VectorXd::Ones(5)), SingularMatrixError);
}

TEST(BandedLU, NonsymmetricNeedsPivoting) {
  BandedMatrix a(4, 1);
  a.at(0, 0) = 0.0;
  a.at(0, 1) = 1.0;
  a.at(1, 0) = 1.0;
  a.at(1, 1) = 0.0;
  a.at(1, 2) = 2.0;
  a.at(2, 1) = 1.0;
  a.at(2, 2) = 3.0;
  a.at(2, 3) = 1.0;
  a.at(3, 2) = 4.0;
  a.at(3, 3) = 1.0;
  const Eigen::VectorXd b = random_vector(4, 9);
  BandedLU lu;
  lu.factorize(a);
  const Eigen::VectorXd ref = a.to_dense().fullPivLu().solve(b);
  EXPECT_LT((lu.solve(b) - ref).norm(), 1e-12);
}

TEST(BandedLDLT, MatchesLuOnSymmetricIndefinite) {
  BandedMatrix a = random_spd(83, kRodHalfBandwidth, 3);
  a.at(40, 40) = -5.0;  // indefinite but nonsingular pivots
  const Eigen::VectorXd b = random_vector(83, 8);
  BandedLDLT ldlt;
  ASSERT_TRUE(ldlt.factorize(a));
  BandedLU lu;
  lu.factorize(a);
  EXPECT_LT((ldlt.solve(b) - lu.solve(b)).norm() / lu.solve(b).norm(), 1e-10);
}

TEST(BandedLDLT, RefusesVanishingPivot) {
  BandedMatrix a(3, 1);
  a.at(0, 1) = 1.0;
  a.at(1, 0) = 1.0;
  a.at(1, 1) = 1.0;
  a.at(2, 2) = 1.0;
  BandedLDLT ldlt;
  EXPECT_FALSE(ldlt.factorize(a));
}
