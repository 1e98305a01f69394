#pragma once

// Square band matrices, a pivoted band LU and an unpivoted band LDL^T.

#include <Eigen/Core>
#include <cstddef>
#include <vector>

namespace softrod {

/// Half-bandwidth of the rod system: a bending stencil touches nodes
/// i-1..i+1 and edges i-1..i, eleven consecutive DOFs.
inline constexpr std::size_t kRodHalfBandwidth = 10;

/// Square matrix with `half_bandwidth` sub- and super-diagonals. Entries
/// outside the band are structurally zero; writing them throws.
class BandedMatrix {
 public:
  BandedMatrix() = default;
  BandedMatrix(std::size_t n, std::size_t half_bandwidth);

  std::size_t size() const { return n_; }
  std::size_t half_bandwidth() const { return k_; }

  bool in_band(std::size_t i, std::size_t j) const {
    return (i > j ? i - j : j - i) <= k_;
  }
  double operator()(std::size_t i, std::size_t j) const;
  double& at(std::size_t i, std::size_t j);
  void add(std::size_t i, std::size_t j, double v) { at(i, j) += v; }

  /// Adds a dense block whose rows/cols map to the ascending indices `dofs`.
  template <typename Derived>
  void add_block(const std::size_t* dofs, std::size_t count,
                 const Eigen::MatrixBase<Derived>& block) {
    // One range check covers every pair: the indices are ascending.
    (void)at(dofs[0], dofs[count - 1]);
    for (std::size_t a = 0; a < count; ++a) {
      double* row = &data_[dofs[a] * (2 * k_ + 1) + k_ - dofs[a]];
      for (std::size_t b = 0; b < count; ++b) row[dofs[b]] += block(a, b);
    }
  }

  void set_zero();
  /// Adds scale * d to the diagonal.
  void add_diagonal(const Eigen::VectorXd& d, double scale = 1.0);
  /// Replaces row and column i with the identity row/column.
  void isolate_dof(std::size_t i);

  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd to_dense() const;
  /// max |A_ij - A_ji| / max |A_ij|.
  double asymmetry() const;

  BandedMatrix& operator+=(const BandedMatrix& other);

  /// Raw band storage: row i starts at data() + i * (2k + 1) and holds
  /// columns i-k..i+k.
  const double* data() const { return data_.data(); }

 private:
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::vector<double> data_;  // row-major, row i holds columns i-k..i+k
};

/// LU with partial pivoting on band storage (fill-in widens the upper band
/// to 2k). Reusable across factorizations of equal size.
class BandedLU {
 public:
  /// Throws SingularMatrixError when a pivot vanishes.
  void factorize(const BandedMatrix& a);
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

 private:
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::size_t width_ = 0;
  std::vector<double> lu_;  // row i holds columns i-k..i+2k
  std::vector<std::size_t> pivots_;
};

/// LDL^T without pivoting for symmetric band matrices (reads the lower
/// band only). Indefinite matrices are accepted as long as no pivot drops
/// below `pivot_floor` times the largest entry; factorize() returns false
/// in that case and the caller falls back to BandedLU.
class BandedLDLT {
 public:
  bool factorize(const BandedMatrix& a, double pivot_floor = 1e-10);
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

 private:
  static constexpr std::size_t kFixedBand = kRodHalfBandwidth;
  template <std::size_t K>
  bool eliminate(double floor);

  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::vector<double> l_;  // row i holds columns i-k..i (unit diagonal not used)
  std::vector<double> d_;
  std::vector<double> col_;
};

/// Solves A x = b. Throws SingularMatrixError.
Eigen::VectorXd solve_banded(const BandedMatrix& a, const Eigen::VectorXd& b);

}  // namespace softrod
