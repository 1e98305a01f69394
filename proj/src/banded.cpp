#include "softrod/banded.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "softrod/errors.hpp"

namespace softrod {

BandedMatrix::BandedMatrix(std::size_t n, std::size_t half_bandwidth)
    : n_(n), k_(half_bandwidth), data_(n * (2 * half_bandwidth + 1), 0.0) {}

double BandedMatrix::operator()(std::size_t i, std::size_t j) const {
  if (!in_band(i, j)) return 0.0;
  return data_[i * (2 * k_ + 1) + (j + k_ - i)];
}

double& BandedMatrix::at(std::size_t i, std::size_t j) {
  if (i >= n_ || j >= n_ || !in_band(i, j)) {
    throw InvalidParameterError("banded entry (" + std::to_string(i) + ", " +
                                std::to_string(j) + ") outside band");
  }
  return data_[i * (2 * k_ + 1) + (j + k_ - i)];
}

void BandedMatrix::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

void BandedMatrix::isolate_dof(std::size_t i) {
  if (i >= n_) throw InvalidParameterError("isolate_dof index out of range");
  const std::size_t w = 2 * k_ + 1;
  const std::size_t lo = i > k_ ? i - k_ : 0;
  const std::size_t hi = std::min(n_ - 1, i + k_);
  for (std::size_t j = lo; j <= hi; ++j) {
    data_[i * w + (j + k_ - i)] = 0.0;
    data_[j * w + (i + k_ - j)] = 0.0;
  }
  data_[i * w + k_] = 1.0;
}

void BandedMatrix::add_diagonal(const Eigen::VectorXd& d, double scale) {
  if (static_cast<std::size_t>(d.size()) != n_) throw DimensionMismatchError(n_, d.size());
  const std::size_t w = 2 * k_ + 1;
  for (std::size_t i = 0; i < n_; ++i) data_[i * w + k_] += scale * d[i];
}

Eigen::VectorXd BandedMatrix::multiply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t lo = i > k_ ? i - k_ : 0;
    const std::size_t hi = std::min(n_ - 1, i + k_);
    const double* row = &data_[i * (2 * k_ + 1)];
    double acc = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) acc += row[j + k_ - i] * x[j];
    y[i] = acc;
  }
  return y;
}

Eigen::MatrixXd BandedMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n_, n_);
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t lo = i > k_ ? i - k_ : 0;
    const std::size_t hi = std::min(n_ - 1, i + k_);
    for (std::size_t j = lo; j <= hi; ++j) d(i, j) = (*this)(i, j);
  }
  return d;
}

double BandedMatrix::asymmetry() const {
  double max_abs = 0.0;
  double max_diff = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t hi = std::min(n_ - 1, i + k_);
    for (std::size_t j = i; j <= hi; ++j) {
      max_abs = std::max({max_abs, std::abs((*this)(i, j)), std::abs((*this)(j, i))});
      max_diff = std::max(max_diff, std::abs((*this)(i, j) - (*this)(j, i)));
    }
  }
  return max_abs > 0.0 ? max_diff / max_abs : 0.0;
}

BandedMatrix& BandedMatrix::operator+=(const BandedMatrix& other) {
  if (other.n_ != n_ || other.k_ != k_) {
    throw DimensionMismatchError(n_, other.n_);
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

void BandedLU::factorize(const BandedMatrix& a) {
  n_ = a.size();
  k_ = a.half_bandwidth();
  width_ = 3 * k_ + 1;
  lu_.assign(n_ * width_, 0.0);
  pivots_.resize(n_);

  // Row i of the band storage maps to offset i*width + (j + k - i) for
  // column j; the extra k columns per row take the fill-in from pivoting.
  const std::size_t in_width = 2 * k_ + 1;
  const double* src = a.data();
  double scale = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const double* in = src + i * in_width;
    double* out = &lu_[i * width_];
    for (std::size_t d = 0; d < in_width; ++d) {
      out[d] = in[d];
      scale = std::max(scale, std::abs(in[d]));
    }
  }
  const double tiny = scale * static_cast<double>(n_) *
                      std::numeric_limits<double>::epsilon() * 1e-3;

  // Pointer to column 0 of row i (only columns inside the band are valid).
  auto row = [this](std::size_t i) { return lu_.data() + i * width_ + k_ - i; };

  for (std::size_t c = 0; c < n_; ++c) {
    const std::size_t last_row = std::min(n_ - 1, c + k_);
    const std::size_t last_col = std::min(n_ - 1, c + 2 * k_);
    std::size_t p = c;
    double best = std::abs(row(c)[c]);
    for (std::size_t r = c + 1; r <= last_row; ++r) {
      if (std::abs(row(r)[c]) > best) {
        best = std::abs(row(r)[c]);
        p = r;
      }
    }
    if (!(best > tiny) || !std::isfinite(best)) {
      throw SingularMatrixError(c, best);
    }
    pivots_[c] = p;
    double* pc = row(c);
    if (p != c) {
      double* pp = row(p);
      for (std::size_t j = c; j <= last_col; ++j) std::swap(pc[j], pp[j]);
    }
    const double inv = 1.0 / pc[c];
    for (std::size_t r = c + 1; r <= last_row; ++r) {
      double* pr = row(r);
      const double l = pr[c] * inv;
      pr[c] = l;
      if (l == 0.0) continue;
      for (std::size_t j = c + 1; j <= last_col; ++j) pr[j] -= l * pc[j];
    }
  }
}

Eigen::VectorXd BandedLU::solve(const Eigen::VectorXd& b) const {
  if (static_cast<std::size_t>(b.size()) != n_) {
    throw DimensionMismatchError(n_, b.size());
  }
  Eigen::VectorXd x = b;
  auto el = [this](std::size_t i, std::size_t j) {
    return lu_[i * width_ + (j + k_ - i)];
  };
  for (std::size_t c = 0; c < n_; ++c) {
    if (pivots_[c] != c) std::swap(x[c], x[pivots_[c]]);
    const std::size_t last_row = std::min(n_ - 1, c + k_);
    for (std::size_t r = c + 1; r <= last_row; ++r) x[r] -= el(r, c) * x[c];
  }
  for (std::size_t c = n_; c-- > 0;) {
    const std::size_t last_col = std::min(n_ - 1, c + 2 * k_);
    double acc = x[c];
    for (std::size_t j = c + 1; j <= last_col; ++j) acc -= el(c, j) * x[j];
    x[c] = acc / el(c, c);
  }
  return x;
}

bool BandedLDLT::factorize(const BandedMatrix& a, double pivot_floor) {
  n_ = a.size();
  k_ = a.half_bandwidth();
  const std::size_t width = k_ + 1;
  const std::size_t in_width = 2 * k_ + 1;
  l_.resize(n_ * width);
  d_.resize(n_);
  col_.resize(k_);
  const double* src = a.data();
  double scale = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    // lower half of row i, columns i-k..i
    const double* in = src + i * in_width;
    double* out = l_.data() + i * width;
    for (std::size_t d = 0; d < width; ++d) {
      out[d] = in[d];
      scale = std::max(scale, std::abs(in[d]));
    }
  }
  const double floor = pivot_floor * scale;

  return k_ == kFixedBand ? eliminate<kFixedBand>(floor) : eliminate<0>(floor);
}

// Right-looking elimination on the lower band. K > 0 fixes the bandwidth at
// compile time so the short inner loops unroll; K = 0 reads it from k_.
template <std::size_t K>
bool BandedLDLT::eliminate(double floor) {
  const std::size_t k = K > 0 ? K : k_;
  const std::size_t width = k + 1;
  double* __restrict l = l_.data();
  double* __restrict col = col_.data();
  for (std::size_t j = 0; j < n_; ++j) {
    const double dj = l[j * width + k];
    if (!(std::abs(dj) > floor) || !std::isfinite(dj)) return false;
    d_[j] = dj;
    const std::size_t count = std::min(n_ - 1 - j, k);
    const double inv = 1.0 / dj;
    for (std::size_t r = 0; r < count; ++r) {
      // entry (j+1+r, j) sits at offset k - 1 - r in its row
      double& lij = l[(j + 1 + r) * width + k - 1 - r];
      col[r] = lij;
      lij *= inv;
    }
    for (std::size_t r = 0; r < count; ++r) {
      // row j+1+r, columns j+1..j+1+r start at offset k - r
      double* __restrict ri = l + (j + 1 + r) * width + k - r;
      const double f = col[r] * inv;
      for (std::size_t m = 0; m <= r; ++m) ri[m] -= f * col[m];
    }
  }
  return true;
}

Eigen::VectorXd BandedLDLT::solve(const Eigen::VectorXd& b) const {
  if (static_cast<std::size_t>(b.size()) != n_) {
    throw DimensionMismatchError(n_, b.size());
  }
  const std::size_t width = k_ + 1;
  auto row = [this, width](std::size_t i) { return l_.data() + i * width + k_ - i; };
  Eigen::VectorXd x = b;
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t lo = i > k_ ? i - k_ : 0;
    const double* li = row(i);
    double acc = x[i];
    for (std::size_t m = lo; m < i; ++m) acc -= li[m] * x[m];
    x[i] = acc;
  }
  for (std::size_t i = 0; i < n_; ++i) x[i] /= d_[i];
  for (std::size_t i = n_; i-- > 0;) {
    const std::size_t lo = i > k_ ? i - k_ : 0;
    const double* li = row(i);
    const double xi = x[i];
    for (std::size_t m = lo; m < i; ++m) x[m] -= li[m] * xi;
  }
  return x;
}

Eigen::VectorXd solve_banded(const BandedMatrix& a, const Eigen::VectorXd& b) {
  BandedLU lu;
  lu.factorize(a);
  return lu.solve(b);
}

}  // namespace softrod
