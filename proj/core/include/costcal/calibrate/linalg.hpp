#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace costcal::calibrate {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::vector<double> column(std::size_t j) const;
  std::vector<double> row(std::size_t i) const;
  Matrix transpose() const;
  double max_abs() const;

  friend Matrix operator*(const Matrix& a, const Matrix& b);
  friend std::vector<double> operator*(const Matrix& a, const std::vector<double>& x);
  friend Matrix operator-(const Matrix& a, const Matrix& b);

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

double norm2(const std::vector<double>& x);

/// C = Q U via Householder reflections. Q is kept as the reflectors.
class HouseholderQR {
 public:
  /// m x v upper-triangular factor (zeros below the diagonal).
  const Matrix& u() const { return u_; }
  std::size_t rows() const { return u_.rows(); }
  std::size_t cols() const { return u_.cols(); }

  /// Q^T x for an m-vector.
  std::vector<double> apply_qt(std::vector<double> x) const;
  /// Q x for an m-vector.
  std::vector<double> apply_q(std::vector<double> x) const;
  /// The full m x m orthonormal factor.
  Matrix q() const;

 private:
  friend HouseholderQR householder_qr(const Matrix& c);
  Matrix u_;
  std::vector<std::vector<double>> reflectors_;  // unit vectors, length m - k
};

/// Requires rows >= cols.
HouseholderQR householder_qr(const Matrix& c);

/// Minimizes ||C K - T||_2 by QR and back-substitution. Requires m > v and
/// every pivot above 1e-12 times its column norm; otherwise throws a Numeric
/// error naming the column (from `names` when given).
std::vector<double> least_squares(const Matrix& c, const std::vector<double>& t,
                                  const std::vector<std::string>& names = {});

/// Numerical rank of C (same pivot test as least_squares), and the columns
/// whose pivots fail it.
struct RankInfo {
  std::size_t rank = 0;
  std::vector<std::size_t> dependent;
};
RankInfo column_rank(const Matrix& c);

/// Diagonal of (C^T C)^{-1} from the QR factor, i.e. the squared row norms
/// of U^{-1}. Requires a nonsingular leading v x v block.
std::vector<double> inverse_gram_diagonal(const HouseholderQR& qr);

struct ResidualStats {
  std::vector<double> r;  // T - C K
  double rss = 0;
  double mrss = 0;        // rss / (m - v)
  double s = 0;           // sqrt(mrss)
};
ResidualStats residual_stats(const Matrix& c, const std::vector<double>& t,
                             const std::vector<double>& k);

}  // namespace costcal::calibrate
