#include "costcal/calibrate/linalg.hpp"

#include <cmath>

#include "costcal/error.hpp"

namespace costcal::calibrate {

namespace {

constexpr double kPivotTol = 1e-12;

[[noreturn]] void numeric(const std::string& msg) { throw Error(ErrorKind::Numeric, msg); }

}  // namespace

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) numeric("ragged matrix rows");
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

std::vector<double> Matrix::column(std::size_t j) const {
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

std::vector<double> Matrix::row(std::size_t i) const {
  return {data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
          data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_)};
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::max_abs() const {
  double m = 0;
  for (double x : data_) m = std::max(m, std::fabs(x));
  return m;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) numeric("matrix product: dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      double x = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += x * b(k, j);
    }
  return c;
}

std::vector<double> operator*(const Matrix& a, const std::vector<double>& x) {
  if (a.cols() != x.size()) numeric("matrix-vector product: dimension mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
  return y;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) numeric("matrix difference: dimension mismatch");
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
  return c;
}

double norm2(const std::vector<double>& x) {
  // Scaled to avoid overflow on large entries.
  double scale = 0;
  for (double v : x) scale = std::max(scale, std::fabs(v));
  if (scale == 0) return 0;
  double s = 0;
  for (double v : x) s += (v / scale) * (v / scale);
  return scale * std::sqrt(s);
}

HouseholderQR householder_qr(const Matrix& c) {
  const std::size_t m = c.rows(), n = c.cols();
  if (m < n) numeric("QR needs at least as many rows as columns");
  HouseholderQR qr;
  qr.u_ = c;
  Matrix& a = qr.u_;
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> v(m - k);
    for (std::size_t i = k; i < m; ++i) v[i - k] = a(i, k);
    double below = norm2(std::vector<double>(v.begin() + 1, v.end()));
    if (below == 0) {
      qr.reflectors_.emplace_back(m - k, 0.0);  // already triangular here
      continue;
    }
    double alpha = norm2(v);
    // Sign chosen against x_k so v is not the difference of near equals.
    if (v[0] > 0) alpha = -alpha;
    v[0] -= alpha;
    double vn = norm2(v);
    for (double& x : v) x /= vn;
    for (std::size_t j = k; j < n; ++j) {
      double dot = 0;
      for (std::size_t i = k; i < m; ++i) dot += v[i - k] * a(i, j);
      for (std::size_t i = k; i < m; ++i) a(i, j) -= 2 * v[i - k] * dot;
    }
    a(k, k) = alpha;
    for (std::size_t i = k + 1; i < m; ++i) a(i, k) = 0;
    qr.reflectors_.push_back(std::move(v));
  }
  return qr;
}

std::vector<double> HouseholderQR::apply_qt(std::vector<double> x) const {
  const std::size_t m = rows();
  if (x.size() != m) numeric("Q^T application: dimension mismatch");
  for (std::size_t k = 0; k < reflectors_.size(); ++k) {
    const auto& v = reflectors_[k];
    double dot = 0;
    for (std::size_t i = k; i < m; ++i) dot += v[i - k] * x[i];
    for (std::size_t i = k; i < m; ++i) x[i] -= 2 * v[i - k] * dot;
  }
  return x;
}

std::vector<double> HouseholderQR::apply_q(std::vector<double> x) const {
  const std::size_t m = rows();
  if (x.size() != m) numeric("Q application: dimension mismatch");
  for (std::size_t kk = reflectors_.size(); kk-- > 0;) {
    const auto& v = reflectors_[kk];
    double dot = 0;
    for (std::size_t i = kk; i < m; ++i) dot += v[i - kk] * x[i];
    for (std::size_t i = kk; i < m; ++i) x[i] -= 2 * v[i - kk] * dot;
  }
  return x;
}

Matrix HouseholderQR::q() const {
  const std::size_t m = rows();
  Matrix q(m, m);
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> e(m, 0.0);
    e[j] = 1;
    auto col = apply_q(std::move(e));
    for (std::size_t i = 0; i < m; ++i) q(i, j) = col[i];
  }
  return q;
}

RankInfo column_rank(const Matrix& c) {
  auto qr = householder_qr(c);
  RankInfo info;
  for (std::size_t j = 0; j < c.cols(); ++j) {
    double cn = norm2(c.column(j));
    if (std::fabs(qr.u()(j, j)) <= kPivotTol * cn || cn == 0)
      info.dependent.push_back(j);
    else
      ++info.rank;
  }
  return info;
}

std::vector<double> least_squares(const Matrix& c, const std::vector<double>& t,
                                  const std::vector<std::string>& names) {
  const std::size_t m = c.rows(), n = c.cols();
  if (t.size() != m) numeric("least squares: T has " + std::to_string(t.size()) +
                             " entries for " + std::to_string(m) + " rows");
  if (m <= n)
    numeric("least squares needs more rows than columns (m=" + std::to_string(m) +
            ", v=" + std::to_string(n) + ")");
  auto qr = householder_qr(c);
  const Matrix& u = qr.u();
  for (std::size_t j = 0; j < n; ++j) {
    double cn = norm2(c.column(j));
    if (cn == 0 || std::fabs(u(j, j)) <= kPivotTol * cn) {
      std::string col = j < names.size() ? names[j] : "column " + std::to_string(j);
      numeric("rank-deficient system: near-zero pivot at " + col +
              " (linearly dependent on the preceding columns)");
    }
  }
  auto b = qr.apply_qt(t);
  std::vector<double> k(n);
  for (std::size_t jj = n; jj-- > 0;) {
    double s = b[jj];
    for (std::size_t l = jj + 1; l < n; ++l) s -= u(jj, l) * k[l];
    k[jj] = s / u(jj, jj);
  }
  return k;
}

ResidualStats residual_stats(const Matrix& c, const std::vector<double>& t,
                             const std::vector<double>& k) {
  const std::size_t m = c.rows(), n = c.cols();
  if (t.size() != m || k.size() != n) numeric("residual stats: dimension mismatch");
  if (m <= n)
    numeric("residual stats need m > v (m=" + std::to_string(m) + ", v=" +
            std::to_string(n) + ")");
  ResidualStats st;
  auto ck = c * k;
  st.r.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    st.r[i] = t[i] - ck[i];
    st.rss += st.r[i] * st.r[i];
  }
  st.mrss = st.rss / static_cast<double>(m - n);
  st.s = std::sqrt(st.mrss);
  return st;
}

std::vector<double> inverse_gram_diagonal(const HouseholderQR& qr) {
  const auto& u = qr.u();
  const std::size_t v = u.cols();
  // Column j of U^{-1} by back-substitution on e_j.
  Matrix inv(v, v);
  for (std::size_t j = 0; j < v; ++j) {
    for (std::size_t i = j + 1; i-- > 0;) {
      double acc = i == j ? 1.0 : 0.0;
      for (std::size_t k = i + 1; k <= j; ++k) acc -= u(i, k) * inv(k, j);
      if (u(i, i) == 0.0) throw Error(ErrorKind::Numeric, "singular triangular factor");
      inv(i, j) = acc / u(i, i);
    }
  }
  std::vector<double> d(v, 0.0);
  for (std::size_t i = 0; i < v; ++i)
    for (std::size_t j = 0; j < v; ++j) d[i] += inv(i, j) * inv(i, j);
  return d;
}

}  // namespace costcal::calibrate
