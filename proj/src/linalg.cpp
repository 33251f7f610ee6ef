#include "gdr/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace gdr {

namespace {

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

constexpr double kPivotTolerance = 1e-14;

}  // namespace

Vec& Vec::operator+=(const Vec& o) {
  require_same(size(), o.size(), "Vec +=");
  for (std::size_t i = 0; i < size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Vec& Vec::operator-=(const Vec& o) {
  require_same(size(), o.size(), "Vec -=");
  for (std::size_t i = 0; i < size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Vec& Vec::operator*=(double a) {
  for (double& v : data_) v *= a;
  return *this;
}

bool Vec::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Vec operator+(Vec a, const Vec& b) { return a += b; }
Vec operator-(Vec a, const Vec& b) { return a -= b; }
Vec operator-(Vec a) { return a *= -1.0; }
Vec operator*(double s, Vec a) { return a *= s; }
Vec operator*(Vec a, double s) { return a *= s; }

double dot(const Vec& a, const Vec& b) {
  require_same(a.size(), b.size(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

double norm_inf(const Vec& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

void axpy(double s, const Vec& b, Vec& a) {
  require_same(a.size(), b.size(), "axpy");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

Vec stack(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  std::copy(a.begin(), a.end(), out.begin());
  std::copy(b.begin(), b.end(), out.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

Vec head(const Vec& v, std::size_t n) {
  if (n > v.size()) throw DimensionMismatch("head: n exceeds size");
  return Vec(std::vector<double>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n)));
}

Vec tail(const Vec& v, std::size_t n) {
  if (n > v.size()) throw DimensionMismatch("tail: n exceeds size");
  return Vec(std::vector<double>(v.end() - static_cast<std::ptrdiff_t>(n), v.end()));
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require_same(r.size(), cols_, "Mat initializer row");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::transposed() const {
  Mat t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Mat::frobenius() const {
  double acc = 0.0;
  for (double v : data_) acc += v * v;
  return std::sqrt(acc);
}

Vec operator*(const Mat& A, const Vec& x) {
  require_same(A.cols(), x.size(), "Mat * Vec");
  Vec y(A.rows());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    const auto r = A.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < A.cols(); ++j) acc += r[j] * x[j];
    y[i] = acc;
  }
  return y;
}

Mat operator*(const Mat& A, const Mat& B) {
  require_same(A.cols(), B.rows(), "Mat * Mat");
  Mat C(A.rows(), B.cols());
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t k = 0; k < A.cols(); ++k) {
      const double a = A(i, k);
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < B.cols(); ++j) C(i, j) += a * B(k, j);
    }
  return C;
}

Mat operator+(Mat A, const Mat& B) {
  require_same(A.rows(), B.rows(), "Mat + Mat rows");
  require_same(A.cols(), B.cols(), "Mat + Mat cols");
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) A(i, j) += B(i, j);
  return A;
}

Mat operator*(double s, Mat A) {
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (double& v : A.row(i)) v *= s;
  return A;
}

Vec transpose_times(const Mat& A, const Vec& x) {
  require_same(A.rows(), x.size(), "Matᵀ * Vec");
  Vec y(A.cols());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    const auto r = A.row(i);
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < A.cols(); ++j) y[j] += r[j] * xi;
  }
  return y;
}

SymMat::SymMat(Mat m) : m_(std::move(m)) {
  if (!m_.square()) throw DimensionMismatch("SymMat: matrix is not square");
  for (std::size_t i = 0; i < m_.rows(); ++i)
    for (std::size_t j = i + 1; j < m_.cols(); ++j)
      if (m_(i, j) != m_(j, i)) throw LinalgError("SymMat: matrix is not symmetric");
}

SymMat SymMat::diagonal(const Vec& d) {
  Mat m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return SymMat(std::move(m));
}

SymMat SymMat::symmetrized(const Mat& m) {
  if (!m.square()) throw DimensionMismatch("SymMat::symmetrized: matrix is not square");
  Mat s(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
  return SymMat(std::move(s));
}

bool SymMat::is_spd() const {
  if (empty()) return false;
  try {
    Cholesky chol(*this);
    return true;
  } catch (const NotSPD&) {
    return false;
  }
}

Vec operator*(const SymMat& A, const Vec& x) { return A.mat() * x; }

SymMat operator*(double s, const SymMat& A) { return SymMat(s * A.mat()); }

SymMat operator+(const SymMat& A, const SymMat& B) { return SymMat(A.mat() + B.mat()); }

Cholesky::Cholesky(const SymMat& A) : L_(A.dim(), A.dim()) {
  const std::size_t n = A.dim();
  for (std::size_t j = 0; j < n; ++j) {
    double d = A(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= L_(j, k) * L_(j, k);
    if (!(d > 0.0)) throw NotSPD("Cholesky: non-positive pivot at column " + std::to_string(j));
    const double ljj = std::sqrt(d);
    L_(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = A(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= L_(i, k) * L_(j, k);
      L_(i, j) = v / ljj;
    }
  }
}

Vec Cholesky::solve(const Vec& b) const {
  require_same(dim(), b.size(), "Cholesky::solve");
  const std::size_t n = dim();
  Vec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= L_(i, k) * y[k];
    y[i] = v / L_(i, i);
  }
  Vec x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double v = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) v -= L_(k, ii) * x[k];
    x[ii] = v / L_(ii, ii);
  }
  return x;
}

LU::LU(Mat A) : lu_(std::move(A)), perm_(lu_.rows()) {
  if (!lu_.square()) throw DimensionMismatch("LU: matrix is not square");
  const std::size_t n = lu_.rows();
  std::vector<double> scale(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    perm_[i] = i;
    for (double v : lu_.row(i)) scale[i] = std::max(scale[i], std::abs(v));
  }
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::abs(lu_(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu_(i, k)) > best) {
        best = std::abs(lu_(i, k));
        p = i;
      }
    }
    if (p != k) {
      std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(p).begin());
      std::swap(perm_[k], perm_[p]);
    }
    if (!(best > kPivotTolerance * scale[perm_[k]])) {
      throw Singular("LU: pivot below tolerance at column " + std::to_string(k));
    }
    const double pivot = lu_(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu_(i, k) / pivot;
      lu_(i, k) = f;
      if (f == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
    }
  }
}

Vec LU::solve(const Vec& b) const {
  require_same(dim(), b.size(), "LU::solve");
  const std::size_t n = dim();
  Vec x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = b[perm_[i]];
    for (std::size_t k = 0; k < i; ++k) v -= lu_(i, k) * x[k];
    x[i] = v;
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double v = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) v -= lu_(ii, k) * x[k];
    x[ii] = v / lu_(ii, ii);
  }
  return x;
}

Vec solve_spd(const SymMat& A, const Vec& b) {
  require_same(A.dim(), b.size(), "solve_spd");
  return Cholesky(A).solve(b);
}

Vec solve_general(const Mat& A, const Vec& b) {
  require_same(A.rows(), b.size(), "solve_general");
  return LU(A).solve(b);
}

double weighted_norm_sq(const Vec& x, const SymMat& W) {
  require_same(W.dim(), x.size(), "weighted_norm_sq");
  // Rounding can push tiny PSD forms below zero.
  return std::max(0.0, dot(x, W * x));
}

SymmetricEigen symmetric_eigen(const SymMat& A) {
  const std::size_t n = A.dim();
  Mat a = A.mat();
  Mat v = Mat::identity(n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-30 * std::max(1.0, a.frobenius() * a.frobenius())) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymmetricEigen out{Vec(n), Mat(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

}  // namespace gdr
