#pragma once

// Small dense vector/matrix kernel. Dimensions stay in the tens to low
// hundreds, so everything is dense, row-major and heap-backed.

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gdr {

class LinalgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public LinalgError {
 public:
  using LinalgError::LinalgError;
};

class NotSPD : public LinalgError {
 public:
  using LinalgError::LinalgError;
};

class Singular : public LinalgError {
 public:
  using LinalgError::LinalgError;
};

class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t n, double value = 0.0) : data_(n, value) {}
  Vec(std::initializer_list<double> values) : data_(values) {}
  explicit Vec(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  Vec& operator+=(const Vec& o);
  Vec& operator-=(const Vec& o);
  Vec& operator*=(double a);

  bool all_finite() const;

  friend bool operator==(const Vec&, const Vec&) = default;

 private:
  std::vector<double> data_;
};

Vec operator+(Vec a, const Vec& b);
Vec operator-(Vec a, const Vec& b);
Vec operator-(Vec a);
Vec operator*(double s, Vec a);
Vec operator*(Vec a, double s);

double dot(const Vec& a, const Vec& b);
double norm(const Vec& a);
double norm_inf(const Vec& a);
/// a + s * b, without temporaries.
void axpy(double s, const Vec& b, Vec& a);
/// Concatenates two vectors.
Vec stack(const Vec& a, const Vec& b);
Vec head(const Vec& v, std::size_t n);
Vec tail(const Vec& v, std::size_t n);

/// Dense row-major matrix.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  Mat transposed() const;
  double frobenius() const;

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Vec operator*(const Mat& A, const Vec& x);
Mat operator*(const Mat& A, const Mat& B);
Mat operator+(Mat A, const Mat& B);
Mat operator*(double s, Mat A);
/// Aᵀ x without forming the transpose.
Vec transpose_times(const Mat& A, const Vec& x);

/// Symmetric matrix. Symmetry is checked exactly on construction.
class SymMat {
 public:
  SymMat() = default;
  explicit SymMat(Mat m);
  SymMat(std::initializer_list<std::initializer_list<double>> rows) : SymMat(Mat(rows)) {}

  static SymMat identity(std::size_t n) { return SymMat(Mat::identity(n)); }
  static SymMat diagonal(const Vec& d);
  /// ½(A + Aᵀ); the only way to build a SymMat from a non-symmetric matrix.
  static SymMat symmetrized(const Mat& m);

  std::size_t dim() const { return m_.rows(); }
  bool empty() const { return m_.rows() == 0; }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Mat& mat() const { return m_; }

  /// True when a Cholesky factorization succeeds.
  bool is_spd() const;

  friend bool operator==(const SymMat&, const SymMat&) = default;

 private:
  Mat m_;
};

Vec operator*(const SymMat& A, const Vec& x);
SymMat operator*(double s, const SymMat& A);
SymMat operator+(const SymMat& A, const SymMat& B);

/// Lower-triangular Cholesky factor, reusable for repeated solves.
class Cholesky {
 public:
  explicit Cholesky(const SymMat& A);
  Vec solve(const Vec& b) const;
  std::size_t dim() const { return L_.rows(); }

 private:
  Mat L_;
};

/// LU factorization with partial pivoting.
class LU {
 public:
  explicit LU(Mat A);
  Vec solve(const Vec& b) const;
  std::size_t dim() const { return lu_.rows(); }

 private:
  Mat lu_;
  std::vector<std::size_t> perm_;
};

Vec solve_spd(const SymMat& A, const Vec& b);
Vec solve_general(const Mat& A, const Vec& b);

/// xᵀ W x.
double weighted_norm_sq(const Vec& x, const SymMat& W);

/// Eigenpairs of a symmetric matrix, eigenvalues ascending; column k of
/// vectors is the k-th eigenvector.
struct SymmetricEigen {
  Vec values;
  Mat vectors;
};

/// Cyclic Jacobi rotations; intended for the small matrices used here.
SymmetricEigen symmetric_eigen(const SymMat& A);

using Vec3 = std::array<double, 3>;

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

}  // namespace gdr
