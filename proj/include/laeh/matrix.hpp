// Dense double-precision matrices, scalar activations, and seeded
// randomness. Everything downstream (nets, losses, the trainer) is built
// on these primitives, so all of them are deterministic by construction.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace laeh {

class DenseMatrix {
 public:
  DenseMatrix() = default;

  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return values_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols_ + c];
  }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double* row_ptr(std::size_t r) { return values_.data() + r * cols_; }
  const double* row_ptr(std::size_t r) const {
    return values_.data() + r * cols_;
  }

  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  DenseMatrix& operator+=(const DenseMatrix& o) {
    require_same_shape(o, "operator+=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }

  DenseMatrix& operator-=(const DenseMatrix& o) {
    require_same_shape(o, "operator-=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }

  DenseMatrix& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }

  friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) {
    a += b;
    return a;
  }
  friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) {
    a -= b;
    return a;
  }
  friend DenseMatrix operator*(DenseMatrix a, double s) {
    a *= s;
    return a;
  }
  friend DenseMatrix operator*(double s, DenseMatrix a) {
    a *= s;
    return a;
  }

  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.values_ == b.values_;
  }

  /// New matrix holding the selected columns, in the given order.
  DenseMatrix gather_cols(const std::vector<std::size_t>& idx) const {
    DenseMatrix out(rows_, idx.size());
    for (std::size_t r = 0; r < rows_; ++r) {
      const double* src = row_ptr(r);
      double* dst = out.row_ptr(r);
      for (std::size_t j = 0; j < idx.size(); ++j) dst[j] = src[idx[j]];
    }
    return out;
  }

  std::vector<double> col(std::size_t c) const {
    std::vector<double> v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
  }

 private:
  void require_same_shape(const DenseMatrix& o, const char* op) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                  shape_str() + " vs " + o.shape_str());
  }

  std::string shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

inline std::string shape_of(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: dimension mismatch " + shape_of(a) +
                                " * " + shape_of(b));
  DenseMatrix out(a.rows(), b.cols());
  // ikj order keeps the inner loop over contiguous rows of b and out.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out_row = out.row_ptr(i);
    const double* a_row = a.row_ptr(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a_row[k];
      const double* b_row = b.row_ptr(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

inline DenseMatrix transpose(const DenseMatrix& m) {
  DenseMatrix out(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = m(r, c);
  return out;
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Overflow-safe log(1 + e^x): max(x,0) + log1p(e^{-|x|}).
inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

/// Entrywise signum with sgn(0) := +1, so outputs stay in {-1,+1}.
inline DenseMatrix sign_matrix(const DenseMatrix& m) {
  DenseMatrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      out(r, c) = m(r, c) < 0.0 ? -1.0 : 1.0;
  return out;
}

inline double dot(const std::vector<double>& u, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

inline double cosine(const std::vector<double>& u,
                     const std::vector<double>& v) {
  if (u.size() != v.size())
    throw std::invalid_argument("cosine: length mismatch " +
                                std::to_string(u.size()) + " vs " +
                                std::to_string(v.size()));
  const double nu = std::sqrt(dot(u, u));
  const double nv = std::sqrt(dot(v, v));
  if (nu == 0.0 || nv == 0.0)
    throw std::invalid_argument("cosine: zero-norm input vector");
  double c = dot(u, v) / (nu * nv);
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return c;
}

inline double frobenius_sq(const DenseMatrix& m) {
  double s = 0.0;
  const double* p = m.data();
  for (std::size_t i = 0; i < m.size(); ++i) s += p[i] * p[i];
  return s;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Deterministic random source: xoshiro256** seeded through splitmix64,
/// with all distributions implemented here, so identical seeds give
/// identical streams on every platform and compiler.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed) {
    s_[0] = detail::splitmix64(seed);
    s_[1] = detail::splitmix64(s_[0]);
    s_[2] = detail::splitmix64(s_[1]);
    s_[3] = detail::splitmix64(s_[2]);
  }

  std::uint64_t seed() const { return seed_; }

  /// xoshiro256** step.
  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  /// Standard normal via Box-Muller; draws two uniforms per call.
  double gaussian() {
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  /// Uniform integer in [lo, hi], inclusive.
  std::uint64_t uniform_index(std::uint64_t n) {
    // Multiply-shift bounded draw (Lemire); deterministic, unbiased enough
    // at desk scale without the rejection loop.
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Independent child stream named by purpose (e.g. "init", "split").
  SeededRng derive(std::string_view name) const {
    return SeededRng(detail::splitmix64(seed_ ^ detail::fnv1a64(name)));
  }

  DenseMatrix uniform_matrix(std::size_t rows, std::size_t cols, double lo,
                             double hi) {
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = uniform(lo, hi);
    return m;
  }

  DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols,
                              double sigma = 1.0) {
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = sigma * gaussian();
    return m;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t seed_;
  std::uint64_t s_[4];
};

}  // namespace laeh
