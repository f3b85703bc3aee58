#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>

namespace qsnegf {

using cplx = std::complex<double>;

/// Largest system dimension handled by the continuum engine.
inline constexpr std::size_t kMaxDim = 2;

/// Dense complex matrix of dimension 1 or 2 stored inline.
///
/// The driven systems treated here (a single resonant level, or a two-level
/// system) never exceed two orbitals, so products and inverses are written
/// out in closed form and never allocate.
class SmallMatrix {
public:
  SmallMatrix() = default;
  explicit SmallMatrix(std::size_t n) : n_(n) {
    if (n == 0 || n > kMaxDim) throw std::invalid_argument("SmallMatrix: dimension must be 1 or 2");
  }

  static SmallMatrix identity(std::size_t n) {
    SmallMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t dim() const { return n_; }

  cplx& operator()(std::size_t i, std::size_t j) {
    assert(i < n_ && j < n_);
    return a_[i * kMaxDim + j];
  }
  const cplx& operator()(std::size_t i, std::size_t j) const {
    assert(i < n_ && j < n_);
    return a_[i * kMaxDim + j];
  }

  SmallMatrix& operator+=(const SmallMatrix& o) {
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
  }
  SmallMatrix& operator-=(const SmallMatrix& o) {
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
  }
  SmallMatrix& operator*=(cplx s) {
    for (auto& x : a_) x *= s;
    return *this;
  }

  friend SmallMatrix operator+(SmallMatrix a, const SmallMatrix& b) { return a += b; }
  friend SmallMatrix operator-(SmallMatrix a, const SmallMatrix& b) { return a -= b; }
  friend SmallMatrix operator*(SmallMatrix a, cplx s) { return a *= s; }
  friend SmallMatrix operator*(cplx s, SmallMatrix a) { return a *= s; }

  friend SmallMatrix operator*(const SmallMatrix& a, const SmallMatrix& b) {
    assert(a.n_ == b.n_);
    SmallMatrix c(a.n_);
    for (std::size_t i = 0; i < a.n_; ++i)
      for (std::size_t j = 0; j < a.n_; ++j) {
        cplx s = 0.0;
        for (std::size_t k = 0; k < a.n_; ++k) s += a(i, k) * b(k, j);
        c(i, j) = s;
      }
    return c;
  }

  cplx trace() const {
    cplx t = 0.0;
    for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
  }

  cplx determinant() const {
    if (n_ == 1) return a_[0];
    return (*this)(0, 0) * (*this)(1, 1) - (*this)(0, 1) * (*this)(1, 0);
  }

  /// Classical adjugate, so that M * adj(M) = det(M) * 1.
  SmallMatrix adjugate() const {
    SmallMatrix r(n_);
    if (n_ == 1) {
      r(0, 0) = 1.0;
      return r;
    }
    r(0, 0) = (*this)(1, 1);
    r(1, 1) = (*this)(0, 0);
    r(0, 1) = -(*this)(0, 1);
    r(1, 0) = -(*this)(1, 0);
    return r;
  }

  /// Inverse via the adjugate; throws std::domain_error on an exactly singular matrix.
  SmallMatrix inverse() const {
    const cplx d = determinant();
    if (d == cplx(0.0)) throw std::domain_error("SmallMatrix::inverse: singular matrix");
    return adjugate() * (1.0 / d);
  }

  SmallMatrix adjoint() const {
    SmallMatrix r(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) r(i, j) = std::conj((*this)(j, i));
    return r;
  }

  double max_abs() const {
    double m = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) m = std::max(m, std::abs((*this)(i, j)));
    return m;
  }

private:
  std::size_t n_ = 1;
  std::array<cplx, kMaxDim * kMaxDim> a_{};
};

/// Tr(a b) without forming the product.
inline cplx trace_product(const SmallMatrix& a, const SmallMatrix& b) {
  cplx t = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t k = 0; k < a.dim(); ++k) t += a(i, k) * b(k, i);
  return t;
}

/// det(fixed + diag) for a diagonal `diag`, expanded so that only det(fixed)
/// mixes entries of `fixed`. Its rounding is then the same for every `diag`,
/// which keeps nearly singular `fixed` usable.
inline cplx determinant_plus_diagonal(const SmallMatrix& fixed, const SmallMatrix& diag) {
  if (fixed.dim() == 1) return fixed(0, 0) + diag(0, 0);
  return fixed.determinant() + fixed(0, 0) * diag(1, 1) + diag(0, 0) * fixed(1, 1) + diag(0, 0) * diag(1, 1);
}

/// (fixed + diag)^{-1} with the determinant from determinant_plus_diagonal.
inline SmallMatrix inverse_plus_diagonal(const SmallMatrix& fixed, const SmallMatrix& diag) {
  const cplx d = determinant_plus_diagonal(fixed, diag);
  if (d == cplx(0.0)) throw std::domain_error("SmallMatrix::inverse: singular matrix");
  return (fixed + diag).adjugate() * (1.0 / d);
}

/// Smallest eigenvalue of a Hermitian matrix (closed form for n <= 2).
inline double min_hermitian_eigenvalue(const SmallMatrix& m) {
  if (m.dim() == 1) return m(0, 0).real();
  const double a = m(0, 0).real();
  const double d = m(1, 1).real();
  const double off = std::abs(m(0, 1));
  const double mean = 0.5 * (a + d);
  const double half = 0.5 * (a - d);
  return mean - std::sqrt(half * half + off * off);
}

}  // namespace qsnegf
