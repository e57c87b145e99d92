#pragma once

// Small dense linear-algebra helpers: log-magnitude determinants, permanents,
// and the OverlapValue carrier used by all overlap/form-factor routines.
// Overlaps span enormous dynamic ranges (products over O(L) factors), so all
// determinant formulas are assembled in (log|.|, phase) form.

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace rg {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

// ---- overlap carrier ----

struct OverlapValue {
  double log_magnitude = -std::numeric_limits<double>::infinity();
  std::complex<double> phase = {1.0, 0.0};  // unit modulus (sign for real data)

  std::complex<double> value() const {
    if (log_magnitude == -std::numeric_limits<double>::infinity()) return {0.0, 0.0};
    return phase * std::exp(log_magnitude);
  }
  bool is_zero() const {
    return log_magnitude == -std::numeric_limits<double>::infinity();
  }
};

inline OverlapValue ov_from_value(std::complex<double> v) {
  OverlapValue o;
  const double a = std::abs(v);
  if (a == 0.0) return o;
  o.log_magnitude = std::log(a);
  o.phase = v / a;
  return o;
}

inline OverlapValue ov_mul(const OverlapValue& a, const OverlapValue& b) {
  if (a.is_zero() || b.is_zero()) return OverlapValue{};
  return OverlapValue{a.log_magnitude + b.log_magnitude, a.phase * b.phase};
}

inline OverlapValue ov_div(const OverlapValue& a, const OverlapValue& b) {
  if (b.is_zero()) throw std::invalid_argument("ov_div: division by exact zero");
  if (a.is_zero()) return OverlapValue{};
  return OverlapValue{a.log_magnitude - b.log_magnitude, a.phase / b.phase};
}

inline OverlapValue ov_pow(const OverlapValue& a, int n) {
  if (a.is_zero()) return n == 0 ? ov_from_value(1.0) : OverlapValue{};
  return OverlapValue{n * a.log_magnitude, std::pow(a.phase, n)};
}

// |a/b - 1| in log space; huge values are clamped instead of overflowing
inline double ov_rel_diff(const OverlapValue& a, const OverlapValue& b) {
  if (a.is_zero() && b.is_zero()) return 0.0;
  if (a.is_zero() || b.is_zero()) return std::numeric_limits<double>::infinity();
  const double dlog = a.log_magnitude - b.log_magnitude;
  if (std::abs(dlog) > 40.0) return std::numeric_limits<double>::infinity();
  return std::abs(std::exp(dlog) * (a.phase / b.phase) - 1.0);
}

// ---- determinants ----

// det(A) = phase * exp(log_magnitude) via partial-pivot LU
inline OverlapValue logdet(const MatrixXcd& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("logdet: matrix not square");
  if (A.rows() == 0) return ov_from_value(1.0);
  Eigen::PartialPivLU<MatrixXcd> lu(A);
  OverlapValue o;
  o.log_magnitude = 0.0;
  o.phase = {static_cast<double>(lu.permutationP().determinant()), 0.0};
  const auto& U = lu.matrixLU();
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    const std::complex<double> d = U(i, i);
    const double a = std::abs(d);
    if (a == 0.0) return OverlapValue{};
    o.log_magnitude += std::log(a);
    o.phase *= d / a;
  }
  return o;
}

inline OverlapValue logdet(const MatrixXd& A) {
  return logdet(MatrixXcd(A.cast<std::complex<double>>()));
}

// ---- permanents (brute-force scale) ----

// Ryser's formula with Gray-code subset enumeration, O(2^n n); n <= 24
inline std::complex<double> permanent(const MatrixXcd& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("permanent: matrix not square");
  const int n = static_cast<int>(A.rows());
  if (n == 0) return {1.0, 0.0};
  if (n > 24) throw std::invalid_argument("permanent: dimension above brute-force cap");
  VectorXcd rowsum = VectorXcd::Zero(n);
  std::complex<double> total = 0.0;
  const std::uint64_t limit = 1ull << n;
  std::uint64_t gray = 0;
  double sign_subset = 1.0;  // (-1)^{n - |S|} tracked incrementally
  for (std::uint64_t k = 1; k < limit; ++k) {
    const std::uint64_t next = k ^ (k >> 1);
    const std::uint64_t diff = next ^ gray;
    const int col = __builtin_ctzll(diff);
    const bool added = next & diff;
    if (added)
      rowsum += A.col(col);
    else
      rowsum -= A.col(col);
    gray = next;
    sign_subset = -sign_subset;  // |S| changes parity each Gray step
    std::complex<double> prod = 1.0;
    for (int i = 0; i < n; ++i) prod *= rowsum(i);
    total += sign_subset * prod;
  }
  // accumulated sign_subset = (-1)^{|S|}; fold in the global (-1)^n
  return ((n % 2 == 0) ? 1.0 : -1.0) * total;
}

inline double permanent(const MatrixXd& A) {
  return permanent(MatrixXcd(A.cast<std::complex<double>>())).real();
}

}  // namespace rg
