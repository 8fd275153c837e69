#pragma once

// 2x2 real/complex matrices with the closed forms the rest of the library
// leans on: operator norms, exponentials, principal SL(2,R) logarithms,
// SPD square roots, and a small Hermitian 3x3 eigenvalue helper.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "cclab/errors.hpp"

namespace cclab {

struct Mat2 {
  double a11 = 0, a12 = 0, a21 = 0, a22 = 0;

  static Mat2 identity() { return {1, 0, 0, 1}; }
  static Mat2 zero() { return {0, 0, 0, 0}; }
  // R_g = [[cos 2 pi g, -sin 2 pi g], [sin 2 pi g, cos 2 pi g]]
  static Mat2 rotation(double g) {
    double c = std::cos(2 * M_PI * g), s = std::sin(2 * M_PI * g);
    return {c, -s, s, c};
  }
  static Mat2 J() { return {0, 1, -1, 0}; }
  static Mat2 diag(double x, double y) { return {x, 0, 0, y}; }

  double det() const { return a11 * a22 - a12 * a21; }
  double trace() const { return a11 + a22; }
  Mat2 transpose() const { return {a11, a21, a12, a22}; }
  Mat2 inverse() const {
    double d = det();
    if (d == 0) throw Error("singular 2x2 inverse", exit_numeric);
    return {a22 / d, -a12 / d, -a21 / d, a11 / d};
  }
  double frob() const { return std::sqrt(a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22); }
  // operator 2-norm (largest singular value)
  double opnorm() const {
    double f2 = a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22;
    double d = det();
    double disc = f2 * f2 - 4 * d * d;
    if (disc < 0) disc = 0;
    return std::sqrt(0.5 * (f2 + std::sqrt(disc)));
  }
  Mat2 operator*(const Mat2& o) const {
    return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
            a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
  }
  Mat2 operator+(const Mat2& o) const { return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22}; }
  Mat2 operator-(const Mat2& o) const { return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22}; }
  Mat2 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
  Mat2 operator/(double s) const { return {a11 / s, a12 / s, a21 / s, a22 / s}; }
  std::array<double, 2> apply(double x, double y) const { return {a11 * x + a12 * y, a21 * x + a22 * y}; }
};

inline Mat2 operator*(double s, const Mat2& m) { return m * s; }

// exp(A) for traceless A via A^2 = -det(A) I
inline Mat2 mat2_exp_traceless(const Mat2& A) {
  double delta = -A.det();  // A^2 = delta I
  if (delta > 1e-300) {
    double l = std::sqrt(delta);
    return Mat2::identity() * std::cosh(l) + A * (std::sinh(l) / l);
  }
  if (delta < -1e-300) {
    double l = std::sqrt(-delta);
    return Mat2::identity() * std::cos(l) + A * (std::sin(l) / l);
  }
  return Mat2::identity() + A;
}

// exp(A) for general A: split off the trace
inline Mat2 mat2_exp(const Mat2& A) {
  double t = 0.5 * A.trace();
  Mat2 B = A - Mat2::identity() * t;
  return mat2_exp_traceless(B) * std::exp(t);
}

struct Sl2Log {
  Mat2 value;       // principal real logarithm (of M or of -M)
  bool psl_flip;    // true when the log is of -M (trace <= -2 branch)
};

// Principal logarithm of M in SL(2,R). For trace < -2 no real log exists; the
// projective representative -M is used and flagged.
inline Sl2Log sl2_log(const Mat2& M, double parabolic_tol = 1e-9) {
  Mat2 X = M;
  bool flip = false;
  double t = X.trace();
  if (t <= -2.0 - parabolic_tol || (t < 0 && std::abs(t + 2.0) <= parabolic_tol)) {
    X = X * -1.0;
    flip = true;
    t = X.trace();
  }
  Mat2 K = X - Mat2::identity() * (t / 2);  // traceless part; K^2 = (t^2/4 - 1) I
  double disc = t * t / 4.0 - 1.0;
  if (std::abs(disc) <= parabolic_tol * parabolic_tol || K.frob() < 1e-300) {
    // parabolic (or identity): log = K exactly when (M - I)^2 = 0
    return {K, flip};
  }
  if (disc < 0) {
    double s = std::sqrt(-disc);
    double phi = std::atan2(s, t / 2);  // in (0, pi)
    return {K * (phi / s), flip};
  }
  double s = std::sqrt(disc);
  double mu = std::acosh(t / 2);
  return {K * (mu / s), flip};
}

// sqrt of a symmetric positive definite 2x2
inline Mat2 sqrt_spd(const Mat2& G) {
  double d = G.det(), t = G.trace();
  if (d <= 0 || t <= 0) throw Error("sqrt_spd wants SPD input", exit_numeric);
  double s = std::sqrt(d);
  double denom = std::sqrt(t + 2 * s);
  return (G + Mat2::identity() * s) / denom;
}

// ---------------------------------------------------------------------------
// complex 2x2

struct CMat2 {
  std::complex<double> a11{0, 0}, a12{0, 0}, a21{0, 0}, a22{0, 0};

  static CMat2 from(const Mat2& m) { return {m.a11, m.a12, m.a21, m.a22}; }
  static CMat2 identity() { return {1, 0, 0, 1}; }
  Mat2 real() const { return {a11.real(), a12.real(), a21.real(), a22.real()}; }
  double max_imag() const {
    return std::max(std::max(std::abs(a11.imag()), std::abs(a12.imag())),
                    std::max(std::abs(a21.imag()), std::abs(a22.imag())));
  }
  std::complex<double> trace() const { return a11 + a22; }
  std::complex<double> det() const { return a11 * a22 - a12 * a21; }
  CMat2 adjoint() const { return {std::conj(a11), std::conj(a21), std::conj(a12), std::conj(a22)}; }
  CMat2 conjugate() const { return {std::conj(a11), std::conj(a12), std::conj(a21), std::conj(a22)}; }
  CMat2 inverse() const {
    auto d = det();
    if (std::abs(d) == 0) throw Error("singular complex 2x2 inverse", exit_numeric);
    return {a22 / d, -a12 / d, -a21 / d, a11 / d};
  }
  double frob() const {
    return std::sqrt(std::norm(a11) + std::norm(a12) + std::norm(a21) + std::norm(a22));
  }
  double opnorm() const {
    double f2 = std::norm(a11) + std::norm(a12) + std::norm(a21) + std::norm(a22);
    double d = std::abs(det());
    double disc = f2 * f2 - 4 * d * d;
    if (disc < 0) disc = 0;
    return std::sqrt(0.5 * (f2 + std::sqrt(disc)));
  }
  CMat2 operator*(const CMat2& o) const {
    return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
            a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
  }
  CMat2 operator+(const CMat2& o) const { return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22}; }
  CMat2 operator-(const CMat2& o) const { return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22}; }
  CMat2 operator*(std::complex<double> s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
};

inline CMat2 operator*(std::complex<double> s, const CMat2& m) { return m * s; }

// Eigenvalues of a Hermitian 3x3, ascending (trigonometric Cardano).
inline std::array<double, 3> hermitian3_eigenvalues(const std::array<std::array<std::complex<double>, 3>, 3>& H) {
  const double q = (H[0][0].real() + H[1][1].real() + H[2][2].real()) / 3.0;
  double p2 = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      std::complex<double> v = H[i][j];
      if (i == j) v -= q;
      p2 += std::norm(v);
    }
  double p = std::sqrt(p2 / 6.0);
  if (p < 1e-300) return {q, q, q};
  // B = (H - qI)/p ; r = det(B)/2
  std::array<std::array<std::complex<double>, 3>, 3> B = H;
  for (int i = 0; i < 3; ++i) B[i][i] -= q;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) B[i][j] /= p;
  std::complex<double> detB = B[0][0] * (B[1][1] * B[2][2] - B[1][2] * B[2][1]) -
                              B[0][1] * (B[1][0] * B[2][2] - B[1][2] * B[2][0]) +
                              B[0][2] * (B[1][0] * B[2][1] - B[1][1] * B[2][0]);
  double r = detB.real() / 2.0;
  r = std::clamp(r, -1.0, 1.0);
  double phi = std::acos(r) / 3.0;
  double e1 = q + 2 * p * std::cos(phi);
  double e3 = q + 2 * p * std::cos(phi + 2 * M_PI / 3.0);
  double e2 = 3 * q - e1 - e3;
  if (e3 > e2) std::swap(e3, e2);
  if (e2 > e1) std::swap(e2, e1);
  if (e3 > e2) std::swap(e3, e2);
  return {e3, e2, e1};
}

}  // namespace cclab
