#pragma once

// Fundamental solutions of 2x2 linear systems x' = M(t) x by classical RK4
// with step-doubling error control and determinant projection.

#include <functional>

#include "cclab/errors.hpp"
#include "cclab/mat2.hpp"

namespace cclab {

namespace detail {

inline Mat2 rk4_step(const std::function<Mat2(double)>& M, double t, double h, const Mat2& y) {
  Mat2 k1 = M(t) * y;
  Mat2 k2 = M(t + h / 2) * (y + k1 * (h / 2));
  Mat2 k3 = M(t + h / 2) * (y + k2 * (h / 2));
  Mat2 k4 = M(t + h) * (y + k3 * h);
  return y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
}

}  // namespace detail

// Phi^T solving x' = M(t) x from t = 0, local error controlled against `tol`
// (per unit time); the determinant is projected back to det(Phi) = 1 whenever
// it stays in the trust region.
inline Mat2 flow_rk4(const std::function<Mat2(double)>& M, double T, double tol = 1e-10,
                     double h0 = 0.0) {
  if (T == 0) return Mat2::identity();
  const double dir = (T > 0) ? 1.0 : -1.0;
  const double Ttot = std::fabs(T);
  double h = (h0 > 0) ? h0 : std::min(0.05, Ttot / 8);
  double t = 0;
  Mat2 y = Mat2::identity();
  int guard = 0;
  while (t < Ttot) {
    if (++guard > 100000000) throw StepUnderflow("flow_rk4 step budget exhausted");
    if (h < 1e-13 * std::max(1.0, Ttot)) throw StepUnderflow("flow_rk4 step underflow");
    double hs = std::min(h, Ttot - t);
    // for T < 0 integrate forward over [T, 0] and invert at the end
    auto Ms = [&](double s) { return M(dir > 0 ? s : s + T); };
    Mat2 full = detail::rk4_step(Ms, t, hs, y);
    Mat2 half = detail::rk4_step(Ms, t + hs / 2, hs / 2, detail::rk4_step(Ms, t, hs / 2, y));
    double err = (full - half).opnorm();
    double scale = std::max(1.0, half.opnorm());
    double budget = tol * hs * scale + 4e-15 * scale;  // roundoff floor
    if (err > budget && hs > 1e-13) {
      h = hs * std::max(0.1, 0.9 * std::pow(budget / (err + 1e-300), 0.25));
      continue;
    }
    // local Richardson extrapolation
    y = half + (half - full) / 15.0;
    double d = y.det();
    if (d > 0 && std::fabs(d - 1.0) < 0.1) y = y / std::sqrt(d);
    t += hs;
    if (err < 0.25 * tol * hs * scale) h = hs * 1.7;
  }
  if (dir < 0) return y.inverse();
  return y;
}

}  // namespace cclab
