#pragma once

// double-precision torus helpers shared across modules

#include <algorithm>
#include <cmath>

namespace cclab {

inline double torus_norm(double x) {
  double f = x - std::floor(x);
  return f > 0.5 ? 1.0 - f : f;
}

inline double torus_norm(double alpha, long long k) {
  return torus_norm(static_cast<double>(k) * alpha);
}

}  // namespace cclab
