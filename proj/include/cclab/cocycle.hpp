#pragma once

// SL(2,R) cocycles over a circle rotation: transfer matrices, the projective
// action on T^1 x RP^1, Lyapunov exponents, invariant-cone certification, and
// the reducible closed forms.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "cclab/errors.hpp"
#include "cclab/mat2.hpp"

namespace cclab {

inline double mod1(double x) {
  double f = x - std::floor(x);
  return (f >= 1.0) ? f - 1.0 : f;
}

// RP^1 coordinate: the lift gamma maps directions to (-1/4, 1/4]
inline double rp1_reduce(double phi) {
  double f = phi - 0.5 * std::floor(2.0 * phi);  // [0, 1/2)
  return (f > 0.25) ? f - 0.5 : f;
}

// distance on RP^1 (mod 1/2)
inline double rp1_dist(double a, double b) {
  double d = std::fabs(a - b);
  d = d - 0.5 * std::floor(2.0 * d);
  return std::min(d, 0.5 - d);
}

inline double circle_dist(double a, double b) {
  double d = std::fabs(a - b);
  d -= std::floor(d);
  return std::min(d, 1.0 - d);
}

struct ProjPoint {
  double theta = 0;  // point of T^1, in [0,1)
  double phi = 0;    // point of RP^1 via the lift, in (-1/4, 1/4]
};

// direction angle of a nonzero vector, reduced to (-1/4, 1/4]
inline double vector_angle(double x, double y) {
  return rp1_reduce(std::atan2(y, x) / (2 * M_PI));
}

// Mobius action of A on a direction
inline double proj_angle(const Mat2& A, double phi) {
  double hat = 2 * M_PI * phi;
  auto w = A.apply(std::cos(hat), std::sin(hat));
  return vector_angle(w[0], w[1]);
}

// real trig polynomial sum_k (c_k cos 2 pi k x + s_k sin 2 pi k x)
struct TrigPoly {
  double c0 = 0;
  std::vector<std::pair<double, double>> cs;  // (cos, sin) coefficient per k >= 1
  double eval(double x) const {
    double v = c0;
    for (std::size_t k = 1; k <= cs.size(); ++k)
      v += cs[k - 1].first * std::cos(2 * M_PI * k * x) + cs[k - 1].second * std::sin(2 * M_PI * k * x);
    return v;
  }
  int degree() const { return static_cast<int>(cs.size()); }
  double sup_grid(int n = 1024) const {
    double m = 0;
    for (int i = 0; i < n; ++i) m = std::max(m, std::fabs(eval(static_cast<double>(i) / n)));
    return m;
  }
};

struct MatTrigPoly {
  Mat2 c0;
  std::vector<std::pair<Mat2, Mat2>> cs;
  Mat2 eval(double x) const {
    Mat2 v = c0;
    for (std::size_t k = 1; k <= cs.size(); ++k) {
      double c = std::cos(2 * M_PI * k * x), s = std::sin(2 * M_PI * k * x);
      v = v + cs[k - 1].first * c + cs[k - 1].second * s;
    }
    return v;
  }
};

// A cocycle (alpha, A): closed forms carry their own structure so that the
// projective dynamics can take exact branches where the reducible cases
// admit them.
class CocycleFn {
 public:
  enum class Kind { Constant, Rotation, Parabolic, Schrodinger, TrigTable, Callable };

  double alpha = 0;

  static CocycleFn constant(double alpha, const Mat2& A) {
    CocycleFn c;
    c.alpha = alpha;
    c.kind_ = Kind::Constant;
    c.constant_ = A;
    return c;
  }
  static CocycleFn rotation(double alpha, double rho) {
    CocycleFn c;
    c.alpha = alpha;
    c.kind_ = Kind::Rotation;
    c.rho_ = rho;
    c.constant_ = Mat2::rotation(rho);
    return c;
  }
  // constant parabolic [[1, cpar], [0, 1]]
  static CocycleFn parabolic(double alpha, double cpar) {
    CocycleFn c;
    c.alpha = alpha;
    c.kind_ = Kind::Parabolic;
    c.cpar_ = cpar;
    c.constant_ = {1, cpar, 0, 1};
    return c;
  }
  // S_{v,E}(x) = [[E - v(x), -1], [1, 0]]
  static CocycleFn schrodinger(double alpha, const TrigPoly& v, double E) {
    CocycleFn c;
    c.alpha = alpha;
    c.kind_ = Kind::Schrodinger;
    c.v_ = v;
    c.E_ = E;
    return c;
  }
  // almost Mathieu: v = 2 lambda cos(2 pi x)
  static CocycleFn amo(double alpha, double lambda, double E) {
    TrigPoly v;
    v.cs = {{2 * lambda, 0.0}};
    return schrodinger(alpha, v, E);
  }
  static CocycleFn trig_table(double alpha, const MatTrigPoly& t) {
    CocycleFn c;
    c.alpha = alpha;
    c.kind_ = Kind::TrigTable;
    c.table_ = t;
    return c;
  }
  static CocycleFn callable(double alpha, std::function<Mat2(double)> f) {
    CocycleFn c;
    c.alpha = alpha;
    c.kind_ = Kind::Callable;
    c.fn_ = std::move(f);
    return c;
  }

  Kind kind() const { return kind_; }
  double rho() const { return rho_; }
  double cpar() const { return cpar_; }
  const TrigPoly& potential() const { return v_; }
  double energy() const { return E_; }

  Mat2 operator()(double x) const {
    switch (kind_) {
      case Kind::Constant:
      case Kind::Rotation:
      case Kind::Parabolic:
        return constant_;
      case Kind::Schrodinger:
        return {E_ - v_.eval(x), -1, 1, 0};
      case Kind::TrigTable:
        return table_.eval(x);
      case Kind::Callable:
        return fn_(x);
    }
    return Mat2::identity();
  }

  // max |det - 1| over a grid; the type invariant
  double det_drift(int grid = 1024) const {
    double m = 0;
    for (int i = 0; i < grid; ++i)
      m = std::max(m, std::fabs((*this)(static_cast<double>(i) / grid).det() - 1.0));
    return m;
  }

 private:
  Kind kind_ = Kind::Constant;
  Mat2 constant_ = Mat2::identity();
  double rho_ = 0, cpar_ = 0, E_ = 0;
  TrigPoly v_;
  MatTrigPoly table_;
  std::function<Mat2(double)> fn_;
};

// A_n(x): n >= 0 forward product, n < 0 inverse product; determinant drift is
// renormalized every 32 factors.
inline Mat2 transfer(const CocycleFn& c, double x, long long n) {
  Mat2 P = Mat2::identity();
  auto renorm = [&](Mat2& m) {
    double d = m.det();
    // beyond condition ~1e8 the numerical determinant is meaningless
    if (d > 0 && std::fabs(d - 1.0) > 1e-14 && std::fabs(d - 1.0) < 0.1) m = m / std::sqrt(d);
  };
  if (n >= 0) {
    for (long long i = 0; i < n; ++i) {
      P = c(mod1(x + static_cast<double>(i) * c.alpha)) * P;
      if ((i & 31) == 31) renorm(P);
    }
  } else {
    long long steps = 0;
    for (long long i = -1; i >= n; --i) {
      P = c(mod1(x + static_cast<double>(i) * c.alpha)).inverse() * P;
      if ((++steps & 31) == 0) renorm(P);
    }
  }
  renorm(P);
  return P;
}

// one step of the projective action
inline ProjPoint proj_step(const CocycleFn& c, const ProjPoint& p) {
  ProjPoint out;
  out.theta = mod1(p.theta + c.alpha);
  switch (c.kind()) {
    case CocycleFn::Kind::Rotation:
      out.phi = rp1_reduce(p.phi + c.rho());
      break;
    default:
      out.phi = proj_angle(c(p.theta), p.phi);
  }
  return out;
}

inline ProjPoint proj_step(const Mat2& A, const ProjPoint& p, double alpha) {
  if (A.det() == 0) throw Error("proj_step wants nonsingular A", exit_numeric);
  return {mod1(p.theta + alpha), proj_angle(A, p.phi)};
}

// closed-form parabolic orbit of the angle under [[1,c],[0,1]]^n:
// phi -> Pi( arctan(1/(cot(phi_hat) + n c)) / 2 pi )
inline double parabolic_orbit(double c, double phi, long long n) {
  if (c == 0) throw Error("parabolic_orbit wants c != 0", exit_config);
  phi = rp1_reduce(phi);
  if (phi == 0.0) return 0.0;  // the invariant horizontal direction
  double hat = 2 * M_PI * phi;
  double cot = std::cos(hat) / std::sin(hat);
  double denom = cot + static_cast<double>(n) * c;
  if (denom == 0.0) return 0.25;  // arctan(inf) = pi/2, the vertical direction
  return rp1_reduce(std::atan(1.0 / denom) / (2 * M_PI));
}

struct LyapunovEstimate {
  double value = 0;       // nonnegative-clipped phase average of (1/N) ln ||A_N||
  double dispersion = 0;  // standard deviation over phases
  int phases = 0;
};

// (1/N) ln ||A_N(x)|| averaged over equidistributed phases, with norm
// renormalization every 32 steps.
inline LyapunovEstimate lyapunov(const CocycleFn& c, long long N, int phases = 64,
                                 std::uint64_t seed = 1) {
  if (N < 1) throw Error("lyapunov wants N >= 1", exit_config);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double offset = unif(rng);
  std::vector<double> vals(phases);
  auto work = [&](int i) {
    double x = mod1(offset + static_cast<double>(i) / phases);
    Mat2 P = Mat2::identity();
    double logsum = 0;
    for (long long n = 0; n < N; ++n) {
      P = c(mod1(x + static_cast<double>(n) * c.alpha)) * P;
      if ((n & 31) == 31) {
        double s = P.frob();
        logsum += std::log(s);
        P = P / s;
      }
    }
    vals[i] = (logsum + std::log(P.opnorm())) / static_cast<double>(N);
  };
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (phases >= 8 && hw > 1) {
    std::vector<std::thread> pool;
    std::size_t nthreads = std::min<std::size_t>(hw, 8);
    for (std::size_t t = 0; t < nthreads; ++t)
      pool.emplace_back([&, t] {
        for (int i = static_cast<int>(t); i < phases; i += static_cast<int>(nthreads)) work(i);
      });
    for (auto& th : pool) th.join();
  } else {
    for (int i = 0; i < phases; ++i) work(i);
  }
  double mean = 0;
  for (double v : vals) mean += v;
  mean /= phases;
  double var = 0;
  for (double v : vals) var += (v - mean) * (v - mean);
  LyapunovEstimate est;
  est.value = std::max(0.0, mean);
  est.dispersion = phases > 1 ? std::sqrt(var / (phases - 1)) : 0.0;
  est.phases = phases;
  return est;
}

// ---------------------------------------------------------------------------
// Uniform hyperbolicity by an invariant cone field

enum class UhStatus { Certified, Inconclusive };

struct UhResult {
  UhStatus status = UhStatus::Inconclusive;
  bool hyperbolic = false;
  double aperture = 0;                 // certified half-aperture (RP^1 units)
  std::vector<double> unstable;        // witness center field on the grid
  std::vector<double> stable;          // complement witness
  double margin = 0;
  std::string note;
};

// Constant-aperture cone field around the measured unstable direction field,
// checked for strict forward invariance with an explicit continuity margin.
// The aperture starts at 45 degrees (1/8 in RP^1 units) and shrinks
// geometrically before giving up.
inline UhResult uh_cone_test(const CocycleFn& c, int grid = 128, int iters = 64) {
  if (grid < 64) throw Error("uh_cone_test wants grid >= 64", exit_config);
  UhResult res;
  // pull back a generic direction to approximate the unstable field, push the
  // inverse forward for the stable field
  std::vector<double> u(grid), s(grid);
  for (int i = 0; i < grid; ++i) {
    double x = static_cast<double>(i) / grid;
    // per-step normalized vector iteration avoids overflow of the products
    double ux = 1.0, uy = 0.7071067811865476;
    for (int k = iters; k >= 1; --k) {
      auto w = c(mod1(x - k * c.alpha)).apply(ux, uy);
      double nw = std::hypot(w[0], w[1]);
      ux = w[0] / nw;
      uy = w[1] / nw;
    }
    u[i] = vector_angle(ux, uy);
    double sx = 1.0, sy = 0.7071067811865476;
    for (int k = iters - 1; k >= 0; --k) {
      auto w = c(mod1(x + k * c.alpha)).inverse().apply(sx, sy);
      double nw = std::hypot(w[0], w[1]);
      sx = w[0] / nw;
      sy = w[1] / nw;
    }
    s[i] = vector_angle(sx, sy);
  }
  res.unstable = u;
  res.stable = s;
  // continuity modulus of the center field on the grid
  double kappa = 0;
  for (int i = 0; i < grid; ++i) kappa = std::max(kappa, rp1_dist(u[i], u[(i + 1) % grid]));
  if (kappa > 0.1) {
    res.note = "unstable field not continuous at grid scale";
    return res;
  }
  double sep = 0.25;
  for (int i = 0; i < grid; ++i) sep = std::min(sep, rp1_dist(u[i], s[i]));
  for (double ap = 0.125; ap > 1e-4; ap *= 0.5) {
    if (2 * ap >= sep) continue;  // cones must avoid the stable field
    bool ok = true;
    double worst = 1.0;
    for (int i = 0; i < grid && ok; ++i) {
      double x = static_cast<double>(i) / grid;
      Mat2 A = c(x);
      // center image distance to the interpolated center at x + alpha
      double xa = mod1(x + c.alpha);
      int j = static_cast<int>(std::floor(xa * grid)) % grid;
      double frac = xa * grid - std::floor(xa * grid);
      // interpolate angles through the shorter arc
      double uj = u[j], uj1 = u[(j + 1) % grid];
      double dd = uj1 - uj;
      dd -= 0.5 * std::round(2.0 * dd);  // wrap to [-1/4, 1/4]
      double utarget = rp1_reduce(uj + frac * dd);
      for (double b : {-ap, ap}) {
        double img = proj_angle(A, rp1_reduce(u[i] + b));
        double dist = rp1_dist(img, utarget);
        worst = std::min(worst, ap - dist);
        if (dist >= ap - (2 * kappa + 1e-9)) ok = false;
      }
    }
    if (ok) {
      res.status = UhStatus::Certified;
      res.hyperbolic = true;
      res.aperture = ap;
      res.margin = worst;
      return res;
    }
  }
  res.note = "no strictly invariant cone found across the aperture schedule";
  return res;
}

// ---------------------------------------------------------------------------
// Conjugation

// B(.+alpha)^{-1} A(.) B(.) evaluated pointwise. When `halve` is set, B is a
// map of the double cover (PSL lift); the product is still 1-periodic.
inline CocycleFn conjugate(const CocycleFn& c, std::function<Mat2(double)> B, bool halve = false,
                           int check_grid = 256) {
  for (int i = 0; i < check_grid; ++i) {
    double x = (halve ? 2.0 : 1.0) * static_cast<double>(i) / check_grid;
    double d = std::fabs(B(x).det());
    if (d < 1e-6) throw SingularConjugacy("det B below 1e-6 at x = " + std::to_string(x));
  }
  double alpha = c.alpha;
  return CocycleFn::callable(alpha, [c, B, alpha](double x) {
    return B(x + alpha).inverse() * c(x) * B(x);
  });
}

}  // namespace cclab
