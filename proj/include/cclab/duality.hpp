#pragma once

// Aubry duality: the dual long-range operator restricted to a window,
// eigenpairs by bisection + inverse iteration on the banded section,
// resonances of theta, the truncated eigenfunction block, and the conjugacy
// W with its rotation residual.

#include <algorithm>
#include <complex>
#include <random>
#include <vector>

#include "cclab/cocycle.hpp"
#include "cclab/errors.hpp"
#include "cclab/fourier2.hpp"
#include "cclab/mobius.hpp"
#include "cclab/torus.hpp"

namespace cclab {

// Fourier coefficients of a real trig polynomial: v_hat[k], k = -deg..deg
inline std::vector<cplx> potential_hat(const TrigPoly& v) {
  int d = v.degree();
  std::vector<cplx> out(2 * d + 1, cplx(0, 0));
  out[d] = v.c0;
  for (int k = 1; k <= d; ++k) {
    out[d + k] = cplx(v.cs[k - 1].first / 2.0, -v.cs[k - 1].second / 2.0);
    out[d - k] = std::conj(out[d + k]);
  }
  return out;
}

// Hermitian banded section of the dual operator: H[n,m] = v_hat(n-m) +
// 2 cos(2 pi (theta + n alpha)) [n = m], indices n, m in [-K, K].
struct DualSection {
  double theta = 0, alpha = 0;
  int K = 0;
  int band = 0;                          // bandwidth = degree of v
  std::vector<double> diag;              // size 2K+1
  std::vector<std::vector<cplx>> off;    // off[d-1][i] = H[i, i+d], d = 1..band
  TrigPoly v;

  int dim() const { return 2 * K + 1; }
  cplx entry(int i, int j) const {  // 0-based
    if (i == j) return diag[i];
    if (j > i) {
      int d = j - i;
      return d <= band ? off[d - 1][i] : cplx(0, 0);
    }
    return std::conj(entry(j, i));
  }
  // y = H x
  std::vector<cplx> apply(const std::vector<cplx>& x) const {
    const int n = dim();
    std::vector<cplx> y(n, cplx(0, 0));
    for (int i = 0; i < n; ++i) {
      y[i] += diag[i] * x[i];
      for (int d = 1; d <= band && i + d < n; ++d) {
        y[i] += off[d - 1][i] * x[i + d];
        y[i + d] += std::conj(off[d - 1][i]) * x[i];
      }
    }
    return y;
  }
};

inline DualSection dual_section(const TrigPoly& v, double alpha, double theta, int K) {
  if (K < v.degree()) throw Error("dual_section wants K >= degree(v)", exit_config);
  DualSection s;
  s.theta = theta;
  s.alpha = alpha;
  s.K = K;
  s.band = v.degree();
  s.v = v;
  const int n = 2 * K + 1;
  s.diag.resize(n);
  auto vh = potential_hat(v);
  int dv = v.degree();
  for (int i = 0; i < n; ++i) {
    int m = i - K;
    s.diag[i] = 2 * std::cos(2 * M_PI * (theta + m * alpha)) + vh[dv].real();
  }
  s.off.assign(std::max(1, dv), std::vector<cplx>(n, cplx(0, 0)));
  for (int d = 1; d <= dv; ++d)
    for (int i = 0; i + d < n; ++i) s.off[d - 1][i] = vh[dv - d];  // v_hat(-d) = H[i, i+d]
  return s;
}

namespace detail {

// number of eigenvalues of the section below sigma (LDL^H inertia)
inline int sturm_count(const DualSection& s, double sigma) {
  const int n = s.dim();
  const int b = std::max(1, s.band);
  // working upper band: w[d][i] = H[i, i+d] - sigma [d = 0]
  std::vector<std::vector<cplx>> w(b + 1, std::vector<cplx>(n, cplx(0, 0)));
  for (int i = 0; i < n; ++i) w[0][i] = s.diag[i] - sigma;
  for (int d = 1; d <= s.band; ++d)
    for (int i = 0; i + d < n; ++i) w[d][i] = s.off[d - 1][i];
  int count = 0;
  double scale = 1.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::fabs(s.diag[i]));
  for (int i = 0; i < n; ++i) {
    double d = w[0][i].real();
    if (std::fabs(d) < 1e-300 * scale) d = 1e-300 * scale;  // perturb a zero pivot
    if (d < 0) ++count;
    for (int r = 1; r <= b && i + r < n; ++r) {
      cplx lir = std::conj(w[r][i]);  // H[i+r, i]
      if (lir == cplx(0, 0)) continue;
      cplx f = lir / d;
      for (int c = r; c <= b && i + c < n; ++c) w[c - r][i + r] -= f * w[c][i];
    }
  }
  return count;
}

// banded LU with partial pivoting; solves (H - sigma I) x = rhs
struct BandedLU {
  int n = 0, b = 0;
  std::vector<std::vector<cplx>> rows;  // rows[i][j] = entry (i, i + j - b), j in [0, 3b]
  std::vector<int> perm;

  void factor(const DualSection& s, double sigma) {
    n = s.dim();
    b = std::max(1, s.band);
    rows.assign(n, std::vector<cplx>(3 * b + 1, cplx(0, 0)));
    perm.assign(n, 0);
    auto put = [&](int i, int j, cplx v) {
      int col = j - i + b;
      if (col >= 0 && col <= 3 * b) rows[i][col] = v;
    };
    for (int i = 0; i < n; ++i) {
      put(i, i, s.diag[i] - sigma);
      for (int d = 1; d <= s.band; ++d) {
        if (i + d < n) {
          put(i, i + d, s.off[d - 1][i]);
          put(i + d, i, std::conj(s.off[d - 1][i]));
        }
      }
    }
    for (int col = 0; col < n; ++col) {
      int best = col;
      double bestv = std::abs(rows[col][b]);
      for (int r = col + 1; r <= std::min(n - 1, col + b); ++r) {
        double v = std::abs(rows[r][col - r + b]);
        if (v > bestv) {
          bestv = v;
          best = r;
        }
      }
      perm[col] = best;
      if (best != col) {
        // align storage offsets when swapping rows
        std::vector<cplx> a(3 * b + 1, cplx(0, 0)), c(3 * b + 1, cplx(0, 0));
        for (int j = 0; j <= 3 * b; ++j) {
          int jcol = col + j - b;
          int off1 = jcol - col + b, off2 = jcol - best + b;
          cplx vc = (off1 >= 0 && off1 <= 3 * b) ? rows[col][off1] : cplx(0, 0);
          cplx vb = (off2 >= 0 && off2 <= 3 * b) ? rows[best][off2] : cplx(0, 0);
          a[j] = vb;
          c[j] = vc;
        }
        for (int j = 0; j <= 3 * b; ++j) {
          int jcol = col + j - b;
          int off1 = jcol - col + b, off2 = jcol - best + b;
          if (off1 >= 0 && off1 <= 3 * b) rows[col][off1] = a[j];
          if (off2 >= 0 && off2 <= 3 * b) rows[best][off2] = c[j];
        }
      }
      cplx piv = rows[col][b];
      if (std::abs(piv) < 1e-300) {
        rows[col][b] = piv = 1e-300;
      }
      for (int r = col + 1; r <= std::min(n - 1, col + b); ++r) {
        cplx f = rows[r][col - r + b] / piv;
        rows[r][col - r + b] = f;  // store the multiplier
        for (int j = col + 1; j <= std::min(n - 1, col + 2 * b); ++j) {
          int oc = j - col + b, orr = j - r + b;
          if (oc >= 0 && oc <= 3 * b && orr >= 0 && orr <= 3 * b)
            rows[r][orr] -= f * rows[col][oc];
        }
      }
    }
  }

  std::vector<cplx> solve(std::vector<cplx> x) const {
    for (int col = 0; col < n; ++col) {
      if (perm[col] != col) std::swap(x[col], x[perm[col]]);
      for (int r = col + 1; r <= std::min(n - 1, col + b); ++r)
        x[r] -= rows[r][col - r + b] * x[col];
    }
    for (int i = n - 1; i >= 0; --i) {
      cplx s = x[i];
      for (int j = i + 1; j <= std::min(n - 1, i + 2 * b); ++j) s -= rows[i][j - i + b] * x[j];
      x[i] = s / rows[i][b];
    }
    return x;
  }
};

}  // namespace detail

struct DualEigenvector {
  double E = 0;
  std::vector<cplx> u;     // u[k + K], k in [-K, K]
  int K = 0;
  bool u0_normalized = false;  // u_0 = 1 when the center entry was usable
  double residual = 0;         // ||H u - E u||_2 / ||u||_2
  cplx at(int k) const {
    return (std::abs(k) <= K) ? u[k + K] : cplx(0, 0);
  }
};

// Eigenpair with eigenvalue nearest E0: bisection on the inertia counts, then
// inverse iteration with Rayleigh refinement.
inline DualEigenvector eigenpair_near(const DualSection& s, double E0, double tol = 1e-10,
                                      int maxit = 60) {
  const int n = s.dim();
  // Gershgorin bound
  double R = 0;
  for (int i = 0; i < n; ++i) {
    double r = std::fabs(s.diag[i]);
    for (int d = 1; d <= s.band; ++d) {
      if (i + d < n) r += std::abs(s.off[d - 1][i]);
      if (i - d >= 0) r += std::abs(s.off[d - 1][i - d]);
    }
    R = std::max(R, r);
  }
  R += 1;
  auto count = [&](double x) { return detail::sturm_count(s, x); };
  const int c0 = count(E0);
  // nearest above: the (c0+1)-th eigenvalue; nearest below: the c0-th
  double above = std::numeric_limits<double>::infinity();
  double below = -std::numeric_limits<double>::infinity();
  if (c0 < n) {
    double lo = E0, hi = R;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * (1 + std::fabs(lo)); ++it) {
      double mid = 0.5 * (lo + hi);
      if (count(mid) > c0) hi = mid;
      else lo = mid;
    }
    above = 0.5 * (lo + hi);
  }
  if (c0 > 0) {
    double lo = -R, hi = E0;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * (1 + std::fabs(hi)); ++it) {
      double mid = 0.5 * (lo + hi);
      if (count(mid) >= c0) hi = mid;
      else lo = mid;
    }
    below = 0.5 * (lo + hi);
  }
  double lam = (E0 - below <= above - E0) ? below : above;
  if (!std::isfinite(lam)) throw NoConvergence("eigenpair_near: no spectrum bracket");

  // inverse iteration at a slightly shifted target
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<cplx> x(n);
  for (auto& xi : x) xi = cplx(unif(rng), unif(rng));
  double sigma = lam + 1e-11 * (1 + std::fabs(lam));
  DualEigenvector out;
  out.K = s.K;
  for (int it = 0; it < maxit; ++it) {
    detail::BandedLU lu;
    lu.factor(s, sigma);
    for (int sweep = 0; sweep < 3; ++sweep) {
      x = lu.solve(std::move(x));
      double nx = 0;
      for (auto& xi : x) nx += std::norm(xi);
      nx = std::sqrt(nx);
      for (auto& xi : x) xi /= nx;
    }
    // Rayleigh quotient and residual
    auto hx = s.apply(x);
    cplx num(0, 0);
    for (int i = 0; i < n; ++i) num += std::conj(x[i]) * hx[i];
    double mu = num.real();
    double res = 0;
    for (int i = 0; i < n; ++i) res += std::norm(hx[i] - mu * x[i]);
    res = std::sqrt(res);
    double scale = std::max(1.0, std::fabs(mu));
    if (res <= tol * scale) {
      out.E = mu;
      out.residual = res;
      out.u = x;
      break;
    }
    sigma = mu + 1e-12 * scale;
    if (it + 1 == maxit) throw NoConvergence("eigenpair_near: inverse iteration stalled");
  }
  // normalization: u_0 = 1 when usable, else keep l2 with a flag
  cplx center = out.u[s.K];
  double maxu = 0;
  for (auto& ui : out.u) maxu = std::max(maxu, std::abs(ui));
  if (std::abs(center) > 1e-8 * maxu) {
    for (auto& ui : out.u) ui /= center;
    out.u0_normalized = true;
    auto hx = s.apply(out.u);
    double res = 0, n2 = 0;
    for (int i = 0; i < n; ++i) {
      res += std::norm(hx[i] - out.E * out.u[i]);
      n2 += std::norm(out.u[i]);
    }
    out.residual = std::sqrt(res / n2);
  }
  return out;
}

// ordered epsilon_0-resonances of theta: |k| <= Kmax with ||2 theta - k alpha||
// <= e^{-eps0 |k|} attaining the running minimum over |j| <= |k|
inline std::vector<long long> epsilon_resonances(double theta, double alpha, double eps0,
                                                 long long Kmax) {
  if (eps0 <= 0) throw Error("epsilon_resonances wants eps0 > 0", exit_config);
  std::vector<long long> out;
  // minimality is over all |j| <= |k|, both signs included at level |k|
  double running = std::numeric_limits<double>::infinity();
  for (long long a = 0; a <= Kmax; ++a) {
    double vp = torus_norm(2 * theta - static_cast<double>(a) * alpha);
    double vm = (a == 0) ? vp : torus_norm(2 * theta + static_cast<double>(a) * alpha);
    double level_min = std::min(running, std::min(vp, vm));
    double gate = std::exp(-eps0 * static_cast<double>(a));
    if (vp <= level_min + 1e-18 && vp <= gate) out.push_back(a);
    if (a != 0 && vm <= level_min + 1e-18 && vm <= gate) out.push_back(-a);
    running = level_min;
  }
  std::sort(out.begin(), out.end(),
            [](long long a, long long b) { return std::abs(a) < std::abs(b) || (std::abs(a) == std::abs(b) && a < b); });
  return out;
}

// ---------------------------------------------------------------------------
// truncated eigenfunction block and the conjugacy W

struct TruncatedBlock {
  // U^I(x) = (e^{2 pi i theta} uI(x), uI(x - alpha))^T and the defect h with
  // S_{v,E} U^I = e^{2 pi i theta} (U^I(x + alpha) + (h, 0)^T)
  std::vector<cplx> uI;     // coefficients on [-K, K] (zero outside I)
  std::vector<cplx> h_hat;  // coefficients on [-K - band, K + band]
  int K = 0, band = 0;
  double h_sup = 0;

  cplx uI_at(double x) const {
    cplx s(0, 0);
    for (int k = -K; k <= K; ++k) {
      double a = 2 * M_PI * k * x;
      s += uI[k + K] * cplx(std::cos(a), std::sin(a));
    }
    return s;
  }
  cplx h_at(double x) const {
    cplx s(0, 0);
    int R = K + band;
    for (int k = -R; k <= R; ++k) {
      double a = 2 * M_PI * k * x;
      s += h_hat[k + R] * cplx(std::cos(a), std::sin(a));
    }
    return s;
  }
};

inline TruncatedBlock truncated_block(const DualSection& s, const std::vector<cplx>& u_full,
                                      double E, int lo, int hi, int grid = 1024) {
  const int K = s.K, dv = std::max(1, s.band);
  if (lo < -K || hi > K || lo > hi) throw Error("truncated_block window out of range", exit_config);
  TruncatedBlock tb;
  tb.K = K;
  tb.band = s.band;
  tb.uI.assign(2 * K + 1, cplx(0, 0));
  for (int k = lo; k <= hi; ++k) tb.uI[k + K] = u_full[k + K];
  auto vh = potential_hat(s.v);
  const int R = K + dv;
  tb.h_hat.assign(2 * R + 1, cplx(0, 0));
  for (int k = -R; k <= R; ++k) {
    cplx acc(0, 0);
    if (k >= lo && k <= hi)
      acc += (E - 2 * std::cos(2 * M_PI * (s.theta + k * s.alpha))) * u_full[k + K];
    for (int l = -s.band; l <= s.band; ++l) {
      int km = k - l;
      if (km >= lo && km <= hi) acc -= u_full[km + K] * vh[s.band + l];
    }
    tb.h_hat[k + R] = acc;
  }
  for (int i = 0; i < grid; ++i)
    tb.h_sup = std::max(tb.h_sup, std::abs(tb.h_at(static_cast<double>(i) / grid)));
  return tb;
}

struct ConjugacyW {
  int grid = 0;
  double theta = 0, alpha = 0;
  int sigma = 1;
  double detFloor = 0;      // min over grid of |det B|
  double max_re_detB = 0;   // det B is purely imaginary in exact arithmetic
  std::vector<Mat2> W;      // samples W(i/grid)
  std::vector<std::complex<double>> wfft[4];  // spectral coefficients per entry

  Mat2 at(double x) const {
    // evaluate through the spectral representation (needed off-grid)
    Mat2 m;
    const int N = grid;
    double* out[4] = {&m.a11, &m.a12, &m.a21, &m.a22};
    for (int e = 0; e < 4; ++e) {
      cplx s(0, 0);
      for (int i = 0; i < N; ++i) {
        int k = (i <= N / 2) ? i : i - N;
        double a = 2 * M_PI * k * x;
        s += wfft[e][i] * cplx(std::cos(a), std::sin(a));
      }
      *out[e] = s.real();
    }
    return m;
  }
};

// W = (S, sigma T)/|det B / 2|^{1/2} with S = Re U^{I0}, T = Im U^{I0} and
// B = (U^{I0}, conj U^{I0}); det W = 1 on the grid by construction.
inline ConjugacyW build_W(const DualSection& s, const TruncatedBlock& tb, int grid = 4096,
                          double det_floor_tol = 1e-8) {
  ConjugacyW w;
  w.grid = grid;
  w.theta = s.theta;
  w.alpha = s.alpha;
  const cplx phase = std::polar(1.0, 2 * M_PI * s.theta);
  std::vector<cplx> U1(grid), U2(grid);
  for (int i = 0; i < grid; ++i) {
    double x = static_cast<double>(i) / grid;
    U1[i] = phase * tb.uI_at(x);
    U2[i] = tb.uI_at(x - s.alpha);
  }
  // det B = U1 conj(U2) - U2 conj(U1) = 2 i Im(U1 conj(U2)); pick sigma from
  // the sign of det(S, T) = -Im(U1 conj(U2))
  double floor = std::numeric_limits<double>::infinity();
  double re_max = 0;
  double sgn = 0;
  for (int i = 0; i < grid; ++i) {
    cplx detB = U1[i] * std::conj(U2[i]) - U2[i] * std::conj(U1[i]);
    floor = std::min(floor, std::abs(detB));
    re_max = std::max(re_max, std::abs(detB.real()));
    double st = -std::imag(U1[i] * std::conj(U2[i]));
    if (i == 0) sgn = st;
  }
  w.detFloor = floor;
  w.max_re_detB = re_max;
  if (floor <= det_floor_tol)
    throw DegenerateDeterminant("inf |det B| = " + std::to_string(floor) +
                                "; resonance window too small or wrong theta");
  w.sigma = (sgn > 0) ? 1 : -1;
  w.W.resize(grid);
  for (int i = 0; i < grid; ++i) {
    double S1 = U1[i].real(), S2 = U2[i].real();
    double T1 = U1[i].imag(), T2 = U2[i].imag();
    double det2 = std::fabs(S1 * (w.sigma * T2) - (w.sigma * T1) * S2);
    double scale = 1.0 / std::sqrt(det2);
    w.W[i] = Mat2{S1, w.sigma * T1, S2, w.sigma * T2} * scale;
  }
  // spectral representation for off-grid evaluation
  for (int e = 0; e < 4; ++e) {
    std::vector<cplx> buf(grid);
    for (int i = 0; i < grid; ++i) {
      const Mat2& m = w.W[i];
      buf[i] = (e == 0) ? m.a11 : (e == 1) ? m.a12 : (e == 2) ? m.a21 : m.a22;
    }
    detail::fft_inplace(buf, false);
    for (auto& v : buf) v /= static_cast<double>(grid);
    w.wfft[e] = std::move(buf);
  }
  return w;
}

struct RotationResidual {
  double value = 0;  // sup over the grid, best sign
  int sign = 1;      // the sign s with residual against R_{s theta}
};

inline RotationResidual rotation_residual(const CocycleFn& c, const ConjugacyW& w) {
  const int N = w.grid;
  // W(x + alpha) by a spectral phase shift of the coefficients
  std::vector<Mat2> Wshift(N);
  {
    std::vector<std::vector<cplx>> shifted(4);
    for (int e = 0; e < 4; ++e) {
      shifted[e] = w.wfft[e];
      for (int i = 0; i < N; ++i) {
        int k = (i <= N / 2) ? i : i - N;
        shifted[e][i] *= std::polar(1.0, 2 * M_PI * k * w.alpha);
      }
      detail::fft_inplace(shifted[e], true);
      for (auto& v : shifted[e]) v *= static_cast<double>(N);  // undo the 1/N of the inverse
    }
    for (int i = 0; i < N; ++i)
      Wshift[i] = Mat2{shifted[0][i].real(), shifted[1][i].real(), shifted[2][i].real(),
                       shifted[3][i].real()};
  }
  double best = std::numeric_limits<double>::infinity();
  int bestsign = 1;
  for (int sgn : {1, -1}) {
    Mat2 target = Mat2::rotation(sgn * w.theta);
    double worst = 0;
    for (int i = 0; i < N; ++i) {
      double x = static_cast<double>(i) / N;
      Mat2 lhs = Wshift[i].inverse() * c(x) * w.W[i];
      worst = std::max(worst, (lhs - target).opnorm());
    }
    if (worst < best) {
      best = worst;
      bestsign = sgn;
    }
  }
  return {best, bestsign};
}

// ---------------------------------------------------------------------------
// the scanning pipeline

struct DualityResult {
  double theta = 0;
  double E = 0;
  double residual = 0;
  double detFloor = 0;
  double max_re_detB = 0;
  double decay_slope = 0;  // fitted slope of log|u_k| outside resonance windows
  int sigma = 1;
  double eigen_residual = 0;
  bool u0_normalized = true;
};

inline double decay_slope_fit(const DualEigenvector& ev, double theta, double alpha) {
  auto res = epsilon_resonances(theta, alpha, 0.4, ev.K);
  auto near_resonance = [&](int k) {
    for (long long nj : res) {
      if (nj == 0) continue;
      double w = std::max(4.0, std::fabs(static_cast<double>(nj)) / 4.0);
      if (std::fabs(std::fabs(static_cast<double>(k)) - std::fabs(static_cast<double>(nj))) <= w)
        return true;
    }
    return false;
  };
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int k = -ev.K; k <= ev.K; ++k) {
    if (k == 0 || near_resonance(k)) continue;
    double a = std::abs(ev.at(k));
    if (a < 1e-300) continue;
    double xk = std::fabs(static_cast<double>(k)), yk = std::log(a);
    if (yk < -34) continue;  // at the noise floor of the eigensolve
    sx += xk;
    sy += yk;
    sxx += xk * xk;
    sxy += xk * yk;
    ++m;
  }
  if (m < 4) return 0;
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

inline DualityResult duality_evaluate(const TrigPoly& v, double alpha, double theta, int K,
                                      double E0, int grid = 1024) {
  auto sec = dual_section(v, alpha, theta, K);
  auto ev = eigenpair_near(sec, E0);
  auto tb = truncated_block(sec, ev.u, ev.E, -K, K);
  auto w = build_W(sec, tb, grid);
  auto c = CocycleFn::schrodinger(alpha, v, ev.E);
  auto rr = rotation_residual(c, w);
  DualityResult out;
  out.theta = theta;
  out.E = ev.E;
  out.residual = rr.value;
  out.sigma = rr.sign;
  out.detFloor = w.detFloor;
  out.max_re_detB = w.max_re_detB;
  out.decay_slope = decay_slope_fit(ev, theta, alpha);
  out.eigen_residual = ev.residual;
  out.u0_normalized = ev.u0_normalized;
  return out;
}

// scan theta over (0, 1/2) minimizing the rotation residual
inline DualityResult duality_scan(const TrigPoly& v, double alpha, int K, double E0,
                                  int ntheta = 197, int coarse_grid = 1024, int final_grid = 4096) {
  DualityResult best;
  best.residual = std::numeric_limits<double>::infinity();
  for (int i = 0; i < ntheta; ++i) {
    double theta = 0.5 * (i + 0.5) / ntheta;
    try {
      auto r = duality_evaluate(v, alpha, theta, K, E0, coarse_grid);
      if (r.residual < best.residual) best = r;
    } catch (const Error&) {
      continue;  // degenerate determinant or stalled eigensolve at this theta
    }
  }
  if (!std::isfinite(best.residual)) throw NoConvergence("duality_scan: no usable theta");
  return duality_evaluate(v, alpha, best.theta, K, E0, final_grid);
}

}  // namespace cclab
