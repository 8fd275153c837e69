#pragma once

// Finitely supported Fourier series on T^2 with 2x2 complex matrix
// coefficients: weighted norms, truncation, grid evaluation and spectral
// fitting, and the su(1,1) basis change.

#include <complex>
#include <map>
#include <vector>

#include "cclab/mat2.hpp"

namespace cclab {

struct Fourier2 {
  using Key = std::pair<int, int>;
  std::map<Key, CMat2> c;  // ordered: deterministic iteration

  static int norm1(const Key& k) { return std::abs(k.first) + std::abs(k.second); }

  void add(int k1, int k2, const CMat2& m) {
    auto [it, fresh] = c.try_emplace({k1, k2}, m);
    if (!fresh) it->second = it->second + m;
  }
  CMat2 coeff(int k1, int k2) const {
    auto it = c.find({k1, k2});
    return it == c.end() ? CMat2{} : it->second;
  }
  int radius() const {
    int r = 0;
    for (auto& [k, m] : c) r = std::max(r, norm1(k));
    return r;
  }
  bool empty() const { return c.empty(); }

  // |G|_h = sum_k ||G^(k)|| e^{2 pi |k| h}
  double weighted_norm(double h) const {
    double s = 0;
    for (auto& [k, m] : c) s += m.opnorm() * std::exp(2 * M_PI * norm1(k) * h);
    return s;
  }

  CMat2 eval(double t1, double t2) const {
    CMat2 v;
    for (auto& [k, m] : c) {
      double arg = 2 * M_PI * (k.first * t1 + k.second * t2);
      v = v + m * std::complex<double>(std::cos(arg), std::sin(arg));
    }
    return v;
  }
  Mat2 eval_real(double t1, double t2) const { return eval(t1, t2).real(); }

  Fourier2 operator+(const Fourier2& o) const {
    Fourier2 r = *this;
    for (auto& [k, m] : o.c) r.add(k.first, k.second, m);
    return r;
  }
  Fourier2 operator-(const Fourier2& o) const {
    Fourier2 r = *this;
    for (auto& [k, m] : o.c) r.add(k.first, k.second, m * std::complex<double>(-1, 0));
    return r;
  }
  Fourier2 operator*(std::complex<double> s) const {
    Fourier2 r = *this;
    for (auto& [k, m] : r.c) m = m * s;
    return r;
  }

  Fourier2 drop_below(double tol) const {
    Fourier2 r;
    for (auto& [k, m] : c)
      if (m.opnorm() > tol) r.c.emplace(k, m);
    return r;
  }

  // max ||conj(G^(-k)) - G^(k)|| : zero for real-valued functions
  double reality_defect() const {
    double d = 0;
    for (auto& [k, m] : c) {
      CMat2 other = coeff(-k.first, -k.second);
      d = std::max(d, (other.conjugate() - m).opnorm());
    }
    return d;
  }
  double trace_defect() const {
    double d = 0;
    for (auto& [k, m] : c) d = std::max(d, std::abs(m.trace()));
    return d;
  }
};

// T_K keeps |k| < K, R_K keeps |k| >= K; T_K F + R_K F = F exactly.
inline std::pair<Fourier2, Fourier2> truncate(const Fourier2& F, double K) {
  Fourier2 low, high;
  for (auto& [k, m] : F.c) {
    if (Fourier2::norm1(k) < K) low.c.emplace(k, m);
    else high.c.emplace(k, m);
  }
  return {low, high};
}

// su(1,1) basis change A -> M A M^{-1}, M = (1/(1+i)) [[1, -i], [1, i]]
inline CMat2 su11_conj(const CMat2& A, bool forward) {
  const std::complex<double> i(0, 1), d(1, 1);
  CMat2 M{1.0 / d, -i / d, 1.0 / d, i / d};
  CMat2 Minv = M.adjoint();  // M is unitary with det 1
  return forward ? M * A * Minv : Minv * A * M;
}

inline Fourier2 su11_transform(const Fourier2& F, bool forward) {
  Fourier2 r;
  for (auto& [k, m] : F.c) r.c.emplace(k, su11_conj(m, forward));
  return r;
}

// ---------------------------------------------------------------------------
// spectral fitting on an N x N grid (N a power of two)

namespace detail {

inline void fft_inplace(std::vector<std::complex<double>>& a, bool invert) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = 2 * M_PI / static_cast<double>(len) * (invert ? 1 : -1);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1);
      for (std::size_t j = 0; j < len / 2; ++j) {
        auto u = a[i + j], v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (invert)
    for (auto& x : a) x /= static_cast<double>(n);
}

}  // namespace detail

struct SpectralFit {
  Fourier2 F;
  double dropped = 0;  // largest coefficient norm discarded
};

// Fit a Fourier2 from an N x N grid of samples (row i = theta1 = i/N).
inline SpectralFit fit_fourier2_grid(std::vector<CMat2> grid, int N, double drop_tol = 1e-14) {
  // FFT each matrix entry over both axes
  auto entry = [&](const CMat2& m, int e) -> std::complex<double> {
    switch (e) {
      case 0: return m.a11;
      case 1: return m.a12;
      case 2: return m.a21;
      default: return m.a22;
    }
  };
  std::vector<std::vector<std::complex<double>>> hat(4);
  for (int e = 0; e < 4; ++e) {
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(N) * N);
    for (std::size_t idx = 0; idx < buf.size(); ++idx) buf[idx] = entry(grid[idx], e);
    // rows
    std::vector<std::complex<double>> tmp(N);
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) tmp[j] = buf[static_cast<std::size_t>(i) * N + j];
      detail::fft_inplace(tmp, false);
      for (int j = 0; j < N; ++j) buf[static_cast<std::size_t>(i) * N + j] = tmp[j];
    }
    // columns
    for (int j = 0; j < N; ++j) {
      for (int i = 0; i < N; ++i) tmp[i] = buf[static_cast<std::size_t>(i) * N + j];
      detail::fft_inplace(tmp, false);
      for (int i = 0; i < N; ++i) buf[static_cast<std::size_t>(i) * N + j] = tmp[i];
    }
    hat[e] = std::move(buf);
  }
  SpectralFit out;
  const double scale = 1.0 / (static_cast<double>(N) * N);
  for (int i = 0; i < N; ++i) {
    int k1 = (i <= N / 2) ? i : i - N;
    for (int j = 0; j < N; ++j) {
      int k2 = (j <= N / 2) ? j : j - N;
      std::size_t idx = static_cast<std::size_t>(i) * N + j;
      CMat2 m{hat[0][idx] * scale, hat[1][idx] * scale, hat[2][idx] * scale, hat[3][idx] * scale};
      double nm = m.opnorm();
      if (nm > drop_tol) out.F.c.emplace(Fourier2::Key{k1, k2}, m);
      else out.dropped = std::max(out.dropped, nm);
    }
  }
  return out;
}

template <typename Fn>
SpectralFit fit_fourier2(Fn&& sample, int N, double drop_tol = 1e-14) {
  std::vector<CMat2> grid(static_cast<std::size_t>(N) * N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      grid[static_cast<std::size_t>(i) * N + j] =
          sample(static_cast<double>(i) / N, static_cast<double>(j) / N);
  return fit_fourier2_grid(std::move(grid), N, drop_tol);
}

}  // namespace cclab
