#pragma once

// Mobius sieve, Mertens sums, Dirichlet characters, the periodic-decomposition
// inequality, and pretentious distances.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "cclab/errors.hpp"

namespace cclab {

using cplx = std::complex<double>;

inline std::vector<long long> primes_upto(long long n) {
  std::vector<bool> comp(std::max<long long>(n + 1, 2), false);
  std::vector<long long> out;
  for (long long i = 2; i <= n; ++i) {
    if (!comp[i]) {
      out.push_back(i);
      for (long long j = i * i; j <= n; j += i) comp[j] = true;
    }
  }
  return out;
}

struct MobiusTable {
  long long N = 0;
  std::vector<std::int8_t> mu;  // mu[n] valid for 1 <= n <= N
  int operator()(long long n) const { return mu[n]; }
};

// Exact mu(1..N) by a linear sieve.
inline MobiusTable sieve(long long N, long long budget = 200'000'000) {
  if (N < 1) throw Error("sieve wants N >= 1", exit_config);
  if (N > budget)
    throw CapacityExceeded("sieve table of " + std::to_string(N) +
                           " entries exceeds budget; use mobius_segment");
  MobiusTable t;
  t.N = N;
  t.mu.assign(N + 1, 0);
  std::vector<long long> primes;
  std::vector<long long> lp(N + 1, 0);
  t.mu[1] = 1;
  for (long long i = 2; i <= N; ++i) {
    if (lp[i] == 0) {
      lp[i] = i;
      t.mu[i] = -1;
      primes.push_back(i);
    }
    for (long long p : primes) {
      if (p > lp[i] || i * p > N) break;
      lp[i * p] = p;
      t.mu[i * p] = (i % p == 0) ? 0 : -t.mu[i];
    }
  }
  return t;
}

// mu(n) for n in [lo, hi), independent of table memory; `primes` must cover
// sqrt(hi-1).
inline std::vector<std::int8_t> mobius_segment(long long lo, long long hi,
                                               const std::vector<long long>& primes) {
  if (lo < 1 || hi < lo) throw Error("mobius_segment range", exit_config);
  const long long len = hi - lo;
  std::vector<long long> rem(len);
  std::vector<std::int8_t> par(len, 0), zero(len, 0);
  for (long long i = 0; i < len; ++i) rem[i] = lo + i;
  for (long long p : primes) {
    if (p * p >= hi) break;
    for (long long n = ((lo + p - 1) / p) * p; n < hi; n += p) {
      long long i = n - lo;
      int cnt = 0;
      while (rem[i] % p == 0) {
        rem[i] /= p;
        ++cnt;
      }
      if (cnt >= 2) zero[i] = 1;
      else par[i] ^= 1;
    }
  }
  std::vector<std::int8_t> out(len);
  for (long long i = 0; i < len; ++i) {
    if (zero[i]) out[i] = 0;
    else {
      int parity = par[i] ^ (rem[i] > 1 ? 1 : 0);
      out[i] = parity ? -1 : 1;
    }
  }
  if (lo == 1) out[0] = 1;
  return out;
}

inline long long mertens(const MobiusTable& t, long long N) {
  if (N > t.N) throw Error("mertens beyond table", exit_config);
  long long s = 0;
  for (long long n = 1; n <= N; ++n) s += t.mu[n];
  return s;
}

// ---------------------------------------------------------------------------
// Dirichlet characters

struct DirichletCharacter {
  int modulus = 1;
  std::vector<cplx> values;  // values[n] = chi(n mod modulus)
  int conductor = 1;
  bool principal = true;
  cplx operator()(long long n) const {
    long long r = n % modulus;
    if (r < 0) r += modulus;
    return values[r];
  }
};

namespace detail {

inline long long powmod(long long b, long long e, long long m) {
  long long r = 1 % m;
  b %= m;
  while (e) {
    if (e & 1) r = r * b % m;
    b = b * b % m;
    e >>= 1;
  }
  return r;
}

inline long long primitive_root_prime_power(long long p, int e, long long m) {
  // generator of (Z/p^e)^*, p odd prime
  std::vector<long long> fac;
  long long phi = p - 1, t = phi;
  for (long long d = 2; d * d <= t; ++d)
    if (t % d == 0) {
      fac.push_back(d);
      while (t % d == 0) t /= d;
    }
  if (t > 1) fac.push_back(t);
  long long g = 2;
  for (;; ++g) {
    bool ok = true;
    for (long long f : fac)
      if (powmod(g, phi / f, p) == 1) { ok = false; break; }
    if (ok) break;
  }
  if (e > 1 && powmod(g, p - 1, p * p) == 1) g += p;
  return g % m;
}

struct CyclicFactor {
  long long prime_power;       // p^e
  long long order;             // order of the generator
  std::vector<int> dlog;       // dlog[residue] or -1 when not in <gen> coset slice
};

}  // namespace detail

// All phi(q) Dirichlet characters mod q, built from CRT generators of the
// prime-power factors; deterministic order (exponent tuples, lexicographic).
inline std::vector<DirichletCharacter> characters(int q) {
  if (q < 1 || q > 100000) throw Error("characters wants 1 <= q <= 1e5", exit_config);
  // factor q
  std::vector<std::pair<long long, int>> pf;
  {
    int t = q;
    for (int d = 2; d * d <= t; ++d)
      if (t % d == 0) {
        int e = 0;
        while (t % d == 0) { t /= d; ++e; }
        pf.push_back({d, e});
      }
    if (t > 1) pf.push_back({t, 1});
  }
  // one or two cyclic factors per prime power, with dlog tables
  struct Component {
    long long m;                      // p^e
    std::vector<long long> orders;    // cyclic orders
    std::vector<std::vector<int>> dl; // dlog per generator, indexed by residue
  };
  std::vector<Component> comps;
  for (auto [p, e] : pf) {
    long long m = 1;
    for (int i = 0; i < e; ++i) m *= p;
    Component c;
    c.m = m;
    if (p == 2) {
      if (e == 1) { comps.push_back(c); continue; }  // trivial group
      if (e == 2) {
        c.orders = {2};
        c.dl = {std::vector<int>(m, -1)};
        c.dl[0][1] = 0;
        c.dl[0][3] = 1;
        comps.push_back(c);
        continue;
      }
      // (Z/2^e)^* = <-1> x <5>
      long long half = m / 4;
      c.orders = {2, half};
      c.dl = {std::vector<int>(m, -1), std::vector<int>(m, -1)};
      for (int s = 0; s < 2; ++s) {
        long long v = (s == 0) ? 1 : m - 1;
        for (long long t2 = 0; t2 < half; ++t2) {
          c.dl[0][v] = s;
          c.dl[1][v] = static_cast<int>(t2);
          v = v * 5 % m;
        }
      }
      comps.push_back(c);
      continue;
    }
    long long phi = m / p * (p - 1);
    long long g = detail::primitive_root_prime_power(p, e, m);
    c.orders = {phi};
    c.dl = {std::vector<int>(m, -1)};
    long long v = 1;
    for (long long t2 = 0; t2 < phi; ++t2) {
      c.dl[0][v] = static_cast<int>(t2);
      v = v * g % m;
    }
    comps.push_back(c);
  }
  // flatten cyclic orders
  std::vector<long long> orders;
  for (auto& c : comps)
    for (long long o : c.orders) orders.push_back(o);
  long long phi_q = 1;
  for (long long o : orders) phi_q *= o;

  std::vector<DirichletCharacter> out;
  out.reserve(phi_q);
  std::vector<long long> expo(orders.size(), 0);
  const double tau = 2.0 * M_PI;
  while (true) {
    DirichletCharacter chi;
    chi.modulus = q;
    chi.values.assign(q == 0 ? 1 : q, cplx(0, 0));
    bool principal = true;
    for (long long e2 : expo) principal &= (e2 == 0);
    chi.principal = principal;
    for (int n = 0; n < q; ++n) {
      if (std::gcd(n, q) != 1) continue;
      double arg = 0;
      std::size_t gi = 0;
      bool ok = true;
      for (auto& c : comps) {
        long long r = n % c.m;
        for (std::size_t j = 0; j < c.orders.size(); ++j, ++gi) {
          int dl = c.dl[j][r];
          if (dl < 0) { ok = false; break; }
          arg += tau * static_cast<double>(expo[gi]) * dl / static_cast<double>(c.orders[j]);
        }
        if (!ok) break;
      }
      chi.values[n] = ok ? std::polar(1.0, arg) : cplx(0, 0);
    }
    if (q == 1) chi.values[0] = 1.0;
    // conductor: smallest f | q with chi constant on coprime classes mod f
    for (int f = 1; f <= q; ++f) {
      if (q % f) continue;
      bool ok = true;
      std::vector<cplx> seen(f, cplx(2, 0));  // sentinel: |chi| <= 1
      for (int n = 0; n < q && ok; ++n) {
        if (std::gcd(n, q) != 1) continue;
        cplx& s = seen[n % f];
        if (s == cplx(2, 0)) s = chi.values[n];
        else if (std::abs(s - chi.values[n]) > 1e-9) ok = false;
      }
      if (ok) { chi.conductor = f; break; }
    }
    out.push_back(std::move(chi));
    // next exponent tuple
    std::size_t i = 0;
    while (i < orders.size() && ++expo[i] == orders[i]) { expo[i] = 0; ++i; }
    if (i == orders.size()) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Periodic-decomposition inequality

struct PeriodicSequence {
  int Q = 1;
  std::vector<cplx> values;  // |values| <= 1, values[n mod Q]
  cplx operator()(long long n) const { return values[((n % Q) + Q) % Q]; }
};

enum class CharacterFamily {
  AllModulus,      // chi runs over all characters mod Q/d (default; the
                   // inequality below is provable in this form)
  ConductorExact,  // primitive characters of conductor Q/d only (the literal
                   // "mod*" convention; no guarantee on small windows)
};

struct DecompositionBound {
  double lhs;  // |avg_{L<=n<L+MQ} mu(n) D(n)|^2
  double rhs;  // (sum_{d|Q} d^-2) * sum over pairs (d, chi) of |avg mu(dr)chi(r)|^2
};

// lhs <= rhs for every unit-bounded Q-periodic D when family == AllModulus:
// splitting n = d r by d = gcd(n, Q), expanding D(d r) over characters mod Q/d
// and applying Cauchy-Schwarz with weights d^-2 gives the stated constant,
// and the constant is sharp.
inline DecompositionBound decomposition_bound(long long L, int Q, int M,
                                              const PeriodicSequence& D, const MobiusTable& mu,
                                              CharacterFamily family = CharacterFamily::AllModulus) {
  if (D.Q != Q) throw Error("period mismatch", exit_config);
  if (L + static_cast<long long>(M) * Q > mu.N + 1)
    throw Error("mobius table too small for decomposition_bound", exit_config);
  const long long W = static_cast<long long>(M) * Q;
  cplx s(0, 0);
  for (long long n = L; n < L + W; ++n) s += static_cast<double>(mu(n)) * D(n);
  const double lhs = std::norm(s / static_cast<double>(W));

  double zeta = 0, pairs = 0;
  for (int d = 1; d <= Q; ++d) {
    if (Q % d) continue;
    zeta += 1.0 / (static_cast<double>(d) * d);
    const int m = Q / d;
    const long long cnt = W / d;
    const long long r0 = (L + d - 1) / d;  // ceil(L/d)
    for (const auto& chi : characters(m)) {
      if (family == CharacterFamily::ConductorExact && chi.conductor != m) continue;
      cplx T(0, 0);
      for (long long r = r0; r < r0 + cnt; ++r)
        T += static_cast<double>(mu(d * r)) * chi(r);
      pairs += std::norm(T / static_cast<double>(cnt));
    }
  }
  return {lhs, zeta * pairs};
}

// ---------------------------------------------------------------------------
// Pretentiousness

// D(nu, n^{it}, X)^2 = sum_{p<=X} (1 - Re(nu(p) p^{-it})) / p
inline double pretentious_distance(const std::vector<cplx>& nu, double t, long long X) {
  if (static_cast<long long>(nu.size()) < X + 1)
    throw Error("pretentious_distance wants nu on [1,X]", exit_config);
  double s = 0;
  for (long long p : primes_upto(X)) {
    cplx pit = std::polar(1.0, -t * std::log(static_cast<double>(p)));
    s += (1.0 - (nu[p] * pit).real()) / static_cast<double>(p);
  }
  return s;
}

inline double pretentious_M(const std::vector<cplx>& nu, long long X,
                            const std::vector<double>& t_grid) {
  double best = std::numeric_limits<double>::infinity();
  for (double t : t_grid) best = std::min(best, pretentious_distance(nu, t, X));
  return best;
}

// Desk-scale diagnostic for short-interval averages:
// avg_{X<=L<2X} |avg_{L<=n<L+l} nu(n)|^2.
inline double short_interval_diagnostic(const std::vector<cplx>& nu, long long X, long long l) {
  if (static_cast<long long>(nu.size()) < 2 * X + l)
    throw Error("short_interval_diagnostic wants nu up to 2X+l", exit_config);
  double acc = 0;
  cplx win(0, 0);
  for (long long n = X; n < X + l; ++n) win += nu[n];
  for (long long L = X; L < 2 * X; ++L) {
    acc += std::norm(win / static_cast<double>(l));
    win -= nu[L];
    win += nu[L + l];
  }
  return acc / static_cast<double>(X);
}

}  // namespace cclab
