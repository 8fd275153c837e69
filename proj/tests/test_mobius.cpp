#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <random>
#include <set>

#include "cclab/mobius.hpp"

using namespace cclab;

namespace {

// trial-division oracle
int mu_oracle(long long n) {
  int k = 0;
  for (long long p = 2; p * p <= n; ++p) {
    if (n % p == 0) {
      n /= p;
      if (n % p == 0) return 0;
      ++k;
    }
  }
  if (n > 1) ++k;
  return (k % 2) ? -1 : 1;
}

// brute-force character enumeration for small q: assign roots of unity to a
// greedy generating set and keep the consistent multiplicative closures
std::vector<std::vector<cplx>> characters_oracle(int q) {
  std::vector<int> units;
  for (int a = 0; a < q; ++a)
    if (std::gcd(a, q) == 1) units.push_back(a);
  auto ordmod = [&](int a) {
    int o = 1;
    long long x = a % q;
    while (x != 1) { x = x * a % q; ++o; }
    return o;
  };
  std::vector<int> gens;
  {
    std::set<int> span = {1 % q};
    auto close = [&](std::set<int>& S) {
      bool grew = true;
      while (grew) {
        grew = false;
        std::vector<int> v(S.begin(), S.end());
        for (int a : v)
          for (int b : v) {
            int c = static_cast<int>(1ll * a * b % q);
            if (!S.count(c)) { S.insert(c); grew = true; }
          }
      }
    };
    while (span.size() < units.size()) {
      for (int u : units)
        if (!span.count(u)) { gens.push_back(u); span.insert(u); close(span); break; }
    }
  }
  const int G = static_cast<int>(gens.size());
  std::vector<int> ords(G), idx(G, 0);
  for (int i = 0; i < G; ++i) ords[i] = ordmod(gens[i]);
  std::vector<std::vector<cplx>> out;
  while (true) {
    std::map<int, cplx> val;
    val[1 % q] = 1.0;
    std::vector<cplx> gv(G);
    for (int i = 0; i < G; ++i) gv[i] = std::polar(1.0, 2 * M_PI * idx[i] / ords[i]);
    bool ok = true, grew = true;
    while (grew && ok) {
      grew = false;
      auto snapshot = val;
      for (auto& [a, va] : snapshot) {
        for (int i = 0; i < G; ++i) {
          int b = static_cast<int>(1ll * a * gens[i] % q);
          cplx vb = va * gv[i];
          auto it = val.find(b);
          if (it == val.end()) { val[b] = vb; grew = true; }
          else if (std::abs(it->second - vb) > 1e-9) { ok = false; break; }
        }
        if (!ok) break;
      }
    }
    if (ok && val.size() == units.size()) {
      std::vector<cplx> tab(q, 0.0);
      for (auto& [a, v] : val) tab[a] = v;
      bool dup = false;
      for (auto& t : out) {
        double d = 0;
        for (int i = 0; i < q; ++i) d += std::abs(t[i] - tab[i]);
        if (d < 1e-6) { dup = true; break; }
      }
      if (!dup) out.push_back(tab);
    }
    int i = 0;
    while (i < G && ++idx[i] == ords[i]) { idx[i] = 0; ++i; }
    if (i == G) break;
  }
  if (q == 1) out.assign(1, std::vector<cplx>{1.0});
  return out;
}

long long euler_phi(int q) {
  long long r = q;
  int t = q;
  for (int d = 2; d * d <= t; ++d)
    if (t % d == 0) {
      r -= r / d;
      while (t % d == 0) t /= d;
    }
  if (t > 1) r -= r / t;
  return r;
}

}  // namespace

TEST_CASE("sieve matches trial division up to 1e5; segments agree") {
  auto t = sieve(100000);
  CHECK(t.mu[1] == 1);
  CHECK(t.mu[12] == 0);
  for (long long n = 1; n <= 100000; ++n) REQUIRE(t.mu[n] == mu_oracle(n));
  auto primes = primes_upto(1000);
  auto seg = mobius_segment(70000, 90000, primes);
  for (long long n = 70000; n < 90000; ++n) REQUIRE(seg[n - 70000] == t.mu[n]);
  CHECK_THROWS_AS(sieve(100, 10), CapacityExceeded);
}

TEST_CASE("mertens") {
  auto t = sieve(1000000);
  CHECK(mertens(t, 1) == 1);
  CHECK(mertens(t, 10) == -1);
  CHECK(std::abs(static_cast<double>(mertens(t, 1000000))) / 1e6 < 1e-3);
}

TEST_CASE("characters: counts, named values, structure") {
  auto c1 = characters(1);
  REQUIRE(c1.size() == 1);
  CHECK(std::abs(c1[0].values[0] - cplx(1, 0)) < 1e-12);

  auto c3 = characters(3);
  REQUIRE(c3.size() == 2);
  bool found_nonprincipal = false;
  for (auto& chi : c3)
    if (!chi.principal) {
      found_nonprincipal = true;
      CHECK(std::abs(chi.values[2] - cplx(-1, 0)) < 1e-12);
    }
  CHECK(found_nonprincipal);

  auto c8 = characters(8);
  REQUIRE(c8.size() == 4);
  for (auto& chi : c8)
    for (auto& v : chi.values) CHECK(std::abs(v.imag()) < 1e-12);
}

TEST_CASE("characters: multiplicativity, orthogonality, distinctness for q <= 100") {
  for (int q = 1; q <= 100; ++q) {
    auto cs = characters(q);
    REQUIRE(static_cast<long long>(cs.size()) == euler_phi(q));
    for (auto& chi : cs) {
      for (int n = 0; n < q; ++n) {
        if (std::gcd(n, q) == 1) CHECK(std::abs(std::abs(chi.values[n]) - 1.0) < 1e-10);
        else CHECK(std::abs(chi.values[n]) == 0.0);
        for (int m = n; m < q; ++m) {
          cplx lhs = chi(1ll * n * m);
          cplx rhs = chi.values[n] * chi.values[m];
          CHECK(std::abs(lhs - rhs) < 1e-9);
        }
      }
    }
    for (std::size_t i = 0; i < cs.size(); ++i)
      for (std::size_t j = i + 1; j < cs.size(); ++j) {
        cplx dot(0, 0);
        for (int n = 0; n < q; ++n) dot += cs[i].values[n] * std::conj(cs[j].values[n]);
        CHECK(std::abs(dot) < 1e-8);
      }
  }
}

TEST_CASE("characters agree with brute-force enumeration for q <= 30") {
  for (int q = 1; q <= 30; ++q) {
    auto mine = characters(q);
    auto oracle = characters_oracle(q);
    REQUIRE(mine.size() == oracle.size());
    for (auto& chi : mine) {
      bool matched = false;
      for (auto& tab : oracle) {
        double d = 0;
        for (int n = 0; n < q; ++n) d += std::abs(chi.values[n] - tab[n]);
        if (d < 1e-7) { matched = true; break; }
      }
      CHECK(matched);
    }
  }
}

TEST_CASE("conductor: definition check and principal conductors") {
  for (int q : {2, 3, 4, 6, 8, 9, 12, 15, 16, 24, 30, 36, 40}) {
    for (auto& chi : characters(q)) {
      if (chi.principal) CHECK(chi.conductor == 1);
      // chi is constant on coprime classes mod its conductor ...
      int f = chi.conductor;
      std::map<int, cplx> cls;
      for (int n = 0; n < q; ++n) {
        if (std::gcd(n, q) != 1) continue;
        auto [it, fresh] = cls.try_emplace(n % f, chi.values[n]);
        if (!fresh) CHECK(std::abs(it->second - chi.values[n]) < 1e-9);
      }
      // ... and on no smaller divisor
      for (int g = 1; g < f; ++g) {
        if (f % g) continue;
        std::map<int, cplx> cls2;
        bool constant = true;
        for (int n = 0; n < q; ++n) {
          if (std::gcd(n, q) != 1) continue;
          auto [it, fresh] = cls2.try_emplace(n % g, chi.values[n]);
          if (!fresh && std::abs(it->second - chi.values[n]) > 1e-9) constant = false;
        }
        CHECK_FALSE(constant);
      }
    }
  }
}

TEST_CASE("decomposition bound: zero D, hand-enumerated small case") {
  auto mu = sieve(4000);
  PeriodicSequence D0{2, {0.0, 0.0}};
  auto r0 = decomposition_bound(2, 2, 1, D0, mu);
  CHECK(r0.lhs == 0.0);
  CHECK(r0.rhs >= 0.0);

  // L=2, Q=2, M=1, D == 1, by hand: pairs (d=1, chi0 mod 2) and (d=2, trivial):
  //   |avg_{2<=r<4} mu(r)chi0(r)|^2 = |mu(3)/2|^2 = 1/4
  //   |avg_{1<=r<2} mu(2r)|^2      = |mu(2)|^2    = 1
  //   zeta = 1 + 1/4, rhs = 5/4 * 5/4 = 25/16
  PeriodicSequence D1{2, {1.0, 1.0}};
  auto r1 = decomposition_bound(2, 2, 1, D1, mu);
  CHECK(r1.lhs == doctest::Approx(1.0));
  CHECK(r1.rhs == doctest::Approx(25.0 / 16.0));
  CHECK(r1.lhs <= r1.rhs);
}

TEST_CASE("decomposition bound: no violations over random D") {
  auto mu = sieve(4000);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int trials = 0;
  while (trials < 1000) {
    int Q = 1 + static_cast<int>(rng() % 12);
    int M = 1 + static_cast<int>(rng() % 4);
    long long L = 1 + static_cast<long long>(rng() % 50);
    PeriodicSequence D;
    D.Q = Q;
    D.values.resize(Q);
    for (auto& v : D.values) v = std::polar(unif(rng), 2 * M_PI * unif(rng));
    auto r = decomposition_bound(L, Q, M, D, mu);
    REQUIRE(r.lhs <= r.rhs + 1e-12);
    ++trials;
  }
}

TEST_CASE("decomposition bound: worst-case D over the exhaustive grid") {
  // D(a) = conjugate phase of the class sum maximizes the lhs over all
  // unit-bounded D; the bound must hold even there
  auto mu = sieve(4000);
  for (int Q = 1; Q <= 12; ++Q)
    for (int M = 1; M <= 4; ++M)
      for (long long L = 1; L <= 20; ++L) {
        std::vector<cplx> S(Q, 0.0);
        for (long long n = L; n < L + 1ll * M * Q; ++n)
          S[n % Q] += static_cast<double>(mu(n));
        PeriodicSequence D;
        D.Q = Q;
        D.values.resize(Q);
        for (int a = 0; a < Q; ++a)
          D.values[a] = (std::abs(S[a]) == 0.0) ? cplx(1, 0) : std::conj(S[a]) / std::abs(S[a]);
        auto r = decomposition_bound(L, Q, M, D, mu);
        REQUIRE(r.lhs <= r.rhs + 1e-12);
      }
}

TEST_CASE("pretentious distance and M") {
  const long long X = 10000;
  std::vector<cplx> one(X + 1, 1.0);
  CHECK(pretentious_distance(one, 0.0, X) == doctest::Approx(0.0));

  auto t = sieve(X);
  std::vector<cplx> mu_tab(X + 1);
  for (long long n = 1; n <= X; ++n) mu_tab[n] = static_cast<double>(t.mu[n]);
  CHECK(pretentious_M(mu_tab, X, {0.0}) > 1.0);

  const double t0 = 1.7;
  std::vector<cplx> nit(X + 1);
  for (long long n = 1; n <= X; ++n) nit[n] = std::polar(1.0, t0 * std::log(static_cast<double>(n)));
  CHECK(pretentious_distance(nit, t0, X) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(pretentious_M(nit, X, {0.0, 0.5, 1.7, 2.0}) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("short interval diagnostic is finite and small for mu") {
  const long long X = 2000, l = 50;
  auto t = sieve(2 * X + l + 1);
  std::vector<cplx> nu(2 * X + l + 1);
  for (long long n = 1; n < static_cast<long long>(nu.size()); ++n)
    nu[n] = static_cast<double>(t.mu[n]);
  double v = short_interval_diagnostic(nu, X, l);
  CHECK(v >= 0.0);
  CHECK(v < 0.2);
}
