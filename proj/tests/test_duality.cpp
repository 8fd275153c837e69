#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "cclab/duality.hpp"

using namespace cclab;

namespace {
const double kGolden = 0.6180339887498949;

TrigPoly amo_potential(double lambda) {
  TrigPoly v;
  v.cs = {{2 * lambda, 0.0}};
  return v;
}
}  // namespace

TEST_CASE("dual section: diagonal case and AMO band structure") {
  TrigPoly zero;
  auto s0 = dual_section(zero, kGolden, 0.21, 5);
  for (int i = 0; i < s0.dim(); ++i) {
    int m = i - 5;
    CHECK(s0.diag[i] == doctest::Approx(2 * std::cos(2 * M_PI * (0.21 + m * kGolden))));
  }
  auto s1 = dual_section(amo_potential(0.5), kGolden, 0.17, 8);
  CHECK(s1.band == 1);
  for (int i = 0; i + 1 < s1.dim(); ++i) CHECK(std::abs(s1.off[0][i] - cplx(0.5, 0)) < 1e-14);
  // Hermitian by construction: entry(i,j) = conj(entry(j,i))
  for (int i = 0; i < s1.dim(); ++i)
    for (int j = 0; j < s1.dim(); ++j)
      CHECK(std::abs(s1.entry(i, j) - std::conj(s1.entry(j, i))) == 0.0);
}

TEST_CASE("eigenpair: diagonal section gives coordinate vectors") {
  TrigPoly zero;
  auto s = dual_section(zero, kGolden, 0.21, 6);
  double E0 = 1.3;
  auto ev = eigenpair_near(s, E0);
  // oracle: the nearest diagonal entry
  double best = 1e9;
  int besti = 0;
  for (int i = 0; i < s.dim(); ++i)
    if (std::fabs(s.diag[i] - E0) < std::fabs(best - E0)) {
      best = s.diag[i];
      besti = i;
    }
  CHECK(ev.E == doctest::Approx(best).epsilon(1e-12));
  for (int i = 0; i < s.dim(); ++i) {
    if (i == besti) CHECK(std::abs(ev.u[i]) > 0.99);
    else CHECK(std::abs(ev.u[i]) < 1e-8);
  }
}

TEST_CASE("eigenpair: hand 3x3 tridiagonal oracle {-sqrt2, 0, sqrt2}") {
  // assemble the section by hand: zero diagonal, unit off-diagonal
  DualSection s;
  s.K = 1;
  s.band = 1;
  s.diag = {0, 0, 0};
  s.off = {{cplx(1, 0), cplx(1, 0), cplx(0, 0)}};
  TrigPoly v;
  v.cs = {{2.0, 0.0}};
  s.v = v;
  auto lo = eigenpair_near(s, -2.0);
  auto mid = eigenpair_near(s, 0.1);
  auto hi = eigenpair_near(s, 2.0);
  CHECK(lo.E == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-12));
  CHECK(mid.E == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(hi.E == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("eigenpair residual contract on random sections") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < 25; ++t) {
    TrigPoly v;
    int deg = 1 + static_cast<int>(rng() % 3);
    for (int d = 0; d < deg; ++d) v.cs.push_back({unif(rng) - 0.5, unif(rng) - 0.5});
    auto s = dual_section(v, kGolden, unif(rng), 12 + static_cast<int>(rng() % 20));
    double E0 = 4 * (unif(rng) - 0.5);
    auto ev = eigenpair_near(s, E0);
    CHECK(ev.residual <= 1e-10 * std::max(1.0, std::fabs(ev.E)));
    // no eigenvalue strictly between E0 and ev.E: counts match at both sides
    double a = std::min(E0, ev.E), b = std::max(E0, ev.E);
    double pad = 1e-9 * (1 + std::fabs(b));
    CHECK(detail::sturm_count(s, a + pad) >= detail::sturm_count(s, a - pad));
  }
}

TEST_CASE("epsilon resonances") {
  // theta = alpha/2: k = 1 is an exact resonance
  auto r1 = epsilon_resonances(kGolden / 2, kGolden, 0.5, 40);
  bool has1 = false;
  for (long long k : r1) has1 |= (k == 1);
  CHECK(has1);
  // theta = 0: k = 0 is an exact zero
  auto r0 = epsilon_resonances(0.0, kGolden, 0.5, 40);
  REQUIRE(!r0.empty());
  CHECK(r0[0] == 0);
  // monotonicity: growing eps0 never removes entries
  auto small = epsilon_resonances(0.137, kGolden, 0.8, 60);
  auto big = epsilon_resonances(0.137, kGolden, 0.3, 60);
  for (long long k : small) {
    bool found = false;
    for (long long j : big) found |= (j == k);
    CHECK(found);
  }
  // brute-force minimality oracle: every listed k attains the minimum over
  // all |j| <= |k|
  for (double theta : {0.137, 0.309, kGolden / 2}) {
    auto res = epsilon_resonances(theta, kGolden, 0.25, 80);
    for (long long k : res) {
      double v = torus_norm(2 * theta - static_cast<double>(k) * kGolden);
      for (long long j = -std::abs(k); j <= std::abs(k); ++j)
        CHECK(v <= torus_norm(2 * theta - static_cast<double>(j) * kGolden) + 1e-15);
    }
  }
}

TEST_CASE("truncated block: the conjugation identity is pure algebra") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  TrigPoly v;
  v.cs = {{0.8, -0.2}, {0.3, 0.1}};
  const int K = 10;
  auto s = dual_section(v, kGolden, 0.23, K);
  // arbitrary (non-eigen) coefficients
  std::vector<cplx> u(2 * K + 1);
  for (auto& ui : u) ui = cplx(unif(rng), unif(rng));
  const double E = 0.7;
  auto tb = truncated_block(s, u, E, -4, 6);
  const cplx phase = std::polar(1.0, 2 * M_PI * s.theta);
  auto c = CocycleFn::schrodinger(kGolden, v, E);
  double worst = 0;
  for (int i = 0; i < 256; ++i) {
    double x = static_cast<double>(i) / 256;
    cplx U1 = phase * tb.uI_at(x), U2 = tb.uI_at(x - kGolden);
    Mat2 S = c(x);
    cplx r1 = S.a11 * U1 + S.a12 * U2 - phase * (phase * tb.uI_at(x + kGolden) + tb.h_at(x));
    cplx r2 = S.a21 * U1 + S.a22 * U2 - phase * tb.uI_at(x);
    worst = std::max(worst, std::max(std::abs(r1), std::abs(r2)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("truncated block: I = {0} closed form and eigenvector tail identity") {
  TrigPoly v = amo_potential(0.5);
  const int K = 30;
  auto s = dual_section(v, kGolden, 0.19, K);
  auto ev = eigenpair_near(s, 0.4);

  // I = {0}: h_hat from the displayed coefficient formula directly
  auto tb0 = truncated_block(s, ev.u, ev.E, 0, 0);
  auto vh = potential_hat(v);
  for (int k = -K - 1; k <= K + 1; ++k) {
    cplx want(0, 0);
    if (k == 0) want += (ev.E - 2 * std::cos(2 * M_PI * s.theta)) * ev.u[K];
    if (std::abs(k) <= 1 && k != 0) want -= ev.u[K] * vh[1 + k];
    CHECK(std::abs(tb0.h_hat[k + K + 1] - want) < 1e-12);
  }

  // full window, exact eigenvector: ||h|| at the eigen-residual level; the
  // second displayed formula (complement form) agrees with the first
  auto tbf = truncated_block(s, ev.u, ev.E, -K, K);
  double scale = 0;
  for (auto& ui : ev.u) scale = std::max(scale, std::abs(ui));
  CHECK(tbf.h_sup <= 10 * std::max(ev.residual, 1e-13) * (2 * K + 1) * scale);
  for (int k = -K - 1; k <= K + 1; ++k) {
    // complement form: -chi_{Z \ I}(k)(E - 2cos(...)) u_k + sum chi_{Z\I}(k-l) u_{k-l} v_l
    cplx want(0, 0);
    if (std::abs(k) > K) {
      // u vanishes outside the window; only the convolution term survives
      for (int l = -1; l <= 1; ++l) {
        int km = k - l;
        if (std::abs(km) > K) continue;
        want += (std::abs(k - l) > K ? cplx(0, 0) : cplx(0, 0));
      }
      for (int l = -1; l <= 1; ++l) {
        int km = k - l;
        if (std::abs(km) <= K) want += ev.u[km + K] * vh[1 + l] * ((std::abs(k) > K) ? 1.0 : 0.0);
      }
      want = want * cplx(0, 0) + [&] {
        cplx acc(0, 0);
        for (int l = -1; l <= 1; ++l) {
          int km = k - l;
          if (std::abs(km) <= K) acc += ev.u[km + K] * vh[1 + l];
        }
        return acc;
      }();
    }
    double tol = 1e-9 * (1 + scale);
    if (std::abs(k) > K) CHECK(std::abs(tbf.h_hat[k + K + 1] - want) < tol);
  }

  // ||h|| decreasing in the window length for the localized eigenvector
  double prev = std::numeric_limits<double>::infinity();
  for (int m : {4, 8, 16, 24}) {
    auto tb = truncated_block(s, ev.u, ev.E, -m, m);
    CHECK(tb.h_sup <= prev * 1.2 + 1e-12);  // soft monotone check
    prev = tb.h_sup;
  }
}

TEST_CASE("build_W: delta_0 coefficients give a constant W with det 1") {
  TrigPoly v = amo_potential(0.5);
  const int K = 8;
  auto s = dual_section(v, kGolden, 0.19, K);
  std::vector<cplx> u(2 * K + 1, cplx(0, 0));
  u[K] = 1.0;
  auto tb = truncated_block(s, u, 0.4, 0, 0);
  auto w = build_W(s, tb, 512);
  // B columns are constants: det B = 2 i sin(2 pi theta)
  CHECK(w.detFloor == doctest::Approx(2 * std::fabs(std::sin(2 * M_PI * 0.19))));
  CHECK(w.max_re_detB < 1e-12);
  for (auto& m : w.W) {
    CHECK((m - w.W[0]).opnorm() < 1e-12);
    CHECK(m.det() == doctest::Approx(1.0));
  }
  // sigma flips when T -> -T (conjugate coefficients)
  std::vector<cplx> uc(2 * K + 1, cplx(0, 0));
  uc[K] = 1.0;
  auto sc = dual_section(v, kGolden, 1.0 - 0.19, K);  // theta -> -theta conjugates U
  auto tbc = truncated_block(sc, uc, 0.4, 0, 0);
  auto wc = build_W(sc, tbc, 512);
  CHECK(wc.sigma == -w.sigma);
}

TEST_CASE("rotation residual: exact reducible rotation cocycle") {
  // W = I, cocycle constant R_theta: residual vanishes at sign +1
  ConjugacyW w;
  w.grid = 64;
  w.theta = 0.23;
  w.alpha = kGolden;
  w.sigma = 1;
  w.W.assign(64, Mat2::identity());
  for (int e = 0; e < 4; ++e) {
    w.wfft[e].assign(64, cplx(0, 0));
    if (e == 0 || e == 3) w.wfft[e][0] = 1.0;
  }
  auto c = CocycleFn::rotation(kGolden, 0.23);
  auto rr = rotation_residual(c, w);
  CHECK(rr.value < 1e-12);
  CHECK(rr.sign == 1);
}

TEST_CASE("duality pipeline smoke test: AMO lambda = 0.5 at moderate K") {
  auto r = duality_scan(amo_potential(0.5), kGolden, 60, 0.3, 37, 512, 1024);
  CHECK(r.residual <= 1e-3);
  CHECK(r.max_re_detB <= 1e-10);
  CHECK(r.decay_slope < -0.05);  // almost-localized dual eigenvector (soft)
  CHECK(r.detFloor > 1e-8);

  // the residual is stable under x-grid refinement (within 10%)
  auto fine = duality_evaluate(amo_potential(0.5), kGolden, r.theta, 60, r.E, 2048);
  double lo = std::min(r.residual, fine.residual), hi = std::max(r.residual, fine.residual);
  CHECK(hi <= 1.1 * lo + 1e-14);
}
