#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "cclab/kam.hpp"

using namespace cclab;

namespace {

const double kGolden = 0.6180339887498949;

std::complex<double> crand(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return {u(rng), u(rng)};
}

CMat2 random_traceless(std::mt19937_64& rng, double scale) {
  std::complex<double> a = crand(rng) * scale, b = crand(rng) * scale, c = crand(rng) * scale;
  return {a, b, c, -a};
}

// real-valued random sl(2,R) Fourier field with |k| <= K
Fourier2 random_real_field(std::mt19937_64& rng, int K, double scale, int modes) {
  Fourier2 F;
  for (int m = 0; m < modes; ++m) {
    int k1 = static_cast<int>(rng() % (2 * K + 1)) - K;
    int k2 = static_cast<int>(rng() % (2 * K + 1)) - K;
    if (std::abs(k1) + std::abs(k2) > K) continue;
    CMat2 c = random_traceless(rng, scale);
    F.add(k1, k2, c);
    F.add(-k1, -k2, c.conjugate());
  }
  return F;
}

// dense 3x3 complex solve oracle for the per-mode operator
CMat2 dense_mode_solve(const Mat2& A, double w, const CMat2& f) {
  const CMat2 Ac = CMat2::from(A);
  CMat2 basis[3] = {CMat2{1, 0, 0, -1}, CMat2{0, 1, 0, 0}, CMat2{0, 0, 1, 0}};
  std::complex<double> L[3][3], rhs[3] = {-f.a11, -f.a12, -f.a21};
  const std::complex<double> mu(0, 2 * M_PI * w);
  for (int j = 0; j < 3; ++j) {
    CMat2 img = basis[j] * mu - (Ac * basis[j] - basis[j] * Ac);
    L[0][j] = img.a11;
    L[1][j] = img.a12;
    L[2][j] = img.a21;
  }
  for (int col = 0; col < 3; ++col) {
    int best = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(L[r][col]) > std::abs(L[best][col])) best = r;
    for (int cc = 0; cc < 3; ++cc) std::swap(L[col][cc], L[best][cc]);
    std::swap(rhs[col], rhs[best]);
    for (int r = col + 1; r < 3; ++r) {
      auto fth = L[r][col] / L[col][col];
      for (int cc = col; cc < 3; ++cc) L[r][cc] -= fth * L[col][cc];
      rhs[r] -= fth * rhs[col];
    }
  }
  std::complex<double> y[3];
  for (int r = 2; r >= 0; --r) {
    auto s = rhs[r];
    for (int cc = r + 1; cc < 3; ++cc) s -= L[r][cc] * y[cc];
    y[r] = s / L[r][r];
  }
  return basis[0] * y[0] + basis[1] * y[1] + basis[2] * y[2];
}

}  // namespace

TEST_CASE("weighted norm") {
  Fourier2 F;
  F.add(0, 0, CMat2::from(Mat2::diag(1, 0)));
  CHECK(F.weighted_norm(0.3) == doctest::Approx(1.0));
  Fourier2 G;
  G.add(1, 0, CMat2::from(Mat2::diag(1, 0)));
  CHECK(G.weighted_norm(1.0 / (2 * M_PI)) == doctest::Approx(std::exp(1.0)));
  std::mt19937_64 rng(2);
  for (int t = 0; t < 40; ++t) {
    Fourier2 a = random_real_field(rng, 6, 0.7, 5);
    Fourier2 b = random_real_field(rng, 6, 0.4, 5);
    double h = 0.01 * (1 + t % 5);
    CHECK((a + b).weighted_norm(h) <= a.weighted_norm(h) + b.weighted_norm(h) + 1e-12);
  }
}

TEST_CASE("truncation splits exactly") {
  std::mt19937_64 rng(5);
  Fourier2 F = random_real_field(rng, 8, 1.0, 12);
  auto [lo, hi] = truncate(F, 4.0);
  for (auto& [k, m] : lo.c) CHECK(Fourier2::norm1(k) < 4);
  for (auto& [k, m] : hi.c) CHECK(Fourier2::norm1(k) >= 4);
  Fourier2 sum = lo + hi;
  for (auto& [k, m] : F.c) CHECK((sum.coeff(k.first, k.second) - m).opnorm() == 0.0);
  auto [z, all] = truncate(F, 0.0);
  CHECK(z.c.empty());
  CHECK(all.c.size() == F.c.size());
  auto [all2, z2] = truncate(F, F.radius() + 1.0);
  CHECK(z2.c.empty());
  CHECK(all2.c.size() == F.c.size());
}

TEST_CASE("su(1,1) transform") {
  CMat2 J = CMat2::from(Mat2::J());
  CMat2 g = su11_conj(J, true);
  CHECK(std::abs(g.a11 - std::complex<double>(0, 1)) < 1e-14);
  CHECK(std::abs(g.a22 - std::complex<double>(0, -1)) < 1e-14);
  CHECK(std::abs(g.a12) < 1e-14);
  CHECK(std::abs(g.a21) < 1e-14);
  CMat2 I = CMat2::identity();
  CHECK((su11_conj(I, true) - I).opnorm() < 1e-14);
  std::mt19937_64 rng(7);
  Fourier2 F = random_real_field(rng, 5, 1.0, 8);
  Fourier2 back = su11_transform(su11_transform(F, true), false);
  for (auto& [k, m] : F.c) CHECK((back.coeff(k.first, k.second) - m).opnorm() < 1e-14);
}

TEST_CASE("spectral fit round trip") {
  std::mt19937_64 rng(11);
  Fourier2 F = random_real_field(rng, 6, 0.9, 9);
  auto fit = fit_fourier2([&](double a, double b) { return F.eval(a, b); }, 32);
  for (auto& [k, m] : F.c)
    CHECK((fit.F.coeff(k.first, k.second) - m).opnorm() < 1e-12);
}

TEST_CASE("reality and tracelessness diagnostics") {
  std::mt19937_64 rng(19);
  Fourier2 F = random_real_field(rng, 6, 1.0, 8);
  CHECK(F.reality_defect() < 1e-15);
  CHECK(F.trace_defect() < 1e-15);
  Fourier2 bad = F;
  bad.add(2, 2, CMat2::from(Mat2::identity()));
  CHECK(bad.trace_defect() > 1.0);
}

TEST_CASE("resonance partition") {
  auto part = resonance_partition(kGolden, 0.0, 1e-3, 50);
  bool zero_in_l1c = false, zero_in_l2c = false;
  for (auto& k : part.lambda1_c) zero_in_l1c |= (k[0] == 0 && k[1] == 0);
  for (auto& k : part.lambda21_c) zero_in_l2c |= (k[0] == 0 && k[1] == 0);
  CHECK(zero_in_l1c);
  CHECK(zero_in_l2c);
  // golden omega, eta = 1e-3, K = 50: Lambda_1^c = {0}
  CHECK(part.lambda1_c.size() == 1);
  auto part2 = resonance_partition(kGolden, 0.137, 0.05, 30);
  for (auto& k : part2.lambda1_c) {
    bool found = false;
    for (auto& k2 : part2.lambda1_c) found |= (k2[0] == -k[0] && k2[1] == -k[1]);
    CHECK(found);
  }
  for (auto& k : part2.lambda21_c) {
    bool found = false;
    for (auto& k2 : part2.lambda22_c) found |= (k2[0] == -k[0] && k2[1] == -k[1]);
    CHECK(found);
  }
}

TEST_CASE("homological solve: single far mode solved with zero residual") {
  auto sys = LinearSystem::elliptic(0.11, kGolden, 0.008);
  std::mt19937_64 rng(3);
  CMat2 f = random_traceless(rng, 1e-7);
  sys.F.add(2, -1, f);
  sys.F.add(-2, 1, f.conjugate());
  auto hr = homological_solve(sys, 0.05);
  CHECK(hr.Fre.c.empty());
  CHECK(hr.Y.c.size() == 2);
  CHECK(homological_residual(sys, hr) < 1e-20);
  CMat2 yk = hr.Y.coeff(2, -1);
  CMat2 yo = dense_mode_solve(sys.Amat(), sys.omega_dot(2, -1), f);
  CHECK((yk - yo).opnorm() < 1e-12 * std::max(1.0, yo.opnorm()));
}

TEST_CASE("homological solve: constant rotation part routed to Fre") {
  auto sys = LinearSystem::elliptic(0.2, kGolden, 0.008);
  sys.F.add(0, 0, CMat2::from(Mat2::J() * 1e-6));
  auto hr = homological_solve(sys, 0.05);
  CHECK(hr.Y.c.empty());
  CHECK(hr.Fre.c.size() == 1);
  CHECK((hr.Fre.coeff(0, 0) - CMat2::from(Mat2::J() * 1e-6)).opnorm() < 1e-18);
}

TEST_CASE("homological solve: parabolic Neumann equals dense solve") {
  std::mt19937_64 rng(13);
  auto sys = LinearSystem::parabolic(0.4, kGolden, 0.008);
  sys.F = random_real_field(rng, 8, 1e-6, 10);
  HomologicalOptions nogate;
  nogate.enforce_gate = false;  // exercise the Neumann path at moderate eta
  auto hr = homological_solve(sys, 1e-4, nogate);
  CHECK(homological_residual(sys, hr) < 1e-18);
  int solved = 0;
  for (auto& [k, y] : hr.Y.c) {
    CMat2 f = sys.F.coeff(k.first, k.second);
    CMat2 oracle = dense_mode_solve(sys.Amat(), sys.omega_dot(k.first, k.second), f);
    CHECK((y - oracle).opnorm() < 1e-10 * std::max(1e-12, oracle.opnorm()));
    ++solved;
  }
  CHECK(solved > 0);
}

TEST_CASE("homological solve over random systems: residual, structure, |Y| bound") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    bool elliptic = trial % 2 == 0;
    double eta = 0.01 + 0.1 * unif(rng);
    double scale = 0.5 * std::pow(eta, 4);
    LinearSystem sys = elliptic
                           ? LinearSystem::elliptic(unif(rng) - 0.5, kGolden, 0.008)
                           : LinearSystem::parabolic(unif(rng) - 0.5, kGolden, 0.008);
    sys.F = random_real_field(rng, 12, scale / 20, 10);
    auto hr = homological_solve(sys, eta);
    CHECK(homological_residual(sys, hr) <= 1e-12 * std::max(1.0, sys.F.weighted_norm(0)));
    double h = 0.004;
    CHECK(hr.Y.weighted_norm(h) <= sys.F.weighted_norm(h) / eta * (1 + 1e-9));
    if (elliptic) {
      for (auto& [k, m] : hr.Fre.c) {
        CMat2 g = su11_conj(m, true);
        double w = sys.omega_dot(k.first, k.second);
        if (std::abs(g.a11) > 1e-18) CHECK(std::fabs(w) < eta);
        if (std::abs(g.a12) > 1e-18) CHECK(std::fabs(2 * sys.rho - w) < eta);
        if (std::abs(g.a21) > 1e-18) CHECK(std::fabs(2 * sys.rho + w) < eta);
      }
    } else {
      for (auto& [k, m] : hr.Fre.c)
        CHECK(std::fabs(sys.omega_dot(k.first, k.second)) < std::cbrt(eta));
    }
    CHECK(hr.Y.reality_defect() < 1e-18);
  }
}

TEST_CASE("homological solve smallness gate") {
  auto sys = LinearSystem::elliptic(0.1, kGolden, 0.008);
  sys.F.add(1, 0, CMat2::from(Mat2::diag(0.5, -0.5)));
  sys.F.add(-1, 0, CMat2::from(Mat2::diag(0.5, -0.5)));
  CHECK_THROWS_AS(homological_solve(sys, 0.05), SmallnessViolated);
}

TEST_CASE("rotation conjugation") {
  std::mt19937_64 rng(23);
  auto sys = LinearSystem::elliptic(0.31, kGolden, 0.008);
  sys.F = random_real_field(rng, 4, 1e-3, 6);

  auto same = rotation_conjugate(sys, 0, 0);
  CHECK(same.rho == doctest::Approx(sys.rho));
  for (auto& [k, m] : sys.F.c)
    CHECK((same.F.coeff(k.first, k.second) - m).opnorm() < 1e-14);

  auto rot = rotation_conjugate(sys, 1, -1);
  CHECK(rot.rho == doctest::Approx(sys.rho - 0.5 * (1 - kGolden)));
  CHECK(rotation_conjugate_residual(sys, rot, 1, -1) < 1e-10);

  auto rot2 = rotation_conjugate(sys, -2, 3);
  CHECK(rotation_conjugate_residual(sys, rot2, -2, 3) < 1e-10);
  CHECK(rot2.F.reality_defect() < 1e-12);
}

TEST_CASE("ode_flow basics") {
  auto sys = LinearSystem::elliptic(0.37, kGolden, 0.008);
  for (double t : {0.25, 1.0, 2.5}) {
    Mat2 got = ode_flow(sys, 0.1, 0.7, t);
    Mat2 want = mat2_exp(Mat2::J() * (2 * M_PI * 0.37 * t));
    CHECK((got - want).opnorm() < 1e-10);
    CHECK(std::fabs(got.det() - 1.0) < 1e-9);
  }
  auto M = [](double t) {
    return Mat2::J() * (0.8 + 0.3 * std::sin(2 * M_PI * t)) +
           Mat2::diag(0.1, -0.1) * std::cos(2 * M_PI * t);
  };
  auto fixed = [&](int steps) {
    Mat2 y = Mat2::identity();
    double hstep = 1.0 / steps;
    for (int i = 0; i < steps; ++i) y = detail::rk4_step(M, i * hstep, hstep, y);
    return y;
  };
  Mat2 ref = fixed(4096);
  double e1 = (fixed(64) - ref).opnorm();
  double e2 = (fixed(128) - ref).opnorm();
  double slope = std::log2(e1 / e2);
  CHECK(slope > 3.7);
  CHECK(slope < 4.6);
}
