#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "cclab/harness.hpp"

using namespace cclab;

namespace {
const double kGolden = 0.6180339887498949;

std::string strip_wall(const ResultRecord& r) {
  auto j = record_to_json(r);
  j.erase("wall_seconds");
  return j.dump();
}
}  // namespace

TEST_CASE("cocycle spec grammar") {
  auto a = parse_cocycle("amo:lambda=2,E=0.5", kGolden);
  CHECK(a(0.2).a11 == doctest::Approx(0.5 - 4 * std::cos(2 * M_PI * 0.2)));
  auto r = parse_cocycle("rotation:rho=0.25", kGolden);
  CHECK((r(0.9) - Mat2::rotation(0.25)).opnorm() < 1e-15);
  auto p = parse_cocycle("parabolic:c=0.3", kGolden);
  CHECK(p(0.1).a12 == 0.3);
  auto s = parse_cocycle("schrodinger:vcos=0.4|0.1,vsin=0|0.2,E=1.5", kGolden);
  CHECK(s(0.0).a11 == doctest::Approx(1.5 - 0.5));
  CHECK_THROWS_AS(parse_cocycle("amo:lambda=2", kGolden), ConfigParse);
  CHECK_THROWS_AS(parse_cocycle("banana:x=1", kGolden), ConfigParse);
}

TEST_CASE("f == 1 reduces exactly to Mertens") {
  ExperimentConfig cfg;
  cfg.system = "rotation:rho=0.31";
  cfg.iota1 = 0;
  cfg.iota2 = 0;
  cfg.N = 40000;
  auto rec = correlation_sum(cfg, kGolden);
  auto table = sieve(cfg.N);
  for (auto& cp : rec.checkpoints) {
    long long m = mertens(table, cp.N);
    CHECK(cp.re * static_cast<double>(cp.N) == doctest::Approx(static_cast<double>(m)).epsilon(1e-14));
    CHECK(cp.im == 0.0);
  }
}

TEST_CASE("rotation cocycle correlation is small; Weyl baseline vanishes") {
  ExperimentConfig cfg;
  cfg.system = "rotation:rho=0.4142135623730951";
  cfg.iota1 = 1;
  cfg.iota2 = 1;
  cfg.N = 200000;
  auto rec = correlation_sum(cfg, kGolden);
  CHECK(rec.final_abs < 0.05);

  cfg.mu_one = true;
  auto weyl = correlation_sum(cfg, kGolden);
  CHECK(weyl.final_abs < 0.02);  // integral of the character vanishes
}

TEST_CASE("orbit averages match closed forms for rotation and parabolic systems") {
  // rotation: f(T^n x0) = e^{2 pi i (i1 (theta0 + n a) + 2 i2 (phi0 + n rho))}
  ExperimentConfig cfg;
  cfg.system = "rotation:rho=0.23";
  cfg.iota1 = 2;
  cfg.iota2 = 1;
  cfg.theta0 = 0.15;
  cfg.phi0 = 0.05;
  cfg.N = 20000;
  cfg.checkpoints = {20000};
  auto rec = correlation_sum(cfg, kGolden);
  auto table = sieve(cfg.N);
  cplx acc(0, 0);
  for (long long n = 1; n <= cfg.N; ++n) {
    double theta = cfg.theta0 + n * kGolden;
    double phi = cfg.phi0 + n * 0.23;
    double arg = 2 * M_PI * (cfg.iota1 * theta + 2.0 * cfg.iota2 * phi);
    acc += static_cast<double>(table(n)) * cplx(std::cos(arg), std::sin(arg));
  }
  acc /= static_cast<double>(cfg.N);
  CHECK(std::abs(cplx(rec.checkpoints[0].re, rec.checkpoints[0].im) - acc) < 1e-9);

  // parabolic: the closed-form angle orbit
  cfg.system = "parabolic:c=0.7";
  cfg.phi0 = 0.11;
  auto rec2 = correlation_sum(cfg, kGolden);
  cplx acc2(0, 0);
  for (long long n = 1; n <= cfg.N; ++n) {
    double theta = cfg.theta0 + n * kGolden;
    double phi = parabolic_orbit(0.7, cfg.phi0, n);
    double arg = 2 * M_PI * (cfg.iota1 * theta + 2.0 * cfg.iota2 * phi);
    acc2 += static_cast<double>(table(n)) * cplx(std::cos(arg), std::sin(arg));
  }
  acc2 /= static_cast<double>(cfg.N);
  CHECK(std::abs(cplx(rec2.checkpoints[0].re, rec2.checkpoints[0].im) - acc2) < 1e-9);
}

TEST_CASE("determinism across 1, 4, 8 workers is bit-exact") {
  std::vector<ExperimentConfig> cfgs;
  for (int i = 0; i < 6; ++i) {
    ExperimentConfig cfg;
    cfg.system = "amo:lambda=0.5,E=" + std::to_string(0.3 + 0.1 * i);
    cfg.iota1 = 1;
    cfg.iota2 = 1;
    cfg.N = 20000;
    cfg.seed = 7 + i;
    cfgs.push_back(cfg);
  }
  auto r1 = run_many(cfgs, kGolden, 1);
  auto r4 = run_many(cfgs, kGolden, 4);
  auto r8 = run_many(cfgs, kGolden, 8);
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    CHECK(strip_wall(r1[i]) == strip_wall(r4[i]));
    CHECK(strip_wall(r1[i]) == strip_wall(r8[i]));
  }
}

TEST_CASE("persistence: identical config+seed gives identical hashes; report round trip") {
  namespace fs = std::filesystem;
  std::string dir = (fs::temp_directory_path() / "cclab_manifest_test").string();
  fs::remove_all(dir);
  ExperimentConfig cfg;
  cfg.system = "rotation:rho=0.3";
  cfg.iota1 = 1;
  cfg.iota2 = 0;
  cfg.N = 4096;
  cfg.seed = 42;
  auto a = correlation_sum(cfg, kGolden);
  auto b = correlation_sum(cfg, kGolden);
  CHECK(a.config_hash == b.config_hash);
  CHECK(strip_wall(a) == strip_wall(b));
  persist(a, dir);

  // empty checkpoint list defaults to powers of two plus the final N
  CHECK(a.checkpoints.back().N == cfg.N);

  // corrupted manifest entry: tampered hash is skipped with a warning
  {
    auto j = record_to_json(a);
    j["config_hash"] = "deadbeefdeadbeef";
    std::ofstream bad(dir + "/deadbeefdeadbeef.json");
    bad << j.dump();
  }
  {
    std::ofstream garbage(dir + "/nothex.json");
    garbage << "{ not json";
  }
  auto rep = report(dir);
  CHECK(rep.lines.size() == a.checkpoints.size());
  REQUIRE(rep.skipped.size() == 2);
  CHECK(rep.csv().rfind("N,re_avg,im_avg,abs_avg\n", 0) == 0);
}

TEST_CASE("config file parsing") {
  namespace fs = std::filesystem;
  std::string p = (fs::temp_directory_path() / "cclab_cfg_test.txt").string();
  {
    std::ofstream out(p);
    out << "# experiment\nsystem = amo:lambda=0.5,E=0.2\nalpha = golden\n"
        << "iota1 = 1\niota2 = 2\nN = 1000\nseed = 9\ncheckpoints = 10,100,1000\n";
  }
  auto cfg = parse_config_file(p);
  CHECK(cfg.system == "amo:lambda=0.5,E=0.2");
  CHECK(cfg.iota2 == 2);
  CHECK(cfg.checkpoints.size() == 3);
  {
    std::ofstream out(p);
    out << "bogus_key = 3\n";
  }
  CHECK_THROWS_AS(parse_config_file(p), ConfigParse);
}

TEST_CASE("parabolic scenario") {
  std::string spec = "1,1,1,1,50";
  for (int i = 0; i < 30; ++i) spec += ",1";
  auto cf = parse_alpha(spec, 35);
  double alpha = cf.alpha.convert_to<double>();
  ExperimentConfig cfg;
  cfg.system = "parabolic:c=0.05";
  cfg.iota1 = 0;  // a pure angle observable makes the circle case exact
  cfg.iota2 = 1;
  cfg.theta0 = 0.3;
  cfg.phi0 = 0.0;  // start on the invariant circle
  auto sc = parabolic_scenario(cfg, alpha, cf);
  CHECK(sc.qk == 5);
  CHECK(sc.approx_diff <= 1e-10);
  CHECK(sc.escape_violations == 0);
  CHECK(sc.escape_cells == 200);
  CHECK(sc.lemma71_lhs <= sc.lemma71_rhs + 1e-12);

  // with a theta-dependent observable the error is the genuine theta drift
  cfg.iota1 = 1;
  auto scd = parabolic_scenario(cfg, alpha, cf);
  CHECK(scd.approx_diff <= scd.drift_bound + 1e-10);

  // away from the invariant circle the approximant differs but stays bounded
  cfg.phi0 = 0.2;
  auto sc2 = parabolic_scenario(cfg, alpha, cf);
  CHECK(sc2.approx_diff < 2.0);
  CHECK(sc2.escape_violations == 0);

  // golden alpha offers no Liouville scale
  auto g = parse_alpha("golden", 30);
  CHECK_THROWS_AS(parabolic_scenario(cfg, g.alpha.convert_to<double>(), g), NoLiouvilleScale);
}
