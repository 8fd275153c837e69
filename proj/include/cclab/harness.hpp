#pragma once

// Experiment orchestration: Mobius correlation sums over projective orbits,
// the parabolic periodic-approximation scenario, deterministic persistence
// with content-addressed records, and CSV reporting.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "cclab/arithmetic.hpp"
#include "cclab/cocycle.hpp"
#include "cclab/complexity.hpp"
#include "cclab/errors.hpp"
#include "cclab/mobius.hpp"

namespace cclab {

inline constexpr const char* kVersion = "cocycle-lab 0.1.0";

// cocycle spec grammar:
//   amo:lambda=<l>,E=<E> | schrodinger:vcos=a1|a2|...,vsin=b1|...,v0=c,E=<E>
//   | rotation:rho=<r> | parabolic:c=<c> | constant:a11=..,a12=..,a21=..,a22=..
inline CocycleFn parse_cocycle(const std::string& spec, double alpha) {
  auto colon = spec.find(':');
  std::string kind = spec.substr(0, colon);
  std::map<std::string, std::string> kv;
  if (colon != std::string::npos) {
    std::string rest = spec.substr(colon + 1);
    std::size_t pos = 0;
    while (pos < rest.size()) {
      std::size_t c = rest.find(',', pos);
      std::string tok = rest.substr(pos, c == std::string::npos ? c : c - pos);
      auto eq = tok.find('=');
      if (eq == std::string::npos) throw ConfigParse("cocycle spec token without '=': " + tok);
      kv[tok.substr(0, eq)] = tok.substr(eq + 1);
      if (c == std::string::npos) break;
      pos = c + 1;
    }
  }
  auto getd = [&](const std::string& k, double dflt, bool required = false) {
    auto it = kv.find(k);
    if (it == kv.end()) {
      if (required) throw ConfigParse("cocycle spec misses " + k);
      return dflt;
    }
    return std::stod(it->second);
  };
  auto getlist = [&](const std::string& k) {
    std::vector<double> out;
    auto it = kv.find(k);
    if (it == kv.end()) return out;
    std::size_t pos = 0;
    const std::string& s = it->second;
    while (pos <= s.size()) {
      std::size_t c = s.find('|', pos);
      out.push_back(std::stod(s.substr(pos, c == std::string::npos ? c : c - pos)));
      if (c == std::string::npos) break;
      pos = c + 1;
    }
    return out;
  };
  if (kind == "amo") return CocycleFn::amo(alpha, getd("lambda", 0, true), getd("E", 0, true));
  if (kind == "rotation") return CocycleFn::rotation(alpha, getd("rho", 0, true));
  if (kind == "parabolic") return CocycleFn::parabolic(alpha, getd("c", 0, true));
  if (kind == "schrodinger") {
    TrigPoly v;
    v.c0 = getd("v0", 0.0);
    auto cs = getlist("vcos"), sn = getlist("vsin");
    std::size_t deg = std::max(cs.size(), sn.size());
    for (std::size_t k = 0; k < deg; ++k)
      v.cs.push_back({k < cs.size() ? cs[k] : 0.0, k < sn.size() ? sn[k] : 0.0});
    return CocycleFn::schrodinger(alpha, v, getd("E", 0, true));
  }
  if (kind == "constant") {
    Mat2 A{getd("a11", 1), getd("a12", 0), getd("a21", 0), getd("a22", 1)};
    return CocycleFn::constant(alpha, A);
  }
  throw ConfigParse("unknown cocycle kind: " + kind);
}

struct ExperimentConfig {
  std::string system = "rotation:rho=0.25";
  std::string alpha_spec = "golden";
  int iota1 = 0, iota2 = 0;
  double theta0 = 0, phi0 = 0;
  long long N = 0;
  std::vector<long long> checkpoints;  // default: powers of two up to N, then N
  std::uint64_t seed = 0;
  std::string out_dir;
  bool mu_one = false;  // replace mu(n) by 1 (equidistribution baseline)

  std::string canonical() const {
    std::ostringstream s;
    s.precision(17);
    s << "system=" << system << ";alpha=" << alpha_spec << ";iota1=" << iota1
      << ";iota2=" << iota2 << ";theta0=" << theta0 << ";phi0=" << phi0 << ";N=" << N
      << ";seed=" << seed << ";mu_one=" << (mu_one ? 1 : 0) << ";checkpoints=";
    for (auto c : checkpoints) s << c << ",";
    return s.str();
  }
};

inline std::vector<long long> default_checkpoints(long long N) {
  std::vector<long long> out;
  for (long long c = 2; c < N; c *= 2) out.push_back(c);
  out.push_back(N);
  return out;
}

struct CheckpointAvg {
  long long N = 0;
  double re = 0, im = 0, abs = 0;
};

struct ResultRecord {
  std::string config_hash;
  ExperimentConfig config;
  std::vector<CheckpointAvg> checkpoints;
  double wall_seconds = 0;  // excluded from the hash
  std::string version = kVersion;
  double decay_slope = 0;   // log|avg| vs log N fit over the checkpoints
  double final_abs = 0;
  nlohmann::json extra;
};

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hash_hex(const std::string& s) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(s)));
  return buf;
}

// (1/N_i) sum_{n <= N_i} mu(n) f(T^n x0) with f = e^{2 pi i (i1 theta + 2 i2 phi)}
inline ResultRecord correlation_sum(const ExperimentConfig& cfg_in, double alpha) {
  ExperimentConfig cfg = cfg_in;
  if (cfg.N < 1) throw ConfigParse("correlation_sum wants N >= 1");
  if (cfg.checkpoints.empty()) cfg.checkpoints = default_checkpoints(cfg.N);
  for (std::size_t i = 1; i < cfg.checkpoints.size(); ++i)
    if (cfg.checkpoints[i] < cfg.checkpoints[i - 1] || cfg.checkpoints.back() > cfg.N)
      throw ConfigParse("checkpoints must be sorted and <= N");
  auto t0 = std::chrono::steady_clock::now();
  CocycleFn c = parse_cocycle(cfg.system, alpha);
  ProjPoint x{mod1(cfg.theta0), rp1_reduce(cfg.phi0)};

  const bool mertens_path = (cfg.iota1 == 0 && cfg.iota2 == 0 && !cfg.mu_one);
  long long int_acc = 0;  // exact integer path when f == 1
  cplx acc(0, 0);
  ResultRecord rec;
  rec.config = cfg;
  std::size_t next_cp = 0;

  auto primes = primes_upto(static_cast<long long>(std::sqrt(static_cast<double>(cfg.N))) + 2);
  const long long block = 1 << 20;
  for (long long lo = 1; lo <= cfg.N; lo += block) {
    long long hi = std::min(cfg.N + 1, lo + block);
    auto mu = mobius_segment(lo, hi, primes);
    for (long long n = lo; n < hi; ++n) {
      x = proj_step(c, x);
      double m = cfg.mu_one ? 1.0 : static_cast<double>(mu[n - lo]);
      if (mertens_path) int_acc += mu[n - lo];
      else {
        double arg = 2 * M_PI * (cfg.iota1 * x.theta + 2.0 * cfg.iota2 * x.phi);
        acc += m * cplx(std::cos(arg), std::sin(arg));
      }
      while (next_cp < cfg.checkpoints.size() && cfg.checkpoints[next_cp] == n) {
        CheckpointAvg cp;
        cp.N = n;
        if (mertens_path) {
          cp.re = static_cast<double>(int_acc) / static_cast<double>(n);
          cp.im = 0;
        } else {
          cp.re = acc.real() / static_cast<double>(n);
          cp.im = acc.imag() / static_cast<double>(n);
        }
        cp.abs = std::hypot(cp.re, cp.im);
        rec.checkpoints.push_back(cp);
        ++next_cp;
      }
    }
  }
  rec.final_abs = rec.checkpoints.empty() ? 0 : rec.checkpoints.back().abs;
  // slope of log|avg| against log N over the recorded checkpoints
  {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (auto& cp : rec.checkpoints) {
      if (cp.abs <= 0) continue;
      double xk = std::log(static_cast<double>(cp.N)), yk = std::log(cp.abs);
      sx += xk;
      sy += yk;
      sxx += xk * xk;
      sxy += xk * yk;
      ++m;
    }
    rec.decay_slope = (m >= 2) ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : 0.0;
  }
  rec.config_hash = hash_hex(cfg.canonical());
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

// deterministic multi-config runner: one worker per config, indexed results
inline std::vector<ResultRecord> run_many(const std::vector<ExperimentConfig>& cfgs, double alpha,
                                          int workers) {
  std::vector<ResultRecord> out(cfgs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < cfgs.size(); ++i) out[i] = correlation_sum(cfgs[i], alpha);
    return out;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < cfgs.size(); i += workers)
        out[i] = correlation_sum(cfgs[i], alpha);
    });
  for (auto& t : pool) t.join();
  return out;
}

// ---------------------------------------------------------------------------
// parabolic periodic-approximation scenario

struct ParabolicScenario {
  int qk = 0;               // the Liouville scale q_{k_j}
  double beta_proxy = 0;    // ln q_{k+1} / q_k at the chosen index
  double cpar = 0;
  double approx_diff = 0;   // |exact avg - periodic approximant avg|
  double drift_bound = 0;   // 2 pi |iota1| M q / q_{k+1}: the theta-drift allowance
  double exact_abs = 0, approx_abs = 0;
  long long escape_violations = 0;
  long long escape_cells = 0;
  double lemma71_lhs = 0, lemma71_rhs = 0;
  std::vector<double> escape_counts;  // per grid cell, for the report
  std::vector<double> escape_bounds;
};

struct ParabolicParams {
  double beta_floor = 0.5;      // minimal ln q_{k+1}/q_k to call a scale Liouville
  long long min_q = 4;          // ignore the tiny leading denominators
  long long M = 64;             // periods in the approximation window
  long long L = 1;              // window start
  int escape_eta_cells = 10;    // grid over (eta, c, q)
  int escape_c_cells = 5;
  int escape_q_cells = 4;
  long long escape_M = 2000;    // iterates per escape count
  int lemma71_M = 2;
};

inline ParabolicScenario parabolic_scenario(const ExperimentConfig& cfg, double alpha,
                                            const ContinuedFraction& cf,
                                            const ParabolicParams& par = {}) {
  CocycleFn c = parse_cocycle(cfg.system, alpha);
  if (c.kind() != CocycleFn::Kind::Parabolic)
    throw ConfigParse("parabolic_scenario wants a parabolic system");
  ParabolicScenario out;
  out.cpar = c.cpar();
  // a Liouville scale from the expansion
  int kj = -1;
  for (int k = 1; k + 1 <= cf.depth(); ++k) {
    double qk = cf.q[k].convert_to<double>();
    if (!(qk < 1e7)) break;
    if (cf.q[k] < par.min_q) continue;
    double proxy = log_bigint(cf.q[k + 1]) / qk;
    if (proxy >= par.beta_floor) {
      kj = k;
      out.beta_proxy = proxy;
    }
  }
  if (kj < 0) throw NoLiouvilleScale("no q_k with ln q_{k+1}/q_k above the floor");
  const long long q = cf.q[kj].convert_to<long long>();
  out.qk = static_cast<int>(q);

  // periodic approximant D_l = f(theta_l, 0), l in [L, L + q)
  auto fval = [&](double theta, double phi) {
    double arg = 2 * M_PI * (cfg.iota1 * theta + 2.0 * cfg.iota2 * phi);
    return cplx(std::cos(arg), std::sin(arg));
  };
  PeriodicSequence D;
  D.Q = static_cast<int>(q);
  D.values.assign(q, cplx(0, 0));
  for (long long l = par.L; l < par.L + q; ++l) {
    double theta_l = mod1(cfg.theta0 + static_cast<double>(l) * alpha);
    D.values[l % q] = fval(theta_l, 0.0);
  }
  const long long W = par.M * q;
  auto mu = sieve(par.L + W + 2);
  cplx exact(0, 0), approx(0, 0);
  {
    ProjPoint x{mod1(cfg.theta0), rp1_reduce(cfg.phi0)};
    for (long long n = 1; n < par.L; ++n) x = proj_step(c, x);
    for (long long n = par.L; n < par.L + W; ++n) {
      x = proj_step(c, x);  // x is now T^n x0
      double m = static_cast<double>(mu(n));
      exact += m * fval(x.theta, x.phi);
      approx += m * D(n);
    }
    exact /= static_cast<double>(W);
    approx /= static_cast<double>(W);
  }
  out.exact_abs = std::abs(exact);
  out.approx_abs = std::abs(approx);
  out.approx_diff = std::abs(exact - approx);
  {
    double qk1 = cf.q[kj + 1].convert_to<double>();
    out.drift_bound = 2 * M_PI * std::abs(cfg.iota1) * static_cast<double>(par.M) *
                      static_cast<double>(q) / qk1;
  }

  // escape-set counts: #I_0 <= 2/(eta q |c|) + 1 over an (eta, c, q) grid
  std::mt19937_64 rng(cfg.seed + 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int ie = 0; ie < par.escape_eta_cells; ++ie)
    for (int ic = 0; ic < par.escape_c_cells; ++ic)
      for (int iq = 0; iq < par.escape_q_cells; ++iq) {
        double eta = 0.02 + 0.28 * ie / std::max(1, par.escape_eta_cells - 1);
        double cc = 1e-4 * std::pow(5000.0, ic / std::max(1.0, par.escape_c_cells - 1.0));
        long long qq = 3 + 7 * iq;
        double phibar = rp1_reduce(0.5 * unif(rng) - 0.25);
        long long count = 0;
        // orbit of phi under [[1, qq*cc], [0, 1]]^m via the closed form
        for (long long m = 0; m < par.escape_M; ++m) {
          double phim = (phibar == 0.0) ? 0.0 : parabolic_orbit(qq * cc, phibar, m);
          if (std::fabs(phim) > eta) ++count;
        }
        double bound = 2.0 / (eta * static_cast<double>(qq) * std::fabs(cc)) + 1.0;
        out.escape_counts.push_back(static_cast<double>(count));
        out.escape_bounds.push_back(bound);
        ++out.escape_cells;
        if (static_cast<double>(count) > bound) ++out.escape_violations;
      }

  // the decomposition inequality applied to the constructed approximant
  if (q <= 2000) {
    auto r = decomposition_bound(par.L, static_cast<int>(q), par.lemma71_M, D, mu);
    out.lemma71_lhs = r.lhs;
    out.lemma71_rhs = r.rhs;
  }
  return out;
}

// ---------------------------------------------------------------------------
// persistence and reporting

inline nlohmann::json record_to_json(const ResultRecord& r) {
  nlohmann::json j;
  j["config_hash"] = r.config_hash;
  j["config"] = {{"system", r.config.system},   {"alpha", r.config.alpha_spec},
                 {"iota1", r.config.iota1},     {"iota2", r.config.iota2},
                 {"theta0", r.config.theta0},   {"phi0", r.config.phi0},
                 {"N", r.config.N},             {"seed", r.config.seed},
                 {"mu_one", r.config.mu_one},   {"checkpoints", r.config.checkpoints}};
  j["version"] = r.version;
  j["wall_seconds"] = r.wall_seconds;
  j["decay_slope"] = r.decay_slope;
  j["final_abs"] = r.final_abs;
  auto arr = nlohmann::json::array();
  for (auto& cp : r.checkpoints) arr.push_back({{"N", cp.N}, {"re", cp.re}, {"im", cp.im}, {"abs", cp.abs}});
  j["checkpoints"] = arr;
  if (!r.extra.is_null()) j["extra"] = r.extra;
  return j;
}

inline std::string persist(const ResultRecord& r, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::string path = dir + "/" + r.config_hash + ".json";
  std::ofstream out(path);
  if (!out) throw IOFailure("cannot write " + path);
  out << record_to_json(r).dump(2) << "\n";
  return path;
}

struct ReportLine {
  std::string hash;
  CheckpointAvg cp;
};

struct Report {
  std::vector<ReportLine> lines;
  std::vector<std::string> skipped;  // hashes (or filenames) of corrupted records
  std::string csv() const {
    std::ostringstream s;
    s.precision(12);
    s << "N,re_avg,im_avg,abs_avg\n";
    for (auto& l : lines) s << l.cp.N << "," << l.cp.re << "," << l.cp.im << "," << l.cp.abs << "\n";
    return s.str();
  }
};

// regenerate summaries from a manifest directory; corrupted entries are
// skipped with a warning naming the hash
inline Report report(const std::string& dir) {
  namespace fs = std::filesystem;
  Report rep;
  std::vector<std::string> files;
  for (auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  for (auto& f : files) {
    std::ifstream in(f);
    nlohmann::json j;
    try {
      in >> j;
      ExperimentConfig cfg;
      cfg.system = j.at("config").at("system").get<std::string>();
      cfg.alpha_spec = j.at("config").at("alpha").get<std::string>();
      cfg.iota1 = j.at("config").at("iota1").get<int>();
      cfg.iota2 = j.at("config").at("iota2").get<int>();
      cfg.theta0 = j.at("config").at("theta0").get<double>();
      cfg.phi0 = j.at("config").at("phi0").get<double>();
      cfg.N = j.at("config").at("N").get<long long>();
      cfg.seed = j.at("config").at("seed").get<std::uint64_t>();
      cfg.mu_one = j.at("config").at("mu_one").get<bool>();
      cfg.checkpoints = j.at("config").at("checkpoints").get<std::vector<long long>>();
      std::string claimed = j.at("config_hash").get<std::string>();
      if (claimed != hash_hex(cfg.canonical()))
        throw IOFailure("hash mismatch");
      for (auto& cp : j.at("checkpoints")) {
        ReportLine l;
        l.hash = claimed;
        l.cp.N = cp.at("N").get<long long>();
        l.cp.re = cp.at("re").get<double>();
        l.cp.im = cp.at("im").get<double>();
        l.cp.abs = cp.at("abs").get<double>();
        rep.lines.push_back(l);
      }
    } catch (const std::exception&) {
      rep.skipped.push_back(fs::path(f).stem().string());
    }
  }
  return rep;
}

// flat key-value config files: `key = value` lines, '#' comments
inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOFailure("cannot read " + path);
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto notspace = line.find_first_not_of(" \t\r\n");
    if (notspace == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigParse(path + ":" + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t\r\n");
      auto b = s.find_last_not_of(" \t\r\n");
      return (a == std::string::npos) ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (key == "system") cfg.system = val;
    else if (key == "alpha") cfg.alpha_spec = val;
    else if (key == "iota1") cfg.iota1 = std::stoi(val);
    else if (key == "iota2") cfg.iota2 = std::stoi(val);
    else if (key == "theta0") cfg.theta0 = std::stod(val);
    else if (key == "phi0") cfg.phi0 = std::stod(val);
    else if (key == "N") cfg.N = std::stoll(val);
    else if (key == "seed") cfg.seed = std::stoull(val);
    else if (key == "out") cfg.out_dir = val;
    else if (key == "mu_one") cfg.mu_one = (val == "1" || val == "true");
    else if (key == "checkpoints") {
      std::size_t pos = 0;
      while (pos <= val.size()) {
        std::size_t c = val.find(',', pos);
        cfg.checkpoints.push_back(std::stoll(val.substr(pos, c == std::string::npos ? c : c - pos)));
        if (c == std::string::npos) break;
        pos = c + 1;
      }
    } else {
      throw ConfigParse(path + ":" + std::to_string(lineno) + ": unknown key " + key);
    }
  }
  return cfg;
}

}  // namespace cclab
