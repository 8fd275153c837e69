// cocycle-lab: continued fractions, Mobius sums, cocycle dynamics, the KAM
// engine, Aubry duality, Bowen complexity, and Mobius-correlation runs.

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cclab/arithmetic.hpp"
#include "cclab/complexity.hpp"
#include "cclab/duality.hpp"
#include "cclab/harness.hpp"
#include "cclab/kam.hpp"
#include "cclab/mobius.hpp"

using namespace cclab;
using nlohmann::json;

namespace {

double alpha_of(const std::string& spec, int depth = 60) {
  return parse_alpha(spec, depth).alpha.convert_to<double>();
}

Fourier2 modes_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOFailure("cannot read " + path);
  json j;
  in >> j;
  Fourier2 F;
  for (auto& m : j) {
    auto c = [&](const char* key) {
      auto& v = m.at(key);
      return cplx(v.at(0).get<double>(), v.at(1).get<double>());
    };
    CMat2 coeff{c("a11"), c("a12"), c("a21"), c("a22")};
    F.add(m.at("k1").get<int>(), m.at("k2").get<int>(), coeff);
  }
  return F;
}

int cmd_cf(const std::string& alpha, int depth, double bridges, int bridge_depth, bool as_json) {
  auto cf = parse_alpha(alpha, depth);
  if (as_json) {
    json j;
    j["alpha"] = cf.alpha.convert_to<double>();
    j["beta_proxy"] = cf.depth() > 1 ? beta_estimate(cf, cf.depth() - 1) : 0.0;
    auto a = json::array(), p = json::array(), q = json::array();
    for (int k = 1; k <= cf.depth(); ++k) {
      a.push_back(cf.a[k].str());
      p.push_back(cf.p[k].str());
      q.push_back(cf.q[k].str());
    }
    j["a"] = a;
    j["p"] = p;
    j["q"] = q;
    if (bridges > 2) {
      auto cfb = parse_alpha(alpha, std::max(depth, 520));
      auto ch = select_bridges(cfb, bridges, bridge_depth);
      auto Q = json::array(), bQ = json::array(), tags = json::array();
      for (int k = 0; k < ch.depth(); ++k) {
        Q.push_back(ch.Q[k].str());
        bQ.push_back(ch.bQ[k].str());
        tags.push_back(ch.liouville_at(k) ? "liouville" : "bridge");
      }
      j["bridges"] = {{"calA", bridges}, {"Q", Q}, {"bQ", bQ}, {"tags", tags}};
    }
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "k,a_k,p_k,q_k\n";
    for (int k = 1; k <= cf.depth(); ++k)
      std::cout << k << "," << cf.a[k].str() << "," << cf.p[k].str() << "," << cf.q[k].str()
                << "\n";
    if (bridges > 2) {
      auto cfb = parse_alpha(alpha, std::max(depth, 520));
      auto ch = select_bridges(cfb, bridges, bridge_depth);
      std::cout << "bridge_k,Q,bQ,tag\n";
      for (int k = 0; k < ch.depth(); ++k)
        std::cout << k << "," << ch.Q[k].str() << "," << ch.bQ[k].str() << ","
                  << (ch.liouville_at(k) ? "liouville" : "bridge") << "\n";
    }
  }
  return exit_ok;
}

int cmd_mobius(long long sieve_n, long long mertens_n, int characters_q, const std::string& lemma71,
               int trials, std::uint64_t seed) {
  if (sieve_n > 0) {
    auto t = sieve(sieve_n);
    std::cout << "n,mu\n";
    for (long long n = 1; n <= sieve_n; ++n)
      std::cout << n << "," << static_cast<int>(t.mu[n]) << "\n";
  }
  if (mertens_n > 0) {
    auto t = sieve(mertens_n);
    std::cout << "N,mertens\n" << mertens_n << "," << mertens(t, mertens_n) << "\n";
  }
  if (characters_q > 0) {
    std::cout << "chi_index,n,re,im,conductor,principal\n";
    auto cs = characters(characters_q);
    for (std::size_t i = 0; i < cs.size(); ++i)
      for (int n = 0; n < characters_q; ++n)
        std::cout << i << "," << n << "," << cs[i].values[n].real() << ","
                  << cs[i].values[n].imag() << "," << cs[i].conductor << ","
                  << (cs[i].principal ? 1 : 0) << "\n";
  }
  if (!lemma71.empty()) {
    long long L, Q, M;
    if (std::sscanf(lemma71.c_str(), "%lld,%lld,%lld", &L, &Q, &M) != 3)
      throw ConfigParse("--lemma71 wants L,Q,M");
    auto mu = sieve(L + M * Q + Q + 10);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::cout << "trial,lhs,rhs,ok\n";
    for (int t = 0; t < trials; ++t) {
      PeriodicSequence D;
      D.Q = static_cast<int>(Q);
      D.values.resize(Q);
      for (auto& v : D.values) v = std::polar(unif(rng), 2 * M_PI * unif(rng));
      auto r = decomposition_bound(L, static_cast<int>(Q), static_cast<int>(M), D, mu);
      std::cout << t << "," << r.lhs << "," << r.rhs << "," << (r.lhs <= r.rhs ? 1 : 0) << "\n";
    }
  }
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cocycle-lab: quasiperiodic SL(2,R) cocycle numerics"};
  app.require_subcommand(1);

  // cf
  std::string cf_alpha = "golden";
  int cf_depth = 30, cf_bridge_depth = 6;
  double cf_bridges = 0;
  bool cf_json = false, cf_csv = false;
  auto* cf_cmd = app.add_subcommand("cf", "continued fraction expansion and CD bridges");
  cf_cmd->add_option("--alpha", cf_alpha, "golden | sqrt:D | surd:p,q,d,r | decimal | a1,a2,...");
  cf_cmd->add_option("--depth", cf_depth, "number of partial quotients");
  cf_cmd->add_option("--bridges", cf_bridges, "select a bridge chain with this calA (> 2)");
  cf_cmd->add_option("--bridge-depth", cf_bridge_depth, "bridge chain length");
  cf_cmd->add_flag("--json", cf_json, "JSON output");
  cf_cmd->add_flag("--csv", cf_csv, "CSV output (default)");

  // mobius
  long long mb_sieve = 0, mb_mertens = 0;
  int mb_characters = 0, mb_trials = 100;
  std::string mb_lemma71;
  std::uint64_t mb_seed = 1;
  auto* mb_cmd = app.add_subcommand("mobius", "sieve, Mertens sums, characters, Lemma-type bound");
  mb_cmd->add_option("--sieve", mb_sieve, "print mu(1..N)");
  mb_cmd->add_option("--mertens", mb_mertens, "print the Mertens sum at N");
  mb_cmd->add_option("--characters", mb_characters, "print the character group mod q");
  mb_cmd->add_option("--lemma71", mb_lemma71, "L,Q,M: test the decomposition inequality");
  mb_cmd->add_option("--trials", mb_trials, "random D per --lemma71");
  mb_cmd->add_option("--seed", mb_seed, "RNG seed");

  // orbit
  std::string orb_system = "rotation:rho=0.25", orb_alpha = "golden";
  double orb_theta0 = 0, orb_phi0 = 0;
  long long orb_n = 100;
  auto* orb_cmd = app.add_subcommand("orbit", "projective orbit CSV (n, theta, phi)");
  orb_cmd->add_option("--system", orb_system, "cocycle spec");
  orb_cmd->add_option("--alpha", orb_alpha, "frequency spec");
  orb_cmd->add_option("--theta0", orb_theta0, "initial circle point");
  orb_cmd->add_option("--phi0", orb_phi0, "initial direction");
  orb_cmd->add_option("--n", orb_n, "iterates");

  // lyapunov
  std::string ly_system = "amo:lambda=2,E=0", ly_alpha = "golden";
  long long ly_N = 100000;
  int ly_phases = 64, ly_ecount = 0;
  double ly_emin = 0, ly_emax = 0;
  std::uint64_t ly_seed = 1;
  auto* ly_cmd = app.add_subcommand("lyapunov", "Lyapunov exponent estimates (E, L, dispersion)");
  ly_cmd->add_option("--system", ly_system, "cocycle spec; E is swept when --E-count is set");
  ly_cmd->add_option("--alpha", ly_alpha, "frequency spec");
  ly_cmd->add_option("--N", ly_N, "iterates per phase");
  ly_cmd->add_option("--phases", ly_phases, "phase samples");
  ly_cmd->add_option("--E-min", ly_emin, "energy sweep start");
  ly_cmd->add_option("--E-max", ly_emax, "energy sweep end");
  ly_cmd->add_option("--E-count", ly_ecount, "energy sweep points");
  ly_cmd->add_option("--seed", ly_seed, "RNG seed");

  // uhtest
  std::string uh_system = "amo:lambda=2,E=10", uh_alpha = "golden";
  int uh_grid = 128, uh_iters = 64;
  auto* uh_cmd = app.add_subcommand("uhtest", "invariant-cone uniform hyperbolicity certificate");
  uh_cmd->add_option("--system", uh_system, "cocycle spec");
  uh_cmd->add_option("--alpha", uh_alpha, "frequency spec");
  uh_cmd->add_option("--grid", uh_grid, "circle grid");
  uh_cmd->add_option("--iters", uh_iters, "iterations for the direction fields");

  // duality
  double du_lambda = 0.5, du_E0 = 0.3, du_theta = -1;
  std::string du_alpha = "golden";
  int du_K = 200, du_ntheta = 197;
  bool du_scan = false;
  auto* du_cmd = app.add_subcommand("duality", "dual eigenvector conjugacy and rotation residual");
  du_cmd->add_option("--lambda", du_lambda, "AMO coupling");
  du_cmd->add_option("--alpha", du_alpha, "frequency spec");
  du_cmd->add_option("--theta", du_theta, "phase of the dual operator");
  du_cmd->add_flag("--theta-scan", du_scan, "scan theta in (0, 1/2)");
  du_cmd->add_option("--ntheta", du_ntheta, "scan resolution");
  du_cmd->add_option("--K", du_K, "window half-width");
  du_cmd->add_option("--E0", du_E0, "target energy");
  std::string du_ucsv;
  du_cmd->add_option("--u-csv", du_ucsv, "write the eigenvector coefficients u_k as CSV here");

  // kam
  std::string kam_system = "elliptic:rho=0.155", kam_alpha = "golden", kam_modes;
  double kam_h = 1.0 / 120, kam_vtol = 1e-6;
  int kam_iota = 1, kam_chain = 4;
  double kam_calA = 3.0;
  bool kam_strict = false;
  auto* kam_cmd = app.add_subcommand("kam", "one iterative step of the reducibility scheme");
  kam_cmd->add_option("--system", kam_system, "elliptic:rho=... | parabolic:c=...");
  kam_cmd->add_option("--alpha", kam_alpha, "frequency spec");
  kam_cmd->add_option("--modes", kam_modes, "JSON file of {k1,k2,a11..a22} perturbation modes");
  kam_cmd->add_option("--radius", kam_h, "analyticity radius h");
  kam_cmd->add_option("--iota", kam_iota, "bridge chain index");
  int kam_steps = 1;
  kam_cmd->add_option("--steps", kam_steps, "consecutive iterative steps (norm cascade)");
  kam_cmd->add_option("--chain-depth", kam_chain, "bridge chain length");
  kam_cmd->add_option("--calA", kam_calA, "bridge exponent (> 2)");
  kam_cmd->add_option("--verify-tol", kam_vtol, "flow comparison tolerance");
  kam_cmd->add_flag("--strict", kam_strict, "abort when the smallness gates fail");

  // complexity
  std::string cx_system = "rotation:rho=0.2337", cx_alpha = "golden", cx_nlist = "1,10,100,1000";
  double cx_eps = 0.25, cx_tau = 0.5;
  int cx_samples = 80;
  std::uint64_t cx_seed = 1;
  auto* cx_cmd = app.add_subcommand("complexity", "Bowen covering numbers S_n and S_n/n^tau");
  cx_cmd->add_option("--system", cx_system, "cocycle spec");
  cx_cmd->add_option("--alpha", cx_alpha, "frequency spec");
  cx_cmd->add_option("--n-list", cx_nlist, "comma-separated n values");
  cx_cmd->add_option("--eps", cx_eps, "covering radius");
  cx_cmd->add_option("--tau", cx_tau, "profile exponent");
  cx_cmd->add_option("--samples", cx_samples, "Birkhoff samples");
  cx_cmd->add_option("--seed", cx_seed, "seed for the initial point");

  // correlate
  std::string co_config, co_system = "rotation:rho=0.4142135623730951", co_alpha = "golden",
              co_out;
  long long co_N = 1000000;
  int co_i1 = 1, co_i2 = 1;
  double co_theta0 = 0, co_phi0 = 0;
  std::uint64_t co_seed = 0;
  bool co_muone = false;
  auto* co_cmd = app.add_subcommand("correlate", "Mobius correlation sums along the orbit");
  co_cmd->add_option("--config", co_config, "flat key=value config file");
  co_cmd->add_option("--system", co_system, "cocycle spec");
  co_cmd->add_option("--alpha", co_alpha, "frequency spec");
  co_cmd->add_option("--N", co_N, "orbit length");
  co_cmd->add_option("--iota1", co_i1, "theta frequency of the observable");
  co_cmd->add_option("--iota2", co_i2, "phi frequency of the observable");
  co_cmd->add_option("--theta0", co_theta0, "initial circle point");
  co_cmd->add_option("--phi0", co_phi0, "initial direction");
  co_cmd->add_option("--seed", co_seed, "seed recorded with the run");
  co_cmd->add_option("--out", co_out, "manifest directory for the JSON record");
  co_cmd->add_flag("--mu-one", co_muone, "replace mu by 1 (equidistribution baseline)");

  // report
  std::string rp_dir;
  auto* rp_cmd = app.add_subcommand("report", "regenerate CSV summaries from a manifest directory");
  rp_cmd->add_option("--manifest", rp_dir, "manifest directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_config;
  }

  try {
    if (cf_cmd->parsed()) return cmd_cf(cf_alpha, cf_depth, cf_bridges, cf_bridge_depth, cf_json);
    if (mb_cmd->parsed())
      return cmd_mobius(mb_sieve, mb_mertens, mb_characters, mb_lemma71, mb_trials, mb_seed);
    if (orb_cmd->parsed()) {
      auto c = parse_cocycle(orb_system, alpha_of(orb_alpha));
      ProjPoint x{mod1(orb_theta0), rp1_reduce(orb_phi0)};
      std::cout << "n,theta,phi\n";
      for (long long n = 1; n <= orb_n; ++n) {
        x = proj_step(c, x);
        std::cout << n << "," << x.theta << "," << x.phi << "\n";
      }
      return exit_ok;
    }
    if (ly_cmd->parsed()) {
      double alpha = alpha_of(ly_alpha);
      std::cout << "E,L,dispersion\n";
      if (ly_ecount > 0) {
        // rebuild the spec with the E token replaced per sweep point
        auto colon = ly_system.find(":");
        std::string base = ly_system.substr(0, colon == std::string::npos ? ly_system.size() : colon);
        std::string kept;
        if (colon != std::string::npos) {
          std::string rest = ly_system.substr(colon + 1);
          std::size_t pos = 0;
          while (pos <= rest.size()) {
            std::size_t cm = rest.find(',', pos);
            std::string tok = rest.substr(pos, cm == std::string::npos ? cm : cm - pos);
            if (tok.rfind("E=", 0) != 0 && !tok.empty()) kept += (kept.empty() ? "" : ",") + tok;
            if (cm == std::string::npos) break;
            pos = cm + 1;
          }
        }
        for (int i = 0; i < ly_ecount; ++i) {
          double E = ly_emin + (ly_emax - ly_emin) * i / std::max(1, ly_ecount - 1);
          std::ostringstream spec;
          spec.precision(17);
          spec << base << ":" << kept << (kept.empty() ? "" : ",") << "E=" << E;
          auto c = parse_cocycle(spec.str(), alpha);
          auto est = lyapunov(c, ly_N, ly_phases, ly_seed);
          std::cout << E << "," << est.value << "," << est.dispersion << "\n";
        }
      } else {
        auto c = parse_cocycle(ly_system, alpha);
        auto est = lyapunov(c, ly_N, ly_phases, ly_seed);
        std::cout << "nan," << est.value << "," << est.dispersion << "\n";
      }
      return exit_ok;
    }
    if (uh_cmd->parsed()) {
      auto c = parse_cocycle(uh_system, alpha_of(uh_alpha));
      auto r = uh_cone_test(c, uh_grid, uh_iters);
      json j;
      j["status"] = r.status == UhStatus::Certified ? "certified" : "inconclusive";
      j["hyperbolic"] = r.hyperbolic;
      j["aperture"] = r.aperture;
      j["margin"] = r.margin;
      j["note"] = r.note;
      std::cout << j.dump(2) << "\n";
      return exit_ok;
    }
    if (du_cmd->parsed()) {
      TrigPoly v;
      v.cs = {{2 * du_lambda, 0.0}};
      double alpha = alpha_of(du_alpha);
      DualityResult r = (du_scan || du_theta < 0)
                            ? duality_scan(v, alpha, du_K, du_E0, du_ntheta)
                            : duality_evaluate(v, alpha, du_theta, du_K, du_E0, 4096);
      json j;
      j["theta"] = r.theta;
      j["E"] = r.E;
      j["residual"] = r.residual;
      j["detFloor"] = r.detFloor;
      j["max_re_detB"] = r.max_re_detB;
      j["decaySlope"] = r.decay_slope;
      j["sigma"] = r.sigma;
      j["eigen_residual"] = r.eigen_residual;
      j["u0_normalized"] = r.u0_normalized;
      std::cout << j.dump(2) << "\n";
      if (!du_ucsv.empty()) {
        auto sec = dual_section(v, alpha, r.theta, du_K);
        auto ev = eigenpair_near(sec, r.E);
        std::ofstream out(du_ucsv);
        if (!out) throw IOFailure("cannot write " + du_ucsv);
        out << "k,re,im,abs\n";
        for (int k = -du_K; k <= du_K; ++k)
          out << k << "," << ev.at(k).real() << "," << ev.at(k).imag() << ","
              << std::abs(ev.at(k)) << "\n";
      }
      return exit_ok;
    }
    if (kam_cmd->parsed()) {
      auto cf = parse_alpha(kam_alpha, 520);
      auto br = select_bridges(cf, kam_calA, kam_chain);
      double alpha = cf.alpha.convert_to<double>();
      LinearSystem sys;
      if (kam_system.rfind("elliptic:rho=", 0) == 0)
        sys = LinearSystem::elliptic(std::stod(kam_system.substr(13)), alpha, kam_h);
      else if (kam_system.rfind("parabolic:c=", 0) == 0)
        sys = LinearSystem::parabolic(std::stod(kam_system.substr(12)), alpha, kam_h);
      else
        throw ConfigParse("kam wants elliptic:rho=... or parabolic:c=...");
      if (!kam_modes.empty()) sys.F = modes_from_file(kam_modes);
      KamParams par;
      par.strict_gates = kam_strict;
      par.verify_tol = kam_vtol;
      par.calA = kam_calA;
      auto cascade = kam_cascade(sys, cf, br, kam_iota, kam_steps, par);
      json steps = json::array();
      for (auto& res : cascade.steps) {
        json j;
        j["branch"] = res.branch;
        j["eps_in"] = res.eps_in;
        j["eps_out"] = res.eps_out;
        j["eta"] = res.eta;
        j["Qtilde"] = res.Qtilde;
        j["flow_residual"] = res.flow_residual;
        j["gates_ok"] = res.gates_ok;
        j["gates"] = res.gate_log;
        j["assertions"] = res.assertions;
        j["assertions_ok"] = res.assertions_ok;
        j["measured_C"] = res.measured_C;
        j["new_system"] = {
            {"kind", res.sys.kind == LinearSystem::Kind::Elliptic ? "elliptic" : "parabolic"},
            {"rho", res.sys.rho},
            {"cstar", res.sys.cstar},
            {"modes", res.sys.F.c.size()}};
        steps.push_back(j);
      }
      std::cout << (kam_steps == 1 && steps.size() == 1 ? steps[0] : json{{"cascade", steps}}).dump(2)
                << "\n";
      return exit_ok;
    }
    if (cx_cmd->parsed()) {
      auto c = parse_cocycle(cx_system, alpha_of(cx_alpha));
      std::mt19937_64 rng(cx_seed);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      auto bs = birkhoff_sample(c, {unif(rng), rp1_reduce(unif(rng))}, cx_samples);
      std::vector<long long> ns;
      std::size_t pos = 0;
      while (pos <= cx_nlist.size()) {
        auto comma = cx_nlist.find(',', pos);
        ns.push_back(std::stoll(cx_nlist.substr(pos, comma == std::string::npos ? comma : comma - pos)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      auto prof = subpoly_profile(c, bs.mu, ns, cx_eps, cx_tau);
      std::cout << "n,Sn,Sn_over_n_tau\n";
      for (std::size_t i = 0; i < prof.ns.size(); ++i)
        std::cout << prof.ns[i] << "," << prof.Sn[i] << "," << prof.ratio[i] << "\n";
      std::cerr << "# transport_defect=" << bs.transport_defect
                << " liminf_proxy=" << prof.liminf_proxy << " note: " << prof.note << "\n";
      return exit_ok;
    }
    if (co_cmd->parsed()) {
      ExperimentConfig cfg;
      if (!co_config.empty()) cfg = parse_config_file(co_config);
      else {
        cfg.system = co_system;
        cfg.alpha_spec = co_alpha;
        cfg.iota1 = co_i1;
        cfg.iota2 = co_i2;
        cfg.theta0 = co_theta0;
        cfg.phi0 = co_phi0;
        cfg.N = co_N;
        cfg.seed = co_seed;
        cfg.out_dir = co_out;
        cfg.mu_one = co_muone;
      }
      auto rec = correlation_sum(cfg, alpha_of(cfg.alpha_spec));
      std::cout << "N,re_avg,im_avg,abs_avg\n";
      for (auto& cp : rec.checkpoints)
        std::cout << cp.N << "," << cp.re << "," << cp.im << "," << cp.abs << "\n";
      if (!cfg.out_dir.empty()) {
        auto path = persist(rec, cfg.out_dir);
        std::cerr << "# record " << path << "\n";
      }
      return exit_ok;
    }
    if (rp_cmd->parsed()) {
      auto rep = report(rp_dir);
      std::cout << rep.csv();
      for (auto& h : rep.skipped) std::cerr << "# warning: skipped corrupted record " << h << "\n";
      return exit_ok;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_numeric;
  }
  return exit_ok;
}
