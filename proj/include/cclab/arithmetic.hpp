#pragma once

// Continued-fraction arithmetic: expansions with certified partial quotients,
// torus norms, beta(alpha) estimates and CD-bridge subsequence selection.

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cclab/errors.hpp"
#include "cclab/torus.hpp"

namespace cclab {

using bigint = boost::multiprecision::cpp_int;
// ~332 bits of mantissa; enough for CF expansions to depth ~150 of generic
// frequencies and for torus norms at beyond-double k.
using real_hp = boost::multiprecision::cpp_bin_float_100;

inline real_hp to_hp(const bigint& n) { return n.convert_to<real_hp>(); }

inline double log_bigint(const bigint& n) {
  // ln of a positive big integer through its top bits
  if (n <= 0) throw Error("log_bigint: nonpositive argument", exit_numeric);
  const std::size_t bits = msb(n);  // floor(log2 n)
  if (bits < 60) return std::log(static_cast<double>(n.convert_to<std::uint64_t>()));
  const bigint top = n >> (bits - 52);
  return std::log(top.convert_to<double>()) + static_cast<double>(bits - 52) * std::log(2.0);
}

inline real_hp frac_hp(const real_hp& x) { return x - floor(x); }

// ||x||_T = inf_j |x - j|
inline real_hp torus_norm_hp(const real_hp& x) {
  real_hp f = frac_hp(x);
  if (f > real_hp(0.5)) f = 1 - f;
  return f;
}

inline real_hp torus_norm_hp(const real_hp& alpha, const bigint& k) {
  return torus_norm_hp(alpha * to_hp(k));
}

struct ContinuedFraction {
  real_hp alpha;            // frequency in (0,1)
  std::vector<bigint> a;    // a[k] for k >= 1, a[0] = 0 placeholder
  std::vector<bigint> p;    // p[0] = 0, p[1] = 1, p[k] = a[k] p[k-1] + p[k-2]
  std::vector<bigint> q;    // q[0] = 1, q[1] = a[1], ...
  bool exact = false;       // quotients certified exact (list/rational/surd input)

  int depth() const { return static_cast<int>(a.size()) - 1; }

  void push_quotient(const bigint& ak) {
    if (ak <= 0) throw Error("partial quotient must be positive", exit_config);
    a.push_back(ak);
    const std::size_t k = a.size() - 1;
    if (k == 1) {
      p.push_back(1);
      q.push_back(ak);
    } else {
      p.push_back(ak * p[k - 1] + p[k - 2]);
      q.push_back(ak * q[k - 1] + q[k - 2]);
    }
  }
};

namespace detail {

// floor((P + sqrt(D)) / Q) for nonsquare D > 0, Q != 0, by exact integer tests
inline bigint floor_quadratic(const bigint& P, const bigint& D, const bigint& Q) {
  const bigint s = sqrt(D);  // floor(sqrt(D))
  auto leq_x = [&](const bigint& c) {
    // c <= (P + sqrt(D))/Q ?  (equality impossible, D nonsquare)
    bigint t = c * Q - P;
    if (Q > 0) return t < 0 || t * t < D;
    return t >= 0 && t * t > D;
  };
  // rational guess, then exact correction by at most a couple of steps
  bigint num = P + s;
  bigint m = num / Q;
  while (!leq_x(m)) --m;
  while (leq_x(m + 1)) ++m;
  return m;
}

inline real_hp eval_tail(const std::vector<bigint>& quots) {
  // value of [0; a1, a2, ...] with a golden tail appended, high precision
  real_hp t = (sqrt(real_hp(5)) - 1) / 2;
  for (auto it = quots.rbegin(); it != quots.rend(); ++it) t = 1 / (to_hp(*it) + t);
  return t;
}

// q_m <= q_l^E (exact when E is an integer, log-compare with slack otherwise)
inline bool pow_leq(const bigint& qm, const bigint& ql, double E) {
  const double Er = std::round(E);
  if (std::abs(E - Er) < 1e-9 && Er >= 0 && Er < 4096) {
    bigint pw = 1;
    for (int i = 0; i < static_cast<int>(Er); ++i) pw *= ql;
    return qm <= pw;
  }
  return log_bigint(qm) <= E * log_bigint(ql) + 1e-12;
}

inline bool pow_geq(const bigint& qm, const bigint& ql, double E) {
  const double Er = std::round(E);
  if (std::abs(E - Er) < 1e-9 && Er >= 0 && Er < 4096) {
    bigint pw = 1;
    for (int i = 0; i < static_cast<int>(Er); ++i) pw *= ql;
    return qm >= pw;
  }
  return log_bigint(qm) >= E * log_bigint(ql) - 1e-12;
}

}  // namespace detail

// Canonical test path: alpha prescribed by its partial quotients (exact).
inline ContinuedFraction cf_from_quotients(const std::vector<bigint>& quots) {
  if (quots.empty()) throw Error("empty quotient list", exit_config);
  ContinuedFraction cf;
  cf.exact = true;
  cf.a.push_back(0);
  cf.p.push_back(0);
  cf.q.push_back(1);
  for (const bigint& ak : quots) cf.push_quotient(ak);
  cf.alpha = detail::eval_tail(quots);
  return cf;
}

// Exact expansion of a rational num/den reduced mod 1. Throws RationalInput
// when the expansion terminates before `depth` quotients.
inline ContinuedFraction cf_from_rational(bigint num, bigint den, int depth) {
  if (den <= 0) throw Error("denominator must be positive", exit_config);
  num %= den;
  if (num < 0) num += den;
  ContinuedFraction cf;
  cf.exact = true;
  cf.a.push_back(0);
  cf.p.push_back(0);
  cf.q.push_back(1);
  cf.alpha = to_hp(num) / to_hp(den);
  bigint x = den, y = num;  // alpha_k = y/x
  for (int k = 1; k <= depth; ++k) {
    if (y == 0) throw RationalInput("expansion terminated at depth " + std::to_string(k - 1));
    bigint ak = x / y;
    bigint r = x % y;
    cf.push_quotient(ak);
    x = y;
    y = r;
  }
  return cf;
}

// Exact expansion of (p0 + q0*sqrt(d)) / r0 with q0 > 0, r0 > 0, d nonsquare.
inline ContinuedFraction cf_from_surd(const bigint& p0, const bigint& q0, const bigint& d,
                                      const bigint& r0, int depth) {
  if (q0 <= 0 || r0 <= 0 || d <= 1) throw Error("surd wants q0>0, r0>0, d>1", exit_config);
  {
    bigint s = sqrt(d);
    if (s * s == d) throw RationalInput("sqrt argument is a perfect square");
  }
  // normalized form (P + sqrt(D))/Q with the invariant Q | D - P^2
  bigint D = d * q0 * q0 * r0 * r0;
  bigint P = p0 * r0;
  bigint Q = r0 * r0;
  ContinuedFraction cf;
  cf.exact = true;
  cf.a.push_back(0);
  cf.p.push_back(0);
  cf.q.push_back(1);
  bigint a0 = detail::floor_quadratic(P, D, Q);
  P -= a0 * Q;
  cf.alpha = frac_hp((to_hp(p0) + to_hp(q0) * sqrt(to_hp(d))) / to_hp(r0));
  for (int k = 1; k <= depth; ++k) {
    // 1/alpha = (-P + sqrt(D)) / ((D - P^2)/Q)
    bigint Qn = (D - P * P) / Q;
    if (Qn == 0) throw RationalInput("degenerate surd");
    bigint Pn = -P;
    bigint ak = detail::floor_quadratic(Pn, D, Qn);
    cf.push_quotient(ak);
    P = Pn - ak * Qn;
    Q = Qn;
  }
  return cf;
}

// Ball-arithmetic expansion of a high-precision real. Quotients are certified:
// the expansion halts with PrecisionExhausted once the enclosing interval of
// 1/alpha_k straddles an integer (a wrong quotient would poison every
// arithmetic condition downstream), or when a quotient exceeds the guard.
inline ContinuedFraction cf_expand_real(const real_hp& alpha_in, int depth,
                                        const bigint& quotient_guard = bigint("1000000000000000000")) {
  if (depth < 1) throw Error("depth >= 1 required", exit_config);
  ContinuedFraction cf;
  cf.a.push_back(0);
  cf.p.push_back(0);
  cf.q.push_back(1);
  real_hp val = frac_hp(alpha_in);
  cf.alpha = val;
  if (val == 0) throw RationalInput("alpha is an integer");
  real_hp rel("1e-95");  // relative radius of the ball around alpha_k
  for (int k = 1; k <= depth; ++k) {
    // inversion preserves relative error
    real_hp x1 = 1 / val;
    real_hp abs_err = x1 * rel;
    real_hp fl = floor(x1);
    if (x1 - fl < abs_err || fl + 1 - x1 < abs_err)
      throw PrecisionExhausted("quotient " + std::to_string(k) + " not certified");
    bigint ak = fl.convert_to<bigint>();
    if (ak > quotient_guard)
      throw PrecisionExhausted("quotient exceeds overflow guard (Liouville jump); use an exact input");
    cf.push_quotient(ak);
    real_hp next = x1 - fl;
    if (next == 0) throw RationalInput("alpha_k vanished at depth " + std::to_string(k));
    rel = abs_err / next;
    val = next;
  }
  return cf;
}

// max_{1<=k<=n} ln q_{k+1} / q_k ; a monotone lower proxy for beta(alpha)
inline double beta_estimate(const ContinuedFraction& cf, int n) {
  if (n + 1 > cf.depth()) throw InsufficientDepth("beta_estimate wants n+1 convergents");
  double best = 0.0;
  for (int k = 1; k <= n; ++k) {
    double qk = cf.q[k].convert_to<double>();
    double v = std::isfinite(qk) ? log_bigint(cf.q[k + 1]) / qk : 0.0;
    best = std::max(best, v);
  }
  return best;
}

// (q_l, q_n) is a CD(A,B,C) bridge iff q_{i+1} <= q_i^A for l <= i <= n-1
// and q_l^C >= q_n >= q_l^B.
inline bool is_cd_bridge(const ContinuedFraction& cf, int l, int n, double A, double B, double C) {
  if (!(0 < A && A <= B && B <= C)) throw Error("is_cd_bridge wants 0<A<=B<=C", exit_config);
  if (!(0 <= l && l < n && n <= cf.depth())) throw Error("is_cd_bridge index range", exit_config);
  for (int i = l; i < n; ++i)
    if (!detail::pow_leq(cf.q[i + 1], cf.q[i], A)) return false;
  return detail::pow_leq(cf.q[n], cf.q[l], C) && detail::pow_geq(cf.q[n], cf.q[l], B);
}

enum class BridgeTag { Liouville, BridgePair };

struct BridgeChain {
  double calA = 3.0;
  std::vector<bigint> Q;     // Q[0] = 1
  std::vector<bigint> bQ;    // companion successors q_{n_k + 1}
  std::vector<int> idx;      // indices n_k into cf.q
  std::vector<BridgeTag> tags;
  int depth() const { return static_cast<int>(Q.size()); }
  bool liouville_at(int k) const { return tags[k] == BridgeTag::Liouville; }
};

// Subsequence {Q_k} with Q_0 = 1, Q_{k+1} <= bQ_k^{A^4}, Q_{k+1} >= Q_k^A and,
// per index, either bQ_k >= Q_k^A or consecutive CD(A,A,A^3) bridges. The
// selection follows the constructive argument branch by branch, ties resolved
// toward the smaller index.
inline BridgeChain select_bridges(const ContinuedFraction& cf, double A, int depth) {
  if (A <= 2) throw Error("select_bridges wants A > 2", exit_config);
  BridgeChain ch;
  ch.calA = A;
  const int maxn = cf.depth();
  // cached logs; all selection comparisons run on these
  std::vector<double> lq(maxn + 1);
  for (int n = 0; n <= maxn; ++n) lq[n] = log_bigint(cf.q[n]);
  const double eps = 1e-9;

  // Q_0 = 1 at the largest index with q = 1 so that bQ_0 >= 2
  int n0 = 0;
  while (n0 + 1 <= maxn && cf.q[n0 + 1] == 1) ++n0;
  if (n0 + 1 > maxn) throw InsufficientDepth("cf too shallow for bridge selection");
  ch.Q.push_back(cf.q[n0]);
  ch.bQ.push_back(cf.q[n0 + 1]);
  ch.idx.push_back(n0);

  auto push = [&](int n) {
    if (n + 1 > maxn) throw InsufficientDepth("cf exhausted in bridge selection");
    ch.Q.push_back(cf.q[n]);
    ch.bQ.push_back(cf.q[n + 1]);
    ch.idx.push_back(n);
  };

  while (ch.depth() < depth) {
    const int ncur = ch.idx.back();
    // smallest n with q_n > Q_k and q_{n+1} > q_n^A, within the computed range
    int njump = -1;
    for (int n = ncur + 1; n + 1 <= maxn; ++n) {
      if (cf.q[n] <= ch.Q.back()) continue;
      if (lq[n + 1] > A * lq[n] + eps) { njump = n; break; }
    }
    if (njump < 0) {
      // tame tail: extend the CD-bridge chain by the smallest index reaching
      // the A-th power of the previous element
      const int prev = ncur + 1;
      int nn = -1;
      for (int n = prev + 1; n + 1 <= maxn; ++n)
        if (lq[n] >= A * lq[prev] - eps) { nn = n; break; }
      if (nn < 0) throw InsufficientDepth("cf exhausted in bridge chain");
      push(nn);
      continue;
    }
    if (lq[njump] <= std::pow(A, 4) * lq[ch.idx.back() + 1] + eps) {
      push(njump);  // the jump itself joins the sequence
      continue;
    }
    // jump too far: walk a CD(A,A,A^2) chain from bQ_k toward it
    std::vector<int> chain;
    int prev = ncur + 1;
    while (true) {
      int nn = -1;
      for (int n = prev + 1; n < njump; ++n)
        if (lq[n] >= A * lq[prev] - eps) { nn = n; break; }
      if (nn < 0) break;
      chain.push_back(nn);
      prev = nn;
    }
    if (chain.empty()) { push(njump); continue; }  // cannot happen when q_jump > bQ^{A^4}
    int l0 = -1;  // smallest chain element whose A^2-power reaches the jump
    for (std::size_t j = 0; j < chain.size(); ++j)
      if (A * A * lq[chain[j]] >= lq[njump] - eps) { l0 = static_cast<int>(j); break; }
    if (l0 < 0) l0 = static_cast<int>(chain.size()) - 1;
    const bool jump_large = lq[njump] >= A * lq[chain[l0]] - eps;
    const int take = jump_large ? l0 + 1 : l0;
    for (int j = 0; j < take && ch.depth() < depth; ++j) push(chain[j]);
    if (ch.depth() < depth) push(njump);
  }

  ch.tags.resize(ch.Q.size());
  for (std::size_t k = 0; k < ch.Q.size(); ++k)
    ch.tags[k] = detail::pow_geq(ch.bQ[k], ch.Q[k], A) ? BridgeTag::Liouville : BridgeTag::BridgePair;
  return ch;
}

// --alpha grammar: "golden", "sqrt:D", "surd:p,q,d,r", a decimal string, or a
// comma-separated quotient list.
inline ContinuedFraction parse_alpha(const std::string& spec, int depth) {
  auto parse_int = [](std::string tok) {
    bool neg = !tok.empty() && tok[0] == '-';
    if (neg) tok.erase(0, 1);
    // strip leading zeros; cpp_int would read "0..." as octal
    std::size_t nz = tok.find_first_not_of('0');
    tok = (nz == std::string::npos) ? "0" : tok.substr(nz);
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigParse("bad integer token in alpha spec");
    bigint v(tok);
    return neg ? -v : v;
  };
  auto split_ints = [&](const std::string& s) {
    std::vector<bigint> v;
    std::size_t pos = 0;
    while (pos <= s.size()) {
      std::size_t c = s.find(',', pos);
      v.push_back(parse_int(s.substr(pos, c == std::string::npos ? c : c - pos)));
      if (c == std::string::npos) break;
      pos = c + 1;
    }
    return v;
  };
  if (spec == "golden") return cf_from_surd(-1, 1, 5, 2, depth);
  if (spec.rfind("sqrt:", 0) == 0) return cf_from_surd(0, 1, bigint(spec.substr(5)), 1, depth);
  if (spec.rfind("surd:", 0) == 0) {
    auto v = split_ints(spec.substr(5));
    if (v.size() != 4) throw ConfigParse("surd:p,q,d,r wants 4 integers");
    return cf_from_surd(v[0], v[1], v[2], v[3], depth);
  }
  if (spec.find('.') != std::string::npos) {
    const std::size_t dot = spec.find('.');
    std::string digits = spec.substr(0, dot) + spec.substr(dot + 1);
    if (digits.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigParse("bad decimal alpha: " + spec);
    bigint num = parse_int(digits.empty() ? std::string("0") : digits);
    bigint den = 1;
    for (std::size_t i = 0; i < spec.size() - dot - 1; ++i) den *= 10;
    return cf_from_rational(num, den, depth);
  }
  if (spec.find_first_not_of("0123456789,") == std::string::npos && !spec.empty())
    return cf_from_quotients(split_ints(spec));
  throw ConfigParse("unrecognized alpha spec: " + spec);
}

}  // namespace cclab
