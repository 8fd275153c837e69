#pragma once

// Bowen-metric measure complexity on T^1 x RP^1: the time-averaged metric,
// greedy covering numbers against empirical Birkhoff measures, and the
// sub-polynomial profile S_n / n^tau.

#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "cclab/cocycle.hpp"
#include "cclab/errors.hpp"

namespace cclab {

// d((theta, phi), (theta', phi')) = max(||theta - theta'||, ||phi - phi'||)
inline double dist(const ProjPoint& x, const ProjPoint& y) {
  return std::max(circle_dist(x.theta, y.theta), rp1_dist(x.phi, y.phi));
}

// (1/n) sum_{i<n} d(T^i x, T^i y)
inline double bowen_dist(const CocycleFn& T, ProjPoint x, ProjPoint y, long long n) {
  if (n < 1) throw Error("bowen_dist wants n >= 1", exit_config);
  double acc = 0;
  for (long long i = 0; i < n; ++i) {
    acc += dist(x, y);
    x = proj_step(T, x);
    y = proj_step(T, y);
  }
  return acc / static_cast<double>(n);
}

struct EmpiricalMeasure {
  std::vector<ProjPoint> points;
  std::vector<double> weights;  // nonnegative, summing to 1

  void normalize() {
    double s = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (s <= 0) throw Error("empirical measure needs positive mass", exit_config);
    for (auto& w : weights) w /= s;
  }
};

// Long-orbit Birkhoff sampling with burn-in; the transport defect under one
// application of T is measured and reported (invariance is approximate).
struct BirkhoffSample {
  EmpiricalMeasure mu;
  double transport_defect = 0;  // avg over samples of min_j d(T x_i, x_j)
};

inline BirkhoffSample birkhoff_sample(const CocycleFn& T, ProjPoint x0, int samples,
                                      int burn_in = 1000, int stride = 1) {
  if (samples < 1) throw Error("birkhoff_sample wants samples >= 1", exit_config);
  BirkhoffSample out;
  ProjPoint x = x0;
  for (int i = 0; i < burn_in; ++i) x = proj_step(T, x);
  out.mu.points.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    out.mu.points.push_back(x);
    for (int s = 0; s < stride; ++s) x = proj_step(T, x);
  }
  out.mu.weights.assign(samples, 1.0 / samples);
  double acc = 0;
  for (int i = 0; i < samples; ++i) {
    ProjPoint tx = proj_step(T, out.mu.points[i]);
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < samples; ++j) best = std::min(best, dist(tx, out.mu.points[j]));
    acc += best;
  }
  out.transport_defect = acc / samples;
  return out;
}

namespace detail {

// the covering demand "covered mass > 1 - eps", made boundary-robust so the
// greedy and the exhaustive oracle agree on exact-equality instances
inline bool covers_enough(double covered, double eps) { return covered > 1 - eps + 1e-12; }

// greedy max-coverage on a precomputed pairwise Bowen-distance matrix
inline int greedy_cover(const std::vector<double>& dbar, const std::vector<double>& w, int m,
                        double eps) {
  std::vector<char> covered(m, 0);
  double mass = 0.0;
  int count = 0;
  while (!covers_enough(mass, eps)) {
    int best = -1;
    double best_gain = -1;
    for (int i = 0; i < m; ++i) {
      double gain = 0;
      for (int j = 0; j < m; ++j)
        if (!covered[j] && dbar[static_cast<std::size_t>(i) * m + j] < eps) gain += w[j];
      if (gain > best_gain + 1e-18) {
        best_gain = gain;
        best = i;
      }
    }
    if (best < 0 || best_gain <= 0) break;  // isolated mass; should not happen
    ++count;
    for (int j = 0; j < m; ++j)
      if (!covered[j] && dbar[static_cast<std::size_t>(best) * m + j] < eps) {
        covered[j] = 1;
        mass += w[j];
      }
  }
  return count;
}

}  // namespace detail

// Greedy upper bound for S_n(d, rho, eps) with centers restricted to the
// sample points (this lower-bounds arbitrary-center covering at radius 2 eps).
inline int covering_number(const CocycleFn& T, const EmpiricalMeasure& mu, long long n,
                           double eps) {
  const int m = static_cast<int>(mu.points.size());
  if (m < static_cast<int>(std::ceil(4.0 / (eps * eps))))
    throw Error("covering_number wants >= ceil(4/eps^2) samples", exit_config);
  std::vector<double> dbar(static_cast<std::size_t>(m) * m, 0.0);
  std::vector<ProjPoint> orbit = mu.points;
  for (long long t = 0; t < n; ++t) {
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        double d = dist(orbit[i], orbit[j]);
        dbar[static_cast<std::size_t>(i) * m + j] += d;
        dbar[static_cast<std::size_t>(j) * m + i] += d;
      }
    if (t + 1 < n)
      for (auto& p : orbit) p = proj_step(T, p);
  }
  for (auto& d : dbar) d /= static_cast<double>(n);
  return detail::greedy_cover(dbar, mu.weights, m, eps);
}

struct ComplexityProfile {
  std::vector<long long> ns;
  double eps = 0, tau = 0;
  std::vector<int> Sn;
  std::vector<double> ratio;       // S_n / n^tau
  double liminf_proxy = 0;         // min over the computed ns
  bool dbar_monotone = true;       // pairwise nondecreasing in n where checked
  std::string note;
};

// S_n over a list of n in one orbit sweep, with the S_n/n^tau profile.
inline ComplexityProfile subpoly_profile(const CocycleFn& T, const EmpiricalMeasure& mu,
                                         std::vector<long long> ns, double eps, double tau) {
  std::sort(ns.begin(), ns.end());
  const int m = static_cast<int>(mu.points.size());
  ComplexityProfile out;
  out.ns = ns;
  out.eps = eps;
  out.tau = tau;
  out.note =
      "centers restricted to sample points: the greedy value at radius eps lower-bounds "
      "arbitrary-center covering at radius 2 eps";
  if (ns.empty()) return out;
  std::vector<double> acc(static_cast<std::size_t>(m) * m, 0.0);
  std::vector<double> prev_avg(static_cast<std::size_t>(m) * m, 0.0);
  std::vector<ProjPoint> orbit = mu.points;
  long long t = 0;
  for (long long n : ns) {
    for (; t < n; ++t) {
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
          double d = dist(orbit[i], orbit[j]);
          acc[static_cast<std::size_t>(i) * m + j] += d;
          acc[static_cast<std::size_t>(j) * m + i] += d;
        }
      for (auto& p : orbit) p = proj_step(T, p);
    }
    std::vector<double> dbar(acc);
    for (auto& d : dbar) d /= static_cast<double>(n);
    for (std::size_t i = 0; i < dbar.size(); ++i)
      if (dbar[i] < prev_avg[i] - 1e-12) out.dbar_monotone = false;
    prev_avg = dbar;
    out.Sn.push_back(detail::greedy_cover(dbar, mu.weights, m, eps));
    out.ratio.push_back(out.Sn.back() / std::pow(static_cast<double>(n), tau));
  }
  out.liminf_proxy = *std::min_element(out.ratio.begin(), out.ratio.end());
  return out;
}

// exhaustive optimal cover for small instances (the greedy-quality oracle)
inline int exhaustive_cover(const CocycleFn& T, const EmpiricalMeasure& mu, long long n,
                            double eps) {
  const int m = static_cast<int>(mu.points.size());
  if (m > 20) throw Error("exhaustive_cover wants <= 20 points", exit_config);
  std::vector<double> dbar(static_cast<std::size_t>(m) * m, 0.0);
  std::vector<ProjPoint> orbit = mu.points;
  for (long long t = 0; t < n; ++t) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) dbar[static_cast<std::size_t>(i) * m + j] += dist(orbit[i], orbit[j]);
    if (t + 1 < n)
      for (auto& p : orbit) p = proj_step(T, p);
  }
  for (auto& d : dbar) d /= static_cast<double>(n);
  for (int size = 1; size <= m; ++size) {
    // all subsets of the given size
    std::vector<int> idx(size);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      double covered = 0;
      for (int j = 0; j < m; ++j) {
        bool in = false;
        for (int i : idx)
          if (dbar[static_cast<std::size_t>(i) * m + j] < eps) { in = true; break; }
        if (in) covered += mu.weights[j];
      }
      if (detail::covers_enough(covered, eps)) return size;
      int pos = size - 1;
      while (pos >= 0 && idx[pos] == m - size + pos) --pos;
      if (pos < 0) break;
      ++idx[pos];
      for (int k = pos + 1; k < size; ++k) idx[k] = idx[k - 1] + 1;
    }
  }
  return m;
}

}  // namespace cclab
