#pragma once

// Divergences and Fisher-type quantities between log-stored densities:
// I_inf (sup of the log-ratio derivative), I_2 (quadratic Fisher
// information), KL, the projective oscillation metric, log-concavity
// estimation, moments, and the LSI inequality chain.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "inflab/grid.hpp"

namespace inflab {

// Contiguous node interval around the mode where v <= min v + drop.
// Log-concave profiles have contiguous sublevel sets, so expanding from the
// argmin is exact for them and conservative otherwise.
inline std::pair<int, int> support_interval(const LogDensity& f,
                                            double drop = 60.0) {
  int imin = -1;
  for (int i = 0; i < f.grid.n; ++i)
    if (f.v[i] != kInf && (imin < 0 || f.v[i] < f.v[imin])) imin = i;
  if (imin < 0) throw std::invalid_argument("empty density");
  double cut = f.v[imin] + drop;
  int a = imin, b = imin;
  while (a > 0 && f.v[a - 1] <= cut) --a;
  while (b + 1 < f.grid.n && f.v[b + 1] <= cut) ++b;
  return {a, b};
}

inline std::pair<int, int> joint_support(const LogDensity& p,
                                         const LogDensity& q,
                                         double drop = 60.0) {
  auto [pa, pb] = support_interval(p, drop);
  auto [qa, qb] = support_interval(q, drop);
  int a = std::max(pa, qa), b = std::min(pb, qb);
  if (b - a + 1 < 3) throw std::invalid_argument("disjoint supports");
  return {a, b};
}

namespace detail {

inline void require_same_grid(const LogDensity& p, const LogDensity& q) {
  if (p.grid.n != q.grid.n || std::abs(p.grid.left - q.grid.left) > 1e-12 ||
      std::abs(p.grid.right - q.grid.right) > 1e-12)
    throw std::invalid_argument("metrics: grids must match");
}

// d/dx of (v_q - v_p) on [a, b]: central interior, one-sided order-2 ends.
inline std::vector<double> ratio_derivative(const LogDensity& p,
                                            const LogDensity& q, int a, int b) {
  double h = p.grid.step();
  int m = b - a + 1;
  std::vector<double> d(m);
  auto r = [&](int i) { return q.v[i] - p.v[i]; };
  d[0] = -(-3 * r(a) + 4 * r(a + 1) - r(a + 2)) / (2 * h);
  d[m - 1] = -(3 * r(b) - 4 * r(b - 1) + r(b - 2)) / (2 * h);
  for (int i = a + 1; i < b; ++i) d[i - a] = (r(i + 1) - r(i - 1)) / (2 * h);
  // r = v_q - v_p = log(p/q), so no extra sign: d approximates (log p/q)'.
  for (double& x : d) x = -x;
  return d;
}

}  // namespace detail

struct FisherInfo {
  double value = 0.0;
  int argmax = -1;
  bool at_boundary = false;  // sup attained at the edge of the common support
};

inline FisherInfo fisher_infinity_info(const LogDensity& p,
                                       const LogDensity& q) {
  detail::require_same_grid(p, q);
  auto [a, b] = joint_support(p, q);
  auto d = detail::ratio_derivative(p, q, a, b);
  FisherInfo info;
  for (int i = 0; i < (int)d.size(); ++i) {
    if (std::abs(d[i]) > info.value) {
      info.value = std::abs(d[i]);
      info.argmax = a + i;
    }
  }
  info.at_boundary = (info.argmax == a || info.argmax == b);
  return info;
}

// I_inf(p | q) = sup |(log p/q)'| over the common support.
inline double fisher_infinity(const LogDensity& p, const LogDensity& q) {
  return fisher_infinity_info(p, q).value;
}

// I_2(p | q) = Int |(log p/q)'|^2 dp with p used as a probability measure
// (its mass is divided out).
inline double fisher_two(const LogDensity& p, const LogDensity& q) {
  detail::require_same_grid(p, q);
  auto [a, b] = joint_support(p, q);
  auto d = detail::ratio_derivative(p, q, a, b);
  double log_mass = log_trapezoid_mass(p);
  LogSumExp acc;
  for (int i = a; i <= b; ++i) {
    double w = trapezoid_weight(p.grid, i);
    double sq = d[i - a] * d[i - a];
    if (sq > 0) acc.add(-p.v[i] - log_mass + std::log(w * sq));
  }
  double s = acc.value();
  return s == -kInf ? 0.0 : std::exp(s);
}

// KL(p || q) for probability densities; both must already be normalized.
inline double kl_divergence(const LogDensity& p, const LogDensity& q) {
  detail::require_same_grid(p, q);
  if (std::abs(trapezoid_mass(p) - 1.0) > 1e-6 ||
      std::abs(trapezoid_mass(q) - 1.0) > 1e-6)
    throw std::invalid_argument("expected normalized densities");
  double acc = 0.0, comp = 0.0;
  for (int i = 0; i < p.grid.n; ++i) {
    if (p.v[i] == kInf) continue;
    if (q.v[i] == kInf)
      throw std::invalid_argument("absolute continuity violated");
    double term = trapezoid_weight(p.grid, i) * std::exp(-p.v[i]) *
                  (q.v[i] - p.v[i]);
    double y = term - comp, t = acc + y;
    comp = (t - acc) - y;
    acc = t;
  }
  return acc;
}

// Oscillation of log(p/q) over the common support (projective metric).
inline double hilbert_metric(const LogDensity& p, const LogDensity& q) {
  detail::require_same_grid(p, q);
  auto [a, b] = joint_support(p, q);
  double lo = kInf, hi = -kInf;
  for (int i = a; i <= b; ++i) {
    double r = q.v[i] - p.v[i];
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return hi - lo;
}

// Certified lower bound on (-log f)'' from second differences over the
// central 99%-mass region; tails are excluded because discretization noise
// there swamps the signal.
inline double estimate_log_concavity(const LogDensity& f) {
  auto [a, b] = finite_range(f);
  if (b - a + 1 < 5)
    throw std::invalid_argument("log-concavity estimate: need >= 5 finite nodes");
  double h = f.grid.step();
  double log_mass = log_trapezoid_mass(f);
  double cum = 0.0;
  int lo = a, hi = b;
  double mass = std::exp(log_mass);
  for (int i = a; i <= b; ++i) {
    cum += trapezoid_weight(f.grid, i) * std::exp(-f.v[i]);
    if (cum < 0.005 * mass) lo = i;
    if (cum <= 0.995 * mass) hi = i;
  }
  lo = std::max(lo, a + 1);
  hi = std::min(hi, b - 1);
  if (hi < lo) throw std::invalid_argument("log-concavity estimate: region too small");
  double best = kInf;
  for (int i = lo; i <= hi; ++i)
    best = std::min(best, (f.v[i - 1] - 2 * f.v[i] + f.v[i + 1]) / (h * h));
  return best;
}

struct Moments {
  double mass = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

inline Moments moments(const LogDensity& f) {
  Moments mo;
  double m1 = 0.0;
  for (int i = 0; i < f.grid.n; ++i) {
    if (f.v[i] == kInf) continue;
    double w = trapezoid_weight(f.grid, i) * std::exp(-f.v[i]);
    mo.mass += w;
    m1 += w * f.grid.x(i);
  }
  if (mo.mass <= 0) throw std::invalid_argument("empty density");
  mo.mean = m1 / mo.mass;
  double m2 = 0.0;
  for (int i = 0; i < f.grid.n; ++i) {
    if (f.v[i] == kInf) continue;
    double w = trapezoid_weight(f.grid, i) * std::exp(-f.v[i]);
    double c = f.grid.x(i) - mo.mean;
    m2 += w * c * c;
  }
  mo.variance = m2 / mo.mass;
  return mo;
}

struct LsiReport {
  double gamma = 0.0;
  double kl = 0.0;
  double i_two = 0.0;
  double i_inf = 0.0;
  bool kl_le_i2 = false;    // KL <= I_2 / (2 gamma)
  bool i2_le_iinf = false;  // I_2 <= I_inf^2
  bool chain_holds = false;
};

// Checks KL(p||q) <= I_2(p|q)/(2 gamma) <= I_inf(p|q)^2/(2 gamma) after
// certifying that q is gamma-log-concave on its bulk.
inline LsiReport lsi_chain_check(const LogDensity& p, const LogDensity& q,
                                 double gamma) {
  if (!(gamma > 0)) throw std::invalid_argument("lsi: gamma must be > 0");
  double h = q.grid.step();
  if (estimate_log_concavity(q) + 10 * h * h < gamma)
    throw std::invalid_argument("log-concavity certificate failed");
  LsiReport rep;
  rep.gamma = gamma;
  rep.kl = kl_divergence(p, q);
  rep.i_two = fisher_two(p, q);
  rep.i_inf = fisher_infinity(p, q);
  double slack = 1e-12 + 1e-9 * std::abs(rep.i_two);
  rep.kl_le_i2 = rep.kl <= rep.i_two / (2 * gamma) + slack;
  rep.i2_le_iinf = rep.i_two <= rep.i_inf * rep.i_inf + slack;
  rep.chain_holds = rep.kl_le_i2 && rep.i2_le_iinf;
  return rep;
}

struct DivergenceReport {
  double i_inf = 0.0;
  double i_two = 0.0;
  double kl = 0.0;
  double hilbert = 0.0;
  double support_left = 0.0;
  double support_right = 0.0;
  bool sup_at_boundary = false;  // I_inf sup hit the support edge; the value
                                 // is then grid-dependent, not intrinsic
};

inline DivergenceReport divergence_report(const LogDensity& p,
                                          const LogDensity& q) {
  LogDensity pn = p, qn = q;
  normalize(pn);
  normalize(qn);
  DivergenceReport rep;
  auto info = fisher_infinity_info(pn, qn);
  rep.i_inf = info.value;
  rep.sup_at_boundary = info.at_boundary;
  rep.i_two = fisher_two(pn, qn);
  rep.kl = kl_divergence(pn, qn);
  rep.hilbert = hilbert_metric(pn, qn);
  auto [a, b] = joint_support(pn, qn);
  rep.support_left = p.grid.x(a);
  rep.support_right = p.grid.x(b);
  return rep;
}

}  // namespace inflab
