#pragma once

// Experiment harnesses: admissible initial data, contraction and Cauchy
// iteration traces, growth-rate fits, the single-parent linear warm-up, and
// the Gaussian-convolution lower-bound verification.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "inflab/eigen.hpp"
#include "inflab/grid.hpp"
#include "inflab/metrics.hpp"
#include "inflab/model.hpp"

namespace inflab {

enum class InitialMode { sine, tanh_shift };

// F0 = Fbar * exp(-eps * phi) with phi in {sin x, log cosh x}; both have
// |phi'| <= 1, so the certified log-ratio derivative bound is |eps|.
inline LogDensity make_admissible_initial(const LogDensity& vbar, double eps,
                                          InitialMode mode) {
  if (!(std::abs(eps) <= 1.0))
    throw std::invalid_argument("initial data: |epsilon| must be <= 1");
  LogDensity f = vbar;
  for (int i = 0; i < f.grid.n; ++i) {
    if (f.v[i] == kInf) continue;
    double x = f.grid.x(i);
    double phi = mode == InitialMode::sine ? std::sin(x)
                                           : std::log(std::cosh(x));
    f.v[i] += eps * phi;
  }
  normalize(f);
  return f;
}

struct RunRecord {
  int n = 0;
  double mass = 0.0;       // ||F_n|| with ||F_0|| = 1
  double lambda = 0.0;     // ||F_n|| / ||F_{n-1}||
  double i_inf = 0.0;      // vs the reference profile
  double kl = 0.0;         // vs the reference profile
  double alpha_hat = 0.0;
};

struct RunTrace {
  std::vector<RunRecord> records;
};

// Iterates T from admissible initial data, recording divergences against the
// reference eigenprofile each generation.
inline RunTrace contraction_run(const SelectionSpec& m, const LogDensity& f0,
                                const EigenResult& reference, int generations) {
  if (generations < 1)
    throw std::invalid_argument("contraction run: need generations >= 1");
  auto mvals = selection_values(m, f0.grid);
  LogDensity f = f0;
  normalize(f);
  RunTrace trace;
  double mass = 1.0;
  for (int n = 1; n <= generations; ++n) {
    LogDensity g = apply_T_prepared(f, mvals, 0, f.grid.n - 1);
    double lambda = normalize(g);
    mass *= lambda;
    RunRecord rec;
    rec.n = n;
    rec.mass = mass;
    rec.lambda = lambda;
    rec.i_inf = fisher_infinity(g, reference.profile);
    rec.kl = kl_divergence(g, reference.profile);
    rec.alpha_hat = estimate_log_concavity(g);
    trace.records.push_back(rec);
    f = std::move(g);
  }
  return trace;
}

struct CauchyRecord {
  int n = 0;
  double step_inf = 0.0;  // sup |(log F_n / F_{n-1})'|
  double ratio = 0.0;     // step_inf(n) / step_inf(n-1), n >= 2
  double bound = 0.0;     // 2 / (1 + 2 alpha_{n-2}), n >= 2
};

struct CauchyTrace {
  double alpha0 = 0.0;
  std::vector<CauchyRecord> records;
};

// Consecutive-iterate contraction under truncation: the certified
// log-concavity of the iterates feeds the bound sequence through the
// one-generation update rule.
inline CauchyTrace cauchy_run(const SelectionSpec& m, const LogDensity& f0,
                              const TruncationSpec& trunc, int generations) {
  double alpha0 = estimate_log_concavity(f0);
  if (!(alpha0 > 0))
    throw std::invalid_argument(
        "cauchy run: initial data must be strongly log-concave");
  auto mvals = selection_values(m, f0.grid);
  auto [lo, hi] = trunc.node_span(f0.grid);
  CauchyTrace trace;
  trace.alpha0 = alpha0;
  std::vector<double> alphas{alpha0};
  LogDensity prev = f0;
  normalize(prev);
  double prev_step = 0.0;
  for (int n = 1; n <= generations; ++n) {
    LogDensity cur = apply_T_prepared(prev, mvals, lo, hi);
    normalize(cur);
    CauchyRecord rec;
    rec.n = n;
    rec.step_inf = fisher_infinity(cur, prev);
    if (n >= 2) {
      rec.ratio = prev_step > 0 ? rec.step_inf / prev_step : 0.0;
      rec.bound = 2.0 / (1.0 + 2.0 * alphas[(size_t)(n - 2)]);
    }
    trace.records.push_back(rec);
    alphas.push_back(log_concavity_update(alphas.back(), m.beta));
    prev_step = rec.step_inf;
    prev = std::move(cur);
  }
  return trace;
}

namespace detail {

inline double lsq_slope(const std::vector<double>& xs,
                        const std::vector<double>& ys) {
  double n = (double)xs.size(), sx = 0, sy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  double mx = sx / n, my = sy / n, num = 0, den = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  return num / den;
}

}  // namespace detail

// Least-squares slopes of log|lambda_n - lambda| and log KL_n against n,
// restricted to the decade window (1e-11, 1e-2) that avoids both the initial
// transient and the double-precision floor.
inline std::pair<double, double> growth_rate_fit(const RunTrace& trace,
                                                 const EigenResult& reference) {
  if (trace.records.size() < 10)
    throw std::invalid_argument("growth fit: need at least 10 generations");
  std::vector<double> xl, yl, xk, yk;
  for (const RunRecord& r : trace.records) {
    double gap = std::abs(r.lambda - reference.lambda);
    if (gap > 1e-11 && gap < 1e-2) {
      xl.push_back((double)r.n);
      yl.push_back(std::log(gap));
    }
    if (r.kl > 1e-11 && r.kl < 1e-2) {
      xk.push_back((double)r.n);
      yk.push_back(std::log(r.kl));
    }
  }
  if (xl.size() < 3 || xk.size() < 3)
    throw std::runtime_error("decay outside fit window");
  return {detail::lsq_slope(xl, yl), detail::lsq_slope(xk, yk)};
}

struct LinearRunResult {
  RunTrace trace;
  double lambda = 0.0;      // principal eigenvalue of A
  double kappa_hat = 0.0;   // max measured per-step I_inf ratio
  LogDensity profile;       // eigenfunction of A
};

// Single-parent warm-up: iterate the linear operator A = e^{-m}(G * .) and
// report contraction against its own eigenpair.
inline LinearRunResult linear_operator_run(const SelectionSpec& m,
                                           const LogDensity& f0,
                                           int generations) {
  if (generations < 1)
    throw std::invalid_argument("linear run: need generations >= 1");
  LinearRunResult res;

  LogDensity ref = gaussian_kernel(f0.grid);
  double lambda_ref = 0.0;
  bool converged = false;
  for (int it = 0; it < 600; ++it) {
    LogDensity g = apply_A(ref, m);
    lambda_ref = normalize(g);
    auto [a, b] = joint_support(ref, g);
    double step = 0.0;
    for (int i = a; i <= b; ++i)
      step = std::max(step, std::abs(g.v[i] - ref.v[i]));
    ref = std::move(g);
    if (step < 1e-12) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw std::runtime_error("linear run: reference iteration did not converge");
  res.lambda = lambda_ref;

  LogDensity f = f0;
  normalize(f);
  double mass = 1.0, prev_iinf = 0.0;
  for (int n = 1; n <= generations; ++n) {
    LogDensity g = apply_A(f, m);
    double lambda = normalize(g);
    mass *= lambda;
    RunRecord rec;
    rec.n = n;
    rec.mass = mass;
    rec.lambda = lambda;
    rec.i_inf = fisher_infinity(g, ref);
    rec.kl = kl_divergence(g, ref);
    rec.alpha_hat = estimate_log_concavity(g);
    res.trace.records.push_back(rec);
    if (n >= 2 && prev_iinf > 1e-12)
      res.kappa_hat = std::max(res.kappa_hat, rec.i_inf / prev_iinf);
    prev_iinf = rec.i_inf;
    f = std::move(g);
  }
  res.profile = std::move(ref);
  return res;
}

struct LowerBoundRow {
  double x0 = 0.0;
  double delta = 0.0;
  double log_lhs = 0.0;       // log (G * f)(x0 + delta)
  double log_rhs = 0.0;       // stated bound
  double log_rhs_safe = 0.0;  // proof-sized integration range
  bool pass = false;
};

struct LowerBoundReport {
  double gamma = 0.0;
  bool truncated = false;
  double R = 0.0;
  std::vector<LowerBoundRow> rows;
  bool pass = false;
};

namespace detail {

// Integral of exp((gamma+1) z^2 / 2) over [0, upper] by dense trapezoid.
inline double convexity_integral(double gamma, double upper) {
  if (upper <= 0) return 0.0;
  const int m = 4000;
  double h = upper / m, acc = 0.0;
  for (int i = 0; i <= m; ++i) {
    double z = i * h;
    double t = std::exp(0.5 * (gamma + 1.0) * z * z);
    acc += (i == 0 || i == m) ? 0.5 * t : t;
  }
  return acc * h;
}

}  // namespace detail

// Verifies (G * f)(x0 + delta) >= G(2 delta) f(x0 - delta) * I(upper) with f
// = e^{-V} gamma-log-concave, optionally truncated to [-R, R]. Both the
// stated integration range (gamma x0 - delta)/(gamma+1) and the smaller
// range (gamma x0 - (gamma+2) delta)/(gamma+1) that the convexity argument
// warrants are evaluated; the pass flag judges the stated one.
inline LowerBoundReport lower_bound_check(
    const SelectionSpec& V, double gamma,
    const std::vector<std::pair<double, double>>& samples, const Grid1D& grid,
    const TruncationSpec* trunc = nullptr) {
  if (!(gamma > 0))
    throw std::invalid_argument("lower bound: gamma must be > 0");
  if (V.beta + 1e-9 < gamma)
    throw std::invalid_argument("lower bound: V is not certifiably gamma-convex");
  LogDensity f = sample_log_density(grid, [&](double x) { return V(x); });
  if (trunc) {
    auto [lo, hi] = trunc->node_span(grid);
    apply_truncation_in_place(f, lo, hi);
  }
  const double log_g_norm = -0.5 * std::log(2.0 * std::numbers::pi);

  LowerBoundReport rep;
  rep.gamma = gamma;
  rep.truncated = trunc != nullptr;
  rep.R = trunc ? trunc->R : 0.0;
  rep.pass = true;
  for (auto [x0, delta] : samples) {
    if (!(delta > 0))
      throw std::invalid_argument("lower bound: delta must be > 0");
    if (!(x0 > (gamma + 2.0) / gamma * delta))
      throw std::invalid_argument(
          "lower bound: x0 must exceed ((gamma+2)/gamma)*delta");
    if (trunc) {
      if (!(trunc->R > 2.0 * delta / gamma))
        throw std::invalid_argument("lower bound: need R > 2*delta/gamma");
      if (!(x0 < trunc->R + delta))
        throw std::invalid_argument("lower bound: need x0 < R + delta");
    }
    double xp = x0 + delta, xm = x0 - delta;
    LogSumExp acc;
    for (int j = 0; j < grid.n; ++j) {
      if (f.v[j] == kInf) continue;
      double d = xp - grid.x(j);
      acc.add(log_g_norm - 0.5 * d * d - f.v[j] +
              std::log(trapezoid_weight(grid, j)));
    }
    LowerBoundRow row;
    row.x0 = x0;
    row.delta = delta;
    row.log_lhs = acc.value();
    double log_f_xm = -V(xm);
    double log_g2d = log_g_norm - 2.0 * delta * delta;
    double u_stated = (gamma * x0 - delta) / (gamma + 1.0);
    double u_safe = (gamma * x0 - (gamma + 2.0) * delta) / (gamma + 1.0);
    row.log_rhs =
        log_g2d + log_f_xm + std::log(detail::convexity_integral(gamma, u_stated));
    row.log_rhs_safe =
        log_g2d + log_f_xm + std::log(detail::convexity_integral(gamma, u_safe));
    row.pass = row.log_lhs >= row.log_rhs + std::log1p(-1e-6);
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace inflab
