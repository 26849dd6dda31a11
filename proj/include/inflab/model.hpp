#pragma once

// Selection specification (certified convexity), the recombination operator B,
// the full generation operator T = e^{-m} B (optionally truncated), and the
// single-parent warm-up operator A = e^{-m} (G * .).

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "inflab/grid.hpp"

namespace inflab {

// -------- monotone cubic interpolation (used for tabulated inputs) --------

// Fritsch-Carlson slopes: the Hermite interpolant preserves monotone pieces
// and does not overshoot, which keeps interpolated potentials convex-friendly.
inline std::vector<double> pchip_slopes(const std::vector<double>& xs,
                                        const std::vector<double>& ys) {
  size_t n = xs.size();
  if (n < 3) throw std::invalid_argument("pchip: need at least 3 points");
  std::vector<double> h(n - 1), delta(n - 1), d(n);
  for (size_t i = 0; i + 1 < n; ++i) {
    h[i] = xs[i + 1] - xs[i];
    if (h[i] <= 0) throw std::invalid_argument("pchip: x must be increasing");
    delta[i] = (ys[i + 1] - ys[i]) / h[i];
  }
  for (size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0) {
      d[i] = 0.0;
    } else {
      double w1 = 2 * h[i] + h[i - 1], w2 = h[i] + 2 * h[i - 1];
      d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double s = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (s * d0 <= 0) s = 0.0;
    else if (d0 * d1 <= 0 && std::abs(s) > 3 * std::abs(d0)) s = 3 * d0;
    return s;
  };
  d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  return d;
}

inline double pchip_eval(const std::vector<double>& xs,
                         const std::vector<double>& ys,
                         const std::vector<double>& d, double x) {
  size_t n = xs.size();
  size_t i = 0;
  if (x <= xs.front()) i = 0;
  else if (x >= xs[n - 2]) i = n - 2;
  else i = (size_t)(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
  double h = xs[i + 1] - xs[i], t = (x - xs[i]) / h;
  double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
  double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
  return h00 * ys[i] + h * h10 * d[i] + h01 * ys[i + 1] + h * h11 * d[i + 1];
}

// Resample V = -log F onto a new grid by monotone cubic interpolation of V;
// nodes outside the source finite region become +inf.
inline LogDensity resample_log_density(const LogDensity& f, const Grid1D& out) {
  auto [a, b] = finite_range(f);
  std::vector<double> xs, ys;
  xs.reserve(b - a + 1);
  ys.reserve(b - a + 1);
  for (int i = a; i <= b; ++i) {
    xs.push_back(f.grid.x(i));
    ys.push_back(f.v[i]);
  }
  auto d = pchip_slopes(xs, ys);
  std::vector<double> v(out.n, kInf);
  for (int k = 0; k < out.n; ++k) {
    double x = out.x(k);
    if (x < xs.front() - 1e-12 || x > xs.back() + 1e-12) continue;
    v[k] = pchip_eval(xs, ys, d, x);
  }
  return LogDensity(out, std::move(v));
}

// -------- selection function m --------

enum class SelectionKind { quadratic, even_polynomial, tabulated };

// Mortality profile with a certified convexity modulus beta: m'' >= beta > 0
// on the working grid, m >= 0, and min m = 0 attained at x = 0 (tabulated
// tables are shifted so the discrete minimizer lands on 0; the residual
// offset is recorded).
struct SelectionSpec {
  SelectionKind kind = SelectionKind::quadratic;
  double beta = 1.0;
  std::vector<double> coeffs;             // even_polynomial: sum_k c_k x^k
  std::vector<double> table_x, table_m;   // tabulated (already shifted)
  std::vector<double> table_d;            // pchip slopes for the table
  double shift_residual = 0.0;

  static SelectionSpec quadratic_selection(double beta) {
    if (!(beta > 0)) throw std::invalid_argument("H1 violated: beta must be > 0");
    SelectionSpec s;
    s.kind = SelectionKind::quadratic;
    s.beta = beta;
    return s;
  }

  // m(x) = sum_k c_k x^k with even powers only; the constant term is dropped
  // so m(0) = 0. The modulus is the analytic minimum of m'' (even convex
  // polynomials minimize m'' at 0, i.e. beta = 2 c_2).
  static SelectionSpec even_polynomial_selection(std::vector<double> coeffs) {
    SelectionSpec s;
    s.kind = SelectionKind::even_polynomial;
    for (size_t k = 1; k < coeffs.size(); k += 2)
      if (coeffs[k] != 0.0)
        throw std::invalid_argument("selection polynomial must be even");
    for (size_t k = 4; k < coeffs.size(); k += 2)
      if (coeffs[k] < 0.0)
        throw std::invalid_argument("H1 violated: negative high-order coefficient");
    if (coeffs.size() < 3 || coeffs[2] <= 0.0)
      throw std::invalid_argument("H1 violated: need a positive x^2 coefficient");
    coeffs[0] = 0.0;
    s.beta = 2.0 * coeffs[2];
    s.coeffs = std::move(coeffs);
    return s;
  }

  // Tabulated m: certified from interior second differences of the table with
  // a 2 h^2 safety margin; the table is shifted so its minimum is 0 at x = 0.
  static SelectionSpec tabulated_selection(std::vector<double> xs,
                                           std::vector<double> ms) {
    if (xs.size() != ms.size() || xs.size() < 5)
      throw std::invalid_argument("tabulated selection: need >= 5 samples");
    SelectionSpec s;
    s.kind = SelectionKind::tabulated;
    double h = xs[1] - xs[0];
    for (size_t i = 0; i + 1 < xs.size(); ++i)
      if (std::abs(xs[i + 1] - xs[i] - h) > 1e-9 * std::abs(h))
        throw std::invalid_argument("tabulated selection: table must be uniform");
    double cert = kInf;
    for (size_t i = 1; i + 1 < xs.size(); ++i)
      cert = std::min(cert, (ms[i - 1] - 2 * ms[i] + ms[i + 1]) / (h * h));
    cert -= 2 * h * h;
    if (!(cert > 0))
      throw std::invalid_argument("H1 violated: table not certifiably convex");
    size_t imin = 0;
    for (size_t i = 1; i < xs.size(); ++i)
      if (ms[i] < ms[imin]) imin = i;
    double x0 = xs[imin], m0 = ms[imin];
    for (size_t i = 0; i < xs.size(); ++i) {
      xs[i] -= x0;
      ms[i] -= m0;
    }
    // Interior-minimum residual: distance from the true (parabolic) minimizer
    // to the node it was snapped to.
    if (imin > 0 && imin + 1 < xs.size()) {
      double denom = ms[imin - 1] - 2 * ms[imin] + ms[imin + 1];
      if (denom > 0)
        s.shift_residual = std::abs(0.5 * h * (ms[imin - 1] - ms[imin + 1]) / denom);
    }
    s.beta = cert;
    s.table_x = std::move(xs);
    s.table_m = std::move(ms);
    s.table_d = pchip_slopes(s.table_x, s.table_m);
    return s;
  }

  double operator()(double x) const {
    switch (kind) {
      case SelectionKind::quadratic:
        return 0.5 * beta * x * x;
      case SelectionKind::even_polynomial: {
        double acc = 0.0;
        for (size_t k = coeffs.size(); k-- > 0;) acc = acc * x + coeffs[k];
        return acc;
      }
      case SelectionKind::tabulated:
        if (x < table_x.front() || x > table_x.back()) {
          // Quadratic continuation with the certified modulus keeps (H1)
          // outside the table without inventing data.
          double edge = x < table_x.front() ? table_x.front() : table_x.back();
          double slope = x < table_x.front() ? table_d.front() : table_d.back();
          double dx = x - edge;
          return pchip_eval(table_x, table_m, table_d, edge) + slope * dx +
                 0.5 * beta * dx * dx;
        }
        return pchip_eval(table_x, table_m, table_d, x);
    }
    return 0.0;
  }
};

// Samples m on a grid and enforces the hypotheses: convexity modulus at every
// node and minimum 0 at x = 0 within one step.
inline std::vector<double> selection_values(const SelectionSpec& m,
                                            const Grid1D& g) {
  std::vector<double> vals(g.n);
  for (int i = 0; i < g.n; ++i) vals[i] = m(g.x(i));
  double h = g.step();
  double vmax = 0.0;
  for (double v : vals) vmax = std::max(vmax, std::abs(v));
  // Second differences of exact data still carry a cancellation error of a
  // few ulps of vmax, amplified by 1/h^2; the floor must absorb it.
  double fp_floor = 8 * std::numeric_limits<double>::epsilon() * vmax / (h * h);
  double tol = (m.kind == SelectionKind::tabulated) ? 10 * h * h
                                                    : std::max(1e-9, fp_floor);
  for (int i = 1; i + 1 < g.n; ++i) {
    double dd = (vals[i - 1] - 2 * vals[i] + vals[i + 1]) / (h * h);
    if (dd < m.beta - tol)
      throw std::invalid_argument(
          "H1 violated: m'' < beta at x = " + std::to_string(g.x(i)));
  }
  int imin = 0;
  for (int i = 1; i < g.n; ++i)
    if (vals[i] < vals[imin]) imin = i;
  if (std::abs(g.x(imin)) > h + 1e-12 || vals[imin] < -1e-9 ||
      vals[imin] > 1e-9 + 0.5 * m.beta * h * h)
    throw std::invalid_argument("H2 violated: min m must be 0 at x = 0");
  return vals;
}

// -------- truncation --------

struct TruncationSpec {
  double R = 0.0;
  explicit TruncationSpec(double r) : R(r) {
    if (!(R > 0)) throw std::invalid_argument("truncation: R must be > 0");
  }
  // Both +R and -R must be grid nodes.
  std::pair<int, int> node_span(const Grid1D& g) const {
    int lo = g.node_index(-R), hi = g.node_index(R);
    if (lo < 0 || hi < 0)
      throw std::invalid_argument("truncation: R is not a grid node");
    return {lo, hi};
  }
};

// -------- operators --------

inline LogDensity gaussian_kernel(const Grid1D& g) {
  const double c = 0.5 * std::log(2.0 * std::numbers::pi);
  return sample_log_density(g, [&](double x) { return 0.5 * x * x + c; });
}

// Standard Gaussian on the doubled span of g (same step) so that every
// difference of nodes of g is a node of the kernel grid.
inline LogDensity gaussian_kernel_doubled(const Grid1D& g) {
  Grid1D wide(g.left - 0.5 * (g.right - g.left),
              g.right + 0.5 * (g.right - g.left), 2 * g.n - 1);
  return gaussian_kernel(wide);
}

// Law of the unweighted parental midpoint: h(s) = 2 Int f(2s - y) f(y) dy.
// On a symmetric grid 2 s_k - x_j is the node with index 2k - j, so the
// quadrature needs no interpolation; mass(h) = mass(f)^2 up to tail terms.
inline LogDensity midpoint_density(const LogDensity& f) {
  if (!f.grid.symmetric())
    throw std::invalid_argument("midpoint density requires a symmetric grid");
  int n = f.grid.n;
  double log2h = std::log(2.0 * f.grid.step());
  std::vector<double> v(n);
  // Each output node owns its slot, so the thread count cannot change results.
  parallel_for(0, n, [&](int k) {
    LogSumExp acc;
    int jlo = std::max(0, 2 * k - (n - 1));
    int jhi = std::min(n - 1, 2 * k);
    for (int j = jlo; j <= jhi; ++j) {
      double a = f.v[2 * k - j], b = f.v[j];
      if (a == kInf || b == kInf) continue;
      acc.add(-a - b);
    }
    double s = acc.value();
    v[k] = (s == -kInf) ? kInf : -(s + log2h);
  });
  return LogDensity(f.grid, std::move(v));
}

// Recombination: B[f] = G * midpoint_density(f) / mass(f). Mass-preserving.
inline LogDensity apply_B(const LogDensity& f) {
  double log_mass = log_trapezoid_mass(f);
  LogDensity mid = midpoint_density(f);
  LogDensity out = logsumexp_convolve(gaussian_kernel_doubled(f.grid), mid, f.grid);
  for (double& vi : out.v)
    if (vi != kInf) vi += log_mass;
  return out;
}

inline void apply_selection_in_place(LogDensity& f,
                                     const std::vector<double>& mvals) {
  for (int i = 0; i < f.grid.n; ++i)
    if (f.v[i] != kInf) f.v[i] += mvals[i];
}

inline void apply_truncation_in_place(LogDensity& f, int lo, int hi) {
  for (int i = 0; i < lo; ++i) f.v[i] = kInf;
  for (int i = hi + 1; i < f.grid.n; ++i) f.v[i] = kInf;
}

// Internal fast path: selection values and truncation span precomputed.
inline LogDensity apply_T_prepared(const LogDensity& f,
                                   const std::vector<double>& mvals,
                                   int lo, int hi) {
  LogDensity out = apply_B(f);
  apply_selection_in_place(out, mvals);
  if (lo > 0 || hi < f.grid.n - 1) apply_truncation_in_place(out, lo, hi);
  return out;
}

// One generation: T[f] = e^{-m} B[f], truncated to [-R, R] when requested.
inline LogDensity apply_T(const LogDensity& f, const SelectionSpec& m,
                          const TruncationSpec* trunc = nullptr) {
  auto mvals = selection_values(m, f.grid);
  int lo = 0, hi = f.grid.n - 1;
  if (trunc) std::tie(lo, hi) = trunc->node_span(f.grid);
  return apply_T_prepared(f, mvals, lo, hi);
}

// Single-parent linear operator: A[f] = e^{-m} (G * f).
inline LogDensity apply_A(const LogDensity& f, const SelectionSpec& m) {
  log_trapezoid_mass(f);  // rejects empty input
  LogDensity out = logsumexp_convolve(gaussian_kernel_doubled(f.grid), f, f.grid);
  auto mvals = selection_values(m, f.grid);
  apply_selection_in_place(out, mvals);
  return out;
}

// Log-concavity gained in one generation (convolution + selection rules).
inline double log_concavity_update(double gamma, double beta) {
  if (!(gamma > 0)) throw std::invalid_argument("log_concavity_update: gamma must be > 0");
  if (!(beta > 0)) throw std::invalid_argument("log_concavity_update: beta must be > 0");
  return beta + 2.0 * gamma / (1.0 + 2.0 * gamma);
}

}  // namespace inflab
