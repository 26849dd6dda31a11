#pragma once

// Uniform-grid densities in negative-log form plus the log-domain primitives
// (quadrature, finite differences, convolution) everything else is built on.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "inflab/threading.hpp"

namespace inflab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Uniform grid on [left, right] with n nodes, h = (right - left)/(n - 1).
struct Grid1D {
  double left = 0.0;
  double right = 1.0;
  int n = 8;

  Grid1D() = default;
  Grid1D(double l, double r, int count) : left(l), right(r), n(count) {
    if (!(left < right)) throw std::invalid_argument("grid: left must be < right");
    if (n < 8) throw std::invalid_argument("grid: need n >= 8 nodes");
  }

  double step() const { return (right - left) / (n - 1); }

  // Convex-combination form keeps endpoints exact and puts 0 exactly on
  // symmetric odd grids (the center node evaluates to (left+right)/2).
  double x(int i) const {
    return ((n - 1 - i) * left + i * right) / (n - 1);
  }

  bool symmetric() const {
    return n % 2 == 1 && std::abs(left + right) <= 1e-12 * (right - left);
  }

  // Index of the node nearest to xq, or -1 if xq is off-grid by more than tol*h.
  int node_index(double xq, double tol = 1e-6) const {
    double t = (xq - left) / step();
    int i = (int)std::llround(t);
    if (i < 0 || i >= n) return -1;
    if (std::abs(t - i) > tol) return -1;
    return i;
  }

  bool operator==(const Grid1D&) const = default;
};

struct Grid2D {
  Grid1D gx;  // parental axis x1
  Grid1D gy;  // parental axis x2
};

// Density F stored as v[i] = -log F(x_i); +inf marks F = 0 (truncation mask).
struct LogDensity {
  Grid1D grid;
  std::vector<double> v;

  LogDensity() = default;
  LogDensity(Grid1D g, std::vector<double> vals) : grid(g), v(std::move(vals)) {
    if ((int)v.size() != grid.n)
      throw std::invalid_argument("log density: value count must match grid");
  }
};

template <class F>
LogDensity sample_log_density(const Grid1D& g, F&& neg_log_f) {
  std::vector<double> v(g.n);
  for (int i = 0; i < g.n; ++i) v[i] = neg_log_f(g.x(i));
  return LogDensity(g, std::move(v));
}

// Streaming log-sum-exp with a running max and Kahan-compensated mantissa sum.
// add(t) accumulates exp(t); value() returns log of the total.
class LogSumExp {
 public:
  void add(double t) {
    if (t == -kInf || std::isnan(t)) return;  // exp(-inf) adds exactly zero
    if (t <= max_) {
      // exp underflows far below the running max; skipping is harmless
      // (the term is at most denormal against a mantissa sum >= 1).
      if (t - max_ < -746.0) return;
      kahan_add(std::exp(t - max_));
    } else {
      double scale = std::exp(max_ - t);  // 0 when max_ = -inf
      sum_ *= scale;
      c_ *= scale;
      max_ = t;
      kahan_add(1.0);
    }
  }

  double value() const {
    if (max_ == -kInf) return -kInf;
    return max_ + std::log(sum_);
  }

 private:
  void kahan_add(double x) {
    double y = x - c_;
    double t = sum_ + y;
    c_ = (t - sum_) - y;
    sum_ = t;
  }

  double max_ = -kInf;
  double sum_ = 0.0;
  double c_ = 0.0;
};

// Trapezoid weight: h at interior nodes, h/2 at the two grid endpoints.
inline double trapezoid_weight(const Grid1D& g, int i) {
  double h = g.step();
  return (i == 0 || i == g.n - 1) ? 0.5 * h : h;
}

// log of the trapezoid mass of F; errors when every node is masked.
inline double log_trapezoid_mass(const LogDensity& f) {
  LogSumExp acc;
  bool any = false;
  for (int i = 0; i < f.grid.n; ++i) {
    if (f.v[i] == kInf) continue;
    any = true;
    acc.add(-f.v[i] + std::log(trapezoid_weight(f.grid, i)));
  }
  if (!any) throw std::invalid_argument("empty density");
  return acc.value();
}

inline double trapezoid_mass(const LogDensity& f) {
  return std::exp(log_trapezoid_mass(f));
}

// Rescales F to unit mass; returns the mass it had before.
inline double normalize(LogDensity& f) {
  double lm = log_trapezoid_mass(f);
  for (double& vi : f.v)
    if (vi != kInf) vi += lm;
  return std::exp(lm);
}

// Contiguous index range [first, last] where v is finite.
// Errors if the finite set is empty, split, or shorter than 3 nodes.
inline std::pair<int, int> finite_range(const LogDensity& f) {
  int n = f.grid.n, first = -1, last = -1;
  for (int i = 0; i < n; ++i) {
    if (f.v[i] == kInf) continue;
    if (first < 0) first = i;
    last = i;
  }
  if (first < 0) throw std::invalid_argument("empty density");
  for (int i = first; i <= last; ++i)
    if (f.v[i] == kInf)
      throw std::invalid_argument("density support must be contiguous");
  if (last - first + 1 < 3)
    throw std::invalid_argument("need at least 3 finite nodes");
  return {first, last};
}

// d/dx log F = -V' on the finite region: central differences inside,
// second-order one-sided at the two region ends. Length = region length.
inline std::vector<double> log_derivative(const LogDensity& f) {
  auto [a, b] = finite_range(f);
  double h = f.grid.step();
  const auto& v = f.v;
  std::vector<double> d(b - a + 1);
  d.front() = -(-3.0 * v[a] + 4.0 * v[a + 1] - v[a + 2]) / (2.0 * h);
  d.back() = -(3.0 * v[b] - 4.0 * v[b - 1] + v[b - 2]) / (2.0 * h);
  for (int i = a + 1; i < b; ++i) d[i - a] = -(v[i + 1] - v[i - 1]) / (2.0 * h);
  return d;
}

// Second derivative of V = -log F (so values >= gamma certify gamma-log-
// concavity). Three-point stencil; one-sided copies at the region ends.
inline std::vector<double> second_log_derivative(const LogDensity& f) {
  auto [a, b] = finite_range(f);
  double h2 = f.grid.step() * f.grid.step();
  const auto& v = f.v;
  std::vector<double> d(b - a + 1);
  for (int i = a + 1; i < b; ++i)
    d[i - a] = (v[i - 1] - 2.0 * v[i] + v[i + 1]) / h2;
  d.front() = (v[a] - 2.0 * v[a + 1] + v[a + 2]) / h2;
  d.back() = (v[b] - 2.0 * v[b - 1] + v[b - 2]) / h2;
  return d;
}

// (f*g)(t_k) = h * sum_j f(t_k - x_j) g(x_j), entirely in log space.
// Grids must share the step and be mutually aligned so t_k - x_j is a node
// of f's grid; contributions falling outside f's grid count as zero.
inline LogDensity logsumexp_convolve(const LogDensity& f, const LogDensity& g,
                                     const Grid1D& out) {
  double h = f.grid.step();
  if (std::abs(g.grid.step() - h) > 1e-12 * h ||
      std::abs(out.step() - h) > 1e-12 * h)
    throw std::invalid_argument("convolve: grids must share the step");
  // One alignment check fixes all (k, j) pairs since steps are equal.
  double off = (out.left - g.grid.left - f.grid.left) / h;
  double offr = std::round(off);
  if (std::abs(off - offr) > 1e-6)
    throw std::invalid_argument("convolve: grids are misaligned");
  long base = (long)offr;  // index into f for (k=0, j=0)

  double logh = std::log(h);
  int nf = f.grid.n, ng = g.grid.n;
  std::vector<double> v(out.n);
  // Each output node owns its slot, so the thread count cannot change results.
  parallel_for(0, out.n, [&](int k) {
    LogSumExp acc;
    long i0 = base + k;  // f-index for j = 0
    int jlo = (int)std::max<long>(0, i0 - (nf - 1));
    int jhi = (int)std::min<long>(ng - 1, i0);
    for (int j = jlo; j <= jhi; ++j) {
      double fv = f.v[(int)(i0 - j)];
      double gv = g.v[j];
      if (fv == kInf || gv == kInf) continue;
      acc.add(-fv - gv);
    }
    double s = acc.value();
    v[k] = (s == -kInf) ? kInf : -(s + logh);
  });
  return LogDensity(out, std::move(v));
}

}  // namespace inflab
