#pragma once

// Discrete optimal transport with mixed ground norms: W_{p,q} by exact
// min-cost flow, bottleneck W_{inf,q} by threshold search, the two-parent
// transition kernel, and the contraction/duality verification reports.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "inflab/eigen.hpp"
#include "inflab/flow.hpp"
#include "inflab/grid.hpp"
#include "inflab/metrics.hpp"
#include "inflab/model.hpp"

namespace inflab {

// Order parameter for p and q; infinity is encoded explicitly.
inline constexpr int kOrdInf = std::numeric_limits<int>::max();

inline int conjugate_order(int q) {
  if (q == 1) return kOrdInf;
  if (q == 2) return 2;
  if (q == kOrdInf) return 1;
  throw std::invalid_argument("transport: q must be 1, 2 or inf");
}

struct DiscreteMeasure {
  int dim = 1;
  std::vector<std::array<double, 2>> points;  // second coordinate 0 in 1-D
  std::vector<double> weights;

  static DiscreteMeasure make(int dim, std::vector<std::array<double, 2>> pts,
                              std::vector<double> w) {
    if (dim != 1 && dim != 2)
      throw std::invalid_argument("measure: dim must be 1 or 2");
    if (pts.empty() || pts.size() != w.size())
      throw std::invalid_argument("measure: points/weights size mismatch");
    double total = 0.0;
    for (double wi : w) {
      if (!(wi >= 0)) throw std::invalid_argument("measure: negative weight");
      total += wi;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("measure: weights must sum to 1");
    DiscreteMeasure m;
    m.dim = dim;
    m.points = std::move(pts);
    m.weights = std::move(w);
    return m;
  }
};

inline double ground_distance(const std::array<double, 2>& a,
                              const std::array<double, 2>& b, int q) {
  double dx = std::abs(a[0] - b[0]), dy = std::abs(a[1] - b[1]);
  if (q == 1) return dx + dy;
  if (q == 2) return std::hypot(dx, dy);
  if (q == kOrdInf) return std::max(dx, dy);
  throw std::invalid_argument("transport: q must be 1, 2 or inf");
}

enum class WKind { W11, W12, W1inf, W21, W22, W2inf, Winf1, Winf2, Winfinf };

inline WKind wkind_of(int p, int q) {
  if (p == 1 && q == 1) return WKind::W11;
  if (p == 1 && q == 2) return WKind::W12;
  if (p == 1 && q == kOrdInf) return WKind::W1inf;
  if (p == 2 && q == 1) return WKind::W21;
  if (p == 2 && q == 2) return WKind::W22;
  if (p == 2 && q == kOrdInf) return WKind::W2inf;
  if (p == kOrdInf && q == 1) return WKind::Winf1;
  if (p == kOrdInf && q == 2) return WKind::Winf2;
  if (p == kOrdInf && q == kOrdInf) return WKind::Winfinf;
  throw std::invalid_argument("transport: unsupported (p, q)");
}

inline const char* wkind_name(WKind k) {
  switch (k) {
    case WKind::W11: return "W11";
    case WKind::W12: return "W12";
    case WKind::W1inf: return "W1inf";
    case WKind::W21: return "W21";
    case WKind::W22: return "W22";
    case WKind::W2inf: return "W2inf";
    case WKind::Winf1: return "Winf1";
    case WKind::Winf2: return "Winf2";
    case WKind::Winfinf: return "Winfinf";
  }
  return "?";
}

struct TransportReport {
  double value = 0.0;
  WKind kind = WKind::W11;
  int plan_support_size = 0;
  double max_l1_displacement = 0.0;  // over the support of the optimal plan
  double threshold_certificate = 0.0;  // bottleneck only
};

namespace detail {

inline bool measures_identical(const DiscreteMeasure& mu,
                               const DiscreteMeasure& nu) {
  if (mu.dim != nu.dim || mu.points.size() != nu.points.size()) return false;
  for (size_t i = 0; i < mu.points.size(); ++i) {
    if (mu.points[i] != nu.points[i]) return false;
    if (std::abs(mu.weights[i] - nu.weights[i]) > 1e-15) return false;
  }
  return true;
}

inline int positive_support(const DiscreteMeasure& mu) {
  int c = 0;
  for (double w : mu.weights)
    if (w > 0) ++c;
  return c;
}

}  // namespace detail

// Exact W_{p,q} for p in {1,2} by min-cost flow on integerized weights.
inline TransportReport wpq_lp(const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu, int p, int q) {
  if (p != 1 && p != 2)
    throw std::invalid_argument("transport: p must be 1 or 2 here");
  TransportReport rep;
  rep.kind = wkind_of(p, q);
  if (mu.points.size() > 400 || nu.points.size() > 400)
    throw std::invalid_argument("use bottleneck/sinkhorn path");
  if (detail::measures_identical(mu, nu)) {
    rep.plan_support_size = detail::positive_support(mu);
    return rep;
  }
  auto a = integerize_weights(mu.weights);
  auto b = integerize_weights(nu.weights);
  int nl = (int)mu.points.size(), nr = (int)nu.points.size();
  int src = 0, snk = nl + nr + 1;
  MinCostFlow mcf(nl + nr + 2);
  for (int i = 0; i < nl; ++i) mcf.add_edge(src, 1 + i, a[(size_t)i], 0);
  for (int j = 0; j < nr; ++j) mcf.add_edge(1 + nl + j, snk, b[(size_t)j], 0);
  for (int i = 0; i < nl; ++i) {
    if (a[(size_t)i] == 0) continue;
    for (int j = 0; j < nr; ++j) {
      if (b[(size_t)j] == 0) continue;
      double d = ground_distance(mu.points[(size_t)i], nu.points[(size_t)j], q);
      mcf.add_edge(1 + i, 1 + nl + j, a[(size_t)i],
                   std::llround((p == 1 ? d : d * d) * (double)kCostScale));
    }
  }
  auto [flow, cost] = mcf.run(src, snk);
  if (flow != kWeightScale)
    throw std::logic_error("transport: flow did not saturate the weights");
  double mean_cost = cost / ((double)kWeightScale * (double)kCostScale);
  rep.value = p == 1 ? mean_cost : std::sqrt(mean_cost);
  for (int i = 0; i < nl; ++i) {
    for (const auto& e : mcf.graph()[(size_t)(1 + i)]) {
      if (e.to <= nl || e.to == snk || e.to == src) continue;
      std::int64_t sent = mcf.graph()[(size_t)e.to][(size_t)e.rev].cap;
      if (sent > 0) {
        rep.plan_support_size += 1;
        int j = e.to - 1 - nl;
        double l1 =
            ground_distance(mu.points[(size_t)i], nu.points[(size_t)j], 1);
        rep.max_l1_displacement = std::max(rep.max_l1_displacement, l1);
      }
    }
  }
  return rep;
}

// Feasibility of coupling mu to nu using only pairs with ground distance <= t.
inline bool winf_feasible(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                          int q, double t) {
  auto a = integerize_weights(mu.weights);
  auto b = integerize_weights(nu.weights);
  int nl = (int)mu.points.size(), nr = (int)nu.points.size();
  int src = 0, snk = nl + nr + 1;
  MaxFlow mf(nl + nr + 2);
  for (int i = 0; i < nl; ++i) mf.add_edge(src, 1 + i, a[(size_t)i]);
  for (int j = 0; j < nr; ++j) mf.add_edge(1 + nl + j, snk, b[(size_t)j]);
  for (int i = 0; i < nl; ++i) {
    if (a[(size_t)i] == 0) continue;
    for (int j = 0; j < nr; ++j) {
      if (b[(size_t)j] == 0) continue;
      if (ground_distance(mu.points[(size_t)i], nu.points[(size_t)j], q) <= t)
        mf.add_edge(1 + i, 1 + nl + j, a[(size_t)i]);
    }
  }
  return mf.run(src, snk) == kWeightScale;
}

// Bottleneck W_{inf,q}: smallest threshold t such that a coupling supported
// on {distance <= t} carries all mass. Binary search over the distinct
// pairwise distances.
inline TransportReport bottleneck_winf(const DiscreteMeasure& mu,
                                       const DiscreteMeasure& nu, int q) {
  TransportReport rep;
  rep.kind = wkind_of(kOrdInf, q);
  if (mu.points.size() > 2500 || nu.points.size() > 2500)
    throw std::invalid_argument("bottleneck: support too large");
  if (detail::measures_identical(mu, nu)) {
    rep.plan_support_size = detail::positive_support(mu);
    return rep;
  }
  std::vector<double> costs;
  costs.reserve(mu.points.size() * nu.points.size());
  for (size_t i = 0; i < mu.points.size(); ++i) {
    if (mu.weights[i] <= 0) continue;
    for (size_t j = 0; j < nu.points.size(); ++j) {
      if (nu.weights[j] <= 0) continue;
      costs.push_back(ground_distance(mu.points[i], nu.points[j], q));
    }
  }
  std::sort(costs.begin(), costs.end());
  costs.erase(std::unique(costs.begin(), costs.end()), costs.end());
  if (!winf_feasible(mu, nu, q, costs.back()))
    throw std::runtime_error("bottleneck: infeasible at max threshold");
  size_t lo = 0, hi = costs.size() - 1;
  while (lo < hi) {
    size_t mid = lo + (hi - lo) / 2;
    if (winf_feasible(mu, nu, q, costs[mid]))
      hi = mid;
    else
      lo = mid + 1;
  }
  rep.value = costs[lo];
  rep.threshold_certificate = costs[lo];

  // Rebuild the feasible flow once to report the plan support.
  auto a = integerize_weights(mu.weights);
  auto b = integerize_weights(nu.weights);
  int nl = (int)mu.points.size(), nr = (int)nu.points.size();
  int src = 0, snk = nl + nr + 1;
  MaxFlow mf(nl + nr + 2);
  for (int i = 0; i < nl; ++i) mf.add_edge(src, 1 + i, a[(size_t)i]);
  for (int j = 0; j < nr; ++j) mf.add_edge(1 + nl + j, snk, b[(size_t)j]);
  for (int i = 0; i < nl; ++i) {
    if (a[(size_t)i] == 0) continue;
    for (int j = 0; j < nr; ++j) {
      if (b[(size_t)j] == 0) continue;
      if (ground_distance(mu.points[(size_t)i], nu.points[(size_t)j], q) <=
          rep.value)
        mf.add_edge(1 + i, 1 + nl + j, a[(size_t)i]);
    }
  }
  mf.run(src, snk);
  double max_l1 = 0.0;
  int support = 0;
  for (int i = 0; i < nl; ++i) {
    for (const auto& e : mf.graph()[(size_t)(1 + i)]) {
      if (e.to <= nl || e.to == snk || e.to == src) continue;
      std::int64_t sent = mf.graph()[(size_t)e.to][(size_t)e.rev].cap;
      if (sent > 0) {
        support += 1;
        int j = e.to - 1 - nl;
        max_l1 = std::max(max_l1, ground_distance(mu.points[(size_t)i],
                                                  nu.points[(size_t)j], 1));
      }
    }
  }
  rep.plan_support_size = support;
  rep.max_l1_displacement = max_l1;
  return rep;
}

// W_{2,2} with the optimal plan's largest l1 displacement, the discrete
// surrogate of the Brenier-map displacement bound.
inline TransportReport w22_plan_displacement(const DiscreteMeasure& mu,
                                             const DiscreteMeasure& nu) {
  return wpq_lp(mu, nu, 2, 2);
}

// -------- two-parent transition kernel --------

struct Kernel2D {
  double x = 0.0;
  Grid2D grid;
  std::vector<double> w;  // -log P(x; x1, x2), row-major over (x1, x2)
  double z_log = 0.0;

  double at(int i, int j) const { return w[(size_t)i * (size_t)grid.gy.n + (size_t)j]; }
};

inline Kernel2D build_transition_kernel(double x, const LogDensity& vbar,
                                        const Grid2D& grid2) {
  std::vector<double> vx, vy;
  auto marginal_values = [&](const Grid1D& axis) {
    if (axis.n == vbar.grid.n &&
        std::abs(axis.left - vbar.grid.left) <= 1e-12 &&
        std::abs(axis.right - vbar.grid.right) <= 1e-12)
      return vbar.v;
    return resample_log_density(vbar, axis).v;
  };
  vx = marginal_values(grid2.gx);
  vy = marginal_values(grid2.gy);

  Kernel2D ker;
  ker.x = x;
  ker.grid = grid2;
  ker.w.assign((size_t)grid2.gx.n * (size_t)grid2.gy.n, kInf);
  LogSumExp z;
  for (int i = 0; i < grid2.gx.n; ++i) {
    if (vx[(size_t)i] == kInf) continue;
    double wi = trapezoid_weight(grid2.gx, i);
    double x1 = grid2.gx.x(i);
    for (int j = 0; j < grid2.gy.n; ++j) {
      if (vy[(size_t)j] == kInf) continue;
      double mid = x - 0.5 * (x1 + grid2.gy.x(j));
      double raw = 0.5 * mid * mid + vx[(size_t)i] + vy[(size_t)j];
      ker.w[(size_t)i * (size_t)grid2.gy.n + (size_t)j] = raw;
      z.add(-raw + std::log(wi * trapezoid_weight(grid2.gy, j)));
    }
  }
  double zv = z.value();
  if (zv == -kInf) throw std::runtime_error("kernel normalization underflow");
  ker.z_log = zv;
  for (double& wij : ker.w)
    if (wij != kInf) wij += zv;
  return ker;
}

// Collapses a kernel to a q-by-q lattice of cell centers over its bounding
// box, dropping cells below e^{-40} of the heaviest. Returns the measure and
// the discarded mass fraction.
inline std::pair<DiscreteMeasure, double> quantize_kernel(const Kernel2D& ker,
                                                          int q) {
  if (q < 2) throw std::invalid_argument("quantize: need q >= 2");
  const Grid1D& gx = ker.grid.gx;
  const Grid1D& gy = ker.grid.gy;
  double cw = (gx.right - gx.left) / q, ch = (gy.right - gy.left) / q;
  std::vector<double> cell((size_t)q * (size_t)q, 0.0);
  for (int i = 0; i < gx.n; ++i) {
    int a = std::min(q - 1, (int)((gx.x(i) - gx.left) / cw));
    double wi = trapezoid_weight(gx, i);
    for (int j = 0; j < gy.n; ++j) {
      double wij = ker.at(i, j);
      if (wij == kInf) continue;
      int b = std::min(q - 1, (int)((gy.x(j) - gy.left) / ch));
      cell[(size_t)a * (size_t)q + (size_t)b] +=
          wi * trapezoid_weight(gy, j) * std::exp(-wij);
    }
  }
  double peak = 0.0, total = 0.0;
  for (double c : cell) {
    peak = std::max(peak, c);
    total += c;
  }
  if (!(total > 0)) throw std::runtime_error("quantize: empty kernel");
  double cut = peak * std::exp(-40.0);
  std::vector<std::array<double, 2>> pts;
  std::vector<double> wts;
  double kept = 0.0;
  for (int a = 0; a < q; ++a) {
    for (int b = 0; b < q; ++b) {
      double c = cell[(size_t)a * (size_t)q + (size_t)b];
      if (c < cut || c <= 0) continue;
      pts.push_back({gx.left + (a + 0.5) * cw, gy.left + (b + 0.5) * ch});
      wts.push_back(c);
      kept += c;
    }
  }
  for (double& wv : wts) wv /= kept;
  double discarded = (total - kept) / total;
  return {DiscreteMeasure::make(2, std::move(pts), std::move(wts)), discarded};
}

// -------- verification reports --------

struct KernelPairRow {
  double x = 0.0;
  double x_tilde = 0.0;
  double winf1 = 0.0;
  double ratio = 0.0;
  double bound = 0.0;
  double tolerance = 0.0;
  double discarded_mass = 0.0;
  int quantization = 0;
  bool pass = false;
};

struct KernelContractionReport {
  double alpha = 0.0;
  double bound = 0.0;  // 2 / (1 + 2 alpha)
  std::vector<KernelPairRow> rows;
  bool pass = false;
};

// Checks that W_{inf,1}(P(x;.), P(xt;.)) / |x - xt| stays within the
// contraction bound plus a quantization allowance of two l1 cell diameters.
inline KernelContractionReport verify_kernel_contraction(
    const LogDensity& vbar, double alpha,
    const std::vector<std::pair<double, double>>& x_pairs, int quantization) {
  if (!(alpha > 0))
    throw std::invalid_argument("kernel contraction: alpha must be > 0");
  double h = vbar.grid.step();
  if (estimate_log_concavity(vbar) + 10 * h * h < alpha)
    throw std::invalid_argument("log-concavity certificate failed");
  Grid2D grid2{vbar.grid, vbar.grid};
  double cell_l1_diam =
      (grid2.gx.right - grid2.gx.left) / quantization +
      (grid2.gy.right - grid2.gy.left) / quantization;
  KernelContractionReport rep;
  rep.alpha = alpha;
  rep.bound = 2.0 / (1.0 + 2.0 * alpha);
  rep.pass = true;
  for (auto [xa, xb] : x_pairs) {
    Kernel2D ka = build_transition_kernel(xa, vbar, grid2);
    Kernel2D kb = build_transition_kernel(xb, vbar, grid2);
    auto [ma, da] = quantize_kernel(ka, quantization);
    auto [mb, db] = quantize_kernel(kb, quantization);
    KernelPairRow row;
    row.x = xa;
    row.x_tilde = xb;
    row.quantization = quantization;
    row.discarded_mass = std::max(da, db);
    row.bound = rep.bound;
    double dx = std::abs(xa - xb);
    if (dx == 0) {
      row.winf1 = bottleneck_winf(ma, mb, 1).value;
      row.ratio = 0.0;
      row.tolerance = 2.0 * cell_l1_diam;
      row.pass = row.winf1 <= row.tolerance;
    } else {
      row.winf1 = bottleneck_winf(ma, mb, 1).value;
      row.ratio = row.winf1 / dx;
      row.tolerance = 2.0 * cell_l1_diam / dx;
      row.pass = row.ratio <= row.bound + row.tolerance;
    }
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

// Closed-form contraction rates under the two ground norms; the l1 rate is
// the strictly smaller one for every beta.
inline std::pair<double, double> l2_rate_comparison(double beta) {
  double a = solve_alpha(beta);
  return {2.0 / (1.0 + 2.0 * a), 1.0 / a};
}

// -------- duality test functions --------

// Positive test functions with analytically known Lipschitz data for the
// duality inequality. For finite p the relevant constant is
// sup_z || grad(u^{1/p})(z) ||_{q'}; for p = inf it is sup || grad log u ||_{q'}.
struct TestFunction {
  enum class Kind { gaussian, exp_linear, softplus } kind = Kind::gaussian;
  int dim = 1;
  double a = 1.0;                    // gaussian curvature parameter
  std::array<double, 2> c{0.0, 0.0};  // gaussian center
  std::array<double, 2> b{1.0, 0.0};  // linear coefficient
  double c0 = 0.0;                    // linear offset

  static TestFunction gaussian(int dim, double a, std::array<double, 2> c) {
    if (!(a > 0)) throw std::invalid_argument("test function: a must be > 0");
    TestFunction f;
    f.kind = Kind::gaussian;
    f.dim = dim;
    f.a = a;
    f.c = c;
    return f;
  }
  static TestFunction exp_linear(int dim, std::array<double, 2> b, double c0) {
    TestFunction f;
    f.kind = Kind::exp_linear;
    f.dim = dim;
    f.b = b;
    f.c0 = c0;
    return f;
  }
  static TestFunction softplus(int dim, std::array<double, 2> b, double c0) {
    TestFunction f;
    f.kind = Kind::softplus;
    f.dim = dim;
    f.b = b;
    f.c0 = c0;
    return f;
  }

  double value(const std::array<double, 2>& z) const {
    switch (kind) {
      case Kind::gaussian: {
        double dx = z[0] - c[0], dy = dim == 2 ? z[1] - c[1] : 0.0;
        return std::exp(-0.5 * a * (dx * dx + dy * dy));
      }
      case Kind::exp_linear:
        return std::exp(b[0] * z[0] + (dim == 2 ? b[1] * z[1] : 0.0) + c0);
      case Kind::softplus: {
        double s = b[0] * z[0] + (dim == 2 ? b[1] * z[1] : 0.0) + c0;
        return s > 30 ? s : std::log1p(std::exp(s));
      }
    }
    return 0.0;
  }

  // sup_{||y||_2 = 1} ||y||_{q'} in this dimension.
  double norm_ratio(int qp) const {
    if (qp == 1 && dim == 2) return std::sqrt(2.0);
    return 1.0;
  }

  double vec_norm(const std::array<double, 2>& v, int qp) const {
    double vx = std::abs(v[0]), vy = dim == 2 ? std::abs(v[1]) : 0.0;
    if (qp == 1) return vx + vy;
    if (qp == 2) return std::hypot(vx, vy);
    return std::max(vx, vy);
  }

  // Lipschitz constant of u^{1/p} (log u for p = inf) w.r.t. the l_q norm,
  // i.e. the sup over z of the dual-norm gradient. Infinite when the family
  // member is unbounded in that regime.
  double lipschitz(int p, int q) const {
    int qp = conjugate_order(q);
    switch (kind) {
      case Kind::gaussian:
        if (p == kOrdInf) return kInf;  // grad log u is linear, unbounded
        return norm_ratio(qp) * std::sqrt(a / p) * std::exp(-0.5);
      case Kind::exp_linear:
        if (p != kOrdInf) return kInf;  // u^{1/p} still exponential
        return vec_norm(b, qp);
      case Kind::softplus: {
        double bn = vec_norm(b, qp);
        if (p == 1 || p == kOrdInf) return bn;  // sup of sigmoid, sigmoid/L
        // p = 2: maximize (1/2) L(s)^{-1/2} sigma(s) over the scalar s.
        auto g = [](double s) {
          double L = s > 30 ? s : std::log1p(std::exp(s));
          double sig = 1.0 / (1.0 + std::exp(-s));
          return 0.5 * sig / std::sqrt(L);
        };
        double lo = -60, hi = 60;
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double m1 = hi - gr * (hi - lo), m2 = lo + gr * (hi - lo);
        double g1 = g(m1), g2 = g(m2);
        for (int it = 0; it < 200; ++it) {
          if (g1 < g2) {
            lo = m1;
            m1 = m2;
            g1 = g2;
            m2 = lo + gr * (hi - lo);
            g2 = g(m2);
          } else {
            hi = m2;
            m2 = m1;
            g2 = g1;
            m1 = hi - gr * (hi - lo);
            g1 = g(m1);
          }
        }
        return bn * std::max(g1, g2);
      }
    }
    return kInf;
  }
};

struct DualityReport {
  double lhs = 0.0;
  double lipschitz = 0.0;
  double wasserstein = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

// Kantorovich-type duality estimate: |<u,mu>^{1/p} - <u,nu>^{1/p}| is bounded
// by the Lipschitz constant of u^{1/p} times W_{p,q}. For p = inf both sides
// take the log form.
inline DualityReport duality_check(const TestFunction& u,
                                   const DiscreteMeasure& mu,
                                   const DiscreteMeasure& nu, int p, int q) {
  if (p != 1 && p != 2 && p != kOrdInf)
    throw std::invalid_argument("transport: p must be 1, 2 or inf");
  double iu = 0.0, iv = 0.0;
  for (size_t i = 0; i < mu.points.size(); ++i)
    iu += mu.weights[i] * u.value(mu.points[i]);
  for (size_t j = 0; j < nu.points.size(); ++j)
    iv += nu.weights[j] * u.value(nu.points[j]);
  DualityReport rep;
  if (p == kOrdInf)
    rep.lhs = std::abs(std::log(iu) - std::log(iv));
  else if (p == 1)
    rep.lhs = std::abs(iu - iv);
  else
    rep.lhs = std::abs(std::sqrt(iu) - std::sqrt(iv));
  rep.lipschitz = u.lipschitz(p, q);
  rep.wasserstein =
      p == kOrdInf ? bottleneck_winf(mu, nu, q).value : wpq_lp(mu, nu, p, q).value;
  rep.rhs = rep.lipschitz * rep.wasserstein;
  rep.pass = rep.lhs <= rep.rhs + 1e-9;
  return rep;
}

struct LogEstimateRow {
  double x = 0.0;
  double x_tilde = 0.0;
  double lhs = 0.0;
  double winf1 = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

struct LogEstimateReport {
  double lip0 = 0.0;  // sup |(log u0)'|
  std::vector<LogEstimateRow> rows;
  bool pass = false;
};

// One dual step u1(x) = <u0 x u0, P(x;.)> (the constant renormalization of
// the dual update cancels in the log difference). Checks
// |log u1(x) - log u1(xt)| <= sup|(log u0)'| * W_{inf,1}(P(x;.), P(xt;.)).
inline LogEstimateReport log_estimate_check(
    const LogDensity& u0, const LogDensity& vbar,
    const std::vector<std::pair<double, double>>& x_pairs,
    int quantization = 48) {
  auto du = log_derivative(u0);
  LogEstimateReport rep;
  for (double d : du) rep.lip0 = std::max(rep.lip0, std::abs(d));
  Grid2D grid2{vbar.grid, vbar.grid};
  if (u0.grid.n != vbar.grid.n ||
      std::abs(u0.grid.left - vbar.grid.left) > 1e-12)
    throw std::invalid_argument("log estimate: u0 must share the profile grid");

  auto dual_value = [&](const Kernel2D& ker) {
    LogSumExp acc;
    for (int i = 0; i < ker.grid.gx.n; ++i) {
      if (u0.v[(size_t)i] == kInf) continue;
      double wi = trapezoid_weight(ker.grid.gx, i);
      for (int j = 0; j < ker.grid.gy.n; ++j) {
        double wij = ker.at(i, j);
        if (wij == kInf || u0.v[(size_t)j] == kInf) continue;
        acc.add(-wij - u0.v[(size_t)i] - u0.v[(size_t)j] +
                std::log(wi * trapezoid_weight(ker.grid.gy, j)));
      }
    }
    return acc.value();  // log u1(x)
  };

  rep.pass = true;
  for (auto [xa, xb] : x_pairs) {
    Kernel2D ka = build_transition_kernel(xa, vbar, grid2);
    Kernel2D kb = build_transition_kernel(xb, vbar, grid2);
    LogEstimateRow row;
    row.x = xa;
    row.x_tilde = xb;
    row.lhs = std::abs(dual_value(ka) - dual_value(kb));
    auto [ma, da] = quantize_kernel(ka, quantization);
    auto [mb, db] = quantize_kernel(kb, quantization);
    (void)da;
    (void)db;
    row.winf1 = bottleneck_winf(ma, mb, 1).value;
    row.rhs = rep.lip0 * row.winf1;
    row.pass = row.lhs <= row.rhs + 1e-6;
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace inflab
