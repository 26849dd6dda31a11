// Acceptance gate: ten numbered end-to-end checks over the library and the
// CLI, one [PASS]/[FAIL] line each. Exit code is the number of failures.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "inflab/analysis.hpp"
#include "inflab/eigen.hpp"
#include "inflab/grid.hpp"
#include "inflab/metrics.hpp"
#include "inflab/model.hpp"
#include "inflab/transport.hpp"

using namespace inflab;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::string note;

  void expect(bool cond, const std::string& why) {
    if (cond) return;
    ok = false;
    append(why);
  }
  void append(const std::string& s) {
    if (!note.empty()) note += "; ";
    note += s;
  }
};

int g_failures = 0;

void emit(int id, const char* name, const Check& c, double secs) {
  std::printf("[%s] criterion %d: %s (%.1f s)%s%s\n", c.ok ? "PASS" : "FAIL",
              id, name, secs, c.note.empty() ? "" : " -- ", c.note.c_str());
  std::fflush(stdout);
  if (!c.ok) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

LogDensity gaussian_profile(const Grid1D& g, double var) {
  LogDensity f = sample_log_density(g, [var](double x) {
    return 0.5 * x * x / var + 0.5 * std::log(2.0 * std::numbers::pi * var);
  });
  normalize(f);
  return f;
}

SelectionSpec quartic_selection() {
  return SelectionSpec::even_polynomial_selection({0, 0, 0.5, 0, 0.25});
}

struct ContractionData {
  EigenResult ref;
  RunTrace trace;
  double bound = 0.0;
  double worst = 0.0;   // max per-step divergence ratio above the floor
  double slack = 0.0;   // max(0, worst - bound)
};

// One perturbed run: solve the eigenpair, tilt it, iterate 40 generations,
// and record the worst per-step ratio of the sup log-derivative divergence.
// Ratios are only counted while the previous divergence exceeds 1e-7; below
// that the additive 1e-12-scale noise of the pipeline dominates the quotient.
ContractionData contraction_data(const SelectionSpec& m, int n, bool quadratic) {
  ContractionData d;
  Grid1D g(-10, 10, n);
  d.ref = solve_eigen(m, gaussian_kernel(g), nullptr, 1e-12, 400);
  LogDensity f0 = make_admissible_initial(d.ref.profile, 0.2, InitialMode::sine);
  d.trace = contraction_run(m, f0, d.ref, 40);
  d.bound = quadratic
                ? contraction_factor(m.beta)
                : 2.0 / (1.0 + 2.0 * estimate_log_concavity(d.ref.profile));
  double prev = 0.0;
  for (const RunRecord& r : d.trace.records) {
    if (r.n >= 2 && prev > 1e-7) d.worst = std::max(d.worst, r.i_inf / prev);
    prev = r.i_inf;
  }
  d.slack = std::max(0.0, d.worst - d.bound);
  return d;
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::vector<double>> rows;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      row.push_back(std::strtod(cell.c_str(), nullptr));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Random instances shared with the duality CLI suite.
DiscreteMeasure random_measure(std::mt19937_64& rng, int dim) {
  std::uniform_int_distribution<int> size_d(2, 10);
  std::uniform_real_distribution<double> pos(-3.0, 3.0), wgt(0.1, 1.0);
  int k = size_d(rng);
  std::vector<std::array<double, 2>> pts(k);
  std::vector<double> w(k);
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    pts[i] = {pos(rng), dim == 2 ? pos(rng) : 0.0};
    w[i] = wgt(rng);
    total += w[i];
  }
  double acc = 0.0;
  for (int i = 0; i + 1 < k; ++i) {
    w[i] /= total;
    acc += w[i];
  }
  w[k - 1] = 1.0 - acc;
  return DiscreteMeasure::make(dim, std::move(pts), std::move(w));
}

std::vector<TestFunction> functions_for(std::mt19937_64& rng, int dim, int p) {
  std::uniform_real_distribution<double> curv(0.3, 2.0), center(-2.0, 2.0),
      coef(-1.5, 1.5), off(0.5, 1.5);
  std::vector<TestFunction> out;
  out.push_back(TestFunction::gaussian(
      dim, curv(rng), {center(rng), dim == 2 ? center(rng) : 0.0}));
  out.push_back(TestFunction::softplus(
      dim, {coef(rng), dim == 2 ? coef(rng) : 0.0}, off(rng)));
  if (p == kOrdInf)
    out.push_back(TestFunction::exp_linear(
        dim, {coef(rng), dim == 2 ? coef(rng) : 0.0}, off(rng)));
  return out;
}

}  // namespace

int main() {
  const double beta = 1.0;
  const auto quad = SelectionSpec::quadratic_selection(beta);
  const auto quart = quartic_selection();

  // 1. Scalar fixed points and closed forms.
  {
    auto t0 = std::chrono::steady_clock::now();
    Check c;
    for (double b : {0.1, 0.5, 1.0, 2.0, 5.0}) {
      double a = solve_alpha(b);
      double resid = 2 * a * a - (1 + 2 * b) * a - b;
      c.expect(std::abs(resid) < 1e-12,
               fmt("fixed-point residual %.3e at beta=%g", resid, b));
      double s = 3 + 2 * b;
      double closed = (s - std::sqrt(s * s - 8)) / 2;
      c.expect(std::abs(contraction_factor(b) - closed) < 1e-12,
               fmt("contraction factor mismatch at beta=%g", b));
      c.expect(std::abs(quadratic_sigma2(b) - 1 / a) < 1e-12,
               fmt("variance != 1/alpha at beta=%g", b));
    }
    double secs = seconds_since(t0);
    c.expect(secs < 1.0, fmt("runtime %.2f s exceeds 1 s", secs));
    emit(1, "scalar fixed points", c, secs);
  }

  // 2. Quadratic eigenpair on the reference grid.
  EigenResult ref2049;
  {
    auto t0 = std::chrono::steady_clock::now();
    Check c;
    Grid1D g(-10, 10, 2049);
    try {
      ref2049 = solve_eigen(quad, gaussian_kernel(g), nullptr, 1e-12, 200);
      double sigma2 = quadratic_sigma2(beta);
      LogDensity oracle = gaussian_profile(g, sigma2);
      double sup_dv = 0.0;
      for (int i = 0; i < g.n; ++i) {
        if (std::abs(g.x(i)) > 5.0) continue;
        sup_dv = std::max(sup_dv, std::abs(ref2049.profile.v[i] - oracle.v[i]));
      }
      double gap = std::abs(ref2049.lambda - quadratic_lambda_oracle(beta));
      double var = moments(ref2049.profile).variance;
      double h = g.step();
      c.expect(ref2049.iterations <= 200,
               fmt("%d iterations", ref2049.iterations));
      c.expect(sup_dv < 1e-4, fmt("sup|dV| = %.3e on |x|<=5", sup_dv));
      c.expect(gap < 1e-6, fmt("lambda gap %.3e", gap));
      c.expect(var <= 1.0 / ref2049.alpha_hat + 10 * h * h,
               fmt("variance %.6f above concavity bound", var));
      c.append(fmt("lambda=%.12f, sup|dV|=%.2e, var=%.6f", ref2049.lambda,
                   sup_dv, var));
    } catch (const std::exception& e) {
      c.expect(false, e.what());
    }
    double secs = seconds_since(t0);
    c.expect(secs < 30.0, fmt("runtime %.1f s exceeds 30 s", secs));
    emit(2, "quadratic eigenpair", c, secs);
  }

  // 3. One-step contraction of the sup log-derivative divergence.
  ContractionData q2049, q4097, v2049, v4097;
  {
    auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
      q2049.ref = ref2049;
      {
        LogDensity f0 =
            make_admissible_initial(ref2049.profile, 0.2, InitialMode::sine);
        q2049.trace = contraction_run(quad, f0, ref2049, 40);
        q2049.bound = contraction_factor(beta);
        double prev = 0.0;
        for (const RunRecord& r : q2049.trace.records) {
          if (r.n >= 2 && prev > 1e-7)
            q2049.worst = std::max(q2049.worst, r.i_inf / prev);
          prev = r.i_inf;
        }
        q2049.slack = std::max(0.0, q2049.worst - q2049.bound);
      }
      q4097 = contraction_data(quad, 4097, true);
      v2049 = contraction_data(quart, 2049, false);
      v4097 = contraction_data(quart, 4097, false);

      for (const auto* d : {&q2049, &q4097, &v2049, &v4097})
        c.expect(d->worst <= d->bound + 1e-3,
                 fmt("ratio %.6f breaches bound %.6f + 1e-3", d->worst,
                     d->bound));
      // Doubling n must cut the measured slack 3x, unless both measurements
      // already sit inside the 1e-4 allowance that the divergence floor and
      // the 1e-12-scale pipeline noise can contribute on their own.
      auto shrinks = [](double coarse, double fine) {
        return fine <= coarse / 3.0 || (coarse <= 1e-4 && fine <= 1e-4);
      };
      c.expect(shrinks(q2049.slack, q4097.slack),
               fmt("quadratic slack %.2e -> %.2e", q2049.slack, q4097.slack));
      c.expect(shrinks(v2049.slack, v4097.slack),
               fmt("quartic slack %.2e -> %.2e", v2049.slack, v4097.slack));
      c.append(fmt("worst ratios: quadratic %.6f|%.6f vs %.6f, quartic "
                   "%.6f|%.6f vs %.6f|%.6f",
                   q2049.worst, q4097.worst, q2049.bound, v2049.worst,
                   v4097.worst, v2049.bound, v4097.bound));
    } catch (const std::exception& e) {
      c.expect(false, e.what());
    }
    double secs = seconds_since(t0);
    c.expect(secs < 120.0, fmt("runtime %.1f s exceeds 2 min", secs));
    emit(3, "one-step contraction", c, secs);
  }

  // 4. Asynchronous growth exponents from the quadratic reference run.
  {
    auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
      auto [slope_lambda, slope_kl] = growth_rate_fit(q2049.trace, ref2049);
      double lr = std::log(contraction_factor(beta));
      c.expect(std::abs(slope_lambda - lr) <= 0.05 * std::abs(lr),
               fmt("mass-ratio slope %.5f not within 5%% of %.5f",
                   slope_lambda, lr));
      c.expect(std::abs(slope_kl - 2 * lr) <= 0.05 * std::abs(2 * lr),
               fmt("KL slope %.5f not within 5%% of %.5f", slope_kl, 2 * lr));
    } catch (const std::exception& e) {
      c.expect(false, e.what());
    }
    emit(4, "asynchronous growth exponents", c, seconds_since(t0));
  }

  // 5. Kernel contraction in the bottleneck distance.
  {
    auto t0 = std::chrono::steady_clock::now();
    Check c;
    const std::vector<std::pair<double, double>> pairs{{0.0, 1.0}, {-2.0, 2.0}};
    try {
      Grid1D g(-10, 10, 1025);
      for (int family = 0; family < 2; ++family) {
        const SelectionSpec& m = family == 0 ? quad : quart;
        EigenResult ref = solve_eigen(m, gaussian_kernel(g), nullptr, 1e-12, 400);
        double alpha = family == 0 ? solve_alpha(beta)
                                   : estimate_log_concavity(ref.profile);
        auto rep = verify_kernel_contraction(ref.profile, alpha, pairs, 32);
        for (const KernelPairRow& r : rep.rows) {
          if (family == 0)
            c.expect(std::abs(r.ratio - rep.bound) <= r.tolerance + 1e-12,
                     fmt("quadratic ratio %.4f vs %.4f +- %.4f", r.ratio,
                         rep.bound, r.tolerance));
          else
            c.expect(r.ratio <= rep.bound + r.tolerance + 1e-12,
                     fmt("quartic ratio %.4f above %.4f + %.4f", r.ratio,
                         rep.bound, r.tolerance));
        }
        if (family == 0)
          c.append(fmt("quadratic ratios %.4f, %.4f vs rho %.4f",
                       rep.rows[0].ratio, rep.rows[1].ratio, rep.bound));

        // The bottleneck optimum never exceeds the largest l1 displacement
        // of the quadratic-cost plan for the same coarsened kernels.
        Grid2D g2{ref.profile.grid, ref.profile.grid};
        for (auto [x, xt] : pairs) {
          auto [ma, da] =
              quantize_kernel(build_transition_kernel(x, ref.profile, g2), 16);
          auto [mb, db] =
              quantize_kernel(build_transition_kernel(xt, ref.profile, g2), 16);
          double winf = bottleneck_winf(ma, mb, 1).value;
          TransportReport w22 = wpq_lp(ma, mb, 2, 2);
          c.expect(winf <= w22.max_l1_displacement + 1e-12,
                   fmt("bottleneck %.6f above plan displacement %.6f", winf,
                       w22.max_l1_displacement));
        }
      }
    } catch (const std::exception& e) {
      c.expect(false, e.what());
    }
    double secs = seconds_since(t0);
    c.expect(secs < 300.0, fmt("runtime %.1f s exceeds 5 min", secs));
    emit(5, "kernel bottleneck contraction", c, secs);
  }

  // 6. Ground-norm rate comparison and the emitted figure data.
  {
    auto t0 = std::chrono::steady_clock::now();
    Check c;
    for (int k = 1; k <= 100; ++k) {
      auto [r1, r2] = l2_rate_comparison(0.05 * k);
      c.expect(r1 < r2, fmt("rates not ordered at beta=%.2f", 0.05 * k));
    }
    fs::path dir = fs::temp_directory_path() / "inflab_acceptance_figs";
    fs::remove_all(dir);
    std::string cmd =
        std::string(INFLAB_CLI_PATH) + " figures --out " + dir.string() +
        " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    c.expect(status == 0, "figures command failed");
    auto rows = read_csv(dir / "fig2_rates.csv");
    c.expect(rows.size() == 91, "unexpected figure row count");
    bool saw_half = false, saw_one = false;
    for (const auto& row : rows) {
      if (row.size() < 3) continue;
      if (row[0] == 0.5) {
        saw_half = true;
        c.expect(row[1] == 1.0 && row[2] == 2.0,
                 "marked point at alpha=1/2 not exact");
      }
      if (row[0] == 1.0) {
        saw_one = true;
        c.expect(row[2] == 1.0, "marked point at alpha=1 not exact");
      }
    }
    c.expect(saw_half && saw_one, "marked grid points missing");
    emit(6, "rate comparison figure", c, seconds_since(t0));
  }

  // 7. Transport duality suite and the one-step kernel estimate.
  EigenResult ref513;
  {
    auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
      const int orders[3] = {1, 2, kOrdInf};
      std::mt19937_64 rng(424242);
      int checked = 0;
      for (int i = 0; i < 200; ++i) {
        int dim = 1 + (int)(rng() % 2);
        DiscreteMeasure mu = random_measure(rng, dim);
        DiscreteMeasure nu = random_measure(rng, dim);
        for (int p : orders)
          for (int q : orders)
            for (const TestFunction& u : functions_for(rng, dim, p)) {
              DualityReport rep = duality_check(u, mu, nu, p, q);
              if (rep.lipschitz == kInf) continue;
              ++checked;
              c.expect(rep.pass,
                       fmt("duality violated on pair %d (p=%d,q=%d)", i, p, q));
            }
      }
      c.append(fmt("%d dual checks", checked));

      // Aligned exponential test functions achieve the Dirac-pair equality.
      std::array<double, 2> d{0.7, -0.4};
      auto mu = DiscreteMeasure::make(2, {{0.0, 0.0}}, {1.0});
      auto nu = DiscreteMeasure::make(2, {d}, {1.0});
      auto u2 = TestFunction::exp_linear(2, {0.5 * d[0], 0.5 * d[1]}, 0.2);
      auto u1 = TestFunction::exp_linear(2, {1.0, -1.0}, 0.0);
      auto ui = TestFunction::exp_linear(2, {1.2, 0.0}, -0.1);
      for (auto [u, q] : {std::pair{u2, 2}, {u1, 1}, {ui, kOrdInf}}) {
        DualityReport rep = duality_check(u, mu, nu, kOrdInf, q);
        c.expect(std::abs(rep.lhs - rep.rhs) <= 1e-9,
                 fmt("Dirac equality off by %.2e at q=%d",
                     std::abs(rep.lhs - rep.rhs), q));
      }

      Grid1D g(-10, 10, 513);
      ref513 = solve_eigen(quad, gaussian_kernel(g), nullptr, 1e-12, 400);
      LogDensity u0 = ref513.profile;
      for (int i = 0; i < g.n; ++i) u0.v[i] = 0.3 * std::sin(g.x(i));
      auto lrep =
          log_estimate_check(u0, ref513.profile, {{0.0, 1.0}, {-2.0, 2.0}}, 48);
      for (const LogEstimateRow& r : lrep.rows)
        c.expect(r.lhs <= r.rhs + 1e-6,
                 fmt("kernel one-step estimate violated at (%g,%g)", r.x,
                     r.x_tilde));
    } catch (const std::exception& e) {
      c.expect(false, e.what());
    }
    emit(7, "transport duality suite", c, seconds_since(t0));
  }

  // 8. Entropy-information chain against the computed eigenfunction.
  {
    auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
      const LogDensity& prof = ref513.profile;
      double gamma = estimate_log_concavity(prof);
      std::mt19937_64 rng(313131);
      std::uniform_real_distribution<double> eps_d(0.05, 0.3), om_d(0.6, 3.0);
      for (int i = 0; i < 100; ++i) {
        double eps = eps_d(rng), om = om_d(rng);
        LogDensity p = prof;
        for (int j = 0; j < p.grid.n; ++j) {
          if (p.v[j] == kInf) continue;
          p.v[j] += eps * std::sin(om * p.grid.x(j));
        }
        normalize(p);
        double kl = kl_divergence(p, prof);
        double i2 = fisher_two(p, prof);
        double iinf = fisher_infinity(p, prof);
        c.expect(i2 / (2 * gamma) - kl >= -1e-8,
                 fmt("KL above I2/(2a) on pair %d", i));
        c.expect((iinf * iinf - i2) / (2 * gamma) >= -1e-8,
                 fmt("I2 above Iinf^2 on pair %d", i));
      }
      c.append(fmt("gamma=%.4f over 100 pairs", gamma));
    } catch (const std::exception& e) {
      c.expect(false, e.what());
    }
    emit(8, "entropy-information chain", c, seconds_since(t0));
  }

  // 9. Gaussian convolution lower bound, full line and truncated.
  {
    auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
      Grid1D g(-10, 10, 2001);
      std::vector<std::pair<double, double>> lattice;
      for (double x0 : {1.5, 2.0, 2.5, 3.0, 3.5})
        for (double delta : {0.1, 0.2, 0.3, 0.4}) lattice.push_back({x0, delta});
      TruncationSpec r6(6.0);
      for (const auto& V : {quad, quartic_selection()}) {
        auto full = lower_bound_check(V, 1.0, lattice, g);
        c.expect(full.pass, "full-line bound violated");
        auto cut = lower_bound_check(V, 1.0, lattice, g, &r6);
        c.expect(cut.pass, "truncated bound violated at R=6");
      }
      c.append("20-point lattice, two potentials");
    } catch (const std::exception& e) {
      c.expect(false, e.what());
    }
    emit(9, "convolution lower bound", c, seconds_since(t0));
  }

  // 10. Truncated eigenvalues approach the full-line value.
  {
    auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
      Grid1D g(-10, 10, 2001);
      LogDensity f0 = gaussian_kernel(g);
      EigenResult full = solve_eigen(quad, f0, nullptr, 1e-12, 400);
      double lam[3] = {0, 0, 0};
      double radii[3] = {3.0, 5.0, 8.0};
      for (int k = 0; k < 3; ++k) {
        TruncationSpec tr(radii[k]);
        lam[k] = solve_eigen(quad, f0, &tr, 1e-12, 400).lambda;
      }
      // Between R=5 and R=8 the sequence moves by under 1e-11, so
      // monotonicity is asserted up to a 1e-9 resolution allowance.
      c.expect(lam[0] < lam[1] - 1e-9,
               fmt("lambda(3)=%.12f not below lambda(5)=%.12f", lam[0], lam[1]));
      c.expect(lam[1] <= lam[2] + 1e-9,
               fmt("lambda(5)=%.12f above lambda(8)=%.12f", lam[1], lam[2]));
      double gap = std::abs(full.lambda - lam[2]);
      c.expect(gap < 1e-6, fmt("gap %.3e at R=8", gap));
      c.append(fmt("lambda = %.12f | %.12f | %.12f | full %.12f", lam[0],
                   lam[1], lam[2], full.lambda));
    } catch (const std::exception& e) {
      c.expect(false, e.what());
    }
    emit(10, "truncated eigenvalue consistency", c, seconds_since(t0));
  }

  std::printf("acceptance: %d of 10 criteria passed\n", 10 - g_failures);
  return g_failures;
}
