// Experiment driver: each subcommand reads a flat key-value config, runs one
// experiment, and writes CSV/SVG outputs atomically into the output
// directory. Exit codes: 0 pass, 2 input or solver error, 3 violation of a
// checked inequality.

#include <cinttypes>
#include <optional>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "inflab/inflab.hpp"

namespace {

using namespace inflab;

struct Common {
  std::string config_path;
  std::string out_dir;
  unsigned long long seed = 12345;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "key = value config file");
  sub->add_option("--out", c.out_dir, "output directory (overrides output.dir)");
  sub->add_option("--seed", c.seed, "seed for randomized suites");
}

Config load_config(const Common& c) {
  return c.config_path.empty() ? Config{} : Config::parse_file(c.config_path);
}

std::string resolve_out(const Common& c, const Config& cfg) {
  std::string dir =
      !c.out_dir.empty() ? c.out_dir : cfg.get_string("output.dir", ".");
  std::filesystem::create_directories(dir);
  return dir;
}

Grid1D grid_from(const Config& cfg, int default_n) {
  double L = cfg.get_double("grid.L", 10.0);
  int n = (int)cfg.get_int("grid.n", default_n);
  return Grid1D(-L, L, n);
}

SelectionSpec selection_from(const Config& cfg) {
  std::string kind = cfg.get_string("selection.kind", "quadratic");
  if (kind == "quadratic")
    return SelectionSpec::quadratic_selection(cfg.get_double("selection.beta", 1.0));
  if (kind == "even_polynomial")
    return SelectionSpec::even_polynomial_selection(cfg.get_doubles("selection.coeffs"));
  if (kind == "tabulated")
    return SelectionSpec::tabulated_selection(cfg.get_doubles("selection.table_x"),
                                              cfg.get_doubles("selection.table_m"));
  throw std::runtime_error(
      "config: selection.kind must be quadratic, even_polynomial or tabulated");
}

InitialMode mode_from(const Config& cfg) {
  std::string mode = cfg.get_string("initial.mode", "sine");
  if (mode == "sine") return InitialMode::sine;
  if (mode == "tanh_shift") return InitialMode::tanh_shift;
  throw std::runtime_error("config: initial.mode must be sine or tanh_shift");
}

std::vector<std::pair<double, double>> pairs_from(const Config& cfg,
                                                  const std::string& key,
                                                  std::vector<double> fallback) {
  std::vector<double> flat =
      cfg.has(key) ? cfg.get_doubles(key) : std::move(fallback);
  if (flat.size() < 2 || flat.size() % 2 != 0)
    throw std::runtime_error("config: key '" + key +
                             "' expects an even number of values");
  std::vector<std::pair<double, double>> out;
  for (size_t i = 0; i < flat.size(); i += 2)
    out.emplace_back(flat[i], flat[i + 1]);
  return out;
}

std::vector<std::vector<double>> trace_rows(const RunTrace& trace) {
  std::vector<std::vector<double>> rows;
  for (const RunRecord& r : trace.records)
    rows.push_back({(double)r.n, r.mass, r.lambda, r.i_inf, r.kl, r.alpha_hat});
  return rows;
}

const std::vector<std::string> kTraceHeader = {"n",     "mass", "lambda_n",
                                               "i_inf", "kl",   "alpha_hat"};

int cmd_eigen(const Common& c) {
  Config cfg = load_config(c);
  Grid1D grid = grid_from(cfg, 2049);
  SelectionSpec m = selection_from(cfg);
  double tol = cfg.get_double("run.tol", 1e-10);
  int max_iter = (int)cfg.get_int("run.max_iter", 400);
  std::optional<TruncationSpec> trunc;
  if (cfg.has("truncation.R")) trunc.emplace(cfg.get_double("truncation.R"));
  std::string dir = resolve_out(c, cfg);
  cfg.reject_unknown();

  EigenResult res = solve_eigen(m, gaussian_kernel(grid),
                                trunc ? &*trunc : nullptr, tol, max_iter);
  std::vector<std::vector<double>> rows;
  for (const IterationRecord& r : res.trace)
    rows.push_back({(double)r.n, r.lambda, r.step_sup, r.alpha_hat});
  write_csv(dir + "/eigen.csv", {"n", "lambda", "step_sup", "alpha_hat"}, rows);
  std::vector<std::vector<double>> prof;
  for (int i = 0; i < grid.n; ++i) {
    double v = res.profile.v[i];
    prof.push_back({grid.x(i), v, v == kInf ? 0.0 : std::exp(-v)});
  }
  write_csv(dir + "/profile.csv", {"x", "V", "F"}, prof);
  std::printf("lambda = %.12f\nalpha_hat = %.12f\nresidual = %.3e\n", res.lambda,
              res.alpha_hat, res.residual);
  std::printf("iterations = %d%s\n", res.iterations,
              res.truncated ? " (truncated)" : "");
  return 0;
}

int cmd_contract(const Common& c) {
  Config cfg = load_config(c);
  Grid1D grid = grid_from(cfg, 2049);
  SelectionSpec m = selection_from(cfg);
  InitialMode mode = mode_from(cfg);
  double eps = cfg.get_double("initial.epsilon", 0.2);
  int gens = (int)cfg.get_int("run.generations", 30);
  double tol = cfg.get_double("run.tol", 1e-10);
  int max_iter = (int)cfg.get_int("run.max_iter", 400);
  std::string dir = resolve_out(c, cfg);
  cfg.reject_unknown();

  EigenResult ref = solve_eigen(m, gaussian_kernel(grid), nullptr, tol, max_iter);
  LogDensity f0 = make_admissible_initial(ref.profile, eps, mode);
  RunTrace trace = contraction_run(m, f0, ref, gens);
  write_csv(dir + "/trace.csv", kTraceHeader, trace_rows(trace));

  double rho = contraction_factor(m.beta);
  bool at_fixed_point = true;
  for (const RunRecord& r : trace.records)
    if (r.i_inf > 1e-10) at_fixed_point = false;

  std::string rates = "log_rho = " + format_g17(std::log(rho)) + "\n" +
                      "two_log_rho = " + format_g17(2 * std::log(rho)) + "\n";
  if (at_fixed_point) {
    rates += "note = fixed point, no decay to fit\n";
    write_file_atomic(dir + "/rates.txt", rates);
    std::printf("fixed point: initial data already at the eigenprofile\n");
    return 0;
  }
  try {
    auto [slope_lambda, slope_kl] = growth_rate_fit(trace, ref);
    rates += "slope_lambda = " + format_g17(slope_lambda) + "\n" +
             "slope_kl = " + format_g17(slope_kl) + "\n";
  } catch (const std::runtime_error& e) {
    rates += std::string("note = ") + e.what() + "\n";
  }
  write_file_atomic(dir + "/rates.txt", rates);

  // Ratios carry an additive noise of a few 1e-12 from the reference profile
  // and the convolution pipeline; they are only meaningful while the
  // divergence sits well above that floor.
  double worst = 0.0;
  int worst_n = 0;
  double prev = 0.0;
  for (const RunRecord& r : trace.records) {
    if (r.n >= 2 && prev > 1e-7) {
      double ratio = r.i_inf / prev;
      if (ratio > worst) {
        worst = ratio;
        worst_n = r.n;
      }
    }
    prev = r.i_inf;
  }
  std::printf("rho = %.12f, worst per-step ratio = %.12f (generation %d)\n", rho,
              worst, worst_n);
  if (worst > rho + 1e-3) {
    std::fprintf(stderr,
                 "contraction violated at generation %d: ratio %.12f exceeds "
                 "%.12f + 1e-3\n",
                 worst_n, worst, rho);
    return 3;
  }
  return 0;
}

int cmd_transport(const Common& c) {
  Config cfg = load_config(c);
  Grid1D grid = grid_from(cfg, 1025);
  SelectionSpec m = selection_from(cfg);
  double tol = cfg.get_double("run.tol", 1e-10);
  int max_iter = (int)cfg.get_int("run.max_iter", 400);
  int quantization = (int)cfg.get_int("transport.quantization", 32);
  auto x_pairs = pairs_from(cfg, "transport.x_pairs", {0.0, 1.0, -2.0, 2.0});
  std::string dir = resolve_out(c, cfg);
  cfg.reject_unknown();

  EigenResult ref = solve_eigen(m, gaussian_kernel(grid), nullptr, tol, max_iter);
  double alpha = estimate_log_concavity(ref.profile);
  KernelContractionReport rep =
      verify_kernel_contraction(ref.profile, alpha, x_pairs, quantization);

  std::vector<std::vector<double>> rows;
  for (const KernelPairRow& r : rep.rows)
    rows.push_back({r.x, r.x_tilde, r.winf1, r.ratio, r.bound, r.tolerance,
                    (double)r.quantization, r.discarded_mass,
                    r.pass ? 1.0 : 0.0});
  write_csv(dir + "/kernel_contraction.csv",
            {"x", "x_tilde", "winf1", "ratio", "bound", "tolerance",
             "quantization", "discarded_mass", "pass"},
            rows);
  std::printf("alpha = %.12f, bound = %.12f, pairs = %zu\n", rep.alpha,
              rep.bound, rep.rows.size());
  if (!rep.pass) {
    for (const KernelPairRow& r : rep.rows)
      if (!r.pass)
        std::fprintf(stderr,
                     "kernel contraction violated at (%.6g, %.6g): ratio %.12f "
                     "> bound %.12f + tolerance %.12f\n",
                     r.x, r.x_tilde, r.ratio, r.bound, r.tolerance);
    return 3;
  }
  return 0;
}

const char* ord_str(int p) {
  return p == 1 ? "1" : p == 2 ? "2" : "inf";
}

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
  w[k - 1] = 1.0 - acc;  // exact unit sum
  return DiscreteMeasure::make(dim, std::move(pts), std::move(w));
}

// Test functions admissible for a given integrability order p.
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

void serialize_violation(const std::string& path, const DiscreteMeasure& mu,
                         const DiscreteMeasure& nu, const TestFunction& u,
                         int p, int q, const DualityReport& rep) {
  std::string s = "p = " + std::string(ord_str(p)) + "\nq = " + ord_str(q) +
                  "\nfunction.kind = " + std::to_string((int)u.kind) +
                  "\nfunction.a = " + format_g17(u.a) + "\nfunction.c = " +
                  format_g17(u.c[0]) + " " + format_g17(u.c[1]) +
                  "\nfunction.b = " + format_g17(u.b[0]) + " " +
                  format_g17(u.b[1]) + "\nfunction.c0 = " + format_g17(u.c0) +
                  "\nlhs = " + format_g17(rep.lhs) + "\nrhs = " +
                  format_g17(rep.rhs) + "\n";
  auto dump = [&](const char* name, const DiscreteMeasure& m) {
    s += std::string(name) + ".points =";
    for (const auto& pt : m.points)
      s += " " + format_g17(pt[0]) + " " + format_g17(pt[1]);
    s += "\n" + std::string(name) + ".weights =";
    for (double w : m.weights) s += " " + format_g17(w);
    s += "\n";
  };
  dump("mu", mu);
  dump("nu", nu);
  write_file_atomic(path, s);
}

int cmd_duality(const Common& c) {
  Config cfg = load_config(c);
  int pair_count = (int)cfg.get_int("duality.pairs", 200);
  Grid1D grid = grid_from(cfg, 513);
  SelectionSpec m = selection_from(cfg);
  double tol = cfg.get_double("run.tol", 1e-10);
  int max_iter = (int)cfg.get_int("run.max_iter", 400);
  int quantization = (int)cfg.get_int("transport.quantization", 48);
  auto x_pairs = pairs_from(cfg, "transport.x_pairs", {0.0, 1.0});
  std::string dir = resolve_out(c, cfg);
  cfg.reject_unknown();

  const int orders[3] = {1, 2, kOrdInf};
  std::mt19937_64 rng(c.seed);
  std::vector<std::vector<std::string>> rows;
  int checked = 0;
  for (int i = 0; i < pair_count; ++i) {
    int dim = 1 + (int)(rng() % 2);
    DiscreteMeasure mu = random_measure(rng, dim);
    DiscreteMeasure nu = random_measure(rng, dim);
    for (int p : orders)
      for (int q : orders)
        for (const TestFunction& u : functions_for(rng, dim, p)) {
          DualityReport rep = duality_check(u, mu, nu, p, q);
          if (rep.lipschitz == kInf) continue;  // no finite bound claimed
          ++checked;
          rows.push_back({std::to_string(i), ord_str(p), ord_str(q),
                          std::to_string((int)u.kind), format_g17(rep.lhs),
                          format_g17(rep.rhs), rep.pass ? "1" : "0"});
          if (!rep.pass) {
            write_csv(dir + "/duality.csv",
                      {"pair", "p", "q", "family", "lhs", "rhs", "pass"}, rows);
            serialize_violation(dir + "/violation.txt", mu, nu, u, p, q, rep);
            std::fprintf(stderr,
                         "duality violated on pair %d (p=%s, q=%s): lhs %.12e "
                         "> rhs %.12e; instance in violation.txt\n",
                         i, ord_str(p), ord_str(q), rep.lhs, rep.rhs);
            return 3;
          }
        }
  }
  write_csv(dir + "/duality.csv",
            {"pair", "p", "q", "family", "lhs", "rhs", "pass"}, rows);
  std::printf("duality: %d checks passed over %d pairs\n", checked, pair_count);

  EigenResult ref = solve_eigen(m, gaussian_kernel(grid), nullptr, tol, max_iter);
  LogDensity u0 = ref.profile;
  for (int i = 0; i < grid.n; ++i) u0.v[i] = 0.3 * std::sin(grid.x(i));
  LogEstimateReport lrep = log_estimate_check(u0, ref.profile, x_pairs, quantization);
  std::vector<std::vector<double>> lrows;
  for (const LogEstimateRow& r : lrep.rows)
    lrows.push_back(
        {r.x, r.x_tilde, r.lhs, r.winf1, r.rhs, r.pass ? 1.0 : 0.0});
  write_csv(dir + "/log_estimate.csv",
            {"x", "x_tilde", "lhs", "winf1", "rhs", "pass"}, lrows);
  std::printf("dual one-step: lip0 = %.6f, %zu kernel pairs\n", lrep.lip0,
              lrep.rows.size());
  if (!lrep.pass) {
    std::fprintf(stderr, "dual one-step estimate violated; see log_estimate.csv\n");
    return 3;
  }
  return 0;
}

int cmd_figures(const Common& c) {
  Config cfg = load_config(c);
  std::string dir = resolve_out(c, cfg);
  cfg.reject_unknown();

  PlotSeries alpha_s{"alpha(beta)", "#1f6fb2", {}, {}, {0}};
  PlotSeries rho_s{"rho(beta)", "#b23a1f", {}, {}, {0}};
  std::vector<std::vector<double>> arows, rrows;
  for (int k = 0; k <= 300; ++k) {
    double beta = k / 100.0;
    double a = alpha_closed_form(beta), r = rho_closed_form(beta);
    arows.push_back({beta, a});
    rrows.push_back({beta, r});
    alpha_s.x.push_back(beta);
    alpha_s.y.push_back(a);
    rho_s.x.push_back(beta);
    rho_s.y.push_back(r);
  }
  write_csv(dir + "/fig1_alpha.csv", {"beta", "alpha"}, arows);
  write_csv(dir + "/fig1_rho.csv", {"beta", "rho"}, rrows);
  write_svg_plot(dir + "/fig1_alpha.svg", "Log-concavity of the equilibrium",
                 "beta", "alpha", {alpha_s});
  write_svg_plot(dir + "/fig1_rho.svg", "Contraction factor", "beta", "rho",
                 {rho_s});

  PlotSeries l1{"2/(1+2 alpha)", "#1f6fb2", {}, {}, {0}};
  PlotSeries l2{"1/alpha", "#b23a1f", {}, {}, {0, 10}};
  std::vector<std::vector<double>> frows;
  for (int k = 0; k <= 90; ++k) {
    double a = (10 + k) / 20.0;
    double r1 = 2.0 / (1.0 + 2.0 * a), r2 = 1.0 / a;
    frows.push_back({a, r1, r2});
    l1.x.push_back(a);
    l1.y.push_back(r1);
    l2.x.push_back(a);
    l2.y.push_back(r2);
  }
  write_csv(dir + "/fig2_rates.csv", {"alpha", "rate_l1", "rate_l2"}, frows);
  write_svg_plot(dir + "/fig2.svg", "Contraction rates by ground norm", "alpha",
                 "rate", {l1, l2});
  std::printf("figures written to %s\n", dir.c_str());
  return 0;
}

int cmd_lowerbound(const Common& c) {
  Config cfg = load_config(c);
  Grid1D grid = grid_from(cfg, 2049);
  SelectionSpec V = selection_from(cfg);
  double gamma = cfg.get_double("lowerbound.gamma", V.beta);
  auto samples = pairs_from(cfg, "lowerbound.samples",
                            {1.5, 0.1, 2.0, 0.2, 2.5, 0.3, 3.0, 0.4});
  std::optional<TruncationSpec> trunc;
  if (cfg.has("truncation.R")) trunc.emplace(cfg.get_double("truncation.R"));
  std::string dir = resolve_out(c, cfg);
  cfg.reject_unknown();

  LowerBoundReport rep = lower_bound_check(V, gamma, samples, grid,
                                           trunc ? &*trunc : nullptr);
  std::vector<std::vector<double>> rows;
  for (const LowerBoundRow& r : rep.rows)
    rows.push_back({r.x0, r.delta, r.log_lhs, r.log_rhs, r.log_rhs_safe,
                    r.pass ? 1.0 : 0.0});
  write_csv(dir + "/lower_bound.csv",
            {"x0", "delta", "log_lhs", "log_rhs", "log_rhs_safe", "pass"}, rows);
  std::printf("lower bound: gamma = %.6f, %zu samples%s\n", rep.gamma,
              rep.rows.size(), rep.truncated ? " (truncated)" : "");
  if (!rep.pass) {
    for (const LowerBoundRow& r : rep.rows)
      if (!r.pass)
        std::fprintf(stderr,
                     "lower bound violated at x0=%.6g delta=%.6g: log lhs "
                     "%.12f < log rhs %.12f\n",
                     r.x0, r.delta, r.log_lhs, r.log_rhs);
    return 3;
  }
  return 0;
}

int cmd_linear(const Common& c) {
  Config cfg = load_config(c);
  Grid1D grid = grid_from(cfg, 513);
  SelectionSpec m = selection_from(cfg);
  InitialMode mode = mode_from(cfg);
  double eps = cfg.get_double("initial.epsilon", 0.2);
  int gens = (int)cfg.get_int("run.generations", 15);
  std::string dir = resolve_out(c, cfg);
  cfg.reject_unknown();

  LogDensity f0 = make_admissible_initial(gaussian_kernel(grid), eps, mode);
  LinearRunResult res = linear_operator_run(m, f0, gens);
  write_csv(dir + "/linear_trace.csv", kTraceHeader, trace_rows(res.trace));
  write_file_atomic(dir + "/kappa.txt",
                    "kappa_hat = " + format_g17(res.kappa_hat) + "\n" +
                        "lambda = " + format_g17(res.lambda) + "\n");
  std::printf("linear operator: lambda = %.12f, kappa_hat = %.12f\n", res.lambda,
              res.kappa_hat);
  if (!(res.kappa_hat < 1.0)) {
    std::fprintf(stderr, "linear warm-up not contracting: kappa_hat = %.12f\n",
                 res.kappa_hat);
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"infinitesimal-model experiment driver"};
  app.require_subcommand(1);
  Common c;
  CLI::App* eigen_cmd = app.add_subcommand("eigen", "solve the principal eigenpair");
  CLI::App* contract_cmd =
      app.add_subcommand("contract", "nonlinear contraction and growth rates");
  CLI::App* transport_cmd =
      app.add_subcommand("transport", "kernel bottleneck contraction check");
  CLI::App* duality_cmd =
      app.add_subcommand("duality", "transport duality property suite");
  CLI::App* figures_cmd =
      app.add_subcommand("figures", "emit rate-comparison figures");
  CLI::App* lowerbound_cmd =
      app.add_subcommand("lowerbound", "Gaussian convolution lower bound check");
  CLI::App* linear_cmd =
      app.add_subcommand("linear", "single-parent linear operator warm-up");
  for (CLI::App* sub : {eigen_cmd, contract_cmd, transport_cmd, duality_cmd,
                        figures_cmd, lowerbound_cmd, linear_cmd})
    add_common(sub, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (eigen_cmd->parsed()) return cmd_eigen(c);
    if (contract_cmd->parsed()) return cmd_contract(c);
    if (transport_cmd->parsed()) return cmd_transport(c);
    if (duality_cmd->parsed()) return cmd_duality(c);
    if (figures_cmd->parsed()) return cmd_figures(c);
    if (lowerbound_cmd->parsed()) return cmd_lowerbound(c);
    if (linear_cmd->parsed()) return cmd_linear(c);
  } catch (const inflab::EigenError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    size_t tail = e.trace.size() > 5 ? e.trace.size() - 5 : 0;
    for (size_t i = tail; i < e.trace.size(); ++i)
      std::fprintf(stderr, "  n=%d lambda=%.12f step_sup=%.3e\n", e.trace[i].n,
                   e.trace[i].lambda, e.trace[i].step_sup);
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
