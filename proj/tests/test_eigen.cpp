#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "inflab/eigen.hpp"
#include "inflab/metrics.hpp"

using namespace inflab;
using Catch::Approx;

namespace {

// Independent root of 2a^2 - (1+2b)a - b = 0 by bisection.
double alpha_bisect(double beta) {
  auto p = [&](double a) { return 2 * a * a - (1 + 2 * beta) * a - beta; };
  double lo = 0.0, hi = beta + 2.0;
  REQUIRE(p(lo) < 0);
  REQUIRE(p(hi) > 0);
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (p(mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("alpha solver agrees with bisection across the beta range") {
  for (double beta : {0.05, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0}) {
    double a = solve_alpha(beta);
    REQUIRE(a == Approx(alpha_bisect(beta)).epsilon(1e-13));
    // Residual of the defining quadratic.
    REQUIRE(2 * a * a - (1 + 2 * beta) * a - beta == Approx(0.0).margin(1e-12 * (1 + a * a)));
  }
  REQUIRE_THROWS_WITH(solve_alpha(0.0), "H1 violated: beta must be > 0");
}

TEST_CASE("closed-form alpha endpoints are exact") {
  REQUIRE(alpha_closed_form(0.0) == 0.5);
  REQUIRE(rho_closed_form(0.0) == 1.0);
  REQUIRE_THROWS_WITH(alpha_closed_form(-0.5),
                      "alpha closed form: beta must be >= 0");
}

TEST_CASE("contraction factor matches its alternate closed form") {
  for (double beta : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    double rho = contraction_factor(beta);
    double t = 3 + 2 * beta;
    REQUIRE(rho == Approx((t - std::sqrt(t * t - 8)) / 2).margin(1e-12));
    REQUIRE(rho * (1 + 2 * solve_alpha(beta)) / 2 == Approx(1.0).epsilon(1e-13));
  }
  REQUIRE(contraction_factor(1.0) == Approx(0.4384471871911697).margin(1e-15));
  REQUIRE(contraction_factor(0.5) > contraction_factor(1.0));
  REQUIRE(contraction_factor(1.0) > contraction_factor(2.0));
}

TEST_CASE("stationary variance is the reciprocal concavity") {
  for (double beta : {0.1, 0.5, 1.0, 2.0, 5.0})
    REQUIRE(quadratic_sigma2(beta) ==
            Approx(1.0 / solve_alpha(beta)).epsilon(1e-13));
  REQUIRE(quadratic_sigma2(1.0) == Approx(0.5615528128088303).margin(1e-15));
}

TEST_CASE("quadratic eigenvalue oracle values") {
  REQUIRE(quadratic_lambda_oracle(1.0) ==
          Approx(0.6621534468619564).margin(1e-15));
  REQUIRE(quadratic_lambda_oracle(0.5) > quadratic_lambda_oracle(1.0));
  REQUIRE(quadratic_lambda_oracle(1.0) > quadratic_lambda_oracle(2.0));
  REQUIRE(quadratic_lambda_oracle(1.0) < 1.0);
}

TEST_CASE("fixed-point solve recovers the quadratic eigenpair") {
  Grid1D g(-10, 10, 513);
  auto m = SelectionSpec::quadratic_selection(1.0);
  auto res = solve_eigen(m, gaussian_kernel(g));
  REQUIRE(res.lambda == Approx(quadratic_lambda_oracle(1.0)).margin(1e-9));
  REQUIRE(res.residual < 1e-9);
  REQUIRE(res.iterations <= 60);
  REQUIRE_FALSE(res.truncated);
  REQUIRE(res.alpha_hat == Approx(solve_alpha(1.0)).margin(0.02));

  double s2 = quadratic_sigma2(1.0);
  double c = 0.5 * std::log(2.0 * std::numbers::pi * s2);
  for (int i = 0; i < g.n; ++i) {
    double x = g.x(i);
    if (std::abs(x) > 4) continue;
    REQUIRE(res.profile.v[(size_t)i] ==
            Approx(0.5 * x * x / s2 + c).margin(2e-3));
  }
  // The trace records a strictly contracting tail.
  REQUIRE(res.trace.size() >= 5);
  REQUIRE(res.trace.back().step_sup <= 1e-10);
}

TEST_CASE("the eigenpair does not depend on the starting profile") {
  Grid1D g(-10, 10, 513);
  auto m = SelectionSpec::quadratic_selection(1.0);
  auto r1 = solve_eigen(m, gaussian_kernel(g));
  auto r2 = solve_eigen(
      m, sample_log_density(g, [](double x) { return 0.25 * x * x * x * x; }));
  REQUIRE(r1.lambda == Approx(r2.lambda).margin(1e-9));
  for (int i = 0; i < g.n; ++i) {
    if (std::abs(g.x(i)) > 4) continue;
    REQUIRE(r1.profile.v[(size_t)i] ==
            Approx(r2.profile.v[(size_t)i]).margin(1e-8));
  }
}

TEST_CASE("non-convergence raises with the trace attached") {
  Grid1D g(-10, 10, 129);
  auto m = SelectionSpec::quadratic_selection(1.0);
  try {
    solve_eigen(m, gaussian_kernel(g), nullptr, 1e-10, 2);
    FAIL("expected EigenError");
  } catch (const EigenError& e) {
    REQUIRE(std::string(e.what()).find("no convergence") != std::string::npos);
    REQUIRE(e.trace.size() == 2);
  }
  REQUIRE_THROWS_WITH(solve_eigen(m, gaussian_kernel(g), nullptr, 0.0, 10),
                      "solve_eigen: tol must be > 0");
}

TEST_CASE("truncation keeps mass inside the window and lowers lambda") {
  Grid1D g(-10, 10, 513);
  auto m = SelectionSpec::quadratic_selection(1.0);
  auto full = solve_eigen(m, gaussian_kernel(g));

  // A tight window bites: the eigenvalue visibly drops.
  TruncationSpec tight(2.5);
  auto cut = solve_eigen(m, gaussian_kernel(g), &tight);
  REQUIRE(cut.truncated);
  REQUIRE(cut.R == 2.5);
  REQUIRE(cut.lambda < full.lambda);
  REQUIRE(full.lambda - cut.lambda < 5e-3);
  auto [lo, hi] = tight.node_span(g);
  for (int i = 0; i < lo; ++i) REQUIRE(cut.profile.v[(size_t)i] == kInf);
  for (int i = hi + 1; i < g.n; ++i) REQUIRE(cut.profile.v[(size_t)i] == kInf);

  // A wide window is indistinguishable from the full line at solver accuracy.
  TruncationSpec wide(5.0);
  auto cut5 = solve_eigen(m, gaussian_kernel(g), &wide);
  REQUIRE(std::abs(cut5.lambda - full.lambda) < 5e-9);
}
