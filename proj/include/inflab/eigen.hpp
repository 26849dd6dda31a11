#pragma once

// Principal eigenpair machinery: closed-form scalar solutions for quadratic
// selection, the contraction factor, and the normalized fixed-point iteration
// for general certified-convex selection.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "inflab/grid.hpp"
#include "inflab/metrics.hpp"
#include "inflab/model.hpp"

namespace inflab {

// Positive root of 2 a^2 - (1 + 2 beta) a - beta = 0, finite down to
// beta = 0 where it equals 1/2. The figure sweeps include that endpoint.
inline double alpha_closed_form(double beta) {
  if (!(beta >= 0))
    throw std::invalid_argument("alpha closed form: beta must be >= 0");
  double disc = (1 + 2 * beta) * (1 + 2 * beta) + 8 * beta;
  return (1 + 2 * beta + std::sqrt(disc)) / 4.0;
}

inline double rho_closed_form(double beta) {
  return 2.0 / (1.0 + 2.0 * alpha_closed_form(beta));
}

// Fixed point of gamma -> beta + 2 gamma / (1 + 2 gamma), i.e. the positive
// root above. Newton iteration cross-checks the closed form; they must agree
// to 1e-13 relative.
inline double solve_alpha(double beta) {
  if (!(beta > 0)) throw std::invalid_argument("H1 violated: beta must be > 0");
  double closed = alpha_closed_form(beta);
  double a = beta + 1.0;
  for (int it = 0; it < 100; ++it) {
    double p = 2 * a * a - (1 + 2 * beta) * a - beta;
    double dp = 4 * a - (1 + 2 * beta);
    double step = p / dp;
    a -= step;
    if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(a))) break;
  }
  if (std::abs(a - closed) > 1e-13 * std::max(1.0, closed))
    throw std::logic_error("solve_alpha: iteration and closed form disagree");
  return closed;
}

// rho(beta) = 2 / (1 + 2 alpha(beta)), cross-checked against the direct
// closed form 4 / ((3 + 2 beta) + sqrt((3 + 2 beta)^2 - 8)).
inline double contraction_factor(double beta) {
  double rho = 2.0 / (1.0 + 2.0 * solve_alpha(beta));
  double t = 3 + 2 * beta;
  double closed = 4.0 / (t + std::sqrt(t * t - 8.0));
  if (std::abs(rho - closed) > 1e-12)
    throw std::logic_error("contraction_factor: closed forms disagree");
  return rho;
}

// Stationary profile variance for quadratic selection: the positive root of
// beta s^2 + (2 beta + 1) s - 2 = 0, evaluated in the rationalized form
// 4 / (2 beta + 1 + sqrt(4 beta^2 + 12 beta + 1)). Coincides with 1/alpha.
inline double quadratic_sigma2(double beta) {
  if (!(beta > 0)) throw std::invalid_argument("H1 violated: beta must be > 0");
  double disc = 4 * beta * beta + 12 * beta + 1;
  double s = 4.0 / (2 * beta + 1 + std::sqrt(disc));
  double residual = beta * s * s + (2 * beta + 1) * s - 2.0;
  if (std::abs(residual) > 1e-12 * (2.0 + (2 * beta + 1) * s))
    throw std::logic_error("quadratic_sigma2: root residual too large");
  return s;
}

// Principal eigenvalue for quadratic selection of modulus beta.
inline double quadratic_lambda_oracle(double beta) {
  double s2 = quadratic_sigma2(beta);
  return 1.0 / std::sqrt(1.0 + beta * (1.0 + 0.5 * s2));
}

struct IterationRecord {
  int n = 0;
  double lambda = 0.0;
  double step_sup = 0.0;   // sup |log f_n - log f_{n-1}| on the joint bulk
  double alpha_hat = 0.0;  // certified log-concavity of the iterate
};

struct EigenResult {
  double lambda = 0.0;
  LogDensity profile;
  double alpha_hat = 0.0;
  double residual = 0.0;  // sup |log T[f] - log(lambda f)| at the fixed point
  int iterations = 0;
  bool truncated = false;
  double R = 0.0;
  std::vector<IterationRecord> trace;
};

class EigenError : public std::runtime_error {
 public:
  EigenError(const std::string& what, std::vector<IterationRecord> trace)
      : std::runtime_error(what), trace(std::move(trace)) {}
  std::vector<IterationRecord> trace;
};

// Normalized fixed-point iteration f <- T[f] / mass(T[f]). The mass swallowed
// at each step is the eigenvalue estimate. Convergence is measured in the
// sup norm of the log-ratio over the joint e^{-60} bulk.
inline EigenResult solve_eigen(const SelectionSpec& m, const LogDensity& f0,
                               const TruncationSpec* trunc = nullptr,
                               double tol = 1e-10, int max_iter = 400) {
  if (!(tol > 0)) throw std::invalid_argument("solve_eigen: tol must be > 0");
  auto mvals = selection_values(m, f0.grid);
  int lo = 0, hi = f0.grid.n - 1;
  if (trunc) std::tie(lo, hi) = trunc->node_span(f0.grid);

  LogDensity f = f0;
  normalize(f);
  std::vector<IterationRecord> trace;
  bool converged = false;
  for (int n = 1; n <= max_iter; ++n) {
    LogDensity g = apply_T_prepared(f, mvals, lo, hi);
    double lambda = normalize(g);
    auto [a, b] = joint_support(f, g);
    double step = 0.0;
    for (int i = a; i <= b; ++i)
      step = std::max(step, std::abs(g.v[i] - f.v[i]));
    IterationRecord rec;
    rec.n = n;
    rec.lambda = lambda;
    rec.step_sup = step;
    rec.alpha_hat = estimate_log_concavity(g);
    trace.push_back(rec);
    f = std::move(g);
    if (step < tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw EigenError("solve_eigen: no convergence after " +
                         std::to_string(max_iter) + " iterations",
                     std::move(trace));

  EigenResult res;
  res.iterations = (int)trace.size();
  res.lambda = trace.back().lambda;
  res.alpha_hat = estimate_log_concavity(f);
  res.truncated = trunc != nullptr;
  res.R = trunc ? trunc->R : 0.0;

  // Residual check with one extra application of T.
  LogDensity g = apply_T_prepared(f, mvals, lo, hi);
  double lambda = trapezoid_mass(g);
  auto [a, b] = joint_support(f, g);
  double resid = 0.0;
  double log_lambda = std::log(lambda);
  for (int i = a; i <= b; ++i)
    resid = std::max(resid, std::abs(-g.v[i] - (log_lambda - f.v[i])));
  res.lambda = lambda;
  res.residual = resid;
  res.profile = std::move(f);
  res.trace = std::move(trace);
  return res;
}

}  // namespace inflab
