#include "drlim/limiter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace drlim {

namespace {

constexpr std::size_t kBlock = 2048;

// Block-wise reduction with a fixed serial combine so the result is
// bit-identical for any thread count (and for Exec::Serial).
template <typename BlockFn>
double blocked_reduce(std::size_t n, bool parallel, BlockFn&& block_sum) {
  const std::size_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(nblocks, 0.0);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(nblocks); ++blk) {
    const std::size_t lo = static_cast<std::size_t>(blk) * kBlock;
    const std::size_t hi = std::min(lo + kBlock, n);
    partial[blk] = block_sum(lo, hi);
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace

LimiterProblem::LimiterProblem(std::vector<double> averages, Bounds bnds)
    : u(std::move(averages)), bounds(bnds) {
  bounds.validate();
  if (u.empty()) throw std::invalid_argument("LimiterProblem: empty input");
  b = blocked_reduce(u.size(), false,
                     [&](std::size_t lo, std::size_t hi) {
                       double s = 0.0;
                       for (std::size_t i = lo; i < hi; ++i) s += u[i];
                       return s;
                     });
}

LimiterProblem::LimiterProblem(std::vector<double> averages, Bounds bnds, double mass)
    : u(std::move(averages)), bounds(bnds), b(mass) {
  bounds.validate();
  if (u.empty()) throw std::invalid_argument("LimiterProblem: empty input");
}

bool LimiterProblem::feasible() const {
  return n() * bounds.m <= b && b <= n() * bounds.M;
}

void LimiterProblem::require_feasible() const {
  if (!feasible())
    throw InfeasibleError("constraint set empty: need N*m <= b <= N*M, got b = " +
                          std::to_string(b) + " with N = " + std::to_string(n()));
}

void DRConfig::validate() const {
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("DRConfig: c must be in (0,1)");
  if (!(lambda > 0.0 && lambda <= 2.0))
    throw std::invalid_argument("DRConfig: lambda must be in (0,2]");
  if (!(epsilon > 0.0)) throw std::invalid_argument("DRConfig: epsilon must be > 0");
  if (max_iters < 1) throw std::invalid_argument("DRConfig: max_iters must be >= 1");
}

int count_bad_cells(std::span<const double> u, Bounds bounds) {
  bounds.validate();
  int r = 0;
  for (double v : u)
    if (v < bounds.m || v > bounds.M) ++r;
  return r;
}

double estimate_angle(int r_hat, int n) {
  if (n < 1 || r_hat < 0 || r_hat > n)
    throw std::invalid_argument("estimate_angle: need 0 <= r_hat <= N, N >= 1");
  return std::acos(std::sqrt(static_cast<double>(r_hat) / n));
}

double min_angle(int n) {
  return std::acos(std::sqrt(static_cast<double>(n - 1) / n));
}

ParameterChoice select_parameters(double theta_hat) {
  constexpr double pi = std::numbers::pi;
  if (!(theta_hat > 0.0 && theta_hat <= pi / 2))
    throw std::domain_error("select_parameters: theta must be in (0, pi/2]");
  if (theta_hat > 3.0 * pi / 8) {
    return {0.5, 4.0 / (2.0 - std::cos(2.0 * theta_hat)), Regime::Case1};
  }
  // c* = 1/(cos t + sin t)^2 = 1/(1 + sin 2t), stable at theta = pi/4
  const double cs = 1.0 / (1.0 + std::sin(2.0 * theta_hat));
  if (theta_hat > pi / 4) {
    const double cot = std::cos(theta_hat) / std::sin(theta_hat);
    const double lambda_star = 2.0 / (1.0 + 1.0 / (1.0 + cot) - cs);
    return {cs, lambda_star, Regime::Case2};
  }
  return {cs, 2.0, Regime::Case3};
}

void dr_iterate(std::span<const double> y_k, const LimiterProblem& problem,
                const DRConfig& config, std::span<double> x_k,
                std::span<double> y_next) {
  config.validate();
  const std::size_t n = problem.u.size();
  if (y_k.size() != n || x_k.size() != n || y_next.size() != n)
    throw std::invalid_argument("dr_iterate: length mismatch");
  const Bounds bounds = problem.bounds;
  const bool par = config.exec == Exec::Parallel;

  const double sum_z = blocked_reduce(n, par, [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      x_k[i] = bounds.clip(y_k[i]);
      s += 2.0 * x_k[i] - y_k[i];
    }
    return s;
  });

  const double shift = (sum_z - problem.b) / static_cast<double>(n);
  const double lc = config.lambda * config.c;
  const double lu = config.lambda * (1.0 - config.c);
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const double z = 2.0 * x_k[i] - y_k[i];
    y_next[i] = lc * (z - shift) + lu * problem.u[i] + y_k[i] - config.lambda * x_k[i];
  }
}

namespace {

DRResult finalize(const LimiterProblem& problem, std::vector<double> x,
                  std::vector<double> y, int iterations, bool converged,
                  DRTrace trace) {
  DRResult res;
  res.x_star = std::move(x);
  res.y_final = std::move(y);
  res.iterations = iterations;
  res.converged = converged;
  res.trace = std::move(trace);
  double s = 0.0;
  for (double v : res.x_star) s += v;
  res.mass_defect = s - problem.b;
  return res;
}

}  // namespace

DRResult dr_solve(const LimiterProblem& problem, const DRConfig& config) {
  config.validate();
  problem.require_feasible();
  const std::size_t n = problem.u.size();
  const bool par = config.exec == Exec::Parallel;

  if (n == 1) {
    // The constraint pins x = b; no iteration needed.
    return finalize(problem, {problem.b}, {problem.b}, 0, true, {});
  }

  double eps = config.epsilon;
  if (config.relative_tolerance) {
    const double unorm = std::sqrt(blocked_reduce(n, par, [&](std::size_t lo, std::size_t hi) {
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) s += problem.u[i] * problem.u[i];
      return s;
    }));
    eps *= 1.0 + unorm;
  }

  std::vector<double> y = config.y0 ? *config.y0 : problem.u;
  if (y.size() != n) throw std::invalid_argument("dr_solve: y0 length mismatch");
  std::vector<double> y_next(n), x(n);
  DRTrace trace;
  if (config.record_iterates) trace.y_iterates.push_back(y);

  int k = 0;
  bool converged = false;
  while (k < config.max_iters) {
    dr_iterate(y, problem, config, x, y_next);
    ++k;
    const double step2 = blocked_reduce(n, par, [&](std::size_t lo, std::size_t hi) {
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        const double d = y_next[i] - y[i];
        s += d * d;
      }
      return s;
    });
    const double step_norm = std::sqrt(step2);
    trace.y_step_norms.push_back(step_norm);
    y.swap(y_next);
    if (config.record_iterates) trace.y_iterates.push_back(y);
    if (step_norm <= eps) {
      converged = true;
      break;
    }
  }
  // x_star is the clip of the final y.
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    x[i] = problem.bounds.clip(y[i]);
  return finalize(problem, std::move(x), std::move(y), k, converged, std::move(trace));
}

std::vector<double> project_box_hyperplane_oracle(const LimiterProblem& problem) {
  problem.require_feasible();
  const std::size_t n = problem.u.size();
  const double m = problem.bounds.m;
  const double M = problem.bounds.M;

  // Breakpoints of g(t) = sum clip(u_i + t) - b: entry i leaves the lower
  // saturation at t = m - u_i (slope +1) and hits the upper one at
  // t = M - u_i (slope -1).
  struct Event {
    double t;
    int slope;
  };
  std::vector<Event> events;
  events.reserve(2 * n);
  for (double ui : problem.u) {
    events.push_back({m - ui, +1});
    events.push_back({M - ui, -1});
  }
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.t < b.t; });

  double g = n * m;  // value as t -> -inf
  int slope = 0;
  double t = events.front().t;
  if (g >= problem.b) {
    // b == N*m by feasibility: everything saturates low.
    t = events.front().t;
  } else {
    bool found = false;
    for (std::size_t e = 0; e < events.size(); ++e) {
      const double t_next = events[e].t;
      if (slope > 0 && g + slope * (t_next - t) >= problem.b) {
        t += (problem.b - g) / slope;
        found = true;
        break;
      }
      g += slope * (t_next - t);
      t = t_next;
      slope += events[e].slope;
    }
    if (!found) t = events.back().t;  // b == N*M by feasibility
  }

  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = problem.bounds.clip(problem.u[i] + t);
  return x;
}

std::vector<double> shift_cell_averages(std::span<const double> field_averages,
                                        std::span<const double> x_star) {
  if (field_averages.size() != x_star.size())
    throw std::invalid_argument("shift_cell_averages: length mismatch");
  std::vector<double> delta(x_star.size());
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = x_star[i] - field_averages[i];
  return delta;
}

LimitOutcome limit_cell_averages(const LimiterProblem& problem, double epsilon,
                                 int max_iters, bool record_iterates, Exec exec) {
  problem.require_feasible();
  LimitOutcome out;
  out.r_hat = count_bad_cells(problem.u, problem.bounds);
  if (out.r_hat == 0) {
    out.theta_hat = estimate_angle(0, problem.n());
    out.result.x_star = problem.u;
    out.result.y_final = problem.u;
    out.result.iterations = 0;
    out.result.converged = true;
    out.result.mass_defect = 0.0;
    return out;
  }
  out.theta_hat = estimate_angle(out.r_hat, problem.n());
  if (out.r_hat == problem.n()) {
    // r = N contradicts the rate theory's standing assumption r < N; fall
    // back to the smallest resolvable angle for this mesh.
    out.theta_hat = min_angle(problem.n());
    out.theta_clamped = true;
  }
  out.params = select_parameters(out.theta_hat);

  DRConfig config;
  config.c = out.params.c;
  config.lambda = out.params.lambda;
  config.epsilon = epsilon;
  config.max_iters = max_iters;
  config.record_iterates = record_iterates;
  config.exec = exec;
  out.result = dr_solve(problem, config);
  return out;
}

namespace serial {

DRResult dr_solve(const LimiterProblem& problem, const DRConfig& config) {
  config.validate();
  problem.require_feasible();
  const std::size_t n = problem.u.size();
  if (n == 1) {
    DRResult res;
    res.x_star = {problem.b};
    res.y_final = {problem.b};
    res.converged = true;
    return res;
  }
  double eps = config.epsilon;
  if (config.relative_tolerance) {
    double s = 0.0;
    for (double v : problem.u) s += v * v;
    eps *= 1.0 + std::sqrt(s);
  }
  std::vector<double> y = config.y0 ? *config.y0 : problem.u;
  std::vector<double> x(n), y_next(n);
  DRTrace trace;
  if (config.record_iterates) trace.y_iterates.push_back(y);
  int k = 0;
  bool converged = false;
  while (k < config.max_iters) {
    double sum_z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = problem.bounds.clip(y[i]);
      sum_z += 2.0 * x[i] - y[i];
    }
    const double shift = (sum_z - problem.b) / static_cast<double>(n);
    double step2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = 2.0 * x[i] - y[i];
      y_next[i] = config.lambda * config.c * (z - shift) +
                  config.lambda * (1.0 - config.c) * problem.u[i] + y[i] -
                  config.lambda * x[i];
      const double d = y_next[i] - y[i];
      step2 += d * d;
    }
    ++k;
    trace.y_step_norms.push_back(std::sqrt(step2));
    y.swap(y_next);
    if (config.record_iterates) trace.y_iterates.push_back(y);
    if (trace.y_step_norms.back() <= eps) {
      converged = true;
      break;
    }
  }
  DRResult res;
  res.y_final = y;
  res.x_star.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.x_star[i] = problem.bounds.clip(y[i]);
  res.iterations = k;
  res.converged = converged;
  double s = 0.0;
  for (double v : res.x_star) s += v;
  res.mass_defect = s - problem.b;
  res.trace = std::move(trace);
  return res;
}

}  // namespace serial

}  // namespace drlim
