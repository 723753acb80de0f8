#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// Conservative bound-preserving projection of cell averages:
//
//   min ||x - u||_2^2   s.t.   x_i in [m, M],  sum_i x_i = b,
//
// solved by a generalized Douglas--Rachford iteration whose relaxation and
// resolvent parameters are picked from the number of out-of-bound cells.
// An exact clip-shift oracle is provided for verification.

namespace drlim {

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Bounds {
  double m;
  double M;

  bool contains(double v) const { return v >= m && v <= M; }
  double clip(double v) const { return v < m ? m : (v > M ? M : v); }
  void validate() const {
    if (!(m < M)) throw std::invalid_argument("Bounds: require m < M");
  }
};

struct LimiterProblem {
  std::vector<double> u;  // input cell averages
  Bounds bounds;
  double b;  // target mass, default sum(u)

  LimiterProblem(std::vector<double> averages, Bounds bnds);
  LimiterProblem(std::vector<double> averages, Bounds bnds, double mass);

  int n() const { return static_cast<int>(u.size()); }
  bool feasible() const;
  void require_feasible() const;
};

enum class Exec { Serial, Parallel };

struct DRConfig {
  double c = 0.5;          // c = 1/(gamma*alpha + 1), in (0,1)
  double lambda = 2.0;     // relaxation, in (0,2]
  double epsilon = 1e-13;  // termination: ||y^{k+1} - y^k||_2 <= epsilon
  int max_iters = 1000;
  bool relative_tolerance = false;  // scale epsilon by ||u||_2
  bool record_iterates = false;     // keep y^k history for rate measurement
  std::optional<std::vector<double>> y0;  // default: y^0 = u
  Exec exec = Exec::Parallel;

  void validate() const;
};

struct DRTrace {
  std::vector<double> y_step_norms;               // ||y^{k+1} - y^k||_2
  std::vector<std::vector<double>> y_iterates;    // y^0, y^1, ... (optional)
};

struct DRResult {
  std::vector<double> x_star;   // clip(y_final); entries in [m, M] exactly
  std::vector<double> y_final;
  int iterations = 0;
  bool converged = false;
  double mass_defect = 0.0;  // sum(x_star) - b, reported, never corrected
  DRTrace trace;
};

// Number of entries strictly outside [m, M]. Values equal to a bound count
// as in-bounds (clip is the identity there).
int count_bad_cells(std::span<const double> u, Bounds bounds);

// theta_hat = arccos(sqrt(r_hat / N)), in [0, pi/2].
double estimate_angle(int r_hat, int n);

// Smallest angle the parameter rule accepts for a mesh of n cells; used to
// clamp the degenerate r_hat = N case.
double min_angle(int n);

enum class Regime { Case1, Case2, Case3 };

struct ParameterChoice {
  double c;
  double lambda;
  Regime regime;
};

// Three-branch nearly optimal parameter rule:
//   theta in (3pi/8, pi/2]: c = 1/2,  lambda = 4 / (2 - cos 2theta)
//   theta in (pi/4, 3pi/8]: c = c*,   lambda = lambda*
//   theta in (0,    pi/4 ]: c = c*,   lambda = 2
// with c* = 1 / (cos theta + sin theta)^2. Throws std::domain_error for
// theta outside (0, pi/2].
ParameterChoice select_parameters(double theta_hat);

// One explicit Douglas--Rachford step:
//   x = clip(y),  z = 2x - y,
//   y_next = lambda*c*(z - (sum z - b)/N) + lambda*(1-c)*u + y - lambda*x.
void dr_iterate(std::span<const double> y_k, const LimiterProblem& problem,
                const DRConfig& config, std::span<double> x_k,
                std::span<double> y_next);

DRResult dr_solve(const LimiterProblem& problem, const DRConfig& config);

// Exact minimizer via the KKT form x* = clip(u + t*1) with t the root of
// the monotone piecewise-linear g(t) = sum clip(u_i + t) - b, found by a
// breakpoint scan.
std::vector<double> project_box_hyperplane_oracle(const LimiterProblem& problem);

// delta_i = x*_i - ubar_i, the constant to add to cell i's polynomial.
std::vector<double> shift_cell_averages(std::span<const double> field_averages,
                                        std::span<const double> x_star);

struct LimitOutcome {
  DRResult result;
  int r_hat = 0;
  double theta_hat = 0.0;
  ParameterChoice params{0.5, 2.0, Regime::Case3};
  bool theta_clamped = false;
};

// Full Step I pipeline: count bad cells, pick parameters, solve. A clean
// input (r_hat = 0) is returned unchanged with zero iterations.
LimitOutcome limit_cell_averages(const LimiterProblem& problem, double epsilon,
                                 int max_iters = 1000,
                                 bool record_iterates = false,
                                 Exec exec = Exec::Parallel);

// Textbook single-threaded implementation kept as a reference for tests and
// the benchmark. Same contract as dr_solve.
namespace serial {
DRResult dr_solve(const LimiterProblem& problem, const DRConfig& config);
}

}  // namespace drlim
