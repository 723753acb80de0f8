#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "drlim/limiter.hpp"

// Executable convergence-rate theory for the Douglas--Rachford limiter: the
// linearized iteration matrix T_{c,lambda} valid once the clip pattern of the
// iterates freezes, its closed-form spectrum, the predicted asymptotic rate,
// empirical rate measurement from iterate traces, and a brute-force parameter
// optimizer used to validate the closed-form parameter rule.

namespace drlim::spectral {

struct InsufficientTailError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProblemGeometry {
  int n = 0;                    // total cells
  int r = 0;                    // active components of x*, 0 < r < n
  std::vector<int> active_set;  // sorted indices where x* touches m or M

  void validate() const;
};

// The single nontrivial principal angle between the mass-constraint null
// space and the active-box null space: theta = arccos(sqrt(r/N)).
double principal_angle(const ProblemGeometry& geometry);

// Discriminant sign change of the eigenvalue quadratic:
// c* = (1 - sin 2theta)/cos^2 2theta = 1/(1 + sin 2theta).
double c_star(double theta);

struct EigenvalueSet {
  double rho0;                // 1 - lambda*c        (multiplicity r-1)
  double rho1;                // 1 - lambda*(1-c)    (multiplicity N-r-1)
  std::complex<double> rho2;  // roots of the quadratic tied to theta
  std::complex<double> rho3;
  double discriminant;  // lambda^2 (c^2 cos^2 2theta - 2c + 1)
  double c_star;
};

EigenvalueSet eigenvalues(double theta, double c, double lambda);

// max(|rho0|, |rho1|, |rho2|, |rho3|)
double predicted_rate(double theta, double c, double lambda);

struct SpectralReport {
  double theta;
  EigenvalueSet eigs;
  double predicted_rate;
  Regime regime;
};

SpectralReport analyze(double theta, const ParameterChoice& params);

// Materializes
//   T_{c,l} = l*(c(I - A+A)(I - B+B) + c A+A B+B + (1-c) B+B) + (1-l) I
// with A the all-ones row (A+A = (1/N) 1 1^T) and B the active-set selector.
Eigen::MatrixXd build_iteration_matrix(const ProblemGeometry& geometry,
                                       double c, double lambda);

struct GridSearchResult {
  double c;
  double lambda;
  double minimax_rate;  // min over grid of max(|rho1|,|rho2|,|rho3|)
};

GridSearchResult optimize_parameters_bruteforce(double theta, int grid_c = 400,
                                                int grid_lambda = 400);

// Least-squares slope of log ||y^k - y*|| over the tail window where the
// clip pattern of y^k no longer changes; the final 3 points are dropped as
// round-off floor. Throws InsufficientTailError below 5 usable points.
double measure_asymptotic_rate(const std::vector<std::vector<double>>& y_iterates,
                               const std::vector<double>& y_star, Bounds bounds);

// Entries of y* strictly outside [m, M]; recovers the exact active-set size
// r from a converged reference iterate.
int exact_active_count(std::span<const double> y_star, Bounds bounds);

struct FixedPointCertificate {
  std::vector<double> x_star;
  std::vector<double> gamma_eta;  // gamma * eta = y* - x* (only c is exposed)
};

struct FixedPointCheck {
  bool sign_ok = false;      // eta sign pattern matches the active set
  bool range_ok = false;     // eta + alpha(x* - u) is a constant vector
  bool fixed_ok = false;     // T(y*) = y* to tolerance
  bool pass() const { return sign_ok && range_ok && fixed_ok; }
};

FixedPointCheck verify_fixed_point(const FixedPointCertificate& cert,
                                   const LimiterProblem& problem, double c,
                                   double lambda, double tol = 1e-10);

}  // namespace drlim::spectral
