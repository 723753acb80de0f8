#include "drlim/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace drlim::spectral {

void ProblemGeometry::validate() const {
  if (!(0 < r && r < n)) throw std::invalid_argument("ProblemGeometry: need 0 < r < N");
  if (static_cast<int>(active_set.size()) != r)
    throw std::invalid_argument("ProblemGeometry: active_set size != r");
  for (std::size_t i = 0; i < active_set.size(); ++i) {
    if (active_set[i] < 0 || active_set[i] >= n)
      throw std::invalid_argument("ProblemGeometry: index out of range");
    if (i > 0 && active_set[i] <= active_set[i - 1])
      throw std::invalid_argument("ProblemGeometry: indices must be sorted and distinct");
  }
}

double principal_angle(const ProblemGeometry& geometry) {
  geometry.validate();
  return std::acos(std::sqrt(static_cast<double>(geometry.r) / geometry.n));
}

double c_star(double theta) { return 1.0 / (1.0 + std::sin(2.0 * theta)); }

EigenvalueSet eigenvalues(double theta, double c, double lambda) {
  const double cos2t = std::cos(2.0 * theta);
  const double sint = std::sin(theta);

  EigenvalueSet set;
  set.rho0 = 1.0 - lambda * c;
  set.rho1 = 1.0 - lambda * (1.0 - c);
  set.c_star = c_star(theta);
  set.discriminant = lambda * lambda * (c * c * cos2t * cos2t - 2.0 * c + 1.0);

  // rho^2 + p*rho + q = 0. The constant term is evaluated via
  //   q = lambda*c*(1 + (lambda-2)*sin^2(theta)) + 1 - lambda,
  // algebraically equal to lambda^2 c sin^2 + lambda(c cos2theta - 1) + 1 but
  // free of the catastrophic cancellation at lambda = 2, c = 1/2.
  const double p = -(lambda * (c * cos2t - 1.0) + 2.0);
  const double q = lambda * c * (1.0 + (lambda - 2.0) * sint * sint) + 1.0 - lambda;
  const double disc = p * p - 4.0 * q;  // equals set.discriminant up to round-off
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    set.rho2 = {(-p + root) / 2.0, 0.0};
    set.rho3 = {(-p - root) / 2.0, 0.0};
  } else {
    const double re = -p / 2.0;
    const double im = std::sqrt(-disc) / 2.0;
    set.rho2 = {re, im};
    set.rho3 = {re, -im};
  }
  return set;
}

double predicted_rate(double theta, double c, double lambda) {
  const EigenvalueSet e = eigenvalues(theta, c, lambda);
  return std::max({std::abs(e.rho0), std::abs(e.rho1), std::abs(e.rho2), std::abs(e.rho3)});
}

SpectralReport analyze(double theta, const ParameterChoice& params) {
  SpectralReport rep;
  rep.theta = theta;
  rep.eigs = eigenvalues(theta, params.c, params.lambda);
  rep.predicted_rate = predicted_rate(theta, params.c, params.lambda);
  rep.regime = params.regime;
  return rep;
}

Eigen::MatrixXd build_iteration_matrix(const ProblemGeometry& geometry, double c,
                                       double lambda) {
  geometry.validate();
  const int n = geometry.n;
  const Eigen::MatrixXd Pa = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  Eigen::MatrixXd Pb = Eigen::MatrixXd::Zero(n, n);
  for (int idx : geometry.active_set) Pb(idx, idx) = 1.0;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  return lambda * (c * (I - Pa) * (I - Pb) + c * Pa * Pb + (1.0 - c) * Pb) +
         (1.0 - lambda) * I;
}

GridSearchResult optimize_parameters_bruteforce(double theta, int grid_c,
                                                int grid_lambda) {
  constexpr double pi = std::numbers::pi;
  if (!(theta > 0.0 && theta <= pi / 2))
    throw std::domain_error("optimize_parameters_bruteforce: theta out of (0, pi/2]");
  GridSearchResult best{0.5, 2.0, std::numeric_limits<double>::infinity()};
  for (int i = 1; i < grid_c; ++i) {
    // interior of (0,1); an even grid_c puts c = 1/2 on the grid, where the
    // minimax surface has its square-root cusp
    const double c = static_cast<double>(i) / grid_c;
    for (int j = 1; j <= grid_lambda; ++j) {
      const double lambda = 2.0 * j / grid_lambda;  // (0, 2]
      const EigenvalueSet e = eigenvalues(theta, c, lambda);
      // rho0 is ignored on purpose; see the rate theory's case analysis.
      const double rate =
          std::max({std::abs(e.rho1), std::abs(e.rho2), std::abs(e.rho3)});
      if (rate < best.minimax_rate) best = {c, lambda, rate};
    }
  }
  return best;
}

int exact_active_count(std::span<const double> y_star, Bounds bounds) {
  int r = 0;
  for (double v : y_star)
    if (v < bounds.m || v > bounds.M) ++r;
  return r;
}

namespace {

std::vector<int> clip_pattern(const std::vector<double>& y, Bounds bounds) {
  std::vector<int> pat(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    pat[i] = y[i] < bounds.m ? -1 : (y[i] > bounds.M ? 1 : 0);
  return pat;
}

}  // namespace

double measure_asymptotic_rate(const std::vector<std::vector<double>>& y_iterates,
                               const std::vector<double>& y_star, Bounds bounds) {
  const std::size_t total = y_iterates.size();
  if (total < 9) throw InsufficientTailError("fewer than 9 recorded iterates");

  // Last contiguous run with a frozen clip pattern.
  std::size_t start = total - 1;
  std::vector<int> pat = clip_pattern(y_iterates.back(), bounds);
  while (start > 0 && clip_pattern(y_iterates[start - 1], bounds) == pat) --start;

  std::vector<double> ks, logs;
  const std::size_t end = total - 3;  // final points sit on the round-off floor
  for (std::size_t k = start; k < end; ++k) {
    double err2 = 0.0;
    for (std::size_t i = 0; i < y_star.size(); ++i) {
      const double d = y_iterates[k][i] - y_star[i];
      err2 += d * d;
    }
    if (err2 <= 0.0) break;
    ks.push_back(static_cast<double>(k));
    logs.push_back(0.5 * std::log(err2));
  }
  if (ks.size() < 5)
    throw InsufficientTailError("fewer than 5 usable tail points for the rate fit");

  const std::size_t np = ks.size();
  double mk = 0.0, ml = 0.0;
  for (std::size_t i = 0; i < np; ++i) {
    mk += ks[i];
    ml += logs[i];
  }
  mk /= np;
  ml /= np;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < np; ++i) {
    num += (ks[i] - mk) * (logs[i] - ml);
    den += (ks[i] - mk) * (ks[i] - mk);
  }
  return std::exp(num / den);
}

FixedPointCheck verify_fixed_point(const FixedPointCertificate& cert,
                                   const LimiterProblem& problem, double c,
                                   double lambda, double tol) {
  const std::size_t n = problem.u.size();
  if (cert.x_star.size() != n || cert.gamma_eta.size() != n)
    throw std::invalid_argument("verify_fixed_point: length mismatch");
  const Bounds bounds = problem.bounds;
  const double scale = 1.0 + std::abs(bounds.m) + std::abs(bounds.M);

  FixedPointCheck check;

  // (i) multiplier sign pattern from the subdifferential of the box indicator
  check.sign_ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = cert.x_star[i];
    const double ge = cert.gamma_eta[i];
    if (x >= bounds.M - tol * scale) {
      if (ge < -tol * scale) check.sign_ok = false;
    } else if (x <= bounds.m + tol * scale) {
      if (ge > tol * scale) check.sign_ok = false;
    } else if (std::abs(ge) > tol * scale) {
      check.sign_ok = false;
    }
  }

  // (ii) eta + alpha(x* - u) in range(A^T): with gamma*alpha = (1-c)/c the
  // scaled combination gamma_eta + ((1-c)/c)(x* - u) must be constant.
  const double ga = (1.0 - c) / c;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = cert.gamma_eta[i] + ga * (cert.x_star[i] - problem.u[i]);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  check.range_ok = (hi - lo) <= tol * scale * (1.0 + ga);

  // (iii) y* = x* + gamma*eta is a fixed point of the iteration map.
  std::vector<double> y_star(n), x(n), y_next(n);
  for (std::size_t i = 0; i < n; ++i) y_star[i] = cert.x_star[i] + cert.gamma_eta[i];
  DRConfig config;
  config.c = c;
  config.lambda = lambda;
  dr_iterate(y_star, problem, config, x, y_next);
  double diff2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = y_next[i] - y_star[i];
    diff2 += d * d;
  }
  check.fixed_ok = std::sqrt(diff2) <= tol * scale * std::sqrt(static_cast<double>(n));

  return check;
}

}  // namespace drlim::spectral
