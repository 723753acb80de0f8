#include "drlim/dg1d.hpp"

#include <cmath>
#include <numbers>

namespace drlim::dg1d {

double legendre(int j, double x) {
  if (j == 0) return 1.0;
  if (j == 1) return x;
  double pm1 = 1.0, p = x;
  for (int k = 2; k <= j; ++k) {
    const double pn = ((2.0 * k - 1.0) * x * p - (k - 1.0) * pm1) / k;
    pm1 = p;
    p = pn;
  }
  return p;
}

namespace {

// P_n and P_n' at x.
void legendre_pair(int n, double x, double& p, double& dp) {
  p = legendre(n, x);
  if (n == 0) {
    dp = 0.0;
    return;
  }
  const double pnm1 = legendre(n - 1, x);
  if (std::abs(1.0 - x * x) < 1e-15) {
    dp = 0.5 * n * (n + 1.0) * (x > 0 ? 1.0 : (n % 2 == 0 ? -1.0 : 1.0));
  } else {
    dp = n * (pnm1 - x * p) / (1.0 - x * x);
  }
}

}  // namespace

void gauss_legendre(int n, std::vector<double>& points, std::vector<double>& weights) {
  points.assign(n, 0.0);
  weights.assign(n, 0.0);
  constexpr double pi = std::numbers::pi;
  for (int i = 0; i < n; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double p, dp;
    for (int it = 0; it < 100; ++it) {
      legendre_pair(n, x, p, dp);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    legendre_pair(n, x, p, dp);
    // the cosine guesses run from +1 toward -1; store ascending
    points[n - 1 - i] = x;
    weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

std::vector<double> gauss_lobatto_points(int n) {
  if (n < 2) throw std::invalid_argument("gauss_lobatto_points: need n >= 2");
  constexpr double pi = std::numbers::pi;
  std::vector<double> pts(n);
  pts.front() = -1.0;
  pts.back() = 1.0;
  const int m = n - 1;  // interior points are roots of P_m'
  for (int i = 1; i < n - 1; ++i) {
    double x = std::cos(pi * i / m);  // Chebyshev-style initial guess
    for (int it = 0; it < 100; ++it) {
      double p, dp;
      legendre_pair(m, x, p, dp);
      // P'' from the Legendre ODE
      const double d2p = (2.0 * x * dp - m * (m + 1.0) * p) / (1.0 - x * x);
      const double dx = dp / d2p;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    pts[n - 1 - i] = x;
  }
  return pts;
}

SamplePointSet SamplePointSet::gauss_lobatto_for_degree(int degree) {
  return {gauss_lobatto_points(degree + 2)};
}

double ModalField1D::evaluate(int cell, double xi) const {
  double v = 0.0;
  for (int j = 0; j <= degree; ++j) v += coeff(cell, j) * legendre(j, xi);
  return v;
}

std::vector<double> ModalField1D::cell_averages() const {
  std::vector<double> avg(n_cells);
  for (int i = 0; i < n_cells; ++i) avg[i] = cell_average(i);
  return avg;
}

double ModalField1D::mass() const {
  double s = 0.0;
  for (int i = 0; i < n_cells; ++i) s += cell_average(i);
  return s * h();
}

ModalField1D l2_project(const std::function<double(double)>& f, int n_cells,
                        int degree, double x_lo, double x_hi, bool periodic) {
  if (n_cells < 1 || degree < 0)
    throw std::invalid_argument("l2_project: invalid mesh parameters");
  ModalField1D field;
  field.n_cells = n_cells;
  field.degree = degree;
  field.x_lo = x_lo;
  field.x_hi = x_hi;
  field.periodic = periodic;
  field.coeffs.assign(static_cast<std::size_t>(n_cells) * (degree + 1), 0.0);

  std::vector<double> q, w;
  gauss_legendre(degree + 2, q, w);
  const double h = field.h();
  for (int i = 0; i < n_cells; ++i) {
    const double xc = x_lo + (i + 0.5) * h;
    for (int j = 0; j <= degree; ++j) {
      double acc = 0.0;
      for (std::size_t g = 0; g < q.size(); ++g)
        acc += w[g] * f(xc + 0.5 * h * q[g]) * legendre(j, q[g]);
      field.coeff(i, j) = (2.0 * j + 1.0) / 2.0 * acc;
    }
  }
  return field;
}

ModalField1D zhang_shu_limit(const ModalField1D& field, Bounds bounds,
                             const SamplePointSet& sample_points) {
  bounds.validate();
  ModalField1D out = field;
  for (int i = 0; i < field.n_cells; ++i) {
    const double avg = field.cell_average(i);
    if (!bounds.contains(avg))
      throw CellAverageOutOfBounds(
          i, "zhang_shu_limit: cell average out of bounds at cell " + std::to_string(i));
    double lo = avg, hi = avg;
    for (double xi : sample_points.points) {
      const double v = field.evaluate(i, xi);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    double theta = 1.0;
    // zero-denominator terms treated as +inf (constant polynomial)
    if (lo < avg) theta = std::min(theta, std::abs(bounds.m - avg) / (avg - lo));
    if (hi > avg) theta = std::min(theta, std::abs(bounds.M - avg) / (hi - avg));
    for (int j = 1; j <= field.degree; ++j) out.coeff(i, j) = theta * field.coeff(i, j);
  }
  return out;
}

std::pair<ModalField1D, LimitOutcome> apply_two_stage_limiter(
    const ModalField1D& field, Bounds bounds, double epsilon) {
  LimiterProblem problem(field.cell_averages(), bounds);
  LimitOutcome outcome = limit_cell_averages(problem, epsilon);
  ModalField1D shifted = field;
  for (int i = 0; i < field.n_cells; ++i)
    shifted.coeff(i, 0) = outcome.result.x_star[i];
  const auto samples = SamplePointSet::gauss_lobatto_for_degree(field.degree);
  return {zhang_shu_limit(shifted, bounds, samples), std::move(outcome)};
}

double l2_error(const ModalField1D& field, const std::function<double(double)>& f) {
  std::vector<double> q, w;
  gauss_legendre(field.degree + 6, q, w);
  const double h = field.h();
  double acc = 0.0;
  for (int i = 0; i < field.n_cells; ++i) {
    const double xc = field.cell_left(i) + 0.5 * h;
    for (std::size_t g = 0; g < q.size(); ++g) {
      const double d = field.evaluate(i, q[g]) - f(xc + 0.5 * h * q[g]);
      acc += 0.5 * h * w[g] * d * d;
    }
  }
  return std::sqrt(acc);
}

double linf_error(const ModalField1D& field, const std::function<double(double)>& f,
                  int samples_per_cell) {
  const double h = field.h();
  double worst = 0.0;
  for (int i = 0; i < field.n_cells; ++i) {
    const double xc = field.cell_left(i) + 0.5 * h;
    for (int s = 0; s < samples_per_cell; ++s) {
      const double xi = -1.0 + 2.0 * s / (samples_per_cell - 1);
      worst = std::max(worst, std::abs(field.evaluate(i, xi) - f(xc + 0.5 * h * xi)));
    }
  }
  return worst;
}

}  // namespace drlim::dg1d
