#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "drlim/limiter.hpp"

// Minimal 1D modal DG field machinery for exercising Step II of the limiter:
// Legendre modal coefficients per cell (coefficient 0 is the cell average),
// L2 projection, the Zhang--Shu scaling limiter, and the two-stage pipeline.

namespace drlim::dg1d {

struct CellAverageOutOfBounds : std::runtime_error {
  int cell;
  CellAverageOutOfBounds(int i, const std::string& msg)
      : std::runtime_error(msg), cell(i) {}
};

struct ModalField1D {
  int n_cells = 0;
  int degree = 0;  // k >= 0; k+1 modal coefficients per cell
  double x_lo = 0.0;
  double x_hi = 1.0;
  bool periodic = true;
  std::vector<double> coeffs;  // cell-major, Legendre basis P_0..P_k

  double h() const { return (x_hi - x_lo) / n_cells; }
  double coeff(int cell, int j) const { return coeffs[cell * (degree + 1) + j]; }
  double& coeff(int cell, int j) { return coeffs[cell * (degree + 1) + j]; }
  double cell_average(int cell) const { return coeff(cell, 0); }
  // Evaluate the cell polynomial at reference coordinate xi in [-1, 1].
  double evaluate(int cell, double xi) const;
  double cell_left(int cell) const { return x_lo + cell * h(); }
  std::vector<double> cell_averages() const;
  double mass() const;  // h * sum of cell averages
};

// Legendre polynomial P_j(x) on [-1, 1].
double legendre(int j, double x);

// n-point Gauss--Legendre rule on [-1, 1].
void gauss_legendre(int n, std::vector<double>& points, std::vector<double>& weights);

// n-point Gauss--Lobatto points on [-1, 1] (n >= 2, includes the endpoints).
std::vector<double> gauss_lobatto_points(int n);

struct SamplePointSet {
  std::vector<double> points;  // reference-interval points in [-1, 1]

  // Default sample set for degree k: (k+2)-point Gauss--Lobatto.
  static SamplePointSet gauss_lobatto_for_degree(int degree);
};

ModalField1D l2_project(const std::function<double(double)>& f, int n_cells,
                        int degree, double x_lo, double x_hi,
                        bool periodic = true);

// Per-cell linear scaling toward the cell average so all sampled point
// values land in [m, M]. Requires every cell average already in bounds.
ModalField1D zhang_shu_limit(const ModalField1D& field, Bounds bounds,
                             const SamplePointSet& sample_points);

// Step I (limit cell averages, shift constants) followed by Step II
// (Zhang--Shu) with the default Gauss--Lobatto sample set.
std::pair<ModalField1D, LimitOutcome> apply_two_stage_limiter(
    const ModalField1D& field, Bounds bounds, double epsilon);

// Quadrature-based error norms against a reference function.
double l2_error(const ModalField1D& field, const std::function<double(double)>& f);
double linf_error(const ModalField1D& field, const std::function<double(double)>& f,
                  int samples_per_cell = 16);

}  // namespace drlim::dg1d
