#pragma once

#include <vector>

#include "drlim/limiter.hpp"

// Desk-scale 1D Cahn--Hilliard driver: semi-implicit convex-splitting time
// stepping on periodic cell averages. Its job is to produce realistic
// out-of-bound cell averages each step and run the limiter inside a live
// PDE loop; the dg1d module, not this driver, exercises point values.

namespace drlim::ch1d {

struct LinearSolveFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Mobility { Constant, Degenerate };  // M = 1 or M = 1 - phi^2
enum class Potential { GinzburgLandau, FloryHuggins };

struct CHConfig {
  int n_cells = 256;
  double h = 1.0 / 256;
  double dt = 1e-4;
  // marginally resolved interface (eps_ch ~ h) so the scheme actually
  // produces out-of-bound averages; the degenerate mobility keeps the
  // overshoot magnitudes small enough for short limiter solves
  double eps_ch = 0.0035;
  Mobility mobility = Mobility::Degenerate;
  Potential potential = Potential::GinzburgLandau;
  double fh_alpha = 0.3;
  double fh_beta = 1.0;
  int end_step = 100;
  bool limiter_enabled = true;
  double dr_epsilon = 1e-13;
  unsigned seed = 1;

  void validate() const;
};

struct CHState {
  int step = 0;
  double time = 0.0;
  std::vector<double> averages;
  double mass = 0.0;  // h * sum(averages)
  // per-step diagnostics
  int r_hat = 0;          // bad cells before limiting
  int dr_iterations = 0;  // Douglas--Rachford iterations spent
  double mass_defect = 0.0;
  double min_avg = 0.0;
  double max_avg = 0.0;
};

CHState make_initial_state(const CHConfig& config, std::vector<double> initial);

// One convex-splitting step: convex potential part and the biharmonic term
// implicit (lagged-coefficient linearization), concave part explicit,
// mobility at the previous step; then the cell-average limiter when enabled.
CHState ch_step(const CHState& state, const CHConfig& config);

std::vector<CHState> ch_run(const CHConfig& config, const std::vector<double>& initial);

// Spinodal-style initial data: each cell average sampled from {-1, +1}.
std::vector<double> random_pm1_initial(int n_cells, unsigned seed);

}  // namespace drlim::ch1d
