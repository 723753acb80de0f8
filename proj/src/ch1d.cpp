#include "drlim/ch1d.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace drlim::ch1d {

void CHConfig::validate() const {
  if (n_cells < 3) throw std::invalid_argument("CHConfig: need n_cells >= 3");
  if (!(h > 0.0 && dt > 0.0 && eps_ch > 0.0))
    throw std::invalid_argument("CHConfig: h, dt, eps_ch must be > 0");
  if (end_step < 0) throw std::invalid_argument("CHConfig: end_step must be >= 0");
  if (potential == Potential::FloryHuggins && !(fh_alpha > 0.0))
    throw std::invalid_argument("CHConfig: Flory-Huggins requires alpha > 0");
}

namespace {

double mobility_value(Mobility mob, double phi) {
  if (mob == Mobility::Constant) return 1.0;
  return std::max(0.0, 1.0 - phi * phi);
}

// Periodic flux-form operator (1/h^2) D_-(M_{i+1/2} D_+ v) as a matrix.
Eigen::MatrixXd mobility_laplacian(const std::vector<double>& phi, Mobility mob,
                                   double h) {
  const int n = static_cast<int>(phi.size());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  const double inv_h2 = 1.0 / (h * h);
  for (int i = 0; i < n; ++i) {
    const int ip = (i + 1) % n;
    const int im = (i + n - 1) % n;
    const double m_right = mobility_value(mob, 0.5 * (phi[i] + phi[ip]));
    const double m_left = mobility_value(mob, 0.5 * (phi[im] + phi[i]));
    L(i, ip) += m_right * inv_h2;
    L(i, i) -= (m_right + m_left) * inv_h2;
    L(i, im) += m_left * inv_h2;
  }
  return L;
}

Eigen::MatrixXd second_difference(int n, double h) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  const double inv_h2 = 1.0 / (h * h);
  for (int i = 0; i < n; ++i) {
    const int ip = (i + 1) % n;
    const int im = (i + n - 1) % n;
    D(i, ip) += inv_h2;
    D(i, i) -= 2.0 * inv_h2;
    D(i, im) += inv_h2;
  }
  return D;
}

}  // namespace

CHState make_initial_state(const CHConfig& config, std::vector<double> initial) {
  config.validate();
  if (static_cast<int>(initial.size()) != config.n_cells)
    throw std::invalid_argument("make_initial_state: initial length != n_cells");
  CHState st;
  st.averages = std::move(initial);
  double s = 0.0, lo = st.averages[0], hi = st.averages[0];
  for (double v : st.averages) {
    s += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  st.mass = config.h * s;
  st.min_avg = lo;
  st.max_avg = hi;
  return st;
}

CHState ch_step(const CHState& state, const CHConfig& config) {
  config.validate();
  const int n = config.n_cells;
  const std::vector<double>& phi = state.averages;

  // mu^{n+1} = Dplus * phi^{n+1} + g(phi^n) - eps^2 * D2 phi^{n+1}
  Eigen::VectorXd dplus(n), g(n);
  if (config.potential == Potential::GinzburgLandau) {
    // Phi+' = phi^3, lagged as (phi^n)^2 phi^{n+1}; Phi-' = -phi explicit
    for (int i = 0; i < n; ++i) {
      dplus[i] = phi[i] * phi[i];
      g[i] = -phi[i];
    }
  } else {
    // Phi+' = alpha*artanh(phi) taken with one lagged Newton linearization;
    // Phi-' = -beta*phi explicit
    for (int i = 0; i < n; ++i) {
      if (!(std::abs(phi[i]) < 1.0))
        throw std::domain_error("ch_step: Flory-Huggins state left (-1, 1)");
      const double d1 = 0.5 * config.fh_alpha *
                        std::log((1.0 + phi[i]) / (1.0 - phi[i]));
      const double d2 = config.fh_alpha / (1.0 - phi[i] * phi[i]);
      dplus[i] = d2;
      g[i] = d1 - d2 * phi[i] - config.fh_beta * phi[i];
    }
  }

  const Eigen::MatrixXd L = mobility_laplacian(phi, config.mobility, config.h);
  const Eigen::MatrixXd D2 = second_difference(n, config.h);
  const double e2 = config.eps_ch * config.eps_ch;

  // (I - dt * L * (diag(dplus) - eps^2 D2)) phi^{n+1} = phi^n + dt * L * g
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) -
                      config.dt * L * (Eigen::MatrixXd(dplus.asDiagonal()) - e2 * D2);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) rhs[i] = phi[i];
  rhs += config.dt * L * g;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd phi_next = lu.solve(rhs);
  const double residual = (A * phi_next - rhs).norm();
  if (!phi_next.allFinite() || residual > 1e-8 * (1.0 + rhs.norm()))
    throw LinearSolveFailure("ch_step: implicit solve failed");

  CHState next;
  next.step = state.step + 1;
  next.time = state.time + config.dt;
  next.averages.assign(phi_next.data(), phi_next.data() + n);

  const Bounds bounds{-1.0, 1.0};
  next.r_hat = count_bad_cells(next.averages, bounds);
  if (config.limiter_enabled && next.r_hat > 0) {
    LimiterProblem problem(next.averages, bounds);
    LimitOutcome out = limit_cell_averages(problem, config.dr_epsilon);
    next.averages = out.result.x_star;
    next.dr_iterations = out.result.iterations;
    next.mass_defect = out.result.mass_defect * config.h;
  }

  double s = 0.0, lo = next.averages[0], hi = next.averages[0];
  for (double v : next.averages) {
    s += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  next.mass = config.h * s;
  next.min_avg = lo;
  next.max_avg = hi;
  return next;
}

std::vector<CHState> ch_run(const CHConfig& config, const std::vector<double>& initial) {
  config.validate();
  std::vector<CHState> history;
  history.reserve(config.end_step + 1);
  history.push_back(make_initial_state(config, initial));
  for (int s = 0; s < config.end_step; ++s)
    history.push_back(ch_step(history.back(), config));
  return history;
}

std::vector<double> random_pm1_initial(int n_cells, unsigned seed) {
  // xorshift-style generator so the sequence is fixed across platforms
  std::vector<double> phi(n_cells);
  std::uint64_t s = 0x9e3779b97f4a7c15ull ^ (static_cast<std::uint64_t>(seed) + 1);
  for (int i = 0; i < n_cells; ++i) {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    phi[i] = (s & 1) ? 1.0 : -1.0;
  }
  return phi;
}

}  // namespace drlim::ch1d
