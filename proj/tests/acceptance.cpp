// Acceptance gate: one pass/fail line per criterion, exit code = #failures.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "drlim/ch1d.hpp"
#include "drlim/dg1d.hpp"
#include "drlim/limiter.hpp"
#include "drlim/spectral.hpp"

using namespace drlim;
namespace sp = drlim::spectral;

namespace {

constexpr double kPi = std::numbers::pi;

double linf_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Instance with exactly r entries pushed outside [-1, 1] by `violation` and
// the rest kept at margin >= 0.1 from the bounds so the optimal shift does
// not activate extra entries.
LimiterProblem planted_instance(std::mt19937& rng, int n, int r, double violation) {
  std::uniform_real_distribution<double> interior(-0.85, 0.85);
  std::uniform_real_distribution<double> vio(0.5 * violation, violation);
  std::vector<double> u(n);
  for (auto& v : u) v = interior(rng);
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  for (int j = 0; j < r; ++j)
    u[idx[j]] = (j % 2 == 0) ? 1.0 + vio(rng) : -1.0 - vio(rng);
  return LimiterProblem(std::move(u), Bounds{-1.0, 1.0});
}

// Instance whose r violating entries all sit at the upper bound with the same
// overshoot.  The initial error y0 - y* is then constant on the active set and
// constant on its complement, i.e. confined to the two-dimensional subspace
// rotated by the principal angle; the fluctuation eigenspaces (moduli
// |1 - lambda c| and |1 - lambda (1 - c)|) receive no component, so the
// measured tail decays at the true dominant modulus.
LimiterProblem planted_instance_one_sided(std::mt19937& rng, int n, int r,
                                          double violation) {
  std::uniform_real_distribution<double> interior(-0.85, 0.85);
  std::vector<double> u(n);
  for (auto& v : u) v = interior(rng);
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  for (int j = 0; j < r; ++j) u[idx[j]] = 1.0 + violation;
  return LimiterProblem(std::move(u), Bounds{-1.0, 1.0});
}

struct RateCheck {
  double predicted = 0.0;
  double measured = 0.0;
  bool ok = false;
};

// Reference run (1000 iterations) fixes y*; the measured run at eps = 1e-13
// is a prefix of the same deterministic sequence.
RateCheck rate_check(const LimiterProblem& prob, double c, double lambda,
                     double rel_tol) {
  DRConfig ref;
  ref.c = c;
  ref.lambda = lambda;
  ref.epsilon = 1e-300;
  ref.max_iters = 1000;
  auto yref = dr_solve(prob, ref);

  DRConfig meas = ref;
  meas.epsilon = 1e-13;
  meas.record_iterates = true;
  auto res = dr_solve(prob, meas);

  RateCheck out;
  int r_exact = sp::exact_active_count(yref.y_final, prob.bounds);
  double theta = estimate_angle(r_exact, prob.n());
  out.predicted = sp::predicted_rate(theta, c, lambda);
  out.measured =
      sp::measure_asymptotic_rate(res.trace.y_iterates, yref.y_final, prob.bounds);
  out.ok = res.converged &&
           std::abs(out.measured - out.predicted) <= rel_tol * out.predicted;
  return out;
}

bool criterion1(std::string& note) {
  std::mt19937 rng(101);
  int checked = 0;
  double worst = 0.0;
  for (int n : {4, 64, 1024, 4096}) {
    for (int rep = 0; rep < 250; ++rep) {
      std::uniform_real_distribution<double> frac(0.0, 0.3);
      int r = std::max(1, static_cast<int>(frac(rng) * n));
      auto prob = planted_instance(rng, n, std::min(r, n - 1), 0.3);
      auto out = limit_cell_averages(prob, 1e-13);
      if (!out.result.converged) {
        note = "solver failed to converge";
        return false;
      }
      auto oracle = project_box_hyperplane_oracle(prob);
      worst = std::max(worst, linf_diff(out.result.x_star, oracle));
      ++checked;
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d instances, worst linf gap %.2e", checked, worst);
  note = buf;
  return worst <= 1e-9;
}

bool criterion2(std::string& note) {
  std::mt19937 rng(202);
  int total = 0, over20 = 0, over30 = 0, worst = 0;
  for (int rep = 0; rep < 200; ++rep) {
    int n = 1000 + static_cast<int>(rng() % 4000);
    std::uniform_real_distribution<double> frac(0.0, 0.05);
    int r = std::max(1, static_cast<int>(frac(rng) * n));
    auto prob = planted_instance(rng, n, r, 1.5e-3);
    auto out = limit_cell_averages(prob, 1e-13);
    if (!out.result.converged) {
      note = "non-convergence";
      return false;
    }
    ++total;
    worst = std::max(worst, out.result.iterations);
    if (out.result.iterations > 20) ++over20;
    if (out.result.iterations > 30) ++over30;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%d runs, max %d iterations, %d over 20 (%.1f%%), %d over 30",
                total, worst, over20, 100.0 * over20 / total, over30);
  note = buf;
  return over30 == 0 && over20 <= total / 20;
}

bool criterion3(std::string& note) {
  std::mt19937 rng(303);
  int n = 10000;
  std::uniform_real_distribution<double> interior(-0.85, 0.85);
  std::vector<double> u(n);
  for (auto& v : u) v = interior(rng);
  u[4217] = 1.5;
  LimiterProblem prob(std::move(u), Bounds{-1.0, 1.0});
  auto p = select_parameters(estimate_angle(1, n));
  auto rc = rate_check(prob, p.c, p.lambda, 1.0);  // tolerance handled below
  double x = 1.0 / n;
  double formula = (1.0 - 2.0 * x) / (3.0 - 2.0 * x);
  bool pred_ok = std::abs(rc.predicted - formula) <= 1e-12;
  bool meas_ok = rc.measured >= 0.30 && rc.measured <= 0.37;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "predicted %.6f (formula gap %.1e), measured %.4f",
                rc.predicted, std::abs(rc.predicted - formula), rc.measured);
  note = buf;
  return pred_ok && meas_ok;
}

bool criterion4(std::string& note) {
  std::mt19937 rng(404);
  int n = 2000;
  note.clear();
  bool ok = true;
  for (double ratio : {0.001, 0.01, 0.1, 0.25, 0.5}) {
    int r = std::max(1, static_cast<int>(ratio * n));
    double c, lambda;
    LimiterProblem prob = (ratio <= 0.15)
                              ? planted_instance(rng, n, r, 5e-3)
                              : planted_instance_one_sided(rng, n, r, 5e-3);
    if (ratio <= 0.15) {
      auto p = select_parameters(estimate_angle(r, n));
      c = p.c;
      lambda = p.lambda;
    } else {
      // the rule's near-optimal parameters at these ratios either equalize
      // several eigenvalue moduli (complex pair -> oscillatory residual) or
      // annihilate the error in finitely many steps at theta = pi/4, leaving
      // no clean tail to fit; measure with deliberately suboptimal parameters
      // whose dominant eigenvalue is real and simple, on one-sided instances
      // so the dominant eigendirection is actually excited
      c = 0.4;
      lambda = 1.2;
    }
    auto rc = rate_check(prob, c, lambda, 0.05);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%sr/N=%.3f: pred %.4f meas %.4f", note.empty() ? "" : "; ",
                  ratio, rc.predicted, rc.measured);
    note += buf;
    ok = ok && rc.ok;
  }
  return ok;
}

bool criterion5(std::string& note) {
  std::mt19937 rng(505);
  std::uniform_real_distribution<double> cdist(0.05, 0.95);
  std::uniform_real_distribution<double> ldist(0.1, 2.0);
  double worst_eig = 0.0, worst_ang = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    int n = 3 + static_cast<int>(rng() % 62);
    int r = 1 + static_cast<int>(rng() % (n - 1));
    sp::ProblemGeometry g;
    g.n = n;
    g.r = r;
    for (int i = 0; i < r; ++i) g.active_set.push_back(i);
    double c = cdist(rng), lambda = ldist(rng);
    double theta = sp::principal_angle(g);
    auto e = sp::eigenvalues(theta, c, lambda);
    std::vector<double> expected;
    for (int i = 0; i < r - 1; ++i) expected.push_back(std::abs(e.rho0));
    for (int i = 0; i < n - r - 1; ++i) expected.push_back(std::abs(e.rho1));
    expected.push_back(std::abs(e.rho2));
    expected.push_back(std::abs(e.rho3));
    std::sort(expected.begin(), expected.end());

    Eigen::MatrixXd T = sp::build_iteration_matrix(g, c, lambda);
    Eigen::EigenSolver<Eigen::MatrixXd> es(T);
    std::vector<double> got(n);
    for (int i = 0; i < n; ++i) got[i] = std::abs(es.eigenvalues()[i]);
    std::sort(got.begin(), got.end());
    for (int i = 0; i < n; ++i)
      worst_eig = std::max(worst_eig, std::abs(got[i] - expected[i]));

    // principal angle via SVD of (1/sqrt(n)) 1^T B0
    Eigen::MatrixXd B0 = Eigen::MatrixXd::Zero(n, n - r);
    for (int j = r; j < n; ++j) B0(j, j - r) = 1.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd::Ones(1, n) * B0 /
                                          std::sqrt(double(n)));
    double theta_svd = std::asin(std::min(1.0, svd.singularValues()(0)));
    worst_ang = std::max(worst_ang, std::abs(theta_svd - theta));
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "worst eigen gap %.1e, worst angle gap %.1e",
                worst_eig, worst_ang);
  note = buf;
  return worst_eig <= 1e-10 && worst_ang <= 1e-12;
}

bool criterion6(std::string& note) {
  std::mt19937 rng(606);
  std::uniform_real_distribution<double> tdist(0.02, kPi / 2);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    double theta = tdist(rng);
    auto p = select_parameters(theta);
    auto e = sp::eigenvalues(theta, p.c, p.lambda);
    double selected =
        std::max({std::abs(e.rho1), std::abs(e.rho2), std::abs(e.rho3)});
    auto grid = sp::optimize_parameters_bruteforce(theta, 400, 400);
    worst = std::max(worst, selected - grid.minimax_rate);
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "50 angles, worst excess over grid optimum %.4f", worst);
  note = buf;
  return worst <= 0.01;
}

bool criterion7(std::string& note) {
  using namespace drlim::dg1d;
  auto phi = [](double x) { return std::tanh(8.0 * std::cos(2.0 * kPi * x)); };
  double worst_mass = 0.0, worst_violation = 0.0;
  for (int n : {16, 32, 64}) {
    auto f = l2_project(phi, n, 2, 0.0, 1.0);
    double h3 = std::pow(f.h(), 3);
    for (int i = 0; i < n; ++i) f.coeff(i, 0) += (i % 2 ? 30.0 : -30.0) * h3;
    double mass0 = f.mass();
    auto [g, outcome] = apply_two_stage_limiter(f, Bounds{-1.0, 1.0}, 1e-13);
    if (!outcome.result.converged) {
      note = "limiter non-convergence";
      return false;
    }
    worst_mass = std::max(worst_mass,
                          std::abs(g.mass() - mass0) / (1.0 + std::abs(mass0)));
    auto s = SamplePointSet::gauss_lobatto_for_degree(2);
    for (int i = 0; i < n; ++i)
      for (double xi : s.points) {
        double v = g.evaluate(i, xi);
        worst_violation = std::max({worst_violation, v - 1.0, -1.0 - v});
      }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "worst rel mass drift %.1e, worst point excursion %.1e",
                worst_mass, worst_violation);
  note = buf;
  return worst_mass <= 1e-11 && worst_violation <= 1e-14;
}

bool criterion8(std::string& note) {
  using namespace drlim::dg1d;
  // quartically flat touches of both bounds at x = 0 and x = 1/2, so an
  // O(h^3) perturbation reliably pushes nearby cell averages out of [-1, 1]
  auto phi = [](double x) {
    double s = std::sin(kPi * x);
    return 1.0 - 2.0 * s * s * s * s;
  };
  std::vector<int> meshes{16, 32, 64, 128};
  // modes: 0 = no limiter, 1 = cell-average stage only, 2 = both stages
  std::vector<std::vector<double>> err(3);
  bool ratio_ok = true;
  for (int n : meshes) {
    auto f = l2_project(phi, n, 2, 0.0, 1.0);
    // the flat-touch average gap scales like 39 h^4, so 4 h^3 clears it on
    // every mesh from n = 16 up
    double h3 = 4.0 * std::pow(f.h(), 3);
    auto pert = f;
    for (int i = 0; i < n; ++i) pert.coeff(i, 0) += (i % 2 ? -1.0 : 1.0) * h3;
    double e0 = l2_error(pert, phi);
    err[0].push_back(e0);

    std::vector<double> av = pert.cell_averages();
    LimiterProblem prob(av, Bounds{-1.0, 1.0});
    auto out = limit_cell_averages(prob, 1e-13);
    if (out.r_hat == 0) {
      note = "perturbation failed to push averages out of bounds";
      return false;
    }
    auto stage1 = pert;
    for (int i = 0; i < n; ++i) stage1.coeff(i, 0) = out.result.x_star[i];
    err[1].push_back(l2_error(stage1, phi));

    auto [g, outcome] = apply_two_stage_limiter(pert, Bounds{-1.0, 1.0}, 1e-13);
    double e2 = l2_error(g, phi);
    err[2].push_back(e2);
    ratio_ok = ratio_ok && err[1].back() <= 2.0 * e0 + 1e-6 * e0 &&
               e2 <= 2.0 * e0 + 1e-6 * e0;
  }
  // orders over the finest three meshes: pairs (32,64) and (64,128)
  double worst_order = 100.0;
  for (auto& e : err)
    for (size_t k = 1; k + 1 < e.size(); ++k)
      worst_order = std::min(worst_order, std::log2(e[k] / e[k + 1]));
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "worst finest-three L2 order %.2f (need >= 2.8), 2x ratio %s",
                worst_order, ratio_ok ? "holds" : "violated");
  note = buf;
  return worst_order >= 2.8 && ratio_ok;
}

bool criterion9(std::string& note) {
  using namespace drlim::ch1d;
  CHConfig gl;
  gl.end_step = 500;
  auto states = ch_run(gl, random_pm1_initial(gl.n_cells, 1));
  double m0 = states[0].mass;
  int max_iter = 0, triggers = 0;
  double worst_mass = 0.0, worst_bound = 0.0;
  for (const auto& s : states) {
    max_iter = std::max(max_iter, s.dr_iterations);
    if (s.r_hat > 0) ++triggers;
    worst_mass = std::max(worst_mass, std::abs(s.mass - m0) / (1.0 + std::abs(m0)));
    worst_bound = std::max({worst_bound, s.max_avg - 1.0, -1.0 - s.min_avg});
  }
  bool gl_ok = worst_mass <= 1e-10 && worst_bound <= 0.0 && max_iter <= 20 && triggers > 0;

  CHConfig fh;
  fh.potential = Potential::FloryHuggins;
  fh.mobility = Mobility::Degenerate;
  // resolved interface: the logarithmic potential cannot tolerate the sharp
  // default eps_ch without leaving (-1, 1)
  fh.eps_ch = 1.0 / 64;
  fh.end_step = 500;
  std::vector<double> init(fh.n_cells);
  for (int i = 0; i < fh.n_cells; ++i)
    init[i] = 0.6 * std::cos(2.0 * kPi * i / fh.n_cells);
  auto fh_states = ch_run(fh, init);
  int fh_triggers = 0;
  for (const auto& s : fh_states) fh_triggers += s.r_hat > 0 ? 1 : 0;

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "GL: %d trigger steps, max DR iters %d, rel mass drift %.1e; FH triggers %d",
                triggers, max_iter, worst_mass, fh_triggers);
  note = buf;
  return gl_ok && fh_triggers == 0;
}

bool criterion10(std::string& note) {
  std::mt19937 rng(1010);
  int checked = 0;
  for (int rep = 0; rep < 60; ++rep) {
    int n = 10 + static_cast<int>(rng() % 2000);
    std::uniform_real_distribution<double> frac(0.0, 0.2);
    int r = std::max(1, static_cast<int>(frac(rng) * n));
    auto prob = planted_instance(rng, n, std::min(r, n - 1), 0.2);
    auto out = limit_cell_averages(prob, 1e-13);
    if (!out.result.converged) {
      note = "non-convergence";
      return false;
    }
    std::vector<double> geta(prob.n());
    for (int i = 0; i < prob.n(); ++i)
      geta[i] = out.result.y_final[i] - out.result.x_star[i];
    sp::FixedPointCertificate cert{out.result.x_star, geta};
    auto chk = sp::verify_fixed_point(cert, prob, out.params.c, out.params.lambda, 1e-10);
    if (!chk.pass()) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "certificate failed at rep %d (sign %d range %d fixed %d)",
                    rep, chk.sign_ok, chk.range_ok, chk.fixed_ok);
      note = buf;
      return false;
    }
    ++checked;
  }
  note = std::to_string(checked) + " converged runs certified";
  return true;
}

}  // namespace

int main() {
  struct Row {
    const char* name;
    bool (*fn)(std::string&);
  };
  const Row rows[] = {
      {"1 oracle equivalence", criterion1},
      {"2 iteration bound", criterion2},
      {"3 rate ~ 1/3 at r=1, N=1e4", criterion3},
      {"4 predicted vs measured sweep", criterion4},
      {"5 spectral closed forms", criterion5},
      {"6 parameter-rule optimality", criterion6},
      {"7 conservation and bounds", criterion7},
      {"8 accuracy non-degradation", criterion8},
      {"9 Cahn-Hilliard demo", criterion9},
      {"10 fixed-point certificate", criterion10},
  };
  int failures = 0;
  for (const auto& row : rows) {
    std::string note;
    bool ok = false;
    try {
      ok = row.fn(note);
    } catch (const std::exception& e) {
      note = std::string("exception: ") + e.what();
    }
    std::printf("%s criterion %s%s%s\n", ok ? "PASS" : "FAIL", row.name,
                note.empty() ? "" : " -- ", note.c_str());
    failures += ok ? 0 : 1;
  }
  return failures;
}
