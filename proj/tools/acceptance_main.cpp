// Acceptance suite: one self-contained check per shipped guarantee, printed
// as a single PASS/FAIL line each.  Exits nonzero if any check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "swc/adt.hpp"
#include "swc/cascade.hpp"
#include "swc/check.hpp"
#include "swc/hybrid.hpp"
#include "swc/kfun.hpp"
#include "swc/linear.hpp"
#include "swc/sampled.hpp"

namespace {

int g_failures = 0;

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void line(bool ok, const std::string& name, const std::string& detail) {
  if (!ok) ++g_failures;
  std::printf("%s: %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.empty() ? "" : " - ",
              detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

std::vector<swc::LinearCascadeMode> two_mode_system() {
  swc::LinearCascadeMode m1, m2;
  m1.A = mat2(0.5, -1.0, 1.5, -2.0);
  m1.B = mat2(0.0, 0.0, 1.5, -2.5);
  m1.F = mat2(-3.0, -1.0, 3.0, 0.5);
  m1.G = Eigen::MatrixXd::Identity(2, 2);
  m2.A = mat2(0.0, 1.0, -2.0, -2.0);
  m2.B = mat2(0.0, 0.0, 2.0, 2.0);
  m2.F = mat2(-2.0, 1.0, -2.0, 0.0);
  m2.G = Eigen::MatrixXd::Identity(2, 2);
  return {m1, m2};
}

struct TwoModeSetup {
  swc::CascadeCertificate cc;
  std::vector<swc::CascadeDynamics> dyn;
  swc::PsiFunction psi;
  double a = 0.0;
};

TwoModeSetup build_two_mode() {
  TwoModeSetup s;
  auto modes = two_mode_system();
  std::vector<swc::SubsystemCertificate> subs;
  std::vector<swc::ComparisonFunction> alphas;
  s.a = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < modes.size(); ++p) {
    swc::QuadraticCertificate qc = swc::quad_cert_rates(
        modes[p], Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2));
    subs.push_back(swc::to_subsystem_certificate(qc, static_cast<int>(p)));
    s.dyn.push_back(swc::linear_cascade_dynamics(modes[p]));
    double rate = std::min(qc.a_c, 0.75 * qc.a_o);
    alphas.push_back(swc::ComparisonFunction::linear(rate));
    s.a = std::min(s.a, rate);
  }
  s.cc = swc::build_cascade_certificate(subs, swc::JumpBounds::identity_jumps());
  s.psi = swc::build_psi(alphas, s.a);
  return s;
}

// 1. Numeric zeta* against the linear-case closed form.
void check_zeta_star_closed_form() {
  Timer timer;
  double worst = 0.0;
  for (double a : {0.5, 1.0, 2.0})
    for (double mu : {1.5, 2.0, 10.0})
      for (double eps : {0.01, 0.1, 0.5}) {
        swc::PsiFunction psi = swc::build_psi({swc::ComparisonFunction::linear(a)}, a);
        double numeric =
            swc::compute_zeta_star(swc::ComparisonFunction::linear(mu), psi, eps,
                                   /*use_closed_form=*/false)
                .value;
        double exact = std::log((1.0 + eps) * mu) / a;
        worst = std::max(worst, std::abs(numeric - exact));
      }
  double secs = timer.seconds();
  line(worst <= 1e-6 && secs < 5.0, "supremum bound matches the linear closed form",
       fmt("27 parameter triples, worst abs error %.3g, %.2f s", worst, secs));
}

// 2. The rescaling map is exactly quadratic for a linear decay envelope.
void check_phi_closed_form() {
  double worst = 0.0;
  for (double a : {0.5, 2.0}) {
    swc::PsiFunction psi = swc::build_psi({swc::ComparisonFunction::linear(a)}, a);
    swc::PhiFunction phi = swc::build_phi(psi);
    for (double s : swc::log_grid(1e-6, 1e6, 100))
      worst = std::max(worst, std::abs(phi(s) - s * s) / (s * s));
  }
  line(worst <= 1e-8, "rescaling map is quadratic for linear decay",
       fmt("100-point log grid, worst rel error %.3g", worst));
}

// 3. Lyapunov solver residuals on the shipped matrices and random stable ones.
void check_lyapunov_residuals() {
  auto residual = [](const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
    Eigen::MatrixXd P = swc::solve_lyapunov(A, Q);
    return (A.transpose() * P + P * A + Q).norm() / Q.norm();
  };
  double worst = 0.0;
  auto modes = two_mode_system();
  for (const auto& m : modes) {
    worst = std::max(worst, residual(m.A, Eigen::MatrixXd::Identity(2, 2)));
    worst = std::max(worst, residual(m.F, Eigen::MatrixXd::Identity(2, 2)));
  }
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_int_distribution<int> dims(2, 8);
  for (int k = 0; k < 100; ++k) {
    int n = dims(rng);
    Eigen::MatrixXd R(n, n), S(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        R(i, j) = unif(rng);
        S(i, j) = unif(rng);
      }
    double shift = R.eigenvalues().real().maxCoeff() + 0.5;
    Eigen::MatrixXd A = R - shift * Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd Q =
        S * S.transpose() + Eigen::MatrixXd::Identity(n, n);  // SPD right-hand side
    worst = std::max(worst, residual(A, Q));
  }
  line(worst <= 1e-10, "Lyapunov solve residuals",
       fmt("4 shipped + 100 random stable matrices (n <= 8), worst rel residual %.3g", worst));
}

// 4. Flow-decay and jump-growth inequalities at random samples.
void check_inequality_suites() {
  Timer timer;
  swc::CascadeCertificate scalar = swc::build_cascade_certificate(
      {swc::scalar_cascade_certificate()}, swc::JumpBounds::identity_jumps());
  swc::CheckReport sf = swc::check_flow_decay(scalar, {swc::scalar_cascade_dynamics()}, 1, 1, 1,
                                              10000, 101, 1e-9);
  swc::CheckReport sj = swc::check_jump_growth(scalar, 1, 1, 10000, 103, 1e-9);

  TwoModeSetup two = build_two_mode();
  swc::CheckReport qf = swc::check_flow_decay(two.cc, two.dyn, 2, 2, 2, 10000, 105, 1e-9);
  swc::CheckReport qj = swc::check_jump_growth(two.cc, 2, 2, 10000, 107, 1e-9);

  double secs = timer.seconds();
  long violations = sf.violations + sj.violations + qf.violations + qj.violations;
  double worst = std::min(std::min(sf.worst_margin, sj.worst_margin),
                          std::min(qf.worst_margin, qj.worst_margin));
  line(violations == 0 && secs < 10.0, "flow and jump inequality suites",
       fmt("4 x 10000 samples, 0 tolerance breaches expected, worst margin %.3g, %.2f s", worst,
           secs));
}

// 5. The rescaled certificate decreases along a dwell-time-constrained run.
void check_W_along_switched_run() {
  Timer timer;
  TwoModeSetup two = build_two_mode();
  double chibar = two.cc.chi.param_a();
  swc::ADTParams adt{1.1 * std::log(chibar) / two.a, 2.0};
  double zs0 = swc::compute_zeta_star(two.cc.chi, two.psi, 0.0).value;
  double zse = swc::compute_zeta_star(two.cc.chi, two.psi, 0.02).value;
  double zeta = 0.5 * (zse + adt.tau_a);
  swc::WFunction W = swc::make_cascade_W(two.cc, two.psi, zeta, zs0, adt, 2, 2);

  const double T = 25.0 * adt.tau_a;
  swc::SwitchSignal sig = swc::generate_adt_signal(adt, {0, 1}, T, 2026, 0);
  auto modes = two_mode_system();
  swc::HybridSystemDef sys = swc::make_switched_cascade(modes, adt);
  sys.switch_schedule = sig.switches;

  Eigen::VectorXd x0(2), e0(2);
  x0 << 1.0, 0.5;
  e0 << 0.5, -0.25;
  swc::SimConfig sc;
  sc.dt_base = 2e-3;
  sc.T_max = T;
  sc.segment_stride = 8;
  swc::HybridArc arc =
      swc::simulate(sys, swc::cascade_initial_state(x0, e0, adt.N0), 0, sc);
  long switches = arc.count(swc::JumpKind::switch_mode);
  swc::CheckReport rep = swc::check_W_monotone(arc, W, 1e-6);
  double secs = timer.seconds();
  line(rep.pass() && switches >= 20 && secs < 30.0,
       "rescaled certificate monotone over a switched run",
       fmt("%.0f switches, %.0f violations, %.2f s", double(switches), double(rep.violations),
           secs));
}

// 6. The event-triggered observer-loop demonstration at shipped defaults.
void check_observer_demonstration() {
  Timer timer;
  swc::ObserverRunOptions opt;  // shipped defaults: epsilon 0.2, horizon 20.1 tau_a
  swc::ObserverRunReport rep = swc::run_observer_example(opt);
  double secs = timer.seconds();

  bool decay = rep.terminal_norm <= 1e-2 * rep.initial_norm;
  bool membership = rep.worst_flow_margin_y <= opt.event_tol + 1e-18 &&
                    rep.worst_flow_margin_u <= opt.event_tol + 1e-18;
  bool gaps = rep.min_gap_y > 0.0 && rep.min_gap_u > 0.0;
  bool design = rep.demo.design.all_pass;
  line(decay && membership && gaps && design && rep.adt_check.valid && secs < 60.0,
       "observer-loop demonstration",
       fmt("output decay ratio %.3g, worst membership margin %.3g, min gap %.3g",
           rep.decay_ratio(), std::max(rep.worst_flow_margin_y, rep.worst_flow_margin_u),
           std::min(rep.min_gap_y, rep.min_gap_u)) +
           fmt(", %.2f s", secs));
}

// 7. Dwell-time signal generation round-trips through validation.
void check_adt_round_trip() {
  int valid = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    swc::ADTParams adt{0.8, 2.0};
    swc::SwitchSignal sig = swc::generate_adt_signal(adt, {0, 1, 2}, 50.0, seed, 0);
    if (swc::validate_adt(sig, adt).valid) ++valid;
  }
  swc::SwitchSignal violator;
  violator.initial_mode = 0;
  violator.switches = {{1.0, 1}, {1.01, 0}, {1.02, 1}};  // 3 switches in 0.02 time units
  bool violator_caught = !swc::validate_adt(violator, swc::ADTParams{1.0, 1.0}).valid;
  line(valid == 100 && violator_caught, "dwell-time signal round trip",
       fmt("%.0f/100 generated signals valid, ", double(valid)) +
           (violator_caught ? "hand-built violator rejected" : "violator NOT rejected"));
}

// 8. Gradient consistency and integrator order.
void check_numerical_hygiene() {
  // Composed certificate gradients, scalar and quadratic cases.
  swc::CascadeCertificate scalar = swc::build_cascade_certificate(
      {swc::scalar_cascade_certificate()}, swc::JumpBounds::identity_jumps());
  TwoModeSetup two = build_two_mode();
  double worst_grad = std::numeric_limits<double>::infinity();
  bool grads_ok = true;
  auto test_mode = [&](const swc::ModeCascade& mc, int n_x, int n_e) {
    auto value = [&](const Eigen::VectorXd& v) {
      return mc.V(v.segment(0, n_x), v.segment(n_x, n_e));
    };
    auto grad = [&](const Eigen::VectorXd& v) {
      Eigen::VectorXd g(n_x + n_e);
      g.segment(0, n_x) = mc.grad_x(v.segment(0, n_x), v.segment(n_x, n_e));
      g.segment(n_x, n_e) = mc.grad_e(v.segment(0, n_x), v.segment(n_x, n_e));
      return g;
    };
    swc::CheckReport rep = swc::grad_check(value, grad, n_x + n_e, -10.0, 10.0, 200, 11, 1e-5);
    grads_ok = grads_ok && rep.pass();
    worst_grad = std::min(worst_grad, rep.worst_margin);
  };
  test_mode(scalar.modes[0], 1, 1);
  for (const auto& mc : two.cc.modes) test_mode(mc, 2, 2);

  // Exponential-flow convergence: halving the step divides the end-point
  // error by ~16 for a 4th-order integrator.
  auto end_error = [](double dt) {
    swc::HybridSystemDef sys;
    sys.flow = [](double, const Eigen::VectorXd& x, int) { return Eigen::VectorXd(-x); };
    swc::SimConfig sc;
    sc.dt_base = dt;
    sc.T_max = 1.0;
    Eigen::VectorXd x0 = Eigen::VectorXd::Ones(1);
    swc::HybridArc arc = swc::simulate(sys, x0, 0, sc);
    return std::abs(arc.segments.back().x.back()(0) - std::exp(-1.0));
  };
  double e1 = end_error(0.1), e2 = end_error(0.05);
  double ratio = e1 / e2;
  bool order_ok = ratio >= 12.0 && ratio <= 20.0;
  line(grads_ok && order_ok, "gradient consistency and integrator order",
       fmt("worst gradient margin %.3g, step-halving error ratio %.1f", worst_grad, ratio));
}

}  // namespace

int main() {
  check_zeta_star_closed_form();
  check_phi_closed_form();
  check_lyapunov_residuals();
  check_inequality_suites();
  check_W_along_switched_run();
  check_observer_demonstration();
  check_adt_round_trip();
  check_numerical_hygiene();
  if (g_failures > 0) {
    std::printf("%d acceptance check(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all acceptance checks passed\n");
  return 0;
}
