#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "swc/check.hpp"

namespace {

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

/// The two linear skeleton modes used across the trajectory checks:
/// controlled blocks [[0.5,-1],[1.5,-2]] and [[0,1],[-2,-2]] driven by the
/// observer errors, error blocks with spectra {-1,-1.5} and -1 +- i.
std::vector<swc::LinearCascadeMode> skeleton_modes() {
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

swc::CascadeCertificate skeleton_cascade() {
  auto modes = skeleton_modes();
  std::vector<swc::SubsystemCertificate> subs;
  for (std::size_t p = 0; p < modes.size(); ++p) {
    swc::QuadraticCertificate qc = swc::quad_cert_rates(
        modes[p], Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2));
    subs.push_back(swc::to_subsystem_certificate(qc, static_cast<int>(p)));
  }
  return swc::build_cascade_certificate(subs, swc::JumpBounds::identity_jumps());
}

}  // namespace

TEST_CASE("gradient check accepts exact gradients and flags corrupted ones") {
  Eigen::MatrixXd P = mat2(2.0, 0.5, 0.5, 1.0);
  auto value = [P](const Eigen::VectorXd& x) { return double(x.dot(P * x)); };
  auto grad = [P](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * P * x); };
  swc::CheckReport ok = swc::grad_check(value, grad, 2, -10.0, 10.0, 200, 5);
  REQUIRE(ok.pass());
  REQUIRE(ok.samples == 200);

  auto bad = [P](const Eigen::VectorXd& x) { return Eigen::VectorXd(1.95 * P * x); };
  swc::CheckReport broken = swc::grad_check(value, bad, 2, -10.0, 10.0, 200, 5);
  REQUIRE_FALSE(broken.pass());
  REQUIRE(broken.worst_margin < 0.0);
}

TEST_CASE("scalar cascade satisfies its composed flow inequality") {
  swc::CascadeCertificate cc = swc::build_cascade_certificate(
      {swc::scalar_cascade_certificate()}, swc::JumpBounds::identity_jumps());
  std::vector<swc::CascadeDynamics> dyn{swc::scalar_cascade_dynamics()};

  swc::CheckReport rep = swc::check_flow_decay(cc, dyn, 1, 1, 1, 10000, 7);
  INFO("worst margin " << rep.worst_margin);
  REQUIRE(rep.pass());
  REQUIRE(rep.samples == 10000);

  // An overconfident decay claim is detected.
  swc::CascadeCertificate hacked = cc;
  hacked.modes[0].alpha =
      swc::ComparisonFunction::scalar_multiple(20.0, cc.modes[0].alpha);
  swc::CheckReport bad = swc::check_flow_decay(hacked, dyn, 1, 1, 1, 10000, 7);
  REQUIRE_FALSE(bad.pass());
  REQUIRE(bad.worst_margin < 0.0);
}

TEST_CASE("two-mode quadratic cascade passes flow and jump checks") {
  swc::CascadeCertificate cc = skeleton_cascade();
  auto modes = skeleton_modes();
  std::vector<swc::CascadeDynamics> dyn{swc::linear_cascade_dynamics(modes[0]),
                                        swc::linear_cascade_dynamics(modes[1])};

  swc::CheckReport flow = swc::check_flow_decay(cc, dyn, 2, 2, 2, 10000, 11);
  INFO("flow worst margin " << flow.worst_margin);
  REQUIRE(flow.pass());

  swc::CheckReport jump = swc::check_jump_growth(cc, 2, 2, 10000, 13);
  INFO("jump worst margin " << jump.worst_margin);
  REQUIRE(jump.pass());

  // Shrinking the jump gain below the true form ratio is detected.
  swc::CascadeCertificate hacked = cc;
  hacked.chi = swc::ComparisonFunction::scalar_multiple(0.4, cc.chi);
  swc::CheckReport bad = swc::check_jump_growth(hacked, 2, 2, 10000, 13);
  REQUIRE_FALSE(bad.pass());
}

TEST_CASE("rescaled certificate is monotone along a dwell-time run") {
  swc::CascadeCertificate cc = skeleton_cascade();
  auto modes = skeleton_modes();

  // Sharp per-mode linear decay of the composed certificate in the
  // quadratic case: min{a_c, 0.75 a_o}.
  std::vector<swc::ComparisonFunction> alphas;
  double a = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < modes.size(); ++p) {
    swc::QuadraticCertificate qc = swc::quad_cert_rates(
        modes[p], Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2));
    double rate = std::min(qc.a_c, 0.75 * qc.a_o);
    alphas.push_back(swc::ComparisonFunction::linear(rate));
    a = std::min(a, rate);
  }
  swc::PsiFunction psi = swc::build_psi(alphas, a);

  swc::ZetaStarResult zs0 = swc::compute_zeta_star(cc.chi, psi, 0.0);
  swc::ZetaStarResult zse = swc::compute_zeta_star(cc.chi, psi, 0.02);
  double chibar = cc.chi.param_a();
  REQUIRE_THAT(zs0.value, Catch::Matchers::WithinRel(std::log(chibar) / a, 1e-9));

  swc::ADTParams adt{1.1 * zs0.value, 2.0};
  REQUIRE(zse.value < adt.tau_a);  // nonempty window
  double zeta = 0.5 * (zse.value + adt.tau_a);
  swc::WFunction W = swc::make_cascade_W(cc, psi, zeta, zs0.value, adt, 2, 2);
  REQUIRE(W.jump_contraction() < 1.0);

  swc::HybridSystemDef sys = swc::make_switched_cascade(modes, adt);
  swc::SwitchSignal sig =
      swc::generate_adt_signal(adt, {0, 1}, 6.0 * adt.tau_a, 3, 0);
  sys.switch_schedule = sig.switches;
  REQUIRE(swc::validate_adt(sig, adt).valid);

  Eigen::VectorXd x0(2), e0(2);
  x0 << 1.0, 0.5;
  e0 << 0.5, -0.25;
  swc::SimConfig sc;
  sc.T_max = 6.0 * adt.tau_a;
  sc.dt_base = 5e-3;
  swc::HybridArc arc = swc::simulate(sys, swc::cascade_initial_state(x0, e0, adt.N0), 0, sc);
  REQUIRE(arc.count(swc::JumpKind::switch_mode) >= 3);

  swc::CheckReport rep = swc::check_W_monotone(arc, W, 1e-6);
  INFO("W worst margin " << rep.worst_margin);
  REQUIRE(rep.pass());

  double w0 = W.eval(arc.segments.front().x.front(), arc.segments.front().mode);
  double wT = W.eval(arc.segments.back().x.back(), arc.segments.back().mode);
  REQUIRE(wT < 0.5 * w0);
}

TEST_CASE("empirical ISS gain table grows with the disturbance level") {
  auto simulate_at = [](double level, std::uint64_t run_seed) {
    swc::ADTParams adt{1e6, 1.0};
    auto dist = level > 0 ? swc::make_piecewise_disturbance(1, level, 0.5, run_seed)
                          : std::function<Eigen::VectorXd(double)>();
    swc::HybridSystemDef sys =
        swc::make_switched_cascade_dyn({swc::scalar_cascade_dynamics()}, 1, 1, adt, dist, 1);
    Eigen::VectorXd x0(1), e0(1);
    x0 << 1.0;
    e0 << 1.0;
    swc::SimConfig sc;
    sc.T_max = 25.0;
    sc.dt_base = 1e-3;
    return swc::simulate(sys, swc::cascade_initial_state(x0, e0, adt.N0), 0, sc);
  };
  auto norm = [](const Eigen::VectorXd& s) { return s.head(2).norm(); };

  swc::IssGainTable table =
      swc::estimate_iss_gain(simulate_at, norm, {0.0, 0.25, 0.5, 1.0}, 2, 100);
  REQUIRE(table.rows.size() == 4);
  // Undisturbed trajectories have fully decayed in the tail window.
  REQUIRE(table.rows[0].sup_tail < 1e-6);
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    INFO("level " << table.rows[i].level << " sup " << table.rows[i].sup_tail);
    REQUIRE(table.rows[i].sup_tail > 0.0);
    REQUIRE(table.rows[i].sup_tail >= 0.9 * table.rows[i - 1].sup_tail);
  }
  // The gain stays of moderate size for this contractive cascade.
  REQUIRE(table.rows.back().sup_tail < 5.0);
}

TEST_CASE("inter-event statistics and piecewise disturbances") {
  SECTION("statistics from a hand-built arc") {
    swc::HybridArc arc;
    auto add_jump = [&arc](double t, swc::JumpKind k) {
      swc::JumpRecord jr;
      jr.t = t;
      jr.kind = k;
      arc.jumps.push_back(jr);
      arc.jump_counts[static_cast<std::size_t>(k)] += 1;
      arc.total_jumps += 1;
    };
    add_jump(1.0, swc::JumpKind::sample_y);
    add_jump(2.0, swc::JumpKind::switch_mode);
    add_jump(2.5, swc::JumpKind::sample_y);
    add_jump(3.0, swc::JumpKind::sample_y);

    swc::InterEventStats stats = swc::interevent_stats(arc, 10.0);
    REQUIRE(stats.sample_y.count == 3);
    REQUIRE_THAT(stats.sample_y.min_gap, Catch::Matchers::WithinAbs(0.5, 1e-15));
    REQUIRE_THAT(stats.sample_y.mean_gap, Catch::Matchers::WithinAbs(1.0, 1e-15));
    REQUIRE(stats.switch_mode.count == 1);
    REQUIRE(stats.switch_mode.min_gap == 10.0);  // sentinel: no gap observed
    REQUIRE(stats.sample_u.count == 0);
    REQUIRE(stats.sample_u.mean_gap == 10.0);
  }

  SECTION("piecewise disturbance is deterministic and cell-constant") {
    auto d = swc::make_piecewise_disturbance(2, 1.0, 0.5, 42);
    REQUIRE((d(0.1) - d(0.4)).norm() == 0.0);   // same hold window
    REQUIRE((d(0.1) - d(0.7)).norm() > 0.0);    // different window
    auto d2 = swc::make_piecewise_disturbance(2, 1.0, 0.5, 42);
    REQUIRE((d(1.3) - d2(1.3)).norm() == 0.0);  // same seed, same value
    REQUIRE(d(0.2).cwiseAbs().maxCoeff() <= 1.0);

    auto z = swc::make_piecewise_disturbance(2, 0.0, 0.5, 42);
    REQUIRE(z(3.0).norm() == 0.0);
  }
}
