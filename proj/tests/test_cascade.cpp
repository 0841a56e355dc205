#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "swc/cascade.hpp"

using swc::ComparisonFunction;
using CF = ComparisonFunction;

namespace {

Eigen::VectorXd vec1(double v) {
  Eigen::VectorXd x(1);
  x << v;
  return x;
}

}  // namespace

TEST_CASE("nu_bar of the scalar cascade is the constant 1/2") {
  auto cert = swc::scalar_cascade_certificate();
  auto nu_bar = swc::build_nu_bar(cert);
  for (double s : {1e-7, 1e-3, 1.0, 42.0, 1e6}) {
    REQUIRE(nu_bar(s) == Catch::Approx(0.5).epsilon(1e-14));
  }
  REQUIRE_THROWS_AS(nu_bar(0.0), swc::DomainError);
}

TEST_CASE("nu_bar rejects ratios unbounded near zero") {
  auto cert = swc::scalar_cascade_certificate();
  // gamma_c(s) = s against alpha_o(s) = s^2: ratio 1/s blows up at 0.
  cert.gamma_c = CF::linear(1.0);
  cert.alpha_o = CF::power_law(1.0, 2.0);
  REQUIRE_THROWS_AS(swc::build_nu_bar(cert), swc::AssumptionViolation);

  // The transpose arrangement (ratio s) is fine.
  cert.gamma_c = CF::power_law(1.0, 2.0);
  cert.alpha_o = CF::linear(1.0);
  REQUIRE_NOTHROW(swc::build_nu_bar(cert));
}

TEST_CASE("composed V for the scalar cascade is 2 e^2 + x^2") {
  auto cert = swc::scalar_cascade_certificate();
  auto vp = swc::compose_Vp(cert, swc::build_nu_bar(cert));

  // nu collapses to the constant 4 * 1/2 = 2, so ell(s) = 2s.
  REQUIRE(vp.nu.eval(0.3) == Catch::Approx(2.0).epsilon(1e-14));
  REQUIRE(vp.nu.eval(250.0) == Catch::Approx(2.0).epsilon(1e-14));
  REQUIRE(vp.ell.eval(3.0) == Catch::Approx(6.0).epsilon(1e-13));

  Eigen::VectorXd x = vec1(1.0), e = vec1(1.0);
  REQUIRE(vp.V(x, e) == Catch::Approx(3.0).epsilon(1e-13));

  SECTION("analytic gradient (2, 4) matches central differences") {
    REQUIRE(vp.grad_x(x, e)(0) == Catch::Approx(2.0).epsilon(1e-12));
    REQUIRE(vp.grad_e(x, e)(0) == Catch::Approx(4.0).epsilon(1e-12));

    const double h = 1e-6;
    double dx = (vp.V(vec1(1.0 + h), e) - vp.V(vec1(1.0 - h), e)) / (2 * h);
    double de = (vp.V(x, vec1(1.0 + h)) - vp.V(x, vec1(1.0 - h))) / (2 * h);
    REQUIRE(vp.grad_x(x, e)(0) == Catch::Approx(dx).epsilon(1e-5));
    REQUIRE(vp.grad_e(x, e)(0) == Catch::Approx(de).epsilon(1e-5));
  }
}

TEST_CASE("flow rates of the scalar cascade: theta = s^2/2, gamma = s^2, alpha = s/4") {
  auto cert = swc::scalar_cascade_certificate();
  auto vp = swc::compose_Vp(cert, swc::build_nu_bar(cert));
  auto rates = swc::build_rates(cert, vp.nu, vp.ell);
  for (double s : {0.01, 0.5, 1.0, 7.0, 300.0}) {
    REQUIRE(rates.theta.eval(s) == Catch::Approx(s * s / 2.0).epsilon(1e-10));
    REQUIRE(rates.gamma.eval(s) == Catch::Approx(s * s).epsilon(1e-10));
    REQUIRE(rates.alpha.eval(s) == Catch::Approx(s / 4.0).epsilon(1e-10));
  }
}

TEST_CASE("scalar cascade satisfies its own flow-decay inequality at a spot check") {
  auto cert = swc::scalar_cascade_certificate();
  auto vp = swc::compose_Vp(cert, swc::build_nu_bar(cert));
  auto rates = swc::build_rates(cert, vp.nu, vp.ell);
  auto dyn = swc::scalar_cascade_dynamics();

  Eigen::VectorXd x = vec1(1.0), e = vec1(1.0), d = vec1(0.0);
  double dV = vp.grad_x(x, e).dot(dyn.f_c(x, e)) + vp.grad_e(x, e).dot(dyn.f_o(e, d));
  REQUIRE(dV == Catch::Approx(-8.0).epsilon(1e-12));
  REQUIRE(dV <= -rates.alpha.eval(vp.V(x, e)) + 1e-12);
}

TEST_CASE("sandwich bounds of the scalar cascade") {
  auto cert = swc::scalar_cascade_certificate();
  auto vp = swc::compose_Vp(cert, swc::build_nu_bar(cert));
  auto [lower, upper] = swc::build_sandwich(cert, vp.ell);
  for (double s : {0.1, 1.0, 5.0}) {
    // lower = min{ 2 (s/sqrt2)^2, (s/sqrt2)^2 } = s^2/2; upper = 2 s^2 + s^2.
    REQUIRE(lower.eval(s) == Catch::Approx(s * s / 2.0).epsilon(1e-12));
    REQUIRE(upper.eval(s) == Catch::Approx(3.0 * s * s).epsilon(1e-12));
  }
}

TEST_CASE("single-mode identity jumps give chi(s) = s via the quadratic fast path") {
  auto cert = swc::scalar_cascade_certificate();
  auto cc = swc::build_cascade_certificate({cert}, swc::JumpBounds::identity_jumps());
  REQUIRE(cc.modes.size() == 1);
  REQUIRE(cc.rho_zero);
  REQUIRE(cc.chi.kind() == swc::FnKind::linear);
  for (double s : {0.2, 1.0, 11.0}) REQUIRE(cc.chi.eval(s) == Catch::Approx(s).epsilon(1e-13));
  REQUIRE(cc.rho.eval(3.0) == 0.0);
}

TEST_CASE("generic jump-gain path dominates the quadratic fast path") {
  auto fast_cert = swc::scalar_cascade_certificate();
  auto generic_cert = swc::scalar_cascade_certificate();
  generic_cert.quadratic.reset();  // force the composed construction

  auto fast = swc::build_cascade_certificate({fast_cert}, swc::JumpBounds::identity_jumps());
  auto gen = swc::build_cascade_certificate({generic_cert}, swc::JumpBounds::identity_jumps());

  // Hand composition for this data: radius(s) = sqrt(2 s), chi(s) =
  // ell((2 radius)^2) + radius^2 = 2*(8s) + 2s = 18 s.
  for (double s : {0.5, 1.0, 20.0}) {
    REQUIRE(gen.chi.eval(s) == Catch::Approx(18.0 * s).epsilon(1e-9));
    REQUIRE(gen.chi.eval(s) >= fast.chi.eval(s));
  }
  REQUIRE(gen.rho_zero);
}

TEST_CASE("nonzero disturbance reset bound produces a nonzero rho") {
  auto cert = swc::scalar_cascade_certificate();
  cert.quadratic.reset();
  auto jumps = swc::JumpBounds::identity_jumps();
  jumps.identity = false;
  jumps.rho_hat_o = CF::linear(1.0);
  auto cc = swc::build_cascade_certificate({cert}, jumps);
  REQUIRE_FALSE(cc.rho_zero);
  // rho(s) = ell(alpha_o_upper(2 s)) = 2 * 4 s^2 = 8 s^2.
  REQUIRE(cc.rho.eval(1.5) == Catch::Approx(8.0 * 1.5 * 1.5).epsilon(1e-10));
}

TEST_CASE("cascade certificate mode lookup") {
  auto cert = swc::scalar_cascade_certificate(3);
  auto cc = swc::build_cascade_certificate({cert}, swc::JumpBounds::identity_jumps());
  REQUIRE(cc.mode(3).mode == 3);
  REQUIRE_THROWS_AS(cc.mode(0), swc::ConfigError);
}
