#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "swc/hybrid.hpp"

namespace {

Eigen::VectorXd vec1(double v) {
  Eigen::VectorXd x(1);
  x << v;
  return x;
}

swc::HybridSystemDef pure_flow(std::function<double(double, double)> rhs) {
  swc::HybridSystemDef sys;
  sys.flow = [rhs](double t, const Eigen::VectorXd& x, int) { return vec1(rhs(t, x(0))); };
  return sys;
}

}  // namespace

TEST_CASE("integrator reproduces exp decay at fourth order") {
  auto sys = pure_flow([](double, double x) { return -x; });
  auto run = [&](double dt) {
    swc::SimConfig cfg;
    cfg.dt_base = dt;
    cfg.T_max = 1.0;
    auto arc = swc::simulate(sys, vec1(1.0), 0, cfg);
    return std::abs(arc.segments.back().x.back()(0) - std::exp(-1.0));
  };
  double e1 = run(0.02), e2 = run(0.01);
  double order = std::log2(e1 / e2);
  REQUIRE(order > 3.9);
  REQUIRE(e2 < 1e-9);
}

TEST_CASE("guard crossing is located to the event tolerance") {
  // x' = -x from 1; jump when x <= 0.5 (g = 0.5 - x), reset to 1.
  auto sys = pure_flow([](double, double x) { return -x; });
  swc::Guard g;
  g.kind = swc::JumpKind::other;
  g.g = [](double, const Eigen::VectorXd& x, int) { return 0.5 - x(0); };
  g.reset = [](double, Eigen::VectorXd& x, int&, std::mt19937_64&) { x(0) = 1.0; };
  sys.guards.push_back(g);

  swc::SimConfig cfg;
  cfg.dt_base = 1e-3;
  cfg.T_max = 3.0;
  auto arc = swc::simulate(sys, vec1(1.0), 0, cfg);

  const double ln2 = std::log(2.0);
  REQUIRE(arc.jumps.size() >= 4);
  for (std::size_t k = 0; k < 4; ++k) {
    REQUIRE(arc.jumps[k].t == Catch::Approx((k + 1) * ln2).margin(1e-7));
    REQUIRE(arc.jumps[k].before(0) == Catch::Approx(0.5).margin(1e-7));
    REQUIRE(arc.jumps[k].after(0) == 1.0);
    REQUIRE(arc.jumps[k].j == static_cast<int>(k));
  }
}

TEST_CASE("guards fire in priority order") {
  auto sys = pure_flow([](double, double) { return 1.0; });
  swc::Guard a, b;
  a.kind = swc::JumpKind::sample_y;
  a.g = [](double, const Eigen::VectorXd& x, int) { return x(0) - 1.0; };
  a.reset = [](double, Eigen::VectorXd& x, int&, std::mt19937_64&) { x(0) -= 0.7; };
  b.kind = swc::JumpKind::sample_u;
  b.g = [](double, const Eigen::VectorXd& x, int) { return x(0) - 1.0; };
  b.reset = [](double, Eigen::VectorXd& x, int&, std::mt19937_64&) { x(0) -= 0.9; };
  sys.guards = {a, b};

  swc::SimConfig cfg;
  cfg.dt_base = 1e-3;
  cfg.T_max = 2.5;
  auto arc = swc::simulate(sys, vec1(0.0), 0, cfg);
  REQUIRE(arc.jumps.size() >= 2);
  for (const auto& j : arc.jumps) REQUIRE(j.kind == swc::JumpKind::sample_y);
}

TEST_CASE("scheduled switches happen at exact times and preserve the state") {
  auto sys = pure_flow([](double, double x) { return -x; });
  sys.flow = [](double, const Eigen::VectorXd& x, int mode) {
    return vec1(-static_cast<double>(mode + 1) * x(0));
  };
  sys.mode_set = {0, 1};
  sys.switch_schedule = {{0.75, 1}, {1.5, 0}};

  swc::SimConfig cfg;
  cfg.dt_base = 1e-2;
  cfg.T_max = 2.0;
  auto arc = swc::simulate(sys, vec1(1.0), 0, cfg);

  REQUIRE(arc.jumps.size() == 2);
  REQUIRE(arc.jumps[0].t == 0.75);
  REQUIRE(arc.jumps[0].kind == swc::JumpKind::switch_mode);
  REQUIRE(arc.jumps[0].mode_before == 0);
  REQUIRE(arc.jumps[0].mode_after == 1);
  REQUIRE((arc.jumps[0].before - arc.jumps[0].after).norm() == 0.0);
  REQUIRE(arc.jumps[1].t == 1.5);

  // Piecewise-exponential reference: e^{-0.75} then e^{-2 * 0.75}.
  double x_ref = std::exp(-0.75) * std::exp(-2.0 * 0.75) * std::exp(-0.5);
  REQUIRE(arc.segments.back().x.back()(0) == Catch::Approx(x_ref).epsilon(1e-7));

  // Segment bookkeeping: mode constant per segment, j increments at jumps.
  REQUIRE(arc.segments.front().mode == 0);
  REQUIRE(arc.segments.back().mode == 0);
  REQUIRE(arc.segments.back().j == 2);
}

TEST_CASE("simulation is bitwise deterministic under a fixed seed") {
  swc::HybridSystemDef sys;
  sys.flow = [](double, const Eigen::VectorXd& x, int mode) {
    return vec1(-static_cast<double>(mode + 1) * x(0));
  };
  sys.mode_set = {0, 1, 2};
  swc::Guard g;
  g.kind = swc::JumpKind::switch_mode;
  g.g = [](double, const Eigen::VectorXd& x, int) { return 0.5 - x(0); };
  g.reset = [](double, Eigen::VectorXd& x, int& mode, std::mt19937_64& rng) {
    x(0) = 1.0;
    std::uniform_int_distribution<int> pick(0, 1);
    int other = pick(rng);
    mode = (mode + 1 + other) % 3;
  };
  sys.guards.push_back(g);

  swc::SimConfig cfg;
  cfg.dt_base = 1e-3;
  cfg.T_max = 8.0;
  cfg.seed = 99;

  auto a = swc::simulate(sys, vec1(1.0), 0, cfg);
  auto b = swc::simulate(sys, vec1(1.0), 0, cfg);
  REQUIRE(a.jumps.size() == b.jumps.size());
  REQUIRE(a.jumps.size() >= 3);
  for (std::size_t k = 0; k < a.jumps.size(); ++k) {
    REQUIRE(a.jumps[k].t == b.jumps[k].t);
    REQUIRE(a.jumps[k].mode_after == b.jumps[k].mode_after);
  }
  REQUIRE((a.segments.back().x.back() - b.segments.back().x.back()).norm() == 0.0);

  auto alt = cfg;
  alt.seed = 100;
  auto c = swc::simulate(sys, vec1(1.0), 0, alt);
  bool same_modes = a.jumps.size() == c.jumps.size();
  if (same_modes)
    for (std::size_t k = 0; k < a.jumps.size(); ++k)
      same_modes = same_modes && a.jumps[k].mode_after == c.jumps[k].mode_after;
  REQUIRE_FALSE(same_modes);
}

TEST_CASE("immediate re-enabled guard raises ZenoSuspected") {
  auto sys = pure_flow([](double, double) { return 1.0; });
  swc::Guard g;
  g.g = [](double, const Eigen::VectorXd&, int) { return 1.0; };  // always active
  g.reset = [](double, Eigen::VectorXd& x, int&, std::mt19937_64&) { x(0) += 1.0; };
  sys.guards.push_back(g);
  swc::SimConfig cfg;
  cfg.dt_base = 1e-2;
  cfg.T_max = 1.0;
  REQUIRE_THROWS_AS(swc::simulate(sys, vec1(0.0), 0, cfg), swc::ZenoSuspected);
}

TEST_CASE("a guard whose reset is a no-op never fires") {
  auto sys = pure_flow([](double, double x) { return -x; });
  swc::Guard g;
  g.g = [](double, const Eigen::VectorXd&, int) { return 1.0; };
  g.reset = [](double, Eigen::VectorXd&, int&, std::mt19937_64&) {};
  sys.guards.push_back(g);
  swc::SimConfig cfg;
  cfg.dt_base = 1e-2;
  cfg.T_max = 0.5;
  auto arc = swc::simulate(sys, vec1(1.0), 0, cfg);
  REQUIRE(arc.jumps.empty());
}

TEST_CASE("finite-time blowup raises StepFailure") {
  auto sys = pure_flow([](double, double x) { return x * x; });
  swc::SimConfig cfg;
  cfg.dt_base = 1e-3;
  cfg.T_max = 1.0;
  REQUIRE_THROWS_AS(swc::simulate(sys, vec1(10.0), 0, cfg), swc::StepFailure);
}

TEST_CASE("generated switching signals satisfy the ADT bound for 100 seeds") {
  swc::ADTParams params{0.5, 3.0};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto sig = swc::generate_adt_signal(params, {1, 2}, 20.0, seed);
    REQUIRE_FALSE(sig.switches.empty());
    int prev = sig.initial_mode;
    double t_prev = 0.0;
    for (const auto& [t, m] : sig.switches) {
      REQUIRE(m != prev);
      REQUIRE(t > t_prev);
      prev = m;
      t_prev = t;
    }
    auto v = swc::validate_adt(sig, params);
    REQUIRE(v.valid);
    REQUIRE(v.worst_margin >= -1e-9);
  }
}

TEST_CASE("generated signals are deterministic under the seed") {
  swc::ADTParams params{0.7, 2.0};
  auto a = swc::generate_adt_signal(params, {0, 1, 2}, 15.0, 42);
  auto b = swc::generate_adt_signal(params, {0, 1, 2}, 15.0, 42);
  REQUIRE(a.switches == b.switches);
}

TEST_CASE("a hand-built violator fails validation") {
  swc::SwitchSignal sig;
  sig.initial_mode = 0;
  sig.switches = {{0.1, 1}, {0.2, 0}, {0.3, 1}, {0.4, 0}};
  swc::ADTParams params{1.0, 1.0};
  auto v = swc::validate_adt(sig, params);
  REQUIRE_FALSE(v.valid);
  REQUIRE(v.worst_margin == Catch::Approx(1.0 + 0.3 - 4.0).epsilon(1e-12));
  REQUIRE(v.worst_count == 4);
}

TEST_CASE("generate_adt_signal validates its inputs") {
  REQUIRE_THROWS_AS(swc::generate_adt_signal({1.0, 1.0}, {0}, 10.0, 0), swc::ConfigError);
  REQUIRE_THROWS_AS(swc::generate_adt_signal({0.0, 1.0}, {0, 1}, 10.0, 0), swc::ConfigError);
  REQUIRE_THROWS_AS(swc::generate_adt_signal({1.0, 0.5}, {0, 1}, 10.0, 0), swc::ConfigError);
}
