#pragma once

// Certificate verification utilities: sampled flow-decay and jump-growth
// checks for cascade certificates, monotonicity of the rescaled certificate
// along simulated arcs, empirical ISS gain tables, inter-event statistics,
// gradient validation, and assembly helpers for switched cascade systems.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "swc/adt.hpp"
#include "swc/cascade.hpp"
#include "swc/errors.hpp"
#include "swc/hybrid.hpp"
#include "swc/kfun.hpp"
#include "swc/linear.hpp"

namespace swc {

/// Outcome of a sampled inequality check.  Margins are relative to the
/// bound; the check passes when no sample dips below -tol.
struct CheckReport {
  std::string name;
  long samples = 0;
  long violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  Eigen::VectorXd worst_witness;
  int worst_mode = 0;
  double tol = 0.0;

  bool pass() const { return violations == 0; }

  void record(double margin, const Eigen::VectorXd& witness, int mode) {
    ++samples;
    if (margin < -tol) ++violations;
    if (margin < worst_margin) {
      worst_margin = margin;
      worst_witness = witness;
      worst_mode = mode;
    }
  }
};

namespace detail {

/// Direction uniform on the unit inf-norm sphere, radius log-uniform in
/// [1e-5, 10]: exercises both the small-signal and saturation regimes.
inline Eigen::VectorXd log_radial(std::mt19937_64& rng, int dim) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> uexp(-5.0, 1.0);
  Eigen::VectorXd v(dim);
  double m = 0.0;
  do {
    for (int i = 0; i < dim; ++i) v(i) = unif(rng);
    m = v.cwiseAbs().maxCoeff();
  } while (m == 0.0);
  return v * (std::pow(10.0, uexp(rng)) / m);
}

}  // namespace detail

/// Sampled verification of the per-mode flow inequality
///   d/dt V_p(x, e) <= -alpha_p(V_p) + gamma_p(|d|)
/// with d/dt V_p = grad_x . f_c(x, e) + grad_e . f_o(e, d).  dynamics[i]
/// pairs with cascade.modes[i].  Every fourth sample uses d = 0.
inline CheckReport check_flow_decay(const CascadeCertificate& cascade,
                                    const std::vector<CascadeDynamics>& dynamics, int n_x,
                                    int n_e, int n_d, long samples = 10000,
                                    std::uint64_t seed = 0, double tol = 1e-9) {
  if (dynamics.size() != cascade.modes.size())
    throw ConfigError("check_flow_decay: one dynamics entry per mode required");
  CheckReport rep;
  rep.name = "flow-decay";
  rep.tol = tol;
  std::mt19937_64 rng(seed);
  const std::size_t m = cascade.modes.size();
  for (long k = 0; k < samples; ++k) {
    const std::size_t i = static_cast<std::size_t>(k) % m;
    const auto& mc = cascade.modes[i];
    const auto& dyn = dynamics[i];
    Eigen::VectorXd x = detail::log_radial(rng, n_x);
    Eigen::VectorXd e = detail::log_radial(rng, n_e);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n_d);
    if (k % 4 != 0) d = detail::log_radial(rng, n_d);

    double v = mc.V(x, e);
    double lhs = mc.grad_x(x, e).dot(dyn.f_c(x, e)) + mc.grad_e(x, e).dot(dyn.f_o(e, d));
    double rhs = -mc.alpha.eval(v) + mc.gamma.eval(d.norm());
    double margin = (rhs - lhs) / (1.0 + std::abs(rhs));
    Eigen::VectorXd witness(n_x + n_e + n_d);
    witness << x, e, d;
    rep.record(margin, witness, mc.mode);
  }
  return rep;
}

/// Sampled verification of the switch-jump growth bound
///   V_q(x, e) <= chi(V_p(x, e))
/// over every ordered mode pair (p, q), including p = q, for identity jumps.
inline CheckReport check_jump_growth(const CascadeCertificate& cascade, int n_x, int n_e,
                                     long samples = 10000, std::uint64_t seed = 0,
                                     double tol = 1e-9) {
  CheckReport rep;
  rep.name = "jump-growth";
  rep.tol = tol;
  std::mt19937_64 rng(seed);
  const std::size_t m = cascade.modes.size();
  for (long k = 0; k < samples; ++k) {
    const std::size_t p = static_cast<std::size_t>(k) % m;
    const std::size_t q = static_cast<std::size_t>(k / m) % m;
    Eigen::VectorXd x = detail::log_radial(rng, n_x);
    Eigen::VectorXd e = detail::log_radial(rng, n_e);
    double vp = cascade.modes[p].V(x, e);
    double vq = cascade.modes[q].V(x, e);
    double bound = cascade.chi.eval(vp);
    double margin = (bound - vq) / (1.0 + std::abs(bound));
    Eigen::VectorXd witness(n_x + n_e);
    witness << x, e;
    rep.record(margin, witness, static_cast<int>(q));
  }
  return rep;
}

/// Verify monotonicity of the rescaled certificate W along a simulated arc:
/// nonincreasing across consecutive flow samples; contracted by
/// W.jump_contraction() across recorded switch jumps; unchanged (up to tol)
/// across recorded sampling jumps.  Run the simulation with recording
/// strides of 1 so every jump is visible.
inline CheckReport check_W_monotone(const HybridArc& arc, const WFunction& W,
                                    double tol = 1e-6) {
  CheckReport rep;
  rep.name = "W-monotone";
  rep.tol = tol;
  for (const auto& seg : arc.segments) {
    for (std::size_t i = 0; i + 1 < seg.x.size(); ++i) {
      double w0 = W.eval(seg.x[i], seg.mode);
      double w1 = W.eval(seg.x[i + 1], seg.mode);
      double bound = w0 + tol * (1.0 + w0);
      rep.record((bound - w1) / (1.0 + std::abs(bound)), seg.x[i + 1], seg.mode);
    }
  }
  const double contraction = W.jump_contraction();
  for (const auto& jr : arc.jumps) {
    double wb = W.eval(jr.before, jr.mode_before);
    double wa = W.eval(jr.after, jr.mode_after);
    if (jr.kind == JumpKind::switch_mode) {
      double bound = contraction * wb + tol * (1.0 + wb);
      rep.record((bound - wa) / (1.0 + std::abs(bound)), jr.after, jr.mode_after);
    } else {
      double slack = tol * (1.0 + wb);
      rep.record((slack - std::abs(wa - wb)) / (1.0 + slack), jr.after, jr.mode_after);
    }
  }
  return rep;
}

// ---- empirical ISS gain ------------------------------------------------------

struct IssGainRow {
  double level = 0.0;
  double sup_tail = 0.0;  // max over runs of the tail supremum of the norm
};

struct IssGainTable {
  std::vector<IssGainRow> rows;
};

/// Empirical ISS gain estimate: for each disturbance level, simulate `runs`
/// seeded trajectories and record the supremum of state_norm over the last
/// 20% (by time) of each arc; the row keeps the worst run.
inline IssGainTable estimate_iss_gain(
    const std::function<HybridArc(double, std::uint64_t)>& simulate_at,
    const std::function<double(const Eigen::VectorXd&)>& state_norm,
    const std::vector<double>& levels, int runs = 3, std::uint64_t seed = 0) {
  if (runs < 1) throw ConfigError("estimate_iss_gain: runs must be >= 1");
  IssGainTable table;
  for (double level : levels) {
    IssGainRow row;
    row.level = level;
    for (int r = 0; r < runs; ++r) {
      HybridArc arc = simulate_at(level, seed + static_cast<std::uint64_t>(r));
      if (arc.segments.empty()) throw ConstructionError("estimate_iss_gain: empty arc");
      double t0 = arc.segments.front().t.front();
      double t_cut = t0 + 0.8 * (arc.end_time() - t0);
      double sup = 0.0;
      for (const auto& seg : arc.segments)
        for (std::size_t i = 0; i < seg.t.size(); ++i)
          if (seg.t[i] >= t_cut) sup = std::max(sup, state_norm(seg.x[i]));
      row.sup_tail = std::max(row.sup_tail, sup);
    }
    table.rows.push_back(row);
  }
  return table;
}

// ---- inter-event statistics ---------------------------------------------------

/// Gap statistics per jump kind, computed from the recorded jump records
/// (exact only when the arc was simulated with jump_stride = 1; counts are
/// always exact).  Kinds with fewer than two records report the sentinel
/// `horizon` as their gap.
struct InterEventStats {
  struct Channel {
    long count = 0;
    long recorded = 0;
    double min_gap = 0.0;
    double mean_gap = 0.0;
  };
  Channel switch_mode, sample_y, sample_u, other;

  const Channel& of(JumpKind k) const {
    switch (k) {
      case JumpKind::switch_mode: return switch_mode;
      case JumpKind::sample_y: return sample_y;
      case JumpKind::sample_u: return sample_u;
      default: return other;
    }
  }
};

inline InterEventStats interevent_stats(const HybridArc& arc, double horizon) {
  InterEventStats stats;
  auto chan = [&stats](JumpKind k) -> InterEventStats::Channel& {
    switch (k) {
      case JumpKind::switch_mode: return stats.switch_mode;
      case JumpKind::sample_y: return stats.sample_y;
      case JumpKind::sample_u: return stats.sample_u;
      default: return stats.other;
    }
  };
  std::array<double, 4> last{};
  std::array<bool, 4> seen{};
  std::array<double, 4> min_gap;
  min_gap.fill(std::numeric_limits<double>::infinity());
  std::array<double, 4> sum_gap{};
  std::array<long, 4> n_gap{};
  for (const auto& jr : arc.jumps) {
    auto k = static_cast<std::size_t>(jr.kind);
    chan(jr.kind).recorded += 1;
    if (seen[k]) {
      double gap = jr.t - last[k];
      min_gap[k] = std::min(min_gap[k], gap);
      sum_gap[k] += gap;
      ++n_gap[k];
    }
    seen[k] = true;
    last[k] = jr.t;
  }
  for (JumpKind k : {JumpKind::switch_mode, JumpKind::sample_y, JumpKind::sample_u,
                     JumpKind::other}) {
    auto i = static_cast<std::size_t>(k);
    auto& c = chan(k);
    c.count = arc.count(k);
    c.min_gap = n_gap[i] > 0 ? min_gap[i] : horizon;
    c.mean_gap = n_gap[i] > 0 ? sum_gap[i] / static_cast<double>(n_gap[i]) : horizon;
  }
  return stats;
}

// ---- gradient validation -------------------------------------------------------

/// Compare an analytic gradient against central differences at random points
/// in [lo, hi]^dim; relative tolerance tol (default 1e-5).
inline CheckReport grad_check(const std::function<double(const Eigen::VectorXd&)>& value,
                              const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                              int dim, double lo = -10.0, double hi = 10.0, long samples = 200,
                              std::uint64_t seed = 0, double tol = 1e-5) {
  CheckReport rep;
  rep.name = "grad-check";
  rep.tol = 0.0;  // the recorded margin is already tolerance-shifted
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(lo, hi);
  for (long k = 0; k < samples; ++k) {
    Eigen::VectorXd x(dim);
    for (int i = 0; i < dim; ++i) x(i) = unif(rng);
    Eigen::VectorXd g = grad(x);
    double worst = 0.0;
    for (int i = 0; i < dim; ++i) {
      // Wide enough that roundoff in large function values stays far below
      // the tolerance; composed certificates reach ~1e6 on this box.
      double h = 1e-4 * (1.0 + std::abs(x(i)));
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      double fd = (value(xp) - value(xm)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - g(i)) / (1.0 + std::abs(g(i))));
    }
    rep.record(tol - worst, x, 0);
  }
  return rep;
}

// ---- switched cascade assembly --------------------------------------------------

/// Piecewise-constant disturbance: uniform in [-level, level]^dim on each
/// window of length hold_dt, deterministic in (seed, t) so repeated
/// evaluation inside an integrator step is consistent.
inline std::function<Eigen::VectorXd(double)> make_piecewise_disturbance(int dim, double level,
                                                                         double hold_dt,
                                                                         std::uint64_t seed) {
  if (dim < 1 || !(hold_dt > 0))
    throw ConfigError("make_piecewise_disturbance: need dim >= 1 and hold_dt > 0");
  return [dim, level, hold_dt, seed](double t) {
    auto cell = static_cast<std::uint64_t>(std::floor(std::max(t, 0.0) / hold_dt));
    std::mt19937_64 rng(seed ^ (cell * 0x9E3779B97F4A7C15ULL + 0x2545F4914F6CDD1DULL));
    std::uniform_real_distribution<double> unif(-level, level);
    Eigen::VectorXd d(dim);
    for (int i = 0; i < dim; ++i) d(i) = unif(rng);
    return d;
  };
}

inline CascadeDynamics linear_cascade_dynamics(const LinearCascadeMode& mode) {
  CascadeDynamics dyn;
  dyn.f_c = [A = mode.A, B = mode.B](const Eigen::VectorXd& x, const Eigen::VectorXd& e) {
    return Eigen::VectorXd(A * x + B * e);
  };
  dyn.f_o = [F = mode.F, G = mode.G](const Eigen::VectorXd& e, const Eigen::VectorXd& d) {
    if (d.size() == 0) return Eigen::VectorXd(F * e);
    return Eigen::VectorXd(F * e + G * d);
  };
  return dyn;
}

/// Switched cascade as a hybrid system with state [x; e; tau]: per-mode
/// cascade dynamics, an optional disturbance signal feeding the driving
/// block, and the saturating ADT timer (switches consume one unit and leave
/// (x, e) unchanged).  Attach a switch schedule before simulating.
inline HybridSystemDef make_switched_cascade_dyn(
    const std::vector<CascadeDynamics>& dynamics, int n_x, int n_e, const ADTParams& adt,
    std::function<Eigen::VectorXd(double)> disturbance = nullptr, int n_d = 0) {
  if (dynamics.empty()) throw ConfigError("make_switched_cascade_dyn: no modes");
  if (n_x < 1 || n_e < 1) throw ConfigError("make_switched_cascade_dyn: bad dimensions");
  if (!(adt.tau_a > 0)) throw ConfigError("make_switched_cascade_dyn: tau_a must be positive");
  HybridSystemDef sys;
  sys.mode_set.clear();
  for (std::size_t p = 0; p < dynamics.size(); ++p) sys.mode_set.push_back(static_cast<int>(p));
  const std::size_t m = dynamics.size();
  sys.flow = [dynamics, n_x, n_e, n_d, adt, disturbance, m](double t, const Eigen::VectorXd& s,
                                                            int p) {
    if (p < 0 || static_cast<std::size_t>(p) >= m)
      throw ConfigError("switched cascade: unknown mode " + std::to_string(p));
    const auto& dyn = dynamics[static_cast<std::size_t>(p)];
    Eigen::VectorXd d =
        disturbance ? disturbance(t) : Eigen::VectorXd::Zero(std::max(n_d, 0));
    Eigen::VectorXd ds(n_x + n_e + 1);
    ds.segment(0, n_x) = dyn.f_c(s.segment(0, n_x), s.segment(n_x, n_e));
    ds.segment(n_x, n_e) = dyn.f_o(s.segment(n_x, n_e), d);
    ds(n_x + n_e) = s(n_x + n_e) >= adt.N0 ? 0.0 : 1.0 / adt.tau_a;
    return ds;
  };
  sys.switch_reset = [n_x, n_e](double, Eigen::VectorXd& s, int) {
    s(n_x + n_e) = std::max(0.0, s(n_x + n_e) - 1.0);
  };
  return sys;
}

inline HybridSystemDef make_switched_cascade(const std::vector<LinearCascadeMode>& modes,
                                             const ADTParams& adt,
                                             std::function<Eigen::VectorXd(double)> disturbance =
                                                 nullptr) {
  if (modes.empty()) throw ConfigError("make_switched_cascade: no modes");
  const int n_x = static_cast<int>(modes.front().A.rows());
  const int n_e = static_cast<int>(modes.front().F.rows());
  const int n_d = static_cast<int>(modes.front().G.cols());
  std::vector<CascadeDynamics> dynamics;
  for (const auto& mode : modes) {
    if (mode.A.rows() != n_x || mode.F.rows() != n_e)
      throw ConfigError("make_switched_cascade: modes must share dimensions");
    dynamics.push_back(linear_cascade_dynamics(mode));
  }
  return make_switched_cascade_dyn(dynamics, n_x, n_e, adt, std::move(disturbance), n_d);
}

/// Initial state [x0; e0; tau0] for a switched cascade.
inline Eigen::VectorXd cascade_initial_state(const Eigen::VectorXd& x0,
                                             const Eigen::VectorXd& e0, double tau0) {
  Eigen::VectorXd s(x0.size() + e0.size() + 1);
  s << x0, e0, tau0;
  return s;
}

/// Rescaled certificate W(state, mode) = exp(2 c0 zeta tau) phi(V_p(x, e))
/// for the switched-cascade state layout [x; e; tau].  Pass the zero-margin
/// threshold as zeta_star (it drives the jump contraction) and pick zeta
/// above the positive-margin threshold.
inline WFunction make_cascade_W(const CascadeCertificate& cascade, const PsiFunction& psi,
                                double zeta, double zeta_star, const ADTParams& adt, int n_x,
                                int n_e, double lambda = 1.0) {
  auto arg = [cascade, n_x, n_e](const Eigen::VectorXd& s,
                                 int mode) -> std::pair<double, double> {
    double v = cascade.mode(mode).V(s.segment(0, n_x), s.segment(n_x, n_e));
    return {v, s(n_x + n_e)};
  };
  return make_W(zeta, psi.c0, zeta_star, adt.tau_a, lambda, build_phi(psi), arg);
}

}  // namespace swc
