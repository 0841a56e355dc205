#pragma once

// Hybrid-system simulation on hybrid time domains (t, j): fixed-step RK4
// flows, guard crossings located by bisection, prioritized jump maps,
// scheduled mode switches, and average-dwell-time switching signals.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "swc/errors.hpp"

namespace swc {

struct HybridTimeStamp {
  double t = 0.0;
  int j = 0;
};

enum class JumpKind { switch_mode, sample_y, sample_u, other };

inline const char* jump_kind_name(JumpKind k) {
  switch (k) {
    case JumpKind::switch_mode: return "switch";
    case JumpKind::sample_y: return "sample_y";
    case JumpKind::sample_u: return "sample_u";
    case JumpKind::other: return "other";
  }
  return "?";
}

/// One flow interval: constant jump count j and mode, states sampled on the
/// integrator's time grid (first entry is the segment start, last the end).
struct FlowSegment {
  int j = 0;
  int mode = 0;
  std::vector<double> t;
  std::vector<Eigen::VectorXd> x;
};

struct JumpRecord {
  double t = 0.0;
  int j = 0;  // jump count BEFORE the jump; after it is j+1
  JumpKind kind = JumpKind::other;
  int mode_before = 0, mode_after = 0;
  Eigen::VectorXd before, after;
};

/// A simulated trajectory on a hybrid time domain.  The jump counters are
/// always exact; with recording strides > 1 the segments and jump records
/// are a downsampled trace of the full solution.
struct HybridArc {
  std::vector<FlowSegment> segments;
  std::vector<JumpRecord> jumps;
  long total_jumps = 0;
  std::array<long, 4> jump_counts{};  // indexed by JumpKind

  double end_time() const {
    return segments.empty() ? 0.0 : segments.back().t.back();
  }
  int end_jumps() const { return static_cast<int>(total_jumps); }
  long count(JumpKind k) const { return jump_counts[static_cast<std::size_t>(k)]; }
};

/// Average dwell-time parameters: at most N0 + (t-s)/tau_a switches in any
/// window (s, t].
struct ADTParams {
  double tau_a = 1.0;
  double N0 = 1.0;
};

/// Guard with the convention "jump enabled when g >= 0".  The reset mutates
/// the state and mode in place; it may draw from the simulation RNG.
struct Guard {
  JumpKind kind = JumpKind::other;
  std::function<double(double, const Eigen::VectorXd&, int)> g;
  std::function<void(double, Eigen::VectorXd&, int&, std::mt19937_64&)> reset;
};

/// Hybrid system: a flow map per mode, prioritized guards, an optional
/// scheduled switch list (exact-time switch events), and the mode set.
struct HybridSystemDef {
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&, int)> flow;
  std::vector<Guard> guards;  // evaluated in priority order
  std::vector<int> mode_set{0};
  /// Scheduled switches (time, new mode), strictly increasing times.  Applied
  /// as exact-time events with the reset below.
  std::vector<std::pair<double, int>> switch_schedule;
  /// Reset applied at scheduled switches (receives the new mode as `mode`).
  std::function<void(double, Eigen::VectorXd&, int)> switch_reset;
};

struct SimConfig {
  double dt_base = 1e-3;
  double event_tol = 1e-9;
  std::uint64_t seed = 0;
  double T_max = 10.0;
  int J_max = 100000;
  /// Keep every k-th accepted flow sample in the stored segments (the first
  /// and last samples of a segment are always kept).  1 keeps everything.
  int segment_stride = 1;
  /// Keep every k-th jump record per sampling-jump kind; switch jumps are
  /// always recorded.  With k > 1 the stored segments run through the
  /// unrecorded jumps (their j field is the value at the segment start);
  /// the arc's jump counters stay exact.  1 keeps everything.
  int jump_stride = 1;
  /// Observer called at every accepted flow sample (full resolution,
  /// independent of the recording strides).
  std::function<void(double, const Eigen::VectorXd&, int)> flow_monitor;
  /// Observer called once per jump, after the reset, with the post-jump
  /// state and mode (never on guard probes).
  std::function<void(double, JumpKind, const Eigen::VectorXd&, int)> jump_monitor;
};

namespace detail {

inline Eigen::VectorXd rk4_step(const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&, int)>& f,
                                double t, const Eigen::VectorXd& x, int mode, double h) {
  Eigen::VectorXd k1 = f(t, x, mode);
  Eigen::VectorXd k2 = f(t + h / 2, x + (h / 2) * k1, mode);
  Eigen::VectorXd k3 = f(t + h / 2, x + (h / 2) * k2, mode);
  Eigen::VectorXd k4 = f(t + h, x + h * k3, mode);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

/// Simulate the hybrid system from (x0, mode0) until t = T_max or j = J_max.
///
/// Flows use fixed-step classical RK4 at dt_base (shortened at events and
/// horizon).  After each step, guards are checked at the endpoint; if one
/// became active the crossing is bisected until the bracket is within
/// event_tol in time AND the guard value at the accepted point is at most
/// event_tol / 2, so stored pre-jump samples sit within event_tol of the
/// flow set.  A guard whose reset would not change the state or the mode is
/// treated as inactive (prevents re-firing at the reset point).  Scheduled
/// switches are exact-time events.  Multiple jumps may occur at one time
/// instant (j increments each time); more than 64 consecutive jumps without
/// flow raises ZenoSuspected.
inline HybridArc simulate(const HybridSystemDef& sys, const Eigen::VectorXd& x0, int mode0,
                          const SimConfig& cfg) {
  if (!(cfg.dt_base > 0)) throw ConfigError("simulate: dt_base must be positive");
  if (!(cfg.event_tol > 0)) throw ConfigError("simulate: event_tol must be positive");
  if (cfg.segment_stride < 1 || cfg.jump_stride < 1)
    throw ConfigError("simulate: recording strides must be >= 1");

  std::mt19937_64 rng(cfg.seed);
  HybridArc arc;
  double t = 0.0;
  int j = 0;
  int mode = mode0;
  Eigen::VectorXd x = x0;
  std::size_t next_switch = 0;
  while (next_switch < sys.switch_schedule.size() &&
         sys.switch_schedule[next_switch].first <= 0.0)
    ++next_switch;  // schedule entries at t <= 0 are ignored

  auto reset_changes = [&](const Guard& gd, double tt, const Eigen::VectorXd& xx, int mm) {
    Eigen::VectorXd xc = xx;
    int mc = mm;
    std::mt19937_64 probe = rng;  // do not consume randomness on probes
    gd.reset(tt, xc, mc, probe);
    return mc != mm || (xc - xx).norm() > 1e-14 * (1.0 + xx.norm());
  };

  auto active_guard = [&](double tt, const Eigen::VectorXd& xx, int mm) -> const Guard* {
    for (const auto& gd : sys.guards)
      if (gd.g(tt, xx, mm) >= 0.0 && reset_changes(gd, tt, xx, mm)) return &gd;
    return nullptr;
  };

  // Largest guard value among enabled (active and state-changing) guards;
  // -infinity when none is enabled.
  auto active_margin = [&](double tt, const Eigen::VectorXd& xx, int mm) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& gd : sys.guards) {
      double gv = gd.g(tt, xx, mm);
      if (gv >= 0.0 && gv > worst && reset_changes(gd, tt, xx, mm)) worst = gv;
    }
    return worst;
  };

  FlowSegment seg;
  int pts_since_record = 0;
  bool pending = false;
  double pend_t = 0.0;
  Eigen::VectorXd pend_x;

  // Accept the current (t, x) as a flow sample: notify the monitor and store
  // it subject to the segment stride (unstored samples stay pending so the
  // segment's last sample is always flushed on close).
  auto accept_point = [&](bool force) {
    if (cfg.flow_monitor) cfg.flow_monitor(t, x, mode);
    ++pts_since_record;
    if (force || pts_since_record >= cfg.segment_stride) {
      seg.t.push_back(t);
      seg.x.push_back(x);
      pts_since_record = 0;
      pending = false;
    } else {
      pend_t = t;
      pend_x = x;
      pending = true;
    }
  };

  auto close_segment = [&]() {
    if (pending) {
      seg.t.push_back(pend_t);
      seg.x.push_back(pend_x);
      pending = false;
    }
    arc.segments.push_back(std::move(seg));
    seg = FlowSegment{};
  };
  auto open_segment = [&]() {
    seg.j = j;
    seg.mode = mode;
    seg.t.clear();
    seg.x.clear();
    pts_since_record = 0;
    pending = false;
    accept_point(true);
  };

  // Performs the jump bookkeeping; returns whether a record was stored (the
  // caller closes/reopens the segment only around stored records).
  auto apply_jump = [&](const JumpKind kind, auto&& do_reset) {
    const auto ki = static_cast<std::size_t>(kind);
    const bool record = kind == JumpKind::switch_mode || cfg.jump_stride == 1 ||
                        arc.jump_counts[ki] % cfg.jump_stride == 0;
    if (record) {
      JumpRecord rec;
      rec.t = t;
      rec.j = j;
      rec.kind = kind;
      rec.mode_before = mode;
      rec.before = x;
      do_reset();
      rec.mode_after = mode;
      rec.after = x;
      arc.jumps.push_back(std::move(rec));
    } else {
      do_reset();
    }
    ++arc.jump_counts[ki];
    ++arc.total_jumps;
    ++j;
    if (cfg.jump_monitor) cfg.jump_monitor(t, kind, x, mode);
    return record;
  };

  auto fire_scheduled_switch = [&]() {
    int new_mode = sys.switch_schedule[next_switch].second;
    apply_jump(JumpKind::switch_mode, [&] {
      if (sys.switch_reset) sys.switch_reset(t, x, new_mode);
      mode = new_mode;
    });
    ++next_switch;
    close_segment();
    open_segment();
  };

  int consecutive_jumps = 0;  // jumps since the last positive-duration flow
  double last_flow_span = std::numeric_limits<double>::infinity();
  open_segment();

  while (t < cfg.T_max && j < cfg.J_max) {
    // Fire any chain of enabled jumps at the current instant.
    while (j < cfg.J_max) {
      if (const Guard* gd = active_guard(t, x, mode)) {
        if (apply_jump(gd->kind, [&] { gd->reset(t, x, mode, rng); })) {
          close_segment();
          open_segment();
        } else {
          accept_point(false);  // post-jump sample continues the segment
        }
        if (++consecutive_jumps > 64)
          throw ZenoSuspected("simulate: more than 64 jumps without flow at t = " +
                              std::to_string(t));
        continue;
      }
      break;
    }
    if (j >= cfg.J_max) break;

    // Advance one flow step, stopping at the horizon and scheduled switches.
    double t_stop = std::min(cfg.T_max, t + cfg.dt_base);
    bool at_schedule = false;
    if (next_switch < sys.switch_schedule.size()) {
      double ts = sys.switch_schedule[next_switch].first;
      if (ts <= t_stop) {
        t_stop = ts;
        at_schedule = true;
      }
    }
    double h = t_stop - t;
    if (h <= 0.0) {
      if (at_schedule) {
        fire_scheduled_switch();  // scheduled switch exactly now
        if (++consecutive_jumps > 64)
          throw ZenoSuspected("simulate: more than 64 jumps without flow at t = " +
                              std::to_string(t));
        continue;
      }
      break;  // t reached T_max
    }

    Eigen::VectorXd x_next = detail::rk4_step(sys.flow, t, x, mode, h);
    if (!x_next.allFinite())
      throw StepFailure("simulate: nonfinite state at t = " + std::to_string(t + h));

    // Did a guard become active during the step?
    double g_end = active_margin(t + h, x_next, mode);

    if (g_end < 0.0) {
      t = t_stop;  // exact stop time (schedule entries and the horizon)
      x = x_next;
      accept_point(false);
      last_flow_span = t - seg.t.front();
      consecutive_jumps = 0;
      if (at_schedule) {
        fire_scheduled_switch();
        last_flow_span = 0.0;
      }
      continue;
    }

    // Bisect the earliest activation among all guards on (t, t+h]: the
    // accepted point must bracket the crossing within event_tol in time and
    // overshoot the guard surface by at most event_tol / 2 in value.
    double lo = 0.0, hi = h, g_hi = g_end;
    Eigen::VectorXd x_hi = x_next;
    for (int it = 0;
         it < 300 && (hi - lo > cfg.event_tol || g_hi > 0.5 * cfg.event_tol); ++it) {
      double mid = 0.5 * (lo + hi);
      if (!(mid > lo && mid < hi)) break;  // bracket at floating-point resolution
      Eigen::VectorXd x_mid = detail::rk4_step(sys.flow, t, x, mode, mid);
      double g_mid = active_margin(t + mid, x_mid, mode);
      if (g_mid >= 0.0) {
        hi = mid;
        x_hi = std::move(x_mid);
        g_hi = g_mid;
      } else {
        lo = mid;
      }
    }
    t = t + hi;
    x = x_hi;
    accept_point(false);
    last_flow_span = t - seg.t.front();
    if (hi > cfg.event_tol) consecutive_jumps = 0;
    // The jump itself fires at the top of the loop (guard is active at x).
  }

  close_segment();
  if (j >= cfg.J_max && last_flow_span < 10.0 * cfg.event_tol)
    throw ZenoSuspected("simulate: jump budget exhausted with vanishing flow spans (t = " +
                        std::to_string(t) + ")");
  return arc;
}

// ---- ADT switching signals -------------------------------------------------

/// A switching signal: initial mode plus (switch time, new mode) events.
struct SwitchSignal {
  int initial_mode = 0;
  std::vector<std::pair<double, int>> switches;
};

/// Generate a random switching signal satisfying the ADT constraint by
/// construction, via the timer realization: the timer starts at N0, refills
/// at rate 1/tau_a up to N0, and each switch consumes one unit, permitted
/// only while the timer is >= 1.  Switch times are jittered uniformly;
/// successor modes are drawn uniformly from the other modes.  Deterministic
/// under the seed.
inline SwitchSignal generate_adt_signal(const ADTParams& params, const std::vector<int>& mode_set,
                                        double T, std::uint64_t seed, int initial_mode = -1) {
  if (mode_set.size() < 2)
    throw ConfigError("generate_adt_signal: need at least two modes");
  if (!(params.tau_a > 0) || params.N0 < 1)
    throw ConfigError("generate_adt_signal: need tau_a > 0 and N0 >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  SwitchSignal sig;
  sig.initial_mode = initial_mode >= 0 ? initial_mode : mode_set.front();
  int mode = sig.initial_mode;
  double t = 0.0, tau = params.N0;
  while (true) {
    double t_ok = tau >= 1.0 ? t : t + (1.0 - tau) * params.tau_a;
    double t_next = t_ok + unif(rng) * params.tau_a * 0.5;
    if (t_next > T) break;
    tau = std::min(params.N0, tau + (t_next - t) / params.tau_a) - 1.0;
    t = t_next;
    // Draw the successor uniformly among the other modes.
    std::vector<int> others;
    for (int m : mode_set)
      if (m != mode) others.push_back(m);
    mode = others[static_cast<std::size_t>(unif(rng) * static_cast<double>(others.size())) %
                  others.size()];
    sig.switches.emplace_back(t, mode);
  }
  return sig;
}

/// Result of the ADT window check.
struct ADTValidation {
  bool valid = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_s = 0.0, worst_t = 0.0;  // tightest window
  int worst_count = 0;
};

/// Check N_sigma(t, s) <= N0 + (t-s)/tau_a over every window; it suffices to
/// check windows whose endpoints are switch times (s just before switch i,
/// t at switch k >= i), where the count is extremal.
inline ADTValidation validate_adt(const SwitchSignal& sig, const ADTParams& params,
                                  double tol = 1e-9) {
  ADTValidation out;
  const auto& sw = sig.switches;
  for (std::size_t i = 0; i < sw.size(); ++i) {
    for (std::size_t k = i; k < sw.size(); ++k) {
      double span = sw[k].first - sw[i].first;
      int count = static_cast<int>(k - i + 1);
      double margin = params.N0 + span / params.tau_a - count;
      if (margin < out.worst_margin) {
        out.worst_margin = margin;
        out.worst_s = sw[i].first;
        out.worst_t = sw[k].first;
        out.worst_count = count;
      }
    }
  }
  out.valid = out.worst_margin >= -tol;
  return out;
}

}  // namespace swc
