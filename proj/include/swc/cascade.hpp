#pragma once

// Composition of per-mode subsystem ISS certificates into cascade Lyapunov
// functions V_p, their decay/gain rates, and the cross-mode jump gains
// (chi, rho).
//
// The cascade is: observer-error block e with ISS certificate V_o driving a
// controlled block x with certificate V_c.  The composed certificate is
//   V_p(x, e) = ell_p(V_o(e)) + V_c(x),   ell_p(s) = integral of nu_p,
// where nu_p is a nondecreasing function >= 4 * gamma_c / alpha_o.  The
// convention throughout: gamma_c maps V_o-VALUES to decay-rate units (it is
// the coefficient of V_o(e) in the bound on dV_c/dt), while alpha_o maps
// V_o-values to V_o-decay.  Norm-argument gains appear only in the
// sampled-loop filter design (sampled.hpp).

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swc/errors.hpp"
#include "swc/kfun.hpp"

namespace swc {

/// Scalar function of a state vector together with its gradient.
struct StateFunction {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

/// Extreme eigenvalues of the quadratic forms behind a mode's V_o / V_c,
/// when those are quadratic.  Enables the exact linear jump-gain formula.
struct QuadraticMeta {
  double lam_min_Po = 0, lam_max_Po = 0;
  double lam_min_Pc = 0, lam_max_Pc = 0;
};

/// Per-mode ISS data for the two cascade blocks:
///   dV_o/dt <= -alpha_o(V_o) + gamma_o(|d|)
///   dV_c/dt <= -alpha_c(V_c) + gamma_c(V_o(e))
/// with sandwich bounds alpha_*_lower(|.|) <= V_* <= alpha_*_upper(|.|).
struct SubsystemCertificate {
  int mode = 0;
  StateFunction V_o, V_c;
  ComparisonFunction alpha_o_lower, alpha_o_upper, alpha_o, gamma_o;
  ComparisonFunction alpha_c_lower, alpha_c_upper, alpha_c, gamma_c;
  std::optional<QuadraticMeta> quadratic;
};

/// Bounds and maps for the state resets at switching instants:
///   x+ = g_c(x, e),  e+ = g_o(e, d),
///   |g_c(x,e)| <= alpha_hat_c(|(x,e)|),  |g_o(e,d)| <= alpha_hat_o(|e|) + rho_hat_o(|d|).
struct JumpBounds {
  ComparisonFunction alpha_hat_c = ComparisonFunction::identity();
  ComparisonFunction alpha_hat_o = ComparisonFunction::identity();
  ComparisonFunction rho_hat_o = ComparisonFunction::zero();
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> g_c;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> g_o;
  bool identity = false;

  /// State carried over unchanged at switches (x+ = x, e+ = e).
  static JumpBounds identity_jumps() {
    JumpBounds jb;
    jb.identity = true;
    jb.g_c = [](const Eigen::VectorXd& x, const Eigen::VectorXd&) { return x; };
    jb.g_o = [](const Eigen::VectorXd& e, const Eigen::VectorXd&) { return e; };
    return jb;
  }
};

/// One mode's composed certificate.
struct ModeCascade {
  int mode = 0;
  ComparisonFunction nu;   // nondecreasing multiplier, >= 4 gamma_c/alpha_o
  ComparisonFunction ell;  // primitive of nu
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> V;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> grad_x;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> grad_e;
  ComparisonFunction alpha;        // decay of V along flows
  ComparisonFunction gamma;        // disturbance gain of V along flows
  ComparisonFunction theta;        // alpha_o^{-1}(2 gamma_o(.)), used by gamma
  ComparisonFunction alpha_lower;  // sandwich in |(x,e)|
  ComparisonFunction alpha_upper;
  SubsystemCertificate subsystem;  // retained for verification suites
};

/// Full cascade certificate: per-mode data plus the shared jump gains
///   V_q(x+, e+) <= chi(V_p(x,e)) + rho(|d|)  across any mode switch p -> q.
struct CascadeCertificate {
  std::vector<ModeCascade> modes;
  ComparisonFunction chi = ComparisonFunction::identity();
  ComparisonFunction rho = ComparisonFunction::zero();
  bool rho_zero = true;

  const ModeCascade& mode(int p) const {
    for (const auto& m : modes)
      if (m.mode == p) return m;
    throw ConfigError("cascade: unknown mode " + std::to_string(p));
  }
};

// ---- nu_bar -----------------------------------------------------------

/// The interconnection-to-decay ratio nu_bar(s) = gamma_c(s) / alpha_o(s),
/// the seed of the multiplier nu.  Verifies on a geometric grid toward 0
/// that the ratio stays bounded (the small-signal limit assumption): the
/// head of the grid must not dwarf the body.
inline std::function<double(double)> build_nu_bar(const SubsystemCertificate& cert) {
  auto gamma_c = cert.gamma_c;
  auto alpha_o = cert.alpha_o;
  auto ratio = [gamma_c, alpha_o](double s) {
    if (s <= 0) throw DomainError("nu_bar: argument must be positive");
    return gamma_c.eval(s) / alpha_o.eval(s);
  };
  double head_max = 0, body_max = 0;
  for (double s : log_grid(1e-8, 1.0, 160)) {
    double v = ratio(s);
    if (!std::isfinite(v))
      throw AssumptionViolation("nu_bar: nonfinite ratio at s = " + std::to_string(s));
    if (s < 0.1)
      head_max = std::max(head_max, v);
    else
      body_max = std::max(body_max, v);
  }
  if (head_max > 100.0 * (1.0 + body_max))
    throw AssumptionViolation(
        "nu_bar: gamma_c/alpha_o grows without bound toward 0 (small-signal ratio limit fails); "
        "head max " + std::to_string(head_max));
  return ratio;
}

// ---- V_p composition ---------------------------------------------------

/// Result of composing one mode's V_p = ell(V_o(e)) + V_c(x).
struct ComposedVp {
  ComparisonFunction nu, ell;
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> V;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> grad_x;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> grad_e;
};

/// Compose V_p from the certificate and the nu_bar ratio: nu is 4x the
/// running-sup majorant of nu_bar over the grid, ell its primitive, and the
/// gradient follows by the chain rule through ell' = nu.
inline ComposedVp compose_Vp(const SubsystemCertificate& cert,
                             const std::function<double(double)>& nu_bar,
                             const std::vector<double>& grid = log_grid(1e-8, 1e8, 400)) {
  ComposedVp out{nondecreasing_majorant(nu_bar, 4.0, grid),
                 ComparisonFunction::identity(), nullptr, nullptr, nullptr};
  out.ell = integral_primitive(out.nu);
  auto ell = out.ell;
  auto nu = out.nu;
  auto Vo = cert.V_o;
  auto Vc = cert.V_c;
  out.V = [ell, Vo, Vc](const Eigen::VectorXd& x, const Eigen::VectorXd& e) {
    return ell.eval(Vo.value(e)) + Vc.value(x);
  };
  out.grad_x = [Vc](const Eigen::VectorXd& x, const Eigen::VectorXd&) {
    return Eigen::VectorXd(Vc.gradient(x));
  };
  out.grad_e = [nu, Vo](const Eigen::VectorXd&, const Eigen::VectorXd& e) {
    return Eigen::VectorXd(nu.eval(Vo.value(e)) * Vo.gradient(e));
  };
  return out;
}

// ---- flow rates ---------------------------------------------------------

struct ModeRates {
  ComparisonFunction alpha, gamma, theta;
};

/// Decay and gain rates of the composed V_p:
///   alpha_p(s) = min{ alpha_c(s/2), gamma_c(ell^{-1}(s)/2) }
///   theta_p(s) = alpha_o^{-1}(2 gamma_o(s))
///   gamma_p(s) = nu(theta_p(s)) * gamma_o(s)
inline ModeRates build_rates(const SubsystemCertificate& cert, const ComparisonFunction& nu,
                             const ComparisonFunction& ell) {
  using CF = ComparisonFunction;
  ModeRates r{CF::identity(), CF::identity(), CF::identity()};
  r.alpha = CF::pointwise_min(
      {CF::composition(cert.alpha_c, CF::linear(0.5)),
       CF::composition(cert.gamma_c, CF::scalar_multiple(0.5, CF::inverse(ell)))});
  r.theta = CF::composition(CF::inverse(cert.alpha_o), CF::scalar_multiple(2.0, cert.gamma_o));
  r.gamma = CF::product({CF::composition(nu, r.theta), cert.gamma_o});
  return r;
}

// ---- sandwich bounds -----------------------------------------------------

/// Sandwich functions for V_p in the norm |(x,e)|:
///   alpha_lower_p(s) = min{ ell(alpha_o_lower(s/sqrt 2)), alpha_c_lower(s/sqrt 2) }
///   alpha_upper_p(s) = ell(alpha_o_upper(s)) + alpha_c_upper(s)
/// (The lower bound uses max{|x|, |e|} >= |(x,e)|/sqrt 2.)
inline std::pair<ComparisonFunction, ComparisonFunction> build_sandwich(
    const SubsystemCertificate& cert, const ComparisonFunction& ell) {
  using CF = ComparisonFunction;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CF lower = CF::pointwise_min(
      {CF::composition(CF::composition(ell, cert.alpha_o_lower), CF::linear(inv_sqrt2)),
       CF::composition(cert.alpha_c_lower, CF::linear(inv_sqrt2))});
  CF upper = CF::sum({CF::composition(ell, cert.alpha_o_upper), cert.alpha_c_upper});
  return {lower, upper};
}

// ---- jump gains -----------------------------------------------------------

struct JumpGains {
  ComparisonFunction chi = ComparisonFunction::identity();
  ComparisonFunction rho = ComparisonFunction::zero();
  bool rho_zero = false;
};

/// Cross-mode jump gains.  For identity jumps between modes whose V_o, V_c
/// are quadratic with linear ell (the quadratic-certificate case) the exact
/// linear gain is used:
///   chi(s) = chibar * s,  chibar = max over (p,q) of
///            max{ (c_q lmax(P_oq)) / (c_p lmin(P_op)), lmax(P_cq) / lmin(P_cp) }
/// with c_p the slope of ell_p.  Otherwise the general composition
///   chi(s) = max_{p,q} ell_q(aou_q(2 ahat_o(al_p^{-1}(s)))) + acu_q(ahat_c(al_p^{-1}(s)))
///   rho(s) = max_q ell_q(aou_q(2 rhohat_o(s)))
/// is assembled from the sandwich data.
inline JumpGains build_jump_gains(const std::vector<SubsystemCertificate>& certs,
                                  const std::vector<ModeCascade>& modes,
                                  const JumpBounds& jumps) {
  using CF = ComparisonFunction;
  if (certs.size() != modes.size() || certs.empty())
    throw ConfigError("build_jump_gains: certificate/mode count mismatch");

  bool quadratic_fast = jumps.identity;
  for (std::size_t i = 0; i < certs.size() && quadratic_fast; ++i)
    quadratic_fast = certs[i].quadratic.has_value() && modes[i].ell.kind() == FnKind::linear;

  if (quadratic_fast) {
    double chibar = 0.0;
    for (std::size_t q = 0; q < certs.size(); ++q) {
      const auto& mq = *certs[q].quadratic;
      double cq = modes[q].ell.param_a();
      for (std::size_t p = 0; p < certs.size(); ++p) {
        const auto& mp = *certs[p].quadratic;
        double cp = modes[p].ell.param_a();
        double obs_ratio = (cq * mq.lam_max_Po) / (cp * mp.lam_min_Po);
        double ctl_ratio = mq.lam_max_Pc / mp.lam_min_Pc;
        chibar = std::max(chibar, std::max(obs_ratio, ctl_ratio));
      }
    }
    if (!(chibar > 0) || !std::isfinite(chibar))
      throw IllConditioned("build_jump_gains: degenerate quadratic metadata");
    return {CF::linear(chibar), CF::zero(), true};
  }

  std::vector<CF> chi_terms;
  for (const auto& mp : modes) {
    CF radius = CF::inverse(mp.alpha_lower);  // |(x,e)| <= alpha_lower_p^{-1}(V_p)
    for (std::size_t qi = 0; qi < modes.size(); ++qi) {
      const auto& mq = modes[qi];
      const auto& cq = certs[qi];
      CF obs = CF::composition(
          CF::composition(mq.ell, cq.alpha_o_upper),
          CF::scalar_multiple(2.0, CF::composition(jumps.alpha_hat_o, radius)));
      CF ctl = CF::composition(cq.alpha_c_upper, CF::composition(jumps.alpha_hat_c, radius));
      chi_terms.push_back(CF::sum({obs, ctl}));
    }
  }
  CF chi = CF::pointwise_max(std::move(chi_terms));

  bool rho_zero = jumps.rho_hat_o.kind() == FnKind::constant && jumps.rho_hat_o.param_c() == 0.0;
  CF rho = CF::zero();
  if (!rho_zero) {
    std::vector<CF> rho_terms;
    for (std::size_t qi = 0; qi < modes.size(); ++qi)
      rho_terms.push_back(CF::composition(CF::composition(modes[qi].ell, certs[qi].alpha_o_upper),
                                          CF::scalar_multiple(2.0, jumps.rho_hat_o)));
    rho = CF::pointwise_max(std::move(rho_terms));
  }
  return {chi, rho, rho_zero};
}

// ---- orchestration ---------------------------------------------------------

/// Build the full cascade certificate from per-mode subsystem data and the
/// switch jump bounds.
inline CascadeCertificate build_cascade_certificate(
    const std::vector<SubsystemCertificate>& certs, const JumpBounds& jumps,
    const std::vector<double>& grid = log_grid(1e-8, 1e8, 400)) {
  if (certs.empty()) throw ConfigError("cascade: no modes");
  CascadeCertificate cc;
  cc.modes.reserve(certs.size());
  for (const auto& cert : certs) {
    auto nu_bar = build_nu_bar(cert);
    auto vp = compose_Vp(cert, nu_bar, grid);
    auto rates = build_rates(cert, vp.nu, vp.ell);
    auto [lower, upper] = build_sandwich(cert, vp.ell);
    ModeCascade m;
    m.mode = cert.mode;
    m.nu = vp.nu;
    m.ell = vp.ell;
    m.V = vp.V;
    m.grad_x = vp.grad_x;
    m.grad_e = vp.grad_e;
    m.alpha = rates.alpha;
    m.gamma = rates.gamma;
    m.theta = rates.theta;
    m.alpha_lower = lower;
    m.alpha_upper = upper;
    m.subsystem = cert;
    cc.modes.push_back(std::move(m));
  }
  auto gains = build_jump_gains(certs, cc.modes, jumps);
  cc.chi = gains.chi;
  cc.rho = gains.rho;
  cc.rho_zero = gains.rho_zero;
  return cc;
}

// ---- shipped worked example -------------------------------------------------

/// The scalar cascade worked example: dx/dt = -x + e, de/dt = -2e + d with
/// V_c = x^2, V_o = e^2.  Certificate data is exact:
///   alpha_o(s) = 2s, gamma_o(s) = s^2/2, alpha_c(s) = s, gamma_c(s) = s.
inline SubsystemCertificate scalar_cascade_certificate(int mode = 0) {
  using CF = ComparisonFunction;
  SubsystemCertificate c;
  c.mode = mode;
  c.V_o.value = [](const Eigen::VectorXd& e) { return e.squaredNorm(); };
  c.V_o.gradient = [](const Eigen::VectorXd& e) { return Eigen::VectorXd(2.0 * e); };
  c.V_c.value = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  c.V_c.gradient = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); };
  c.alpha_o_lower = CF::power_law(1.0, 2.0);
  c.alpha_o_upper = CF::power_law(1.0, 2.0);
  c.alpha_o = CF::linear(2.0);
  c.gamma_o = CF::power_law(0.5, 2.0);
  c.alpha_c_lower = CF::power_law(1.0, 2.0);
  c.alpha_c_upper = CF::power_law(1.0, 2.0);
  c.alpha_c = CF::linear(1.0);
  c.gamma_c = CF::linear(1.0);
  c.quadratic = QuadraticMeta{1.0, 1.0, 1.0, 1.0};
  return c;
}

/// Flow maps of the scalar cascade (for the verification suites).
struct CascadeDynamics {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> f_c;  // (x, e)
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> f_o;  // (e, d)
};

inline CascadeDynamics scalar_cascade_dynamics() {
  CascadeDynamics d;
  d.f_c = [](const Eigen::VectorXd& x, const Eigen::VectorXd& e) {
    return Eigen::VectorXd(-x + e);
  };
  d.f_o = [](const Eigen::VectorXd& e, const Eigen::VectorXd& dd) {
    return Eigen::VectorXd(-2.0 * e + dd);
  };
  return d;
}

}  // namespace swc
