#pragma once

// Average dwell-time machinery: the common decay function psi, the
// integrating factor phi, the dwell-time threshold zeta* (a supremum of
// integrals of 1/psi between s and chi(s)), and the hybrid Lyapunov
// function W(state) = exp(2 c0 zeta tau) phi(V [+ eta]).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swc/errors.hpp"
#include "swc/kfun.hpp"

namespace swc {

/// One piece of a piecewise power law: f(s) = a * s^k on [s_lo, s_hi).
struct PowerSegment {
  double s_lo, s_hi, a, k;
};

namespace detail {

// Try to view f as a single power law a*s^k (linear counts as k=1),
// unwrapping scalar multiples.
inline bool as_power_law(const ComparisonFunction& f, double& a, double& k) {
  switch (f.kind()) {
    case FnKind::power_law:
      a = f.param_a();
      k = f.param_k();
      return true;
    case FnKind::linear:
      a = f.param_a();
      k = 1.0;
      return true;
    case FnKind::scalar_multiple: {
      double ia, ik;
      if (!as_power_law(f.children()[0], ia, ik)) return false;
      a = f.param_c() * ia;
      k = ik;
      return true;
    }
    default:
      return false;
  }
}

// Exact lower envelope of a family of power laws over (0, inf), as ordered
// segments.  In log-log coordinates the candidates are lines, so between
// consecutive pairwise-crossing abscissae a single candidate is minimal.
inline std::vector<PowerSegment> power_law_envelope(const std::vector<std::pair<double, double>>& laws) {
  std::vector<double> breaks;
  for (std::size_t i = 0; i < laws.size(); ++i)
    for (std::size_t j = i + 1; j < laws.size(); ++j) {
      auto [ai, ki] = laws[i];
      auto [aj, kj] = laws[j];
      if (ki == kj) continue;
      double u = (std::log(aj) - std::log(ai)) / (ki - kj);  // crossing in ln s
      if (std::isfinite(u)) breaks.push_back(std::exp(u));
    }
  breaks.push_back(1e-300);
  breaks.push_back(1e300);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  auto value = [&laws](std::size_t i, double s) {
    return laws[i].first * std::pow(s, laws[i].second);
  };
  std::vector<PowerSegment> segs;
  for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
    double mid = std::sqrt(breaks[b]) * std::sqrt(breaks[b + 1]);  // geometric midpoint
    std::size_t best = 0;
    for (std::size_t i = 1; i < laws.size(); ++i)
      if (value(i, mid) < value(best, mid)) best = i;
    if (!segs.empty() && segs.back().a == laws[best].first && segs.back().k == laws[best].second) {
      segs.back().s_hi = breaks[b + 1];
    } else {
      segs.push_back({breaks[b], breaks[b + 1], laws[best].first, laws[best].second});
    }
  }
  segs.front().s_lo = 0.0;
  segs.back().s_hi = std::numeric_limits<double>::infinity();
  return segs;
}

}  // namespace detail

/// The common flow-decay function psi with its rate constant c0, satisfying
/// psi(s) <= min{c0 s, alpha_p(s)} for every mode.  When every alpha is a
/// power law the exact piecewise-power envelope is retained for closed-form
/// integration downstream.
struct PsiFunction {
  ComparisonFunction psi = ComparisonFunction::identity();
  double c0 = 1.0;
  std::optional<std::vector<PowerSegment>> segments;
};

/// psi = pointwise min of {c0 s} and the per-mode decay functions.
inline PsiFunction build_psi(const std::vector<ComparisonFunction>& alphas, double c0) {
  if (!(c0 > 0) || !std::isfinite(c0)) throw ConstructionError("build_psi: c0 must be positive");
  if (alphas.empty()) throw ConstructionError("build_psi: no decay functions");
  for (const auto& a : alphas)
    if (!a.is_class_k())
      throw ConstructionError("build_psi: every decay function must be strictly increasing from 0");
  std::vector<ComparisonFunction> terms{ComparisonFunction::linear(c0)};
  terms.insert(terms.end(), alphas.begin(), alphas.end());

  PsiFunction out;
  out.c0 = c0;
  out.psi = ComparisonFunction::pointwise_min(terms);

  std::vector<std::pair<double, double>> laws{{c0, 1.0}};
  bool all_power = true;
  for (const auto& a : alphas) {
    double pa, pk;
    if (detail::as_power_law(a, pa, pk))
      laws.emplace_back(pa, pk);
    else
      all_power = false;
  }
  if (all_power) out.segments = detail::power_law_envelope(laws);
  return out;
}

namespace detail {

// Continuous antiderivative F of coef/psi with F(1) = 0, for a
// piecewise-power psi.  Per segment: coef/(a r^k) integrates to
// (coef/a) ln r   (k = 1)   or   (coef/a) r^(1-k)/(1-k)   (k != 1).
class SegmentedIntegral {
 public:
  SegmentedIntegral(const std::vector<PowerSegment>& segs, double coef) : segs_(segs), coef_(coef) {
    offsets_.assign(segs_.size(), 0.0);
    std::size_t i0 = locate(1.0);
    // Fix F = primitive + offset per segment, F(1) = 0, continuous at joints.
    offsets_[i0] = -primitive(i0, 1.0);
    for (std::size_t i = i0 + 1; i < segs_.size(); ++i)
      offsets_[i] = offsets_[i - 1] + primitive(i - 1, segs_[i].s_lo) - primitive(i, segs_[i].s_lo);
    for (std::size_t i = i0; i-- > 0;)
      offsets_[i] = offsets_[i + 1] + primitive(i + 1, segs_[i].s_hi) - primitive(i, segs_[i].s_hi);
  }

  /// F(r); r must be positive.  May be -inf in the limit r -> 0.
  double eval(double r) const {
    std::size_t i = locate(r);
    return primitive(i, r) + offsets_[i];
  }

 private:
  std::size_t locate(double r) const {
    for (std::size_t i = 0; i < segs_.size(); ++i)
      if (r < segs_[i].s_hi) return i;
    return segs_.size() - 1;
  }
  double primitive(std::size_t i, double r) const {
    double a = segs_[i].a, k = segs_[i].k;
    if (k == 1.0) return (coef_ / a) * std::log(r);
    return (coef_ / a) * std::pow(r, 1.0 - k) / (1.0 - k);
  }
  std::vector<PowerSegment> segs_;
  double coef_;
  std::vector<double> offsets_;
};

// Generic antiderivative of coef/psi via adaptive quadrature in u = ln r
// (integrand coef * r / psi(r), bounded near 0 whenever psi >~ c r), cached
// at log-grid nodes.
class QuadIntegral {
 public:
  QuadIntegral(ComparisonFunction psi, double coef) : psi_(std::move(psi)), coef_(coef) {
    nodes_ = log_grid(1e-10, 1e10, 801);
    cum_.assign(nodes_.size(), 0.0);
    std::size_t i1 = nodes_.size() / 2;  // node nearest 1
    for (std::size_t i = i1 + 1; i < nodes_.size(); ++i)
      cum_[i] = cum_[i - 1] + piece(nodes_[i - 1], nodes_[i]);
    for (std::size_t i = i1; i-- > 0;)
      cum_[i] = cum_[i + 1] - piece(nodes_[i], nodes_[i + 1]);
    double f1 = eval(1.0);  // re-anchor so the antiderivative vanishes at 1
    for (double& c : cum_) c -= f1;
  }

  double eval(double r) const {
    if (r < nodes_.front()) return cum_.front() - piece(r, nodes_.front());
    if (r > nodes_.back()) return cum_.back() + piece(nodes_.back(), r);
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r);
    std::size_t hi = static_cast<std::size_t>(it - nodes_.begin());
    std::size_t lo = hi == 0 ? 0 : hi - 1;
    return cum_[lo] + piece(nodes_[lo], r);
  }

 private:
  double piece(double r0, double r1) const {
    if (r0 == r1) return 0.0;
    auto f = [this](double u) {
      double r = std::exp(u);
      return coef_ * r / psi_.eval(r);
    };
    double u0 = std::log(r0), u1 = std::log(r1);
    // Relative tolerance: the integrand spans many orders of magnitude
    // across the cache, so scale by a crude midpoint estimate.
    double scale = std::abs(f(0.5 * (u0 + u1))) * (u1 - u0);
    return integrate(f, u0, u1, 1e-12 * (1.0 + scale));
  }
  ComparisonFunction psi_;
  double coef_;
  std::vector<double> nodes_;
  std::vector<double> cum_;
};

// Antiderivative of coef/psi: segmented when psi is piecewise power,
// quadrature otherwise.
class PsiAntiderivative {
 public:
  PsiAntiderivative(const PsiFunction& psi, double coef) {
    if (psi.segments)
      seg_.emplace(*psi.segments, coef);
    else
      quad_ = std::make_shared<QuadIntegral>(psi.psi, coef);
  }
  double eval(double r) const { return seg_ ? seg_->eval(r) : quad_->eval(r); }

 private:
  std::optional<SegmentedIntegral> seg_;
  std::shared_ptr<QuadIntegral> quad_;
};

}  // namespace detail

/// The integrating factor phi(s) = exp(integral_1^s 2 c0 / psi), extended
/// by phi(0) = 0.  Exact for piecewise-power psi (for psi = c0 s this is
/// s^2); quadrature-backed otherwise.
class PhiFunction {
 public:
  PhiFunction() = default;
  explicit PhiFunction(const PsiFunction& psi)
      : anti_(std::make_shared<detail::PsiAntiderivative>(psi, 2.0 * psi.c0)) {}

  double operator()(double s) const {
    if (!anti_) throw ConfigError("phi: not built");
    if (std::isnan(s) || s < 0) throw DomainError("phi: argument must be nonnegative");
    if (s == 0.0) return 0.0;
    return std::exp(anti_->eval(s));
  }

 private:
  std::shared_ptr<detail::PsiAntiderivative> anti_;
};

inline PhiFunction build_phi(const PsiFunction& psi) { return PhiFunction(psi); }

/// Result of the dwell-time threshold computation.
struct ZetaStarResult {
  double value = 0.0;
  double argmax_s = 0.0;
};

/// zeta* = sup over s >= 0 of integral from s to (1+epsilon) chi(s) of
/// dr/psi(r).  Pass epsilon = 0 for the sampled-data variant.  The search
/// runs 400 log-spaced seeds on [1e-8, 1e8], refines the best seed by
/// golden section, and extends each boundary three times (x10) to detect a
/// divergent objective, reported as DivergentBound.  With use_closed_form,
/// the exact value (1/a) ln((1+eps) mu) is returned when chi and psi are
/// both linear.
inline ZetaStarResult compute_zeta_star(const ComparisonFunction& chi, const PsiFunction& psi,
                                        double epsilon, bool use_closed_form = true) {
  if (epsilon < 0) throw ConstructionError("compute_zeta_star: epsilon must be nonnegative");
  const double scale = 1.0 + epsilon;

  if (use_closed_form && chi.kind() == FnKind::linear && psi.segments &&
      psi.segments->size() == 1 && psi.segments->front().k == 1.0) {
    double mu = chi.param_a(), a = psi.segments->front().a;
    double v = std::log(scale * mu) / a;
    return {std::max(0.0, v), 1.0};
  }

  detail::PsiAntiderivative F(psi, 1.0);
  auto objective = [&](double s) {
    double hi = scale * chi.eval(s);
    if (hi <= 0 || s <= 0) return 0.0;
    return F.eval(hi) - F.eval(s);
  };

  double lo = 1e-8, hi = 1e8;
  const std::size_t seeds = 400;
  std::vector<double> grid = log_grid(lo, hi, seeds);
  double best = 0.0, best_s = 0.0;
  for (double s : grid) {
    double v = objective(s);
    if (v > best) {
      best = v;
      best_s = s;
    }
  }

  // Divergence probes: three successive decade extensions at each end.
  const double dtol = 1e-9 * (1.0 + std::abs(best));
  double prev = best, ext = lo;
  int rising = 0;
  for (int i = 0; i < 3; ++i) {
    ext /= 10.0;
    double v = objective(ext);
    if (v > prev + dtol) ++rising;
    prev = std::max(prev, v);
  }
  if (rising == 3)
    throw DivergentBound("compute_zeta_star: objective increases without bound as s -> 0");
  prev = best;
  ext = hi;
  rising = 0;
  for (int i = 0; i < 3; ++i) {
    ext *= 10.0;
    double v = objective(ext);
    if (v > prev + dtol) ++rising;
    prev = std::max(prev, v);
  }
  if (rising == 3)
    throw DivergentBound("compute_zeta_star: objective increases without bound as s -> infinity");

  if (best_s > 0.0) {
    // Golden-section refinement in log s around the best seed.
    std::size_t bi = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (grid[i] == best_s) bi = i;
    double ul = std::log(bi > 0 ? grid[bi - 1] : best_s / 10);
    double uh = std::log(bi + 1 < grid.size() ? grid[bi + 1] : best_s * 10);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = uh - gr * (uh - ul), d = ul + gr * (uh - ul);
    double fc = objective(std::exp(c)), fd = objective(std::exp(d));
    for (int it = 0; it < 120 && uh - ul > 1e-12; ++it) {
      if (fc > fd) {
        uh = d;
        d = c;
        fd = fc;
        c = uh - gr * (uh - ul);
        fc = objective(std::exp(c));
      } else {
        ul = c;
        c = d;
        fc = fd;
        d = ul + gr * (uh - ul);
        fd = objective(std::exp(d));
      }
    }
    double s_ref = std::exp(0.5 * (ul + uh));
    double v_ref = objective(s_ref);
    if (v_ref > best) {
      best = v_ref;
      best_s = s_ref;
    }
  }
  return {std::max(0.0, best), best_s};
}

/// The hybrid Lyapunov function W(state) = exp(2 c0 zeta tau) phi(arg),
/// where `arg` extracts (V_p(x,e) [+ eta_o + eta_c], tau) from a simulation
/// state.  zeta must lie in (zeta*, lambda tau_a); lambda = 1 for the pure
/// switched cascade.
struct WFunction {
  double zeta = 0, c0 = 0, zeta_star = 0, tau_a = 0, lambda = 1.0;
  PhiFunction phi;
  std::function<std::pair<double, double>(const Eigen::VectorXd&, int)> arg;

  double eval(const Eigen::VectorXd& state, int mode) const {
    auto [v, tau] = arg(state, mode);
    return std::exp(2.0 * c0 * zeta * tau) * phi(v);
  }

  /// Upper bound on W+/W at a switch jump: exp(2 c0 (zeta* - zeta)) < 1.
  double jump_contraction() const { return std::exp(2.0 * c0 * (zeta_star - zeta)); }
};

/// Validated WFunction constructor.
inline WFunction make_W(double zeta, double c0, double zeta_star, double tau_a, double lambda,
                        PhiFunction phi,
                        std::function<std::pair<double, double>(const Eigen::VectorXd&, int)> arg) {
  if (!(zeta > zeta_star && zeta < lambda * tau_a))
    throw ConfigError("make_W: zeta must lie in (zeta*, lambda tau_a); got zeta = " +
                      std::to_string(zeta) + ", zeta* = " + std::to_string(zeta_star) +
                      ", lambda tau_a = " + std::to_string(lambda * tau_a));
  WFunction w;
  w.zeta = zeta;
  w.c0 = c0;
  w.zeta_star = zeta_star;
  w.tau_a = tau_a;
  w.lambda = lambda;
  w.phi = std::move(phi);
  w.arg = std::move(arg);
  return w;
}

}  // namespace swc
