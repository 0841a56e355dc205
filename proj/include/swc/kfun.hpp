#pragma once

// Algebra of class-K / class-K-infinity comparison functions.
//
// A ComparisonFunction is an immutable expression tree over a small set of
// node kinds (power laws, linear, tabulated, min/max/sum/product,
// composition, scalar multiples, symbolic inverses).  Every certificate and
// dwell-time bound in this library is assembled from these values.  Two
// kinds lie outside class K proper but are needed by the certificate
// construction: `constant` and `stairs` (nondecreasing tabulated) represent
// the nondecreasing multipliers nu(s) that weight the observer Lyapunov
// function inside the cascade composition.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "swc/errors.hpp"

namespace swc {

enum class FnKind {
  power_law,       // a * s^k, a > 0, k > 0
  linear,          // a * s, a > 0
  constant,        // c >= 0 (not class K; nondecreasing)
  tabulated,       // strictly increasing piecewise-linear through (grid, values)
  stairs,          // nondecreasing piecewise-linear (flat segments allowed)
  composition,     // outer(inner(s))
  pointwise_min,
  pointwise_max,
  sum,
  product,
  scalar_multiple, // c * base(s), c > 0
  inverse,         // base^{-1}(s)
};

inline const char* fn_kind_name(FnKind k) {
  switch (k) {
    case FnKind::power_law: return "power_law";
    case FnKind::linear: return "linear";
    case FnKind::constant: return "constant";
    case FnKind::tabulated: return "tabulated";
    case FnKind::stairs: return "stairs";
    case FnKind::composition: return "composition";
    case FnKind::pointwise_min: return "pointwise_min";
    case FnKind::pointwise_max: return "pointwise_max";
    case FnKind::sum: return "sum";
    case FnKind::product: return "product";
    case FnKind::scalar_multiple: return "scalar_multiple";
    case FnKind::inverse: return "inverse";
  }
  return "?";
}

/// Immutable scalar comparison function on [0, inf).
///
/// Values are cheap shared handles; evaluation is reentrant and
/// thread-safe.  Strict monotonicity and f(0)=0 hold for every class-K
/// node kind by construction; `constant` and `stairs` are merely
/// nondecreasing and report is_class_k() == false.
class ComparisonFunction {
 public:
  /// Default-constructs the identity function s -> s.
  ComparisonFunction() : ComparisonFunction(linear(1.0)) {}

  // ---- factories -------------------------------------------------------

  static ComparisonFunction power_law(double a, double k) {
    require(a > 0 && std::isfinite(a), "power_law: coefficient must be positive");
    require(k > 0 && std::isfinite(k), "power_law: exponent must be positive");
    Node n{FnKind::power_law};
    n.a = a;
    n.k = k;
    return make(std::move(n));
  }

  static ComparisonFunction linear(double a) {
    require(a > 0 && std::isfinite(a), "linear: slope must be positive");
    Node n{FnKind::linear};
    n.a = a;
    return make(std::move(n));
  }

  /// Identity function s -> s.
  static ComparisonFunction identity() { return linear(1.0); }

  /// Constant function s -> c (c >= 0).  Not class K; used for the
  /// nondecreasing multipliers nu and for the degenerate rho == 0.
  static ComparisonFunction constant(double c) {
    require(c >= 0 && std::isfinite(c), "constant: value must be nonnegative");
    Node n{FnKind::constant};
    n.c = c;
    return make(std::move(n));
  }

  /// The zero function (rho == 0 in certificates with identity jumps).
  static ComparisonFunction zero() { return constant(0.0); }

  /// Strictly increasing piecewise-linear interpolant.  The grid must
  /// start at 0 with value 0.  With `unbounded`, evaluation beyond the
  /// grid continues linearly with slope `tail_slope` (defaults to the
  /// last segment's slope); without it, such evaluation is a DomainError.
  static ComparisonFunction tabulated(std::vector<double> grid,
                                      std::vector<double> values,
                                      bool unbounded = false,
                                      double tail_slope = std::numeric_limits<double>::quiet_NaN()) {
    require(grid.size() == values.size() && grid.size() >= 2,
            "tabulated: need matching grid/values with >= 2 nodes");
    require(grid.front() == 0.0 && values.front() == 0.0,
            "tabulated: grid and values must start at 0");
    for (std::size_t i = 1; i < grid.size(); ++i) {
      require(grid[i] > grid[i - 1], "tabulated: grid must be strictly increasing");
      require(values[i] > values[i - 1], "tabulated: values must be strictly increasing");
    }
    Node n{FnKind::tabulated};
    n.grid = std::move(grid);
    n.values = std::move(values);
    n.unbounded = unbounded;
    if (std::isnan(tail_slope)) {
      std::size_t m = n.grid.size();
      tail_slope = (n.values[m - 1] - n.values[m - 2]) / (n.grid[m - 1] - n.grid[m - 2]);
    }
    require(tail_slope > 0 || !unbounded, "tabulated: unbounded tail needs positive slope");
    n.a = tail_slope;
    return make(std::move(n));
  }

  /// Nondecreasing piecewise-linear function (running-sup outputs).
  /// Continues flat beyond either end of the grid.
  static ComparisonFunction stairs(std::vector<double> grid, std::vector<double> values) {
    require(grid.size() == values.size() && !grid.empty(),
            "stairs: need matching nonempty grid/values");
    for (std::size_t i = 1; i < grid.size(); ++i) {
      require(grid[i] > grid[i - 1], "stairs: grid must be strictly increasing");
      require(values[i] >= values[i - 1], "stairs: values must be nondecreasing");
    }
    require(values.front() >= 0, "stairs: values must be nonnegative");
    Node n{FnKind::stairs};
    n.grid = std::move(grid);
    n.values = std::move(values);
    return make(std::move(n));
  }

  static ComparisonFunction composition(ComparisonFunction outer, ComparisonFunction inner) {
    Node n{FnKind::composition};
    n.children = {std::move(outer), std::move(inner)};
    return make(std::move(n));
  }

  static ComparisonFunction pointwise_min(std::vector<ComparisonFunction> terms) {
    return combine(FnKind::pointwise_min, std::move(terms));
  }

  static ComparisonFunction pointwise_max(std::vector<ComparisonFunction> terms) {
    return combine(FnKind::pointwise_max, std::move(terms));
  }

  static ComparisonFunction sum(std::vector<ComparisonFunction> terms) {
    return combine(FnKind::sum, std::move(terms));
  }

  static ComparisonFunction product(std::vector<ComparisonFunction> terms) {
    return combine(FnKind::product, std::move(terms));
  }

  static ComparisonFunction scalar_multiple(double c, ComparisonFunction base) {
    require(c > 0 && std::isfinite(c), "scalar_multiple: factor must be positive");
    Node n{FnKind::scalar_multiple};
    n.c = c;
    n.children = {std::move(base)};
    return make(std::move(n));
  }

  /// Symbolic inverse of a strictly increasing function.
  static ComparisonFunction inverse(ComparisonFunction base) {
    Node n{FnKind::inverse};
    n.children = {std::move(base)};
    return make(std::move(n));
  }

  // ---- evaluation ------------------------------------------------------

  double operator()(double s) const { return eval(s); }

  double eval(double s) const {
    if (std::isnan(s) || s < 0)
      throw DomainError("eval: argument must be nonnegative, got " + std::to_string(s));
    return eval_node(*node_, s);
  }

  /// Solve f(s) = r for s.  Closed form where the tree allows, bisection
  /// with bracket growth otherwise (tolerance 1e-10 absolute + relative,
  /// at most 200 iterations).  RangeError when r exceeds sup f.
  double inverse_eval(double r) const {
    if (std::isnan(r) || r < 0)
      throw RangeError("inverse_eval: argument must be nonnegative, got " + std::to_string(r));
    return invert_node(*node_, r);
  }

  // ---- structure queries ----------------------------------------------

  FnKind kind() const { return node_->kind; }
  double param_a() const { return node_->a; }
  double param_k() const { return node_->k; }
  double param_c() const { return node_->c; }
  const std::vector<double>& grid() const { return node_->grid; }
  const std::vector<double>& values() const { return node_->values; }
  bool tabulated_unbounded() const { return node_->unbounded; }
  const std::vector<ComparisonFunction>& children() const { return node_->children; }

  /// True when the tree guarantees strict monotonicity with f(0) = 0.
  bool is_class_k() const { return class_k_node(*node_); }

  /// True when the tree guarantees f(s) -> inf as s -> inf (class-K-infinity
  /// claim for class-K trees).
  bool is_unbounded() const { return unbounded_node(*node_); }

 private:
  struct Node {
    FnKind kind;
    double a = 0.0;  // slope / coefficient / tail slope (tabulated)
    double k = 0.0;  // exponent
    double c = 0.0;  // constant value / scalar factor
    std::vector<double> grid, values;
    bool unbounded = false;
    std::vector<ComparisonFunction> children;
  };

  std::shared_ptr<const Node> node_;

  explicit ComparisonFunction(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static ComparisonFunction make(Node&& n) {
    return ComparisonFunction(std::make_shared<const Node>(std::move(n)));
  }

  static ComparisonFunction combine(FnKind kind, std::vector<ComparisonFunction> terms) {
    require(!terms.empty(), "combine: need at least one term");
    if (terms.size() == 1) return terms.front();
    Node n{kind};
    n.children = std::move(terms);
    return make(std::move(n));
  }

  static void require(bool ok, const char* msg) {
    if (!ok) throw ConstructionError(msg);
  }

  // Piecewise-linear interpolation on (grid, values); callers handle tails.
  static double interp(const std::vector<double>& g, const std::vector<double>& v, double s) {
    auto it = std::upper_bound(g.begin(), g.end(), s);
    std::size_t hi = static_cast<std::size_t>(it - g.begin());
    if (hi == 0) return v.front();
    if (hi >= g.size()) return v.back();
    std::size_t lo = hi - 1;
    double w = (s - g[lo]) / (g[hi] - g[lo]);
    return v[lo] + w * (v[hi] - v[lo]);
  }

  static double eval_node(const Node& n, double s) {
    switch (n.kind) {
      case FnKind::power_law:
        return n.a * std::pow(s, n.k);
      case FnKind::linear:
        return n.a * s;
      case FnKind::constant:
        return n.c;
      case FnKind::tabulated: {
        if (s > n.grid.back()) {
          if (!n.unbounded)
            throw DomainError("tabulated eval: argument " + std::to_string(s) +
                              " beyond grid end " + std::to_string(n.grid.back()));
          return n.values.back() + n.a * (s - n.grid.back());
        }
        return interp(n.grid, n.values, s);
      }
      case FnKind::stairs: {
        if (s <= n.grid.front()) return n.values.front();
        if (s >= n.grid.back()) return n.values.back();
        return interp(n.grid, n.values, s);
      }
      case FnKind::composition:
        return n.children[0].eval(n.children[1].eval(s));
      case FnKind::pointwise_min: {
        double v = std::numeric_limits<double>::infinity();
        for (const auto& f : n.children) v = std::min(v, f.eval(s));
        return v;
      }
      case FnKind::pointwise_max: {
        double v = 0.0;
        for (const auto& f : n.children) v = std::max(v, f.eval(s));
        return v;
      }
      case FnKind::sum: {
        double v = 0.0;
        for (const auto& f : n.children) v += f.eval(s);
        return v;
      }
      case FnKind::product: {
        double v = 1.0;
        for (const auto& f : n.children) v *= f.eval(s);
        return v;
      }
      case FnKind::scalar_multiple:
        return n.c * n.children[0].eval(s);
      case FnKind::inverse:
        return n.children[0].inverse_eval(s);
    }
    throw ConstructionError("eval: unknown node kind");
  }

  static double invert_node(const Node& n, double r) {
    switch (n.kind) {
      case FnKind::power_law:
        return std::pow(r / n.a, 1.0 / n.k);
      case FnKind::linear:
        return r / n.a;
      case FnKind::constant:
        throw RangeError("inverse_eval: constant function is not invertible");
      case FnKind::stairs:
        throw RangeError("inverse_eval: stairs function is not strictly increasing");
      case FnKind::tabulated: {
        if (r > n.values.back()) {
          if (!n.unbounded)
            throw RangeError("inverse_eval: value " + std::to_string(r) +
                             " beyond tabulated range " + std::to_string(n.values.back()));
          return n.grid.back() + (r - n.values.back()) / n.a;
        }
        auto it = std::upper_bound(n.values.begin(), n.values.end(), r);
        std::size_t hi = static_cast<std::size_t>(it - n.values.begin());
        if (hi == 0) return n.grid.front();
        if (hi >= n.values.size()) return n.grid.back();
        std::size_t lo = hi - 1;
        double w = (r - n.values[lo]) / (n.values[hi] - n.values[lo]);
        return n.grid[lo] + w * (n.grid[hi] - n.grid[lo]);
      }
      case FnKind::composition:
        // (outer o inner)^{-1} = inner^{-1} o outer^{-1}
        return n.children[1].inverse_eval(n.children[0].inverse_eval(r));
      case FnKind::scalar_multiple:
        return n.children[0].inverse_eval(r / n.c);
      case FnKind::inverse:
        return n.children[0].eval(r);
      default:
        return bisect_inverse(n, r);
    }
  }

  // Numeric inverse for min/max/sum/product trees: grow a bracket
  // geometrically, then bisect.
  static double bisect_inverse(const Node& n, double r) {
    if (r == 0.0) return 0.0;  // class-K trees vanish only at 0
    double lo = 0.0, hi = 1.0;
    double fhi = eval_node(n, hi);
    int grow = 0;
    while (fhi < r) {
      lo = hi;
      hi *= 2.0;
      if (++grow > 1100)
        throw RangeError("inverse_eval: value " + std::to_string(r) + " not attained");
      fhi = eval_node(n, hi);
    }
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      if (eval_node(n, mid) < r)
        lo = mid;
      else
        hi = mid;
      if (hi - lo <= 1e-10 + 1e-10 * std::abs(hi)) break;
    }
    return 0.5 * (lo + hi);
  }

  static bool class_k_node(const Node& n) {
    switch (n.kind) {
      case FnKind::power_law:
      case FnKind::linear:
        return true;
      case FnKind::constant:
      case FnKind::stairs:
        return false;
      case FnKind::tabulated:
        return true;
      case FnKind::composition:
      case FnKind::pointwise_min:
      case FnKind::pointwise_max:
      case FnKind::sum: {
        for (const auto& f : n.children)
          if (!f.is_class_k()) return false;
        return true;
      }
      case FnKind::product: {
        // Class K if every factor is class K, or if exactly the class-K
        // factors vanish at 0 and the rest are positive nondecreasing.
        bool any_k = false;
        for (const auto& f : n.children) {
          if (f.is_class_k()) {
            any_k = true;
          } else if (f.kind() == FnKind::constant && f.param_c() > 0) {
            // positive constant: fine
          } else if (f.kind() == FnKind::stairs && f.values().front() > 0) {
            // positive nondecreasing: fine
          } else {
            return false;
          }
        }
        return any_k;
      }
      case FnKind::scalar_multiple:
      case FnKind::inverse:
        return n.children[0].is_class_k();
    }
    return false;
  }

  static bool unbounded_node(const Node& n) {
    switch (n.kind) {
      case FnKind::power_law:
      case FnKind::linear:
        return true;
      case FnKind::constant:
        return false;
      case FnKind::tabulated:
        return n.unbounded;
      case FnKind::stairs:
        return false;
      case FnKind::composition:
        return n.children[0].is_unbounded() && n.children[1].is_unbounded();
      case FnKind::pointwise_min: {
        for (const auto& f : n.children)
          if (!f.is_unbounded()) return false;
        return true;
      }
      case FnKind::pointwise_max:
      case FnKind::sum:
      case FnKind::product: {
        for (const auto& f : n.children)
          if (f.is_unbounded()) return true;
        return false;
      }
      case FnKind::scalar_multiple:
        return n.children[0].is_unbounded();
      case FnKind::inverse:
        // inverse of a K-infinity function is K-infinity; inverse of a
        // bounded function is defined on a bounded range only.
        return n.children[0].is_unbounded();
    }
    return false;
  }
};

// ---- grids --------------------------------------------------------------

/// n log-spaced points on [lo, hi] (inclusive), lo > 0.
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0 && hi > lo && n >= 2)) throw ConstructionError("log_grid: need 0 < lo < hi, n >= 2");
  std::vector<double> g(n);
  double llo = std::log(lo), lhi = std::log(hi);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

// ---- nondecreasing majorant ----------------------------------------------

/// factor * running supremum of f over the (positive, increasing) grid.
/// Constant inputs collapse to an exact constant; otherwise the result is a
/// `stairs` function that continues flat beyond the grid.
inline ComparisonFunction nondecreasing_majorant(const std::function<double(double)>& f,
                                                 double factor,
                                                 const std::vector<double>& grid) {
  if (grid.empty()) throw ConstructionError("nondecreasing_majorant: empty grid");
  if (!(factor > 0)) throw ConstructionError("nondecreasing_majorant: factor must be positive");
  std::vector<double> vals(grid.size());
  double run = -std::numeric_limits<double>::infinity();
  double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double v = f(grid[i]);
    if (!std::isfinite(v) || v < 0)
      throw ConstructionError("nondecreasing_majorant: f must be finite and nonnegative on the grid");
    run = std::max(run, v);
    vals[i] = factor * run;
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  if (vmax - vmin <= 1e-12 * std::max(1.0, vmax))  // constant within tolerance
    return ComparisonFunction::constant(factor * vmax);
  return ComparisonFunction::stairs(grid, vals);
}

/// Overload for ComparisonFunction inputs: a function already nondecreasing
/// on the grid majorizes itself, so the result is exactly factor * f.
inline ComparisonFunction nondecreasing_majorant(const ComparisonFunction& f,
                                                 double factor,
                                                 const std::vector<double>& grid) {
  bool nondecreasing = true;
  double prev = -std::numeric_limits<double>::infinity();
  for (double s : grid) {
    double v = f.eval(s);
    if (v < prev) {
      nondecreasing = false;
      break;
    }
    prev = v;
  }
  if (nondecreasing) {
    if (f.kind() == FnKind::constant) return ComparisonFunction::constant(factor * f.param_c());
    return ComparisonFunction::scalar_multiple(factor, f);
  }
  return nondecreasing_majorant([&f](double s) { return f.eval(s); }, factor, grid);
}

// ---- integral primitive ---------------------------------------------------

namespace detail {

// Adaptive Simpson on [a, b] with absolute tolerance tol.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double whole, double tol,
                               int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0) throw QuadratureError("adaptive quadrature: max refinement depth reached");
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 60);
}

}  // namespace detail

/// Primitive ell(s) = integral of nu over [0, s] for a nonnegative
/// nondecreasing nu.  Closed form for constant / linear / power-law trees
/// (recursively through sums and scalar multiples); exact node values with
/// refined tabulation for `stairs`; adaptive quadrature fallback otherwise
/// (relative tolerance 1e-10, QuadratureError on failure).
inline ComparisonFunction integral_primitive(const ComparisonFunction& nu) {
  switch (nu.kind()) {
    case FnKind::constant: {
      if (nu.param_c() <= 0)
        throw ConstructionError("integral_primitive: nu must be positive on (0,inf)");
      return ComparisonFunction::linear(nu.param_c());
    }
    case FnKind::linear:
      return ComparisonFunction::power_law(nu.param_a() / 2.0, 2.0);
    case FnKind::power_law:
      return ComparisonFunction::power_law(nu.param_a() / (nu.param_k() + 1.0),
                                           nu.param_k() + 1.0);
    case FnKind::scalar_multiple:
      return ComparisonFunction::scalar_multiple(nu.param_c(),
                                                 integral_primitive(nu.children()[0]));
    case FnKind::sum: {
      std::vector<ComparisonFunction> terms;
      terms.reserve(nu.children().size());
      for (const auto& f : nu.children()) terms.push_back(integral_primitive(f));
      return ComparisonFunction::sum(std::move(terms));
    }
    case FnKind::stairs: {
      // nu is piecewise linear: the trapezoid rule is exact at the nodes.
      // Refine each segment so the interpolated primitive stays close to
      // the true piecewise-quadratic between nodes.
      const auto& g = nu.grid();
      const auto& v = nu.values();
      std::vector<double> xg{0.0}, xv{0.0};
      auto push = [&](double x) {
        double lo = xg.back();
        double vlo = nu.eval(lo), vhi = nu.eval(x);
        double add = 0.5 * (vlo + vhi) * (x - lo);
        xg.push_back(x);
        xv.push_back(xv.back() + add);
      };
      const int refine = 64;
      if (g.front() > 0.0)
        for (int i = 1; i <= refine; ++i) push(g.front() * i / static_cast<double>(refine));
      for (std::size_t seg = 1; seg < g.size(); ++seg)
        for (int i = 1; i <= refine; ++i)
          push(g[seg - 1] + (g[seg] - g[seg - 1]) * i / static_cast<double>(refine));
      if (v.back() <= 0)
        throw ConstructionError("integral_primitive: nu must be positive on (0,inf)");
      // Beyond the grid nu continues flat, so ell continues with exact
      // slope nu(end).
      return ComparisonFunction::tabulated(std::move(xg), std::move(xv), true, v.back());
    }
    default: {
      // Generic fallback: tabulate by adaptive quadrature on a dense log
      // grid (~1024 nodes/decade keeps the piecewise-linear interpolant of
      // the primitive within ~1e-6 relative for smooth nu).
      auto f = [&nu](double s) { return nu.eval(s); };
      std::vector<double> g = log_grid(1e-8, 1e8, 16385);
      std::vector<double> xg{0.0}, xv{0.0};
      double acc = detail::integrate(f, 0.0, g.front(), 1e-14);
      xg.push_back(g.front());
      xv.push_back(acc);
      for (std::size_t i = 1; i < g.size(); ++i) {
        acc += detail::integrate(f, g[i - 1], g[i], 1e-10 * std::max(1.0, acc));
        xg.push_back(g[i]);
        xv.push_back(acc);
      }
      return ComparisonFunction::tabulated(std::move(xg), std::move(xv), true, f(g.back()));
    }
  }
}

}  // namespace swc
