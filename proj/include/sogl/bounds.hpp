#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "sogl/core.hpp"
#include "sogl/errors.hpp"

namespace sogl {

// ---------------------------------------------------------------------------
// Diagonal surrogates for the weighted overlapping group norm
//
//   ||L x||_1  <=  sum_i w_i ||x_{G_i}||_2  <=  ||U x||_2
//
// with l_j = sum_{i : j in G_i} w_i / sqrt(|G_i|) and u_j = sqrt(k_j) ||w||_2.

enum class BoundKind { lower_L, upper_U };

struct DiagonalBound {
  BoundKind kind = BoundKind::lower_L;
  Vector d;
};

inline DiagonalBound build_L(const GroupStructure& gs) {
  DiagonalBound out{BoundKind::lower_L, Vector::Zero(gs.n())};
  for (Index i = 0; i < gs.m(); ++i) {
    const double coef = gs.weight(i) / std::sqrt(static_cast<double>(gs.group_size(i)));
    for (Index j : gs.group(i)) out.d[j] += coef;
  }
  return out;
}

inline DiagonalBound build_U(const GroupStructure& gs) {
  const double wnorm = gs.weights().norm();
  DiagonalBound out{BoundKind::upper_U, Vector(gs.n())};
  for (Index j = 0; j < gs.n(); ++j) {
    out.d[j] = std::sqrt(static_cast<double>(gs.overlap_count(j))) * wnorm;
  }
  return out;
}

/// Minimizer and optimal value of one bound problem (all in the 1/2 ||x - v||^2 scale).
struct BoundSolution {
  Vector x;
  double value = 0.0;
};

// ---------------------------------------------------------------------------
// Lower problems: separable, closed form.

/// min 1/2||x - v||^2 + lambda ||L x||_1, solved coordinatewise by soft-thresholding
/// at lambda * l_i.
inline BoundSolution lb_weighted_lasso(const Vector& v, double lambda, const Vector& l) {
  BoundSolution out{Vector(v.size()), 0.0};
  for (Index i = 0; i < v.size(); ++i) out.x[i] = soft_threshold(v[i], lambda * l[i]);
  out.value = 0.5 * (out.x - v).squaredNorm() + lambda * l.cwiseProduct(out.x).lpNorm<1>();
  return out;
}

/// Which closed form to use for the l1 lower problem and the l1 upper zero test.
///  - derived: soft-threshold at lambda l_i + lambda1; zero test on ||U^{-1} soft(v, lambda1)||.
///  - literal: value branch shrinks by lambda l_i only; zero test on
///             ||U^{-1}(v + lambda1 sgn(v))||.
enum class L1Form { derived, literal };

/// min 1/2||x - v||^2 + lambda ||L x||_1 + lambda1 ||x||_1
inline BoundSolution lb_l1_variant(const Vector& v, double lambda, double lambda1, const Vector& l,
                                   L1Form form = L1Form::derived) {
  BoundSolution out{Vector(v.size()), 0.0};
  for (Index i = 0; i < v.size(); ++i) {
    const double thr = lambda * l[i] + lambda1;
    if (form == L1Form::derived) {
      out.x[i] = soft_threshold(v[i], thr);
    } else {
      out.x[i] = v[i] > thr ? v[i] - lambda * l[i] : (v[i] < -thr ? v[i] + lambda * l[i] : 0.0);
    }
  }
  out.value = 0.5 * (out.x - v).squaredNorm() + lambda * l.cwiseProduct(out.x).lpNorm<1>() +
              lambda1 * out.x.lpNorm<1>();
  return out;
}

/// min 1/2||x - v||^2 + lambda ||L x||_1 + lambda0 ||x||_0: per coordinate compare the
/// soft-threshold candidate with zero; ties go to zero.
inline BoundSolution lb_l0_variant(const Vector& v, double lambda, double lambda0, const Vector& l) {
  BoundSolution out{Vector::Zero(v.size()), 0.0};
  for (Index i = 0; i < v.size(); ++i) {
    const double t = lambda * l[i];
    const double a = soft_threshold(v[i], t);
    if (a == 0.0) continue;
    const double f_a = 0.5 * (a - v[i]) * (a - v[i]) + t * std::abs(a) + lambda0;
    const double f_0 = 0.5 * v[i] * v[i];
    if (f_a < f_0) out.x[i] = a;
  }
  out.value = 0.5 * (out.x - v).squaredNorm() + lambda * l.cwiseProduct(out.x).lpNorm<1>() +
              lambda0 * static_cast<double>(l0_norm(out.x));
  return out;
}

// ---------------------------------------------------------------------------
// Upper problems.

enum class FixedPointStatus {
  converged,       ///< T-iteration met the tolerance
  zero_condition,  ///< ||U^{-1} v|| <= lambda on the penalized block, minimizer 0 there
  zero_center,     ///< v vanishes on the penalized block, T undefined, minimizer 0 there
  no_penalty,      ///< lambda = 0 or no penalized coordinate: x = v
  bisection,       ///< iteration budget exhausted, limit recovered by bisection on c
};

inline const char* to_string(FixedPointStatus s) {
  switch (s) {
    case FixedPointStatus::converged: return "converged";
    case FixedPointStatus::zero_condition: return "zero_condition";
    case FixedPointStatus::zero_center: return "zero_center";
    case FixedPointStatus::no_penalty: return "no_penalty";
    case FixedPointStatus::bisection: return "bisection";
  }
  return "unknown";
}

/// History of x <- T(x) = (I + lambda U^2 / ||U x||)^{-1} v on the penalized block.
/// `norms[k]` is ||U x^(k)||, starting with the initial point; `rho_min/rho_max`
/// bound the contraction factors rho_i = y / (y + lambda u_i^2) used at step k.
struct FixedPointTrace {
  std::vector<double> norms;
  std::vector<double> rho_min;
  std::vector<double> rho_max;
  double limit = 0.0;
  int iters = 0;
  FixedPointStatus status = FixedPointStatus::converged;
};

struct FixedPointOptions {
  double tol = 1e-10;
  int max_iters = 10000;
  /// Starting point on the full coordinate vector; defaults to v.
  std::optional<Vector> start;
};

struct ScaledL2Solution {
  Vector x;
  double value = 0.0;
  FixedPointTrace trace;
};

namespace detail {

/// sum_i (u_i v_i)^2 / (c + lambda u_i^2)^2 - 1: strictly decreasing in c, root at ||U x*||.
inline double fixed_point_equation(const Vector& v, const Vector& u, double lambda, double c) {
  double sum = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double num = u[i] * v[i];
    const double den = c + lambda * u[i] * u[i];
    sum += num * num / (den * den);
  }
  return sum - 1.0;
}

inline double bisect_fixed_point(const Vector& v, const Vector& u, double lambda) {
  double lo = 0.0;
  double hi = u.cwiseProduct(v).norm();
  for (int k = 0; k < 2000 && hi - lo > 0.0; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (fixed_point_equation(v, u, lambda, mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Runs the T-iteration on a block where every u_i > 0 and the zero test fails.
inline Vector run_fixed_point(const Vector& v, const Vector& u, double lambda, Vector x0,
                              const FixedPointOptions& opts, FixedPointTrace& trace) {
  const Vector lu2 = lambda * u.cwiseAbs2();
  double y = u.cwiseProduct(x0).norm();
  if (!(y > 0.0)) {
    x0 = v;
    y = u.cwiseProduct(v).norm();
  }
  trace.norms.push_back(y);

  Vector x = x0;
  double prev_delta = -1.0;
  for (int k = 1; k <= opts.max_iters; ++k) {
    const Vector rho = (y / (y + lu2.array())).matrix();
    trace.rho_min.push_back(rho.minCoeff());
    trace.rho_max.push_back(rho.maxCoeff());
    x = rho.cwiseProduct(v);
    const double y_next = u.cwiseProduct(x).norm();
    trace.norms.push_back(y_next);
    trace.iters = k;

    // Stop once the step is under tol and the geometric tail estimate
    // delta * q / (1 - q) agrees.
    const double delta = std::abs(y_next - y);
    y = y_next;
    if (delta == 0.0) break;
    if (delta <= opts.tol * std::max(1.0, y) && prev_delta > 0.0) {
      const double q = delta / prev_delta;
      if (q < 1.0 && delta * q / (1.0 - q) <= opts.tol * std::max(1.0, y)) break;
    }
    prev_delta = delta;
    if (k == opts.max_iters) {
      trace.status = FixedPointStatus::bisection;
      y = bisect_fixed_point(v, u, lambda);
      x = (y / (y + lu2.array())).matrix().cwiseProduct(v);
    }
  }
  trace.limit = y;
  return x;
}

}  // namespace detail

/**
 * min 1/2||x - v||^2 + lambda ||U x||_2 for diagonal U = diag(u), u >= 0.
 *
 * Coordinates with u_j = 0 are uncoupled and return x_j = v_j. On the rest,
 * x = 0 when ||U^{-1} v||_2 <= lambda; otherwise the fixed-point iteration
 * x <- T(x) runs from `opts.start` (default v) until successive ||U x|| agree
 * to `tol`. If the budget runs out the limit c is recovered by bisection on
 * sum_i (u_i v_i)^2 / (c + lambda u_i^2)^2 = 1.
 */
inline ScaledL2Solution ub_scaled_l2_prox(const Vector& v, double lambda, const Vector& u,
                                          const FixedPointOptions& opts = {}) {
  ScaledL2Solution out{v, 0.0, {}};
  std::vector<Index> pen;
  for (Index j = 0; j < u.size(); ++j) {
    if (u[j] > 0.0) pen.push_back(j);
  }

  const auto np = static_cast<Index>(pen.size());
  Vector vp(np), up(np), x0(np);
  for (Index k = 0; k < np; ++k) {
    vp[k] = v[pen[static_cast<std::size_t>(k)]];
    up[k] = u[pen[static_cast<std::size_t>(k)]];
    x0[k] = opts.start ? (*opts.start)[pen[static_cast<std::size_t>(k)]] : vp[k];
  }

  Vector xp;
  if (np == 0 || lambda == 0.0) {
    out.trace.status = FixedPointStatus::no_penalty;
    xp = vp;
    out.trace.limit = up.cwiseProduct(vp).norm();
  } else if (vp.isZero(0.0)) {
    out.trace.status = FixedPointStatus::zero_center;
    xp = Vector::Zero(np);
  } else if (vp.cwiseQuotient(up).norm() <= lambda) {
    out.trace.status = FixedPointStatus::zero_condition;
    xp = Vector::Zero(np);
  } else {
    xp = detail::run_fixed_point(vp, up, lambda, x0, opts, out.trace);
  }
  for (Index k = 0; k < np; ++k) out.x[pen[static_cast<std::size_t>(k)]] = xp[k];
  out.value = 0.5 * (out.x - v).squaredNorm() + lambda * u.cwiseProduct(out.x).norm();
  return out;
}

/// Residual of 1 = sum_i (u_i v_i)^2 / (c + lambda u_i^2)^2 at c, over u_i > 0.
inline double fixed_point_equation_residual(const Vector& v, const Vector& u, double lambda, double c) {
  double sum = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (!(u[i] > 0.0)) continue;
    const double num = u[i] * v[i];
    const double den = c + lambda * u[i] * u[i];
    sum += num * num / (den * den);
  }
  return std::abs(sum - 1.0);
}

/// ||x - v + lambda U^2 x / ||U x|| ||_2 at a nonzero point (gradient of the upper objective).
inline double scaled_l2_stationarity(const Vector& x, const Vector& v, double lambda, const Vector& u) {
  const double ux = u.cwiseProduct(x).norm();
  if (ux == 0.0) return std::numeric_limits<double>::infinity();
  return (x - v + lambda * u.cwiseAbs2().cwiseProduct(x) / ux).norm();
}

struct L1UpperSolution {
  Vector x;
  double value = 0.0;
  bool zero_test_fired = false;
  FixedPointTrace trace;
};

/**
 * min 1/2||x - v||^2 + lambda ||U x||_2 + lambda1 ||x||_1.
 *
 * Nonzero entries share the sign of v, so x_i = 0 whenever |v_i| <= lambda1 and the
 * remaining coordinates solve the scaled-l2 problem at the shifted center
 * v_i - lambda1 sgn(v_i). Coordinates with u_i = 0 reduce to scalar soft-thresholding.
 */
inline L1UpperSolution ub_l1_variant(const Vector& v, double lambda, double lambda1, const Vector& u,
                                     const FixedPointOptions& opts = {},
                                     L1Form form = L1Form::derived) {
  L1UpperSolution out{Vector::Zero(v.size()), 0.0, false, {}};
  std::vector<Index> support;
  double zero_stat = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (!(u[i] > 0.0)) {
      out.x[i] = soft_threshold(v[i], lambda1);
      continue;
    }
    const double shifted = form == L1Form::derived
                               ? soft_threshold(v[i], lambda1)
                               : v[i] + lambda1 * static_cast<double>((v[i] > 0) - (v[i] < 0));
    zero_stat += (shifted / u[i]) * (shifted / u[i]);
    if (std::abs(v[i]) > lambda1) support.push_back(i);
  }

  out.zero_test_fired = std::sqrt(zero_stat) <= lambda;
  if (out.zero_test_fired) out.trace.status = FixedPointStatus::zero_condition;
  if (!out.zero_test_fired && !support.empty()) {
    const auto ns = static_cast<Index>(support.size());
    Vector vs(ns), us(ns);
    for (Index k = 0; k < ns; ++k) {
      const Index i = support[static_cast<std::size_t>(k)];
      vs[k] = soft_threshold(v[i], lambda1);
      us[k] = u[i];
    }
    FixedPointOptions sub = opts;
    if (opts.start) {
      Vector s0(ns);
      for (Index k = 0; k < ns; ++k) s0[k] = (*opts.start)[support[static_cast<std::size_t>(k)]];
      sub.start = s0;
    }
    ScaledL2Solution r = ub_scaled_l2_prox(vs, lambda, us, sub);
    for (Index k = 0; k < ns; ++k) out.x[support[static_cast<std::size_t>(k)]] = r.x[k];
    out.trace = std::move(r.trace);
  }
  out.value = 0.5 * (out.x - v).squaredNorm() + lambda * u.cwiseProduct(out.x).norm() +
              lambda1 * out.x.lpNorm<1>();
  return out;
}

/**
 * min 1/2||x - v||^2 + t ||x||_2 + lambda0 ||x||_0 by enumerating supports made of the
 * k largest |v_i|, k = 0..n.
 *
 * For a fixed support S the best point is the block soft-threshold of v_S, whose
 * value 1/2||v_{S^c}||^2 + t||v_S|| - t^2/2 + lambda0 |S| (when ||v_S|| > t) only
 * improves as ||v_S|| grows, so among supports of one size the top-k one wins.
 */
inline BoundSolution sparse_l2_prox(const Vector& v, double t, double lambda0) {
  const Index n = v.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(v[a]) > std::abs(v[b]); });

  auto evaluate = [&](const Vector& x) {
    return 0.5 * (x - v).squaredNorm() + t * x.norm() + lambda0 * static_cast<double>(l0_norm(x));
  };

  BoundSolution best{Vector::Zero(n), 0.0};
  best.value = evaluate(best.x);
  Vector vs = Vector::Zero(n);
  for (Index k = 1; k <= n; ++k) {
    const Index idx = order[static_cast<std::size_t>(k - 1)];
    vs[idx] = v[idx];
    Vector cand = soft_threshold_group(vs, t);
    const double val = evaluate(cand);
    if (val < best.value) best = {std::move(cand), val};
  }
  return best;
}

struct L0UpperSolution {
  Vector x;
  double value = 0.0;          ///< 1/2||x - v||^2 + lambda ||U x|| + lambda0 ||x||_0 at x
  double relaxed_value = 0.0;  ///< same with lambda sigma_max(U) ||x_P||_2 in place of lambda ||U x||
  double sigma = 0.0;
};

/// Relaxed l0 upper problem: ||U x|| <= sigma_max(U) ||x|| turns the penalty into a
/// plain l2 norm, solved exactly by sparse_l2_prox on the penalized coordinates.
/// Coordinates with u_j = 0 are hard-thresholded at sqrt(2 lambda0).
inline L0UpperSolution ub_l0_variant(const Vector& v, double lambda, double lambda0, const Vector& u) {
  L0UpperSolution out{Vector::Zero(v.size()), 0.0, 0.0, u.size() ? u.maxCoeff() : 0.0};
  std::vector<Index> pen;
  for (Index j = 0; j < v.size(); ++j) {
    if (u[j] > 0.0) {
      pen.push_back(j);
    } else {
      out.x[j] = hard_threshold(v[j], std::sqrt(2.0 * lambda0));
    }
  }
  const auto np = static_cast<Index>(pen.size());
  Vector vp(np);
  for (Index k = 0; k < np; ++k) vp[k] = v[pen[static_cast<std::size_t>(k)]];
  const BoundSolution r = sparse_l2_prox(vp, lambda * out.sigma, lambda0);
  for (Index k = 0; k < np; ++k) out.x[pen[static_cast<std::size_t>(k)]] = r.x[k];

  const double base = 0.5 * (out.x - v).squaredNorm() + lambda0 * static_cast<double>(l0_norm(out.x));
  out.value = base + lambda * u.cwiseProduct(out.x).norm();
  out.relaxed_value = base + lambda * out.sigma * r.x.norm();
  return out;
}

// ---------------------------------------------------------------------------
// Sandwich report

enum class BoundVariant { plain, l1, l0 };

inline const char* to_string(BoundVariant v) {
  switch (v) {
    case BoundVariant::plain: return "plain";
    case BoundVariant::l1: return "l1";
    case BoundVariant::l0: return "l0";
  }
  return "unknown";
}

inline BoundVariant parse_bound_variant(const std::string& s) {
  if (s == "plain") return BoundVariant::plain;
  if (s == "l1") return BoundVariant::l1;
  if (s == "l0") return BoundVariant::l0;
  throw ValidationError("variant", "unknown bound variant '" + s + "'");
}

/// The problem the bounds bracket:
///   1/(2s)||x - v||^2 + lambda sum_i w_i ||x_{G_i}|| + {0 | lambda1 ||x||_1 | lambda0 ||x||_0}.
inline double bound_target_objective(const Vector& x, const ProxInstance& inst, const GroupStructure& gs,
                                     BoundVariant variant) {
  double val = (x - inst.v).squaredNorm() / (2.0 * inst.s) + inst.lambda * weighted_group_norm(x, gs);
  if (variant == BoundVariant::l1) val += inst.lambda1 * x.lpNorm<1>();
  if (variant == BoundVariant::l0) val += inst.lambda0 * static_cast<double>(l0_norm(x));
  return val;
}

struct BoundsReport {
  BoundVariant variant = BoundVariant::plain;
  double lower_value = 0.0;
  double upper_value = 0.0;
  Vector lower_minimizer;
  Vector upper_minimizer;
  /// l0 only: value of the sigma_max relaxation actually minimized.
  std::optional<double> upper_relaxed_value;
  std::optional<double> oracle_value;
};

struct SandwichOptions {
  FixedPointOptions fixed_point;
  L1Form l1_form = L1Form::derived;
};

/// Lower and upper values for the chosen variant, in the 1/(2s) scale of the prox
/// objective. The bound problems are solved as 1/2||x - v||^2 + s * penalties and
/// their optimal values divided by s.
inline BoundsReport sandwich(const ProxInstance& inst, const GroupStructure& gs, BoundVariant variant,
                             const SandwichOptions& opts = {}) {
  inst.validate(gs);
  const Vector l = build_L(gs).d;
  const Vector u = build_U(gs).d;
  const double s = inst.s;
  const double lam = s * inst.lambda;

  BoundsReport rep;
  rep.variant = variant;
  switch (variant) {
    case BoundVariant::plain: {
      const BoundSolution lo = lb_weighted_lasso(inst.v, lam, l);
      const ScaledL2Solution hi = ub_scaled_l2_prox(inst.v, lam, u, opts.fixed_point);
      rep.lower_value = lo.value / s;
      rep.lower_minimizer = lo.x;
      rep.upper_value = hi.value / s;
      rep.upper_minimizer = hi.x;
      break;
    }
    case BoundVariant::l1: {
      const BoundSolution lo = lb_l1_variant(inst.v, lam, s * inst.lambda1, l, opts.l1_form);
      const L1UpperSolution hi =
          ub_l1_variant(inst.v, lam, s * inst.lambda1, u, opts.fixed_point, opts.l1_form);
      rep.lower_value = lo.value / s;
      rep.lower_minimizer = lo.x;
      rep.upper_value = hi.value / s;
      rep.upper_minimizer = hi.x;
      break;
    }
    case BoundVariant::l0: {
      const BoundSolution lo = lb_l0_variant(inst.v, lam, s * inst.lambda0, l);
      const L0UpperSolution hi = ub_l0_variant(inst.v, lam, s * inst.lambda0, u);
      rep.lower_value = lo.value / s;
      rep.lower_minimizer = lo.x;
      rep.upper_value = hi.value / s;
      rep.upper_relaxed_value = hi.relaxed_value / s;
      rep.upper_minimizer = hi.x;
      break;
    }
  }
  return rep;
}

}  // namespace sogl
