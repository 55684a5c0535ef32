#pragma once

// Brute-force reference solvers. Everything here is written against raw
// vector arithmetic and the GroupStructure index lists only, so it can certify
// the thresholding rules, solvers and bound problems without sharing their code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "sogl/core.hpp"
#include "sogl/errors.hpp"

namespace sogl {

enum class OracleMethod { support_enum, grid_1d, c_scan, subset_full };

inline const char* to_string(OracleMethod m) {
  switch (m) {
    case OracleMethod::support_enum: return "support_enum";
    case OracleMethod::grid_1d: return "grid_1d";
    case OracleMethod::c_scan: return "c_scan";
    case OracleMethod::subset_full: return "subset_full";
  }
  return "unknown";
}

struct OracleResult {
  double value = 0.0;
  Vector minimizer;
  OracleMethod method = OracleMethod::support_enum;
};

/// Penalty scales of the composite objective
///   1/(2s)||x - v||^2 + group sum_i w_i ||x_{G_i}|| + l1 ||x||_1 + l0 ||x||_0.
struct CompositePenalty {
  double group = 0.0;
  double l1 = 0.0;
  double l0 = 0.0;
};

namespace oracle_detail {

inline double composite_objective(const Vector& x, const Vector& v, double s, const GroupStructure& gs,
                                  const CompositePenalty& pen) {
  double quad = 0.0, l1 = 0.0, nnz = 0.0;
  for (Index j = 0; j < x.size(); ++j) {
    quad += (x[j] - v[j]) * (x[j] - v[j]);
    l1 += std::abs(x[j]);
    nnz += x[j] != 0.0 ? 1.0 : 0.0;
  }
  double grp = 0.0;
  for (Index i = 0; i < gs.m(); ++i) {
    double sq = 0.0;
    for (Index g : gs.group(i)) sq += x[g] * x[g];
    grp += gs.weight(i) * std::sqrt(sq);
  }
  return quad / (2.0 * s) + pen.group * grp + pen.l1 * l1 + pen.l0 * nnz;
}

/// Norm blocks of the support-restricted smooth problem, in local coordinates.
struct RestrictedBlock {
  std::vector<Index> idx;
  double coef;
};

/// min 1/2||q - a||^2 + sum_b coef_b ||q_{B_b}||_2 by damped Newton on the smoothed
/// norms sqrt(||q_B||^2 + eps^2), following eps = 1, 1e-1, ..., 1e-14 and finishing
/// with eps = 0. The objective is smooth wherever no block vanishes; at the support of
/// a global minimizer every block is nonzero and the final stage converges
/// quadratically. Elsewhere the returned point is only a feasible candidate.
inline Vector restricted_newton(const Vector& a, const std::vector<RestrictedBlock>& blocks) {
  const Index d = a.size();
  auto value = [&](const Vector& q, double eps2) {
    double f = 0.5 * (q - a).squaredNorm();
    for (const auto& b : blocks) {
      double sq = eps2;
      for (Index k : b.idx) sq += q[k] * q[k];
      f += b.coef * std::sqrt(sq);
    }
    return f;
  };
  // Returns the Newton step at q; `decrement` receives -grad . step.
  auto newton_step = [&](const Vector& q, double eps2, double& decrement) {
    Vector grad = q - a;
    Eigen::MatrixXd hess = Eigen::MatrixXd::Identity(d, d);
    for (const auto& b : blocks) {
      double sq = eps2;
      for (Index k : b.idx) sq += q[k] * q[k];
      if (sq == 0.0) continue;
      const double r = std::sqrt(sq);
      for (Index row : b.idx) {
        grad[row] += b.coef * q[row] / r;
        for (Index col : b.idx) {
          hess(row, col) += b.coef * ((row == col ? 1.0 : 0.0) - q[row] * q[col] / sq) / r;
        }
      }
    }
    Vector step = -hess.llt().solve(grad);
    decrement = -grad.dot(step);
    return step;
  };

  Vector q = a;
  for (int stage = 0; stage <= 15; ++stage) {
    const double eps = stage == 15 ? 0.0 : std::pow(10.0, -stage);
    const double eps2 = eps * eps;
    double fq = value(q, eps2);
    for (int it = 0; it < 100; ++it) {
      double decrement = 0.0;
      Vector step = newton_step(q, eps2, decrement);
      if (!(decrement > 1e-30)) break;

      double t = 1.0;
      Vector trial = q + step;
      double ft = value(trial, eps2);
      while (ft > fq - 1e-4 * t * decrement && t > 1e-20) {
        t *= 0.5;
        trial = q + t * step;
        ft = value(trial, eps2);
      }
      if (!(ft < fq)) {
        // f no longer resolves progress: finish with full steps while they shrink.
        if (decrement > 1e-14 * (1.0 + std::abs(fq))) break;
        for (int k = 0; k < 5; ++k) {
          q += step;
          double dec = 0.0;
          const Vector next = newton_step(q, eps2, dec);
          if (!(next.norm() < step.norm())) break;
          step = next;
        }
        break;
      }
      q = std::move(trial);
      fq = ft;
    }
  }
  return q;
}

}  // namespace oracle_detail

/**
 * Global minimizer of the composite objective by enumerating every support
 * S of {0..n-1}: the convex part restricted to S (quadratic, weighted group norms
 * of G_i cap S, l1 as singleton norms) is minimized by Newton, and the full
 * objective including l0 times the actual nonzero count is evaluated at the
 * result. Throws TooLargeError when n > n_limit.
 */
inline OracleResult oracle_composite(const Vector& v, double s, const GroupStructure& gs,
                                     const CompositePenalty& pen, Index n_limit = 12) {
  const Index n = gs.n();
  if (n > n_limit || n > 30) {
    throw TooLargeError("oracle enumeration limited to n <= " + std::to_string(n_limit) + ", got n = " +
                        std::to_string(n));
  }

  OracleResult best{std::numeric_limits<double>::infinity(), Vector::Zero(n), OracleMethod::support_enum};
  const std::uint32_t masks = std::uint32_t{1} << n;
  std::vector<Index> local(static_cast<std::size_t>(n));
  for (std::uint32_t mask = 0; mask < masks; ++mask) {
    std::vector<Index> support;
    for (Index j = 0; j < n; ++j) {
      if (mask & (std::uint32_t{1} << j)) {
        local[static_cast<std::size_t>(j)] = static_cast<Index>(support.size());
        support.push_back(j);
      } else {
        local[static_cast<std::size_t>(j)] = -1;
      }
    }
    const auto d = static_cast<Index>(support.size());
    Vector x = Vector::Zero(n);
    if (d > 0) {
      // Scaled form: 1/2||q - v_S||^2 + s * penalties.
      Vector a(d);
      for (Index k = 0; k < d; ++k) a[k] = v[support[static_cast<std::size_t>(k)]];
      std::vector<oracle_detail::RestrictedBlock> blocks;
      if (pen.group > 0.0) {
        for (Index i = 0; i < gs.m(); ++i) {
          oracle_detail::RestrictedBlock b{{}, s * pen.group * gs.weight(i)};
          for (Index g : gs.group(i)) {
            if (local[static_cast<std::size_t>(g)] >= 0) b.idx.push_back(local[static_cast<std::size_t>(g)]);
          }
          if (!b.idx.empty()) blocks.push_back(std::move(b));
        }
      }
      if (pen.l1 > 0.0) {
        for (Index k = 0; k < d; ++k) blocks.push_back({{k}, s * pen.l1});
      }
      const Vector q = oracle_detail::restricted_newton(a, blocks);
      for (Index k = 0; k < d; ++k) x[support[static_cast<std::size_t>(k)]] = q[k];
    }
    const double val = oracle_detail::composite_objective(x, v, s, gs, pen);
    if (val < best.value) {
      best.value = val;
      best.minimizer = std::move(x);
    }
  }
  return best;
}

/// Global minimizer of F(x) = 1/(2s)||x - v||^2 + lambda0 ||x||_0 + lambda1 sum_i w_i ||x_{G_i}||.
inline OracleResult oracle_prox_l0_ogl(const ProxInstance& inst, const GroupStructure& gs,
                                       Index n_limit = 12) {
  inst.validate(gs);
  return oracle_composite(inst.v, inst.s, gs, {inst.lambda1, 0.0, inst.lambda0}, n_limit);
}

/**
 * 1-D minimization of `f` over [lo, hi]: a grid with step `resolution` (0 always
 * included), then golden-section refinement on the bracket around the best cell
 * down to 1e-10 in the argument. The best of grid point, refined point and 0 wins.
 */
inline OracleResult oracle_grid_1d(const std::function<double(double)>& f, double lo, double hi,
                                   double resolution = 1e-3) {
  double best_x = 0.0;
  double best_f = (lo <= 0.0 && 0.0 <= hi) ? f(0.0) : std::numeric_limits<double>::infinity();
  if (!(lo <= 0.0 && 0.0 <= hi)) best_x = lo;
  const auto steps = static_cast<long>(std::ceil((hi - lo) / resolution));
  for (long k = 0; k <= steps; ++k) {
    const double x = std::min(hi, lo + static_cast<double>(k) * resolution);
    const double fx = f(x);
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
    }
  }

  double a = std::max(lo, best_x - resolution);
  double b = std::min(hi, best_x + resolution);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > 1e-10) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double xr = 0.5 * (a + b);
  const double fr = f(xr);
  if (fr < best_f) {
    best_f = fr;
    best_x = xr;
  }
  return {best_f, Vector::Constant(1, best_x), OracleMethod::grid_1d};
}

/**
 * min 1/2||x - v||^2 + lambda ||U x||_2 over the one-parameter family
 * x(c) = (I + lambda U^2 / c)^{-1} v, plus the candidate x = 0 on the penalized
 * block. c runs over a log grid on [1e-12, 10 ||U v||] followed by golden-section
 * refinement in log c. Coordinates with u_j = 0 keep x_j = v_j.
 */
inline OracleResult oracle_c_scan(const Vector& v, double lambda, const Vector& u) {
  auto x_of = [&](double c) {
    Vector x = v;
    for (Index i = 0; i < v.size(); ++i) {
      if (u[i] > 0.0) x[i] = c * v[i] / (c + lambda * u[i] * u[i]);
    }
    return x;
  };
  auto objective = [&](const Vector& x) {
    double quad = 0.0, ux = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
      quad += (x[i] - v[i]) * (x[i] - v[i]);
      ux += u[i] * u[i] * x[i] * x[i];
    }
    return 0.5 * quad + lambda * std::sqrt(ux);
  };

  Vector zero_pen = v;
  for (Index i = 0; i < v.size(); ++i) {
    if (u[i] > 0.0) zero_pen[i] = 0.0;
  }
  OracleResult best{objective(zero_pen), zero_pen, OracleMethod::c_scan};
  if (lambda == 0.0) return {objective(v), v, OracleMethod::c_scan};

  double uv = 0.0;
  for (Index i = 0; i < v.size(); ++i) uv += u[i] * u[i] * v[i] * v[i];
  uv = std::sqrt(uv);
  if (uv == 0.0) return best;

  const double log_lo = std::log(1e-12);
  const double log_hi = std::log(10.0 * uv);
  const int points = 4000;
  const double h = (log_hi - log_lo) / points;
  auto g = [&](double t) { return objective(x_of(std::exp(t))); };
  int best_k = 0;
  double best_g = g(log_lo);
  for (int k = 1; k <= points; ++k) {
    const double gk = g(log_lo + k * h);
    if (gk < best_g) {
      best_g = gk;
      best_k = k;
    }
  }

  double a = log_lo + std::max(0, best_k - 1) * h;
  double b = log_lo + std::min(points, best_k + 1) * h;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double gc = g(c), gd = g(d);
  for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
    if (gc < gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - inv_phi * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + inv_phi * (b - a);
      gd = g(d);
    }
  }
  const Vector xr = x_of(std::exp(0.5 * (a + b)));
  const double fr = objective(xr);
  if (fr < best.value) best = {fr, xr, OracleMethod::c_scan};
  return best;
}

/// min 1/2||x - v||^2 + t ||x||_2 + lambda0 ||x||_0 over all 2^n supports, each
/// solved by block shrinkage of v_S. Throws TooLargeError when n > n_limit.
inline OracleResult oracle_subset_l2_l0(const Vector& v, double t, double lambda0, Index n_limit = 16) {
  const Index n = v.size();
  if (n > n_limit || n > 30) {
    throw TooLargeError("subset enumeration limited to n <= " + std::to_string(n_limit));
  }
  OracleResult best{std::numeric_limits<double>::infinity(), Vector::Zero(n), OracleMethod::subset_full};
  const std::uint32_t masks = std::uint32_t{1} << n;
  for (std::uint32_t mask = 0; mask < masks; ++mask) {
    double norm_s = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (mask & (std::uint32_t{1} << j)) norm_s += v[j] * v[j];
    }
    norm_s = std::sqrt(norm_s);
    const double scale = norm_s > t ? 1.0 - t / norm_s : 0.0;
    Vector x = Vector::Zero(n);
    double quad = 0.0, xn = 0.0, nnz = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (mask & (std::uint32_t{1} << j)) x[j] = scale * v[j];
      quad += (x[j] - v[j]) * (x[j] - v[j]);
      xn += x[j] * x[j];
      nnz += x[j] != 0.0 ? 1.0 : 0.0;
    }
    const double val = 0.5 * quad + t * std::sqrt(xn) + lambda0 * nnz;
    if (val < best.value) {
      best.value = val;
      best.minimizer = std::move(x);
    }
  }
  return best;
}

struct StationarityResult {
  bool stationary = false;
  double residual = 0.0;
  /// Max-norm gradient residual on the support of x.
  double support_residual = 0.0;
  /// Subgradient inclusion residual on the zero coordinates (lambda0 = 0 only).
  double zero_residual = 0.0;
  /// Largest decrease of F obtained by zeroing a single nonzero coordinate.
  double zeroing_gain = 0.0;
};

/**
 * First-order check of x for F(x) = 1/(2s)||x - v||^2 + lambda0 ||x||_0 + lambda1 sum w_i ||x_{G_i}||.
 *
 * On the support every containing group is nonzero, so F is differentiable there and
 * the gradient must vanish. Off the support, with lambda0 > 0 the l0 jump makes every
 * zero coordinate locally optimal; with lambda0 = 0 the zero groups must supply
 * subgradients mu_i, ||mu_i|| <= 1, with v_j / s = lambda1 sum_i w_i (mu_i)_j, which is
 * checked by accelerated projected gradient on the least-squares mismatch. When
 * lambda0 > 0, zeroing any single nonzero coordinate must not decrease F.
 */
inline StationarityResult stationarity_check(const Vector& x, const ProxInstance& inst,
                                             const GroupStructure& gs, double tol = 1e-6) {
  inst.validate(gs);
  if (x.size() != gs.n()) throw ValidationError("x", "length does not match n");
  const Index n = gs.n();
  const CompositePenalty pen{inst.lambda1, 0.0, inst.lambda0};

  Vector gnorm(gs.m());
  for (Index i = 0; i < gs.m(); ++i) {
    double sq = 0.0;
    for (Index g : gs.group(i)) sq += x[g] * x[g];
    gnorm[i] = std::sqrt(sq);
  }

  StationarityResult out;
  Vector grad = (x - inst.v) / inst.s;
  for (Index i = 0; i < gs.m(); ++i) {
    if (gnorm[i] == 0.0) continue;
    for (Index g : gs.group(i)) grad[g] += inst.lambda1 * gs.weight(i) * x[g] / gnorm[i];
  }
  for (Index j = 0; j < n; ++j) {
    if (x[j] != 0.0) out.support_residual = std::max(out.support_residual, std::abs(grad[j]));
  }

  if (inst.lambda0 == 0.0) {
    // Required subgradient mass b_j = v_j / s on every zero coordinate.
    std::vector<Index> zero_groups;
    for (Index i = 0; i < gs.m(); ++i) {
      if (gnorm[i] == 0.0) zero_groups.push_back(i);
    }
    Vector b = Vector::Zero(n);
    for (Index j = 0; j < n; ++j) {
      if (x[j] == 0.0) b[j] = inst.v[j] / inst.s;
    }
    std::vector<Vector> mu, mu_prev, ext;
    for (Index i : zero_groups) mu.push_back(Vector::Zero(gs.group_size(i)));
    mu_prev = mu;
    ext = mu;
    int kmax = 1;
    for (Index j = 0; j < n; ++j) kmax = std::max(kmax, gs.overlap_count(j));
    const double scale = inst.lambda1;
    auto mismatch = [&](const std::vector<Vector>& m) {
      Vector r = -b;
      for (std::size_t k = 0; k < zero_groups.size(); ++k) {
        const Index i = zero_groups[k];
        const auto& grp = gs.group(i);
        for (std::size_t p = 0; p < grp.size(); ++p) {
          r[grp[p]] += scale * gs.weight(i) * m[k][static_cast<Index>(p)];
        }
      }
      // Nonzero coordinates carry no requirement here.
      for (Index j = 0; j < n; ++j) {
        if (x[j] != 0.0) r[j] = 0.0;
      }
      return r;
    };
    if (!zero_groups.empty() && scale > 0.0) {
      double wmax = gs.weights().maxCoeff();
      const double step = 1.0 / (scale * scale * wmax * wmax * kmax);
      double tk = 1.0;
      for (int it = 0; it < 20000; ++it) {
        const Vector r = mismatch(ext);
        if (r.lpNorm<Eigen::Infinity>() <= 0.1 * tol) break;
        mu_prev = mu;
        for (std::size_t k = 0; k < zero_groups.size(); ++k) {
          const Index i = zero_groups[k];
          const auto& grp = gs.group(i);
          Vector next = ext[k];
          for (std::size_t p = 0; p < grp.size(); ++p) {
            next[static_cast<Index>(p)] -= step * scale * gs.weight(i) * r[grp[p]];
          }
          const double nn = next.norm();
          if (nn > 1.0) next /= nn;
          mu[k] = next;
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
        for (std::size_t k = 0; k < mu.size(); ++k) ext[k] = mu[k] + ((tk - 1.0) / tn) * (mu[k] - mu_prev[k]);
        tk = tn;
      }
      out.zero_residual = std::min(mismatch(mu).lpNorm<Eigen::Infinity>(),
                                   mismatch(ext).lpNorm<Eigen::Infinity>());
    } else {
      out.zero_residual = n > 0 ? mismatch(mu).lpNorm<Eigen::Infinity>() : 0.0;
    }
  } else {
    const double fx = oracle_detail::composite_objective(x, inst.v, inst.s, gs, pen);
    for (Index j = 0; j < n; ++j) {
      if (x[j] == 0.0) continue;
      Vector y = x;
      y[j] = 0.0;
      const double fy = oracle_detail::composite_objective(y, inst.v, inst.s, gs, pen);
      out.zeroing_gain = std::max(out.zeroing_gain, fx - fy);
    }
  }

  out.residual = std::max({out.support_residual, out.zero_residual, out.zeroing_gain});
  out.stationary = out.residual <= tol;
  return out;
}

}  // namespace sogl
