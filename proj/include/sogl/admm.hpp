#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>

#include "sogl/core.hpp"
#include "sogl/errors.hpp"
#include "sogl/solve_report.hpp"

namespace sogl {

/// Consensus ADMM settings. Defaults: rho = 1, eps_abs = 1e-8, eps_rel = 1e-6.
struct AdmmConfig {
  double rho = 1.0;
  int max_iters = 10000;
  double eps_abs = 1e-8;
  double eps_rel = 1e-6;
  bool trace = false;
  /// Starting consensus point; defaults to v.
  std::optional<Vector> initial_point;

  void validate() const {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw ValidationError("rho", "must be positive and finite");
    if (max_iters < 1) throw ValidationError("max_iters", "must be at least 1");
    if (!(eps_abs >= 0.0)) throw ValidationError("eps_abs", "must be nonnegative");
    if (!(eps_rel >= 0.0)) throw ValidationError("eps_rel", "must be nonnegative");
  }
};

/// Per-group primal copies x, global consensus z and per-group duals y.
struct AdmmState {
  BlockVector x;
  Vector z;
  BlockVector y;
  int iter = 0;
  double r_norm = 0.0;
  double s_norm = 0.0;
};

struct Residuals {
  double r_norm = 0.0;
  double s_norm = 0.0;
  double eps_primal = 0.0;
  double eps_dual = 0.0;

  bool converged() const { return r_norm <= eps_primal && s_norm <= eps_dual; }
};

/// x = gather(z0), z = z0, y = 0 with z0 = cfg.initial_point or v.
inline AdmmState init_admm_state(const ProxInstance& inst, const GroupStructure& gs,
                                 const AdmmConfig& cfg) {
  AdmmState st;
  st.z = cfg.initial_point ? *cfg.initial_point : inst.v;
  if (st.z.size() != gs.n()) throw ValidationError("initial_point", "length does not match n");
  st.x = gather(st.z, gs);
  st.y = BlockVector(gs);
  return st;
}

/// x_i = S_{lambda1 w_i / rho}(z_i - y_i / rho), block by block.
inline BlockVector x_update(const AdmmState& st, const ProxInstance& inst, const GroupStructure& gs,
                            const AdmmConfig& cfg) {
  BlockVector zt = gather(st.z, gs);
  BlockVector out(gs);
  for (Index i = 0; i < gs.m(); ++i) {
    out.block(i) = soft_threshold_group(zt.block(i) - st.y.block(i) / cfg.rho,
                                        inst.lambda1 * gs.weight(i) / cfg.rho);
  }
  return out;
}

/// Per-coordinate z-update. With c_g = 1/s + k_g rho,
///   z_g = H_{sqrt(2 lambda0 / c_g)}((v_g / s + sum_{G(i,j)=g} (y_i)_j + rho (x_i)_j) / c_g).
inline Vector z_update(const AdmmState& st, const ProxInstance& inst, const GroupStructure& gs,
                       const AdmmConfig& cfg) {
  Vector z(gs.n());
  for (Index g = 0; g < gs.n(); ++g) {
    const double c = 1.0 / inst.s + gs.overlap_count(g) * cfg.rho;
    double num = inst.v[g] / inst.s;
    for (const Slot& sl : gs.membership(g)) {
      num += st.y.block(sl.group)[sl.pos] + cfg.rho * st.x.block(sl.group)[sl.pos];
    }
    z[g] = hard_threshold(num / c, std::sqrt(2.0 * inst.lambda0 / c));
  }
  return z;
}

/// The same z-update in stacked form: H(C^{-2}(v/s + G^T(rho x~ + y~))) with
/// C^2 = I/s + rho G^T G diagonal.
inline Vector z_update_stacked(const AdmmState& st, const ProxInstance& inst,
                               const GroupStructure& gs, const AdmmConfig& cfg) {
  const BlockVector combined(gs, cfg.rho * st.x.stacked() + st.y.stacked());
  const Vector rhs = inst.v / inst.s + scatter_add(combined, gs);
  Vector z(gs.n());
  for (Index g = 0; g < gs.n(); ++g) {
    const double c = 1.0 / inst.s + gs.overlap_count(g) * cfg.rho;
    z[g] = hard_threshold(rhs[g] / c, std::sqrt(2.0 * inst.lambda0 / c));
  }
  return z;
}

/// y_i += rho (x_i - z_i)
inline BlockVector y_update(const AdmmState& st, const GroupStructure& gs, const AdmmConfig& cfg) {
  const BlockVector zt = gather(st.z, gs);
  return BlockVector(gs, st.y.stacked() + cfg.rho * (st.x.stacked() - zt.stacked()));
}

inline Residuals residuals(const Vector& prev_z, const AdmmState& st, const GroupStructure& gs,
                           const AdmmConfig& cfg) {
  const BlockVector zt = gather(st.z, gs);
  Residuals r;
  r.r_norm = (st.x.stacked() - zt.stacked()).norm();
  const Vector k = gs.overlap_counts().cast<double>();
  r.s_norm = cfg.rho * k.cwiseProduct(st.z - prev_z).norm();
  r.eps_primal = cfg.eps_abs * std::sqrt(static_cast<double>(gs.total_size())) +
                 cfg.eps_rel * std::max(st.x.stacked().norm(), zt.stacked().norm());
  r.eps_dual = cfg.eps_abs * std::sqrt(static_cast<double>(gs.n())) +
               cfg.eps_rel * scatter_add(st.y, gs).norm();
  return r;
}

/// Runs x -> z -> y cycles until both residuals fall under their tolerances or
/// max_iters is reached. For lambda0 > 0 the result is a stationary candidate,
/// not a certified global minimizer.
///
/// Throws NonFiniteError when an iterate leaves the finite range.
inline SolveReport solve_admm(const ProxInstance& inst, const GroupStructure& gs,
                              const AdmmConfig& cfg = {}) {
  inst.validate(gs);
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  AdmmState st = init_admm_state(inst, gs, cfg);
  SolveReport rep;
  rep.algorithm = "admm";
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const Vector prev_z = st.z;
    st.x = x_update(st, inst, gs, cfg);
    st.z = z_update(st, inst, gs, cfg);
    st.y = y_update(st, gs, cfg);
    st.iter = it;

    if (!st.x.stacked().allFinite() || !st.z.allFinite() || !st.y.stacked().allFinite()) {
      throw NonFiniteError("admm iterate " + std::to_string(it) + " is not finite");
    }
    const Residuals res = residuals(prev_z, st, gs, cfg);
    st.r_norm = res.r_norm;
    st.s_norm = res.s_norm;
    if (cfg.trace) rep.trace.push_back({it, objective_f(st.z, inst, gs), res.r_norm, res.s_norm});
    if (res.converged()) {
      rep.converged = true;
      break;
    }
  }

  rep.x_final = st.z;
  rep.objective = objective_f(st.z, inst, gs);
  rep.iters = st.iter;
  rep.termination = rep.converged ? Termination::converged : Termination::max_iters;
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace sogl
