#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sogl/core.hpp"
#include "sogl/errors.hpp"
#include "sogl/solve_report.hpp"

namespace sogl {

/// Direction whose inner product the y-step maximizes over the ball product.
///  - shifted:      G(z - 2v)
///  - substituted:  G z, obtained by plugging the z-minimizer back into psi.
enum class DualDirection { shifted, substituted };

struct DualState {
  BlockVector y_tilde;
  Vector z;
  int iter = 0;
};

struct DualConfig {
  int max_iters = 1000;
  /// Convergence when successive y-tilde iterates differ by at most tol (max-norm).
  double tol = 1e-12;
  DualDirection direction = DualDirection::shifted;
  bool trace = false;
  /// Called after every y-step with the freshly updated state.
  std::function<void(const DualState&)> on_iterate;
};

/// Raised when the (support, sign) pattern of z returns to an earlier,
/// non-consecutive pattern. Carries the best candidate seen so the caller can
/// use it or fall back to solve_admm.
class DualCycleError : public std::runtime_error {
 public:
  DualCycleError(const std::string& what, SolveReport best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const SolveReport& best() const noexcept { return best_; }

 private:
  SolveReport best_;
};

/// z = H_{sqrt(2 s lambda0)}(v + s G^T y~), the exact minimizer of psi(., y~).
inline Vector dual_z_step(const BlockVector& y_tilde, const ProxInstance& inst,
                          const GroupStructure& gs) {
  return hard_threshold(inst.v + inst.s * scatter_add(y_tilde, gs),
                        std::sqrt(2.0 * inst.s * inst.lambda0));
}

/// Maximizes y~^T d over ||y_i|| <= lambda1 w_i: y_i = lambda1 w_i d_i / ||d_i||,
/// and y_i = 0 where d_i = 0.
inline BlockVector dual_y_step(const Vector& z, const ProxInstance& inst, const GroupStructure& gs,
                               DualDirection dir = DualDirection::shifted) {
  const Vector dir_vec = dir == DualDirection::shifted ? Vector(z - 2.0 * inst.v) : z;
  BlockVector d = gather(dir_vec, gs);
  for (Index i = 0; i < gs.m(); ++i) {
    auto b = d.block(i);
    const double norm = b.norm();
    if (norm > 0.0) {
      b *= inst.lambda1 * gs.weight(i) / norm;
    } else {
      b.setZero();
    }
  }
  return d;
}

/// psi(z, y~) = 1/(2s)||z - (v + s G^T y~)||^2 + lambda0 ||z||_0 - 1/(2s)||v + s G^T y~||^2
inline double dual_objective(const Vector& z, const BlockVector& y_tilde, const ProxInstance& inst,
                             const GroupStructure& gs) {
  const Vector shifted = inst.v + inst.s * scatter_add(y_tilde, gs);
  return (z - shifted).squaredNorm() / (2.0 * inst.s) +
         inst.lambda0 * static_cast<double>(l0_norm(z)) - shifted.squaredNorm() / (2.0 * inst.s);
}

namespace detail {

inline std::vector<std::int8_t> sign_pattern(const Vector& z) {
  std::vector<std::int8_t> p(static_cast<std::size_t>(z.size()));
  for (Index i = 0; i < z.size(); ++i) p[static_cast<std::size_t>(i)] = (z[i] > 0) - (z[i] < 0);
  return p;
}

/// Index of an earlier, non-consecutive entry of `history` equal to `pat`, if any.
/// A repeat of the latest pattern is a stall, not a cycle.
inline std::optional<std::size_t> revisited_pattern(const std::vector<std::vector<std::int8_t>>& history,
                                                    const std::vector<std::int8_t>& pat) {
  if (history.empty() || pat == history.back()) return std::nullopt;
  for (std::size_t j = 0; j + 1 < history.size(); ++j) {
    if (history[j] == pat) return j;
  }
  return std::nullopt;
}

}  // namespace detail

/// Alternates exact z-minimization and the analytic y-step from y~ = 0.
/// Heuristic companion to solve_admm: no convergence guarantee.
inline SolveReport solve_dual(const ProxInstance& inst, const GroupStructure& gs,
                              const DualConfig& cfg = {}) {
  inst.validate(gs);
  if (cfg.max_iters < 1) throw ValidationError("max_iters", "must be at least 1");
  const auto start = std::chrono::steady_clock::now();

  DualState st{BlockVector(gs), Vector::Zero(gs.n()), 0};
  SolveReport rep;
  rep.algorithm = "dual";

  std::vector<std::vector<std::int8_t>> patterns;
  Vector best_z;
  double best_obj = std::numeric_limits<double>::infinity();
  auto finish = [&](Termination why) {
    rep.termination = why;
    rep.converged = why == Termination::converged;
    rep.x_final = st.z;
    rep.objective = objective_f(st.z, inst, gs);
    rep.iters = st.iter;
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  for (int it = 1; it <= cfg.max_iters; ++it) {
    const Vector prev_z = st.z;
    st.z = dual_z_step(st.y_tilde, inst, gs);
    BlockVector next_y = dual_y_step(st.z, inst, gs, cfg.direction);
    const Vector y_diff = next_y.stacked() - st.y_tilde.stacked();
    const double y_change = y_diff.size() == 0 ? 0.0 : y_diff.lpNorm<Eigen::Infinity>();
    const double z_change = (st.z - prev_z).norm();
    st.y_tilde = std::move(next_y);
    st.iter = it;
    if (!st.z.allFinite() || !st.y_tilde.stacked().allFinite()) {
      throw NonFiniteError("dual iterate " + std::to_string(it) + " is not finite");
    }
    if (cfg.on_iterate) cfg.on_iterate(st);

    const double obj = objective_f(st.z, inst, gs);
    if (obj < best_obj) {
      best_obj = obj;
      best_z = st.z;
    }
    if (cfg.trace) {
      rep.trace.push_back({it, obj, z_change, y_change});
    }

    if (y_change <= cfg.tol) {
      finish(Termination::converged);
      return rep;
    }

    auto pat = detail::sign_pattern(st.z);
    if (const auto j = detail::revisited_pattern(patterns, pat)) {
      finish(Termination::cycle_detected);
      rep.x_final = best_z;
      rep.objective = best_obj;
      throw DualCycleError("dual alternation revisited the support pattern of iteration " +
                               std::to_string(*j + 1) + " at iteration " + std::to_string(it),
                           rep);
    }
    patterns.push_back(std::move(pat));
  }
  finish(Termination::max_iters);
  return rep;
}

}  // namespace sogl
