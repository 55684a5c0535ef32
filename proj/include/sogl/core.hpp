#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sogl/errors.hpp"

namespace sogl {

using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Position of one global variable inside one group: `pos`-th entry of group `group`.
struct Slot {
  Index group;
  Index pos;
};

/**
 * Index groups G_0..G_{m-1} over n global variables, with positive weights.
 *
 * Derived data:
 *  - overlap count k_g: the number of groups containing variable g (the
 *    diagonal of G^T G for the stacked selection matrix G);
 *  - membership(g): every (group, position) slot that maps to g;
 *  - offsets: start of each group inside the stacked vector of length
 *    total_size() = sum_i |G_i|.
 *
 * Variables covered by no group are allowed (k_g = 0).
 */
class GroupStructure {
 public:
  GroupStructure() = default;

  GroupStructure(Index n, std::vector<std::vector<Index>> groups,
                 std::vector<double> weights = {})
      : n_(n), groups_(std::move(groups)) {
    if (n_ < 0) throw ValidationError("n", "must be nonnegative");
    if (weights.empty()) weights.assign(groups_.size(), 1.0);
    if (weights.size() != groups_.size()) {
      throw ValidationError("weights", "expected " + std::to_string(groups_.size()) +
                                           " entries, got " + std::to_string(weights.size()));
    }
    weights_ = Eigen::Map<const Vector>(weights.data(), static_cast<Index>(weights.size()));

    counts_ = Eigen::VectorXi::Zero(n_);
    membership_.assign(static_cast<std::size_t>(n_), {});
    offsets_.assign(1, 0);
    offsets_.reserve(groups_.size() + 1);
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      const auto& g = groups_[i];
      const std::string name = "groups[" + std::to_string(i) + "]";
      if (g.empty()) throw ValidationError(name, "group is empty");
      if (!(weights_[static_cast<Index>(i)] > 0.0) || !std::isfinite(weights_[static_cast<Index>(i)])) {
        throw ValidationError("weights[" + std::to_string(i) + "]", "must be positive and finite");
      }
      for (std::size_t j = 0; j < g.size(); ++j) {
        const Index idx = g[j];
        if (idx < 0 || idx >= n_) {
          throw ValidationError(name + "[" + std::to_string(j) + "]",
                                "index " + std::to_string(idx) + " out of range [0, " +
                                    std::to_string(n_) + ")");
        }
        auto& slots = membership_[static_cast<std::size_t>(idx)];
        if (!slots.empty() && slots.back().group == static_cast<Index>(i)) {
          throw ValidationError(name + "[" + std::to_string(j) + "]",
                                "duplicate index " + std::to_string(idx) + " within group");
        }
        slots.push_back({static_cast<Index>(i), static_cast<Index>(j)});
        ++counts_[idx];
      }
      offsets_.push_back(offsets_.back() + static_cast<Index>(g.size()));
    }
  }

  Index n() const noexcept { return n_; }
  Index m() const noexcept { return static_cast<Index>(groups_.size()); }
  Index total_size() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }

  const std::vector<Index>& group(Index i) const { return groups_[static_cast<std::size_t>(i)]; }
  const std::vector<std::vector<Index>>& groups() const noexcept { return groups_; }
  Index group_size(Index i) const { return static_cast<Index>(group(i).size()); }
  Index offset(Index i) const { return offsets_[static_cast<std::size_t>(i)]; }
  const std::vector<Index>& offsets() const noexcept { return offsets_; }

  double weight(Index i) const { return weights_[i]; }
  const Vector& weights() const noexcept { return weights_; }

  int overlap_count(Index g) const { return counts_[g]; }
  const Eigen::VectorXi& overlap_counts() const noexcept { return counts_; }

  std::span<const Slot> membership(Index g) const {
    return membership_[static_cast<std::size_t>(g)];
  }

 private:
  Index n_ = 0;
  std::vector<std::vector<Index>> groups_;
  Vector weights_;
  Eigen::VectorXi counts_;
  std::vector<std::vector<Slot>> membership_;
  std::vector<Index> offsets_{0};
};

/**
 * Data of one prox evaluation:
 *   F(x) = 1/(2s) ||x - v||^2 + lambda0 ||x||_0 + lambda1 sum_i w_i ||x_{G_i}||_2.
 * `lambda` scales the weighted group term in the bound problems.
 */
struct ProxInstance {
  Vector v;
  double s = 1.0;
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  double lambda = 0.0;

  void validate(const GroupStructure& gs) const {
    if (v.size() != gs.n()) {
      throw ValidationError("v", "length " + std::to_string(v.size()) + " does not match n = " +
                                     std::to_string(gs.n()));
    }
    for (Index i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i])) throw ValidationError("v[" + std::to_string(i) + "]", "not finite");
    }
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("s", "must be positive and finite");
    auto nonneg = [](const char* name, double value) {
      if (!(value >= 0.0) || !std::isfinite(value)) {
        throw ValidationError(name, "must be nonnegative and finite");
      }
    };
    nonneg("lambda0", lambda0);
    nonneg("lambda1", lambda1);
    nonneg("lambda", lambda);
  }
};

/// Stacked per-group blocks [b_0; b_1; ...; b_{m-1}] aligned with a GroupStructure.
class BlockVector {
 public:
  BlockVector() = default;

  explicit BlockVector(const GroupStructure& gs)
      : data_(Vector::Zero(gs.total_size())), offsets_(gs.offsets()) {}

  BlockVector(const GroupStructure& gs, Vector stacked) : data_(std::move(stacked)), offsets_(gs.offsets()) {
    if (data_.size() != gs.total_size()) {
      throw ValidationError("blocks", "stacked length does not match total group size");
    }
  }

  Index block_count() const noexcept { return static_cast<Index>(offsets_.size()) - 1; }
  Index block_size(Index i) const {
    return offsets_[static_cast<std::size_t>(i) + 1] - offsets_[static_cast<std::size_t>(i)];
  }

  auto block(Index i) { return data_.segment(offsets_[static_cast<std::size_t>(i)], block_size(i)); }
  auto block(Index i) const {
    return data_.segment(offsets_[static_cast<std::size_t>(i)], block_size(i));
  }

  Vector& stacked() noexcept { return data_; }
  const Vector& stacked() const noexcept { return data_; }

 private:
  Vector data_;
  std::vector<Index> offsets_{0};
};

// ---------------------------------------------------------------------------
// Thresholding primitives

/// Block soft-threshold (||a|| - t)_+ a / ||a||; zero whenever ||a|| <= t.
template <typename Derived>
Vector soft_threshold_group(const Eigen::MatrixBase<Derived>& a, double t) {
  const double norm = a.norm();
  if (norm <= t) return Vector::Zero(a.size());
  return ((norm - t) / norm) * a;
}

/// Scalar soft-threshold sign(u) max(|u| - t, 0).
inline double soft_threshold(double u, double t) {
  if (u > t) return u - t;
  if (u < -t) return u + t;
  return 0.0;
}

/// Hard-threshold: keeps u when |u| > t, zero otherwise (ties go to zero).
inline double hard_threshold(double u, double t) { return std::abs(u) > t ? u : 0.0; }

template <typename Derived>
Vector hard_threshold(const Eigen::MatrixBase<Derived>& u, double t) {
  Vector out(u.size());
  for (Index i = 0; i < u.size(); ++i) out[i] = hard_threshold(u[i], t);
  return out;
}

// ---------------------------------------------------------------------------
// Gather / scatter between global and stacked per-group coordinates

/// Stacked copy Gz: block i, position j holds z[G(i, j)].
inline BlockVector gather(const Vector& z, const GroupStructure& gs) {
  BlockVector out(gs);
  for (Index i = 0; i < gs.m(); ++i) {
    auto b = out.block(i);
    const auto& g = gs.group(i);
    for (Index j = 0; j < b.size(); ++j) b[j] = z[g[static_cast<std::size_t>(j)]];
  }
  return out;
}

/// G^T b: result[g] sums every block entry that maps to g.
inline Vector scatter_add(const BlockVector& b, const GroupStructure& gs) {
  Vector out = Vector::Zero(gs.n());
  for (Index i = 0; i < gs.m(); ++i) {
    const auto blk = b.block(i);
    const auto& g = gs.group(i);
    for (Index j = 0; j < blk.size(); ++j) out[g[static_cast<std::size_t>(j)]] += blk[j];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Objective pieces

inline Index l0_norm(const Vector& x) { return static_cast<Index>((x.array() != 0.0).count()); }

/// sum_i w_i ||x_{G_i}||_2
inline double weighted_group_norm(const Vector& x, const GroupStructure& gs) {
  double total = 0.0;
  for (Index i = 0; i < gs.m(); ++i) {
    double sq = 0.0;
    for (Index g : gs.group(i)) sq += x[g] * x[g];
    total += gs.weight(i) * std::sqrt(sq);
  }
  return total;
}

/// F(x) = 1/(2s)||x - v||^2 + lambda0 ||x||_0 + lambda1 sum_i w_i ||x_{G_i}||_2
inline double objective_f(const Vector& x, const ProxInstance& inst, const GroupStructure& gs) {
  return (x - inst.v).squaredNorm() / (2.0 * inst.s) +
         inst.lambda0 * static_cast<double>(l0_norm(x)) +
         inst.lambda1 * weighted_group_norm(x, gs);
}

inline bool all_finite(const Vector& x) { return x.allFinite(); }

}  // namespace sogl
