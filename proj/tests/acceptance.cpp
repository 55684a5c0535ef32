// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "sogl/sogl.hpp"
#include "support/random_instances.hpp"

using namespace sogl;
using testing_support::InstanceRanges;
using testing_support::random_instance;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

AdmmConfig tight_admm() {
  AdmmConfig cfg;
  cfg.eps_abs = 1e-12;
  cfg.eps_rel = 1e-12;
  cfg.max_iters = 20000;
  return cfg;
}

Vector randn(std::mt19937_64& rng, Index n, double scale = 1.0) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Index j = 0; j < n; ++j) v[j] = scale * normal(rng);
  return v;
}

// 1. Convex regime: ADMM objective equals the oracle optimum.
Outcome convex_equivalence() {
  std::mt19937_64 rng(1001);
  InstanceRanges r;
  r.n_min = 1;
  const auto t0 = Clock::now();
  double worst = 0.0;
  int bad = 0;
  for (int k = 0; k < 200; ++k) {
    const auto ri = random_instance(rng, r);
    const double a = solve_admm(ri.inst, ri.gs, tight_admm()).objective;
    const double o = oracle_prox_l0_ogl(ri.inst, ri.gs).value;
    const double rel = std::abs(a - o) / std::max(1.0, std::abs(o));
    worst = std::max(worst, rel);
    if (rel > 1e-6) ++bad;
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 60.0,
          "200 instances, worst rel diff " + fmt("%.2e", worst) + ", mismatches " + std::to_string(bad) +
              ", " + fmt("%.2f", secs) + " s"};
}

// 2. Nonconvex regime: ADMM never beats the global optimum and usually finds it.
Outcome nonconvex_dominance() {
  std::mt19937_64 rng(2002);
  InstanceRanges r;
  r.n_min = 1;
  r.l0_min = 0.05;
  r.l0_max = 0.55;
  int below = 0, equal = 0;
  double worst_below = 0.0;
  for (int k = 0; k < 200; ++k) {
    const auto ri = random_instance(rng, r);
    const SolveReport rep = solve_admm(ri.inst, ri.gs, tight_admm());
    const double f = objective_f(rep.x_final, ri.inst, ri.gs);
    const double o = oracle_prox_l0_ogl(ri.inst, ri.gs).value;
    if (f < o - 1e-9) {
      ++below;
      worst_below = std::max(worst_below, o - f);
    }
    if (std::abs(f - o) <= 1e-6 * std::max(1.0, std::abs(o))) ++equal;
  }
  const double rate = equal / 200.0;
  return {below == 0 && rate >= 0.6,
          "below oracle " + std::to_string(below) + ", match rate " + fmt("%.1f%%", 100.0 * rate) +
              " (" + std::to_string(equal) + "/200)"};
}

// 3. QM >= AM, the lower and the upper inequality, with their equality cases.
Outcome inequality_suite() {
  std::mt19937_64 rng(3003);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0, equality_misses = 0;
  auto slack = [](double x) { return 1e-12 * std::max(1.0, std::abs(x)); };
  InstanceRanges r;
  r.n_min = 1;
  r.n_max = 10;
  r.m_max = 5;
  r.random_weights = true;
  for (int k = 0; k < 1000; ++k) {
    // QM >= AM on a random vector, equality on constant magnitudes.
    const Index d = 1 + static_cast<Index>(rng() % 10);
    const Vector a = randn(rng, d);
    const double qm = std::sqrt(a.squaredNorm() / static_cast<double>(d));
    const double am = a.lpNorm<1>() / static_cast<double>(d);
    if (am > qm + slack(qm)) ++violations;
    Vector c = Vector::Constant(d, 0.5 + unit(rng));
    for (Index j = 0; j < d; ++j) {
      if (rng() % 2) c[j] = -c[j];
    }
    const double qc = std::sqrt(c.squaredNorm() / static_cast<double>(d));
    if (std::abs(qc - c.lpNorm<1>() / static_cast<double>(d)) > slack(qc)) ++equality_misses;

    // Group inequalities on a random structure.
    const auto ri = random_instance(rng, r);
    const Vector x = randn(rng, ri.gs.n());
    const Vector l = build_L(ri.gs).d;
    const Vector u = build_U(ri.gs).d;
    const double mid = weighted_group_norm(x, ri.gs);
    if (l.cwiseProduct(x).lpNorm<1>() > mid + slack(mid)) ++violations;
    if (mid > u.cwiseProduct(x).norm() + slack(mid)) ++violations;

    // Lower equality: constant magnitude across every group.
    Vector xc = Vector::Constant(ri.gs.n(), 0.5 + unit(rng));
    for (Index j = 0; j < xc.size(); ++j) {
      if (rng() % 2) xc[j] = -xc[j];
    }
    const double mc = weighted_group_norm(xc, ri.gs);
    if (std::abs(l.cwiseProduct(xc).lpNorm<1>() - mc) > slack(mc)) ++equality_misses;

    // Upper equality: disjoint groups with ||x_{G_i}|| proportional to w_i.
    const Index parts = 1 + static_cast<Index>(rng() % 4);
    const Index n = parts * (1 + static_cast<Index>(rng() % 3));
    std::vector<std::vector<Index>> groups(static_cast<std::size_t>(parts));
    std::vector<double> w;
    for (Index j = 0; j < n; ++j) groups[static_cast<std::size_t>(j % parts)].push_back(j);
    for (Index i = 0; i < parts; ++i) w.push_back(0.5 + unit(rng));
    const GroupStructure disjoint(n, groups, w);
    Vector xe = randn(rng, n);
    const double scale = 0.5 + unit(rng);
    for (Index i = 0; i < parts; ++i) {
      double norm = 0.0;
      for (Index j : disjoint.group(i)) norm += xe[j] * xe[j];
      norm = std::sqrt(norm);
      for (Index j : disjoint.group(i)) xe[j] *= scale * w[static_cast<std::size_t>(i)] / norm;
    }
    const double me = weighted_group_norm(xe, disjoint);
    if (std::abs(build_U(disjoint).d.cwiseProduct(xe).norm() - me) > slack(me)) ++equality_misses;
  }
  return {violations == 0 && equality_misses == 0,
          "1000 draws, violations " + std::to_string(violations) + ", equality misses " +
              std::to_string(equality_misses)};
}

// 4. Fixed-point iteration: monotone, convergent, stationary, matches the c-scan,
// independent of the start.
Outcome fixed_point_checks() {
  std::mt19937_64 rng(4004);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int fail_a = 0, fail_b = 0, fail_c = 0, fail_d = 0, fail_e = 0;
  double worst_stat = 0.0, worst_scan = 0.0, worst_init = 0.0;
  int max_iters_used = 0;
  for (int k = 0; k < 500; ++k) {
    const Index n = 1 + static_cast<Index>(rng() % 8);
    const Vector v = randn(rng, n, 2.0);
    Vector u(n);
    for (Index j = 0; j < n; ++j) u[j] = 0.2 + 2.8 * unit(rng);
    const double lambda = (0.02 + 0.97 * unit(rng)) * v.cwiseQuotient(u).norm();

    const ScaledL2Solution s = ub_scaled_l2_prox(v, lambda, u);
    const auto& norms = s.trace.norms;
    if (norms.size() >= 3) {
      const double dir = norms[2] - norms[1];
      for (std::size_t i = 2; i + 1 < norms.size(); ++i) {
        if ((norms[i + 1] - norms[i]) * (dir >= 0 ? 1.0 : -1.0) < -1e-14 * norms[i]) {
          ++fail_a;
          break;
        }
      }
    }
    max_iters_used = std::max(max_iters_used, s.trace.iters);
    const double stat = scaled_l2_stationarity(s.x, v, lambda, u);
    worst_stat = std::max(worst_stat, stat);
    if (s.trace.status != FixedPointStatus::converged || s.trace.iters > 10000 || stat > 1e-8) ++fail_b;
    if (fixed_point_equation_residual(v, u, lambda, u.cwiseProduct(s.x).norm()) > 1e-8) ++fail_c;
    const OracleResult scan = oracle_c_scan(v, lambda, u);
    const double gap = std::abs(s.value - scan.value);
    worst_scan = std::max(worst_scan, gap);
    if (gap > 1e-6) ++fail_d;
    FixedPointOptions other;
    other.start = randn(rng, n, 10.0);
    const double init = (ub_scaled_l2_prox(v, lambda, u, other).x - s.x).norm();
    worst_init = std::max(worst_init, init);
    if (init > 1e-8) ++fail_e;
  }
  const bool pass = fail_a + fail_b + fail_c + fail_d + fail_e == 0;
  std::ostringstream d;
  d << "500 draws, failures a/b/c/d/e = " << fail_a << "/" << fail_b << "/" << fail_c << "/" << fail_d << "/"
    << fail_e << ", max iters " << max_iters_used << ", worst stationarity " << fmt("%.1e", worst_stat)
    << ", worst scan gap " << fmt("%.1e", worst_scan) << ", worst start spread " << fmt("%.1e", worst_init);
  return {pass, d.str()};
}

// 5. lower - 1e-9 <= oracle <= upper + 1e-9 for every variant.
Outcome sandwich_property() {
  std::mt19937_64 rng(5005);
  InstanceRanges r;
  r.n_min = 1;
  r.l0_min = 0.05;
  r.l0_max = 0.6;
  r.random_weights = true;
  int bad = 0;
  std::string per_variant;
  for (auto variant : {BoundVariant::plain, BoundVariant::l1, BoundVariant::l0}) {
    int vb = 0;
    for (int k = 0; k < 100; ++k) {
      const auto ri = random_instance(rng, r);
      CompositePenalty pen{ri.inst.lambda, 0.0, 0.0};
      if (variant == BoundVariant::l1) pen.l1 = ri.inst.lambda1;
      if (variant == BoundVariant::l0) pen.l0 = ri.inst.lambda0;
      const double o = oracle_composite(ri.inst.v, ri.inst.s, ri.gs, pen).value;
      const BoundsReport b = sandwich(ri.inst, ri.gs, variant);
      if (b.lower_value - 1e-9 > o || o > b.upper_value + 1e-9) ++vb;
    }
    bad += vb;
    per_variant += std::string(per_variant.empty() ? "" : ", ") + to_string(variant) + " " +
                   std::to_string(100 - vb) + "/100";
  }
  return {bad == 0, per_variant};
}

// 6. Top-k support enumeration equals the full subset search.
Outcome topk_enumeration() {
  std::mt19937_64 rng(6006);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Index n = 1 + static_cast<Index>(rng() % 10);
    const Vector v = randn(rng, n, 1.5);
    const double t = 1.5 * unit(rng), l0 = 0.6 * unit(rng);
    worst = std::max(worst, std::abs(sparse_l2_prox(v, t, l0).value - oracle_subset_l2_l0(v, t, l0).value));
  }
  return {worst <= 1e-9, "100 instances, worst diff " + fmt("%.1e", worst)};
}

// 7. Per-coordinate z-update equals the stacked matrix form.
Outcome matrix_form() {
  std::mt19937_64 rng(7007);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  InstanceRanges r;
  r.n_min = 1;
  r.n_max = 10;
  r.m_max = 6;
  r.l0_max = 0.5;
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    auto ri = random_instance(rng, r);
    if (k % 5 == 0) {
      // Dense G: every group covers every variable.
      const Index n = ri.gs.n();
      std::vector<Index> all(static_cast<std::size_t>(n));
      std::iota(all.begin(), all.end(), Index{0});
      ri.gs = GroupStructure(n, std::vector<std::vector<Index>>(4, all));
    }
    AdmmConfig cfg;
    cfg.rho = 0.1 + 3.0 * unit(rng);
    AdmmState st = init_admm_state(ri.inst, ri.gs, cfg);
    st.x.stacked() = randn(rng, ri.gs.total_size());
    st.y.stacked() = randn(rng, ri.gs.total_size());
    const Vector a = z_update(st, ri.inst, ri.gs, cfg);
    const Vector b = z_update_stacked(st, ri.inst, ri.gs, cfg);
    worst = std::max(worst, (a - b).lpNorm<Eigen::Infinity>());
  }
  return {worst <= 1e-12, "100 trials (20 dense), worst diff " + fmt("%.1e", worst)};
}

// 8. Dual alternation: feasible iterates, optimal z-steps, never below the optimum.
Outcome dual_sanity() {
  std::mt19937_64 rng(8008);
  InstanceRanges r;
  r.n_min = 1;
  r.l0_max = 0.5;
  r.random_weights = true;
  int infeasible = 0, zstep_bad = 0, below = 0, cycles = 0;
  for (int k = 0; k < 100; ++k) {
    const auto ri = random_instance(rng, r);
    const ProxInstance& inst = ri.inst;
    DualConfig cfg;
    cfg.direction = k % 2 ? DualDirection::substituted : DualDirection::shifted;
    BlockVector prev_y(ri.gs);
    cfg.on_iterate = [&](const DualState& st) {
      for (Index i = 0; i < ri.gs.m(); ++i) {
        if (st.y_tilde.block(i).norm() > inst.lambda1 * ri.gs.weight(i) * (1.0 + 1e-12)) ++infeasible;
      }
      // z was computed from the previous y-tilde.
      const Vector a = inst.v + inst.s * scatter_add(prev_y, ri.gs);
      for (Index j = 0; j < a.size(); ++j) {
        const double fz = (st.z[j] - a[j]) * (st.z[j] - a[j]) / (2.0 * inst.s) +
                          (st.z[j] != 0.0 ? inst.lambda0 : 0.0);
        const double f0 = a[j] * a[j] / (2.0 * inst.s);
        const double fa = a[j] != 0.0 ? inst.lambda0 : 0.0;
        if (fz > std::min(f0, fa) + 1e-12) ++zstep_bad;
      }
      prev_y = st.y_tilde;
    };
    SolveReport rep;
    try {
      rep = solve_dual(inst, ri.gs, cfg);
    } catch (const DualCycleError& e) {
      ++cycles;
      rep = e.best();
    }
    if (objective_f(rep.x_final, inst, ri.gs) < oracle_prox_l0_ogl(inst, ri.gs).value - 1e-9) ++below;
  }
  return {infeasible + zstep_bad + below == 0,
          "100 instances, infeasible " + std::to_string(infeasible) + ", z-step misses " +
              std::to_string(zstep_bad) + ", below oracle " + std::to_string(below) + ", cycles " +
              std::to_string(cycles)};
}

// 9. gen -> solve -> check through the executable, twice, byte-identical.
Outcome cli_round_trip() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "sogl_acceptance_cli";
  fs::remove_all(root);
  const std::string cli = SOGL_CLI_PATH;
  const std::vector<std::string> seeds = {"1", "7", "19"};
  const std::vector<std::string> algos = {"admm", "dual"};
  int failures = 0, files = 0;
  std::vector<std::string> outputs[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = root / ("run" + std::to_string(run));
    fs::create_directories(dir);
    for (const auto& seed : seeds) {
      for (const auto& algo : algos) {
        const std::string base = (dir / (algo + "-" + seed)).string();
        const std::string cmds[] = {
            cli + " gen --seed " + seed + " --n 7 --m 3 --lambda0 0.1 --out " + base + ".inst.json",
            cli + " solve " + base + ".inst.json --algorithm " + algo + " --trace " + base + ".trace.csv --out " +
                base + ".record.json",
            cli + " check " + base + ".inst.json --point " + base + ".record.json --out " + base + ".check.json",
            cli + " gen --seed " + seed + " | " + cli + " solve - --algorithm " + algo + " > " + base + ".piped.json",
        };
        for (const auto& c : cmds) {
          if (std::system(c.c_str()) != 0) ++failures;
        }
        for (const char* ext : {".inst.json", ".trace.csv", ".record.json", ".check.json", ".piped.json"}) {
          std::ifstream in(base + ext, std::ios::binary);
          std::ostringstream ss;
          ss << in.rdbuf();
          outputs[run].push_back(ss.str());
        }
      }
    }
  }
  int differ = 0;
  for (std::size_t i = 0; i < outputs[0].size(); ++i) {
    ++files;
    if (outputs[0][i] != outputs[1][i] || outputs[0][i].empty()) ++differ;
  }
  fs::remove_all(root);
  return {failures == 0 && differ == 0,
          std::to_string(files) + " files per run, nonzero exits " + std::to_string(failures) +
              ", differing or empty files " + std::to_string(differ)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {1, "oracle equivalence, convex regime", convex_equivalence},
      {2, "oracle dominance, nonconvex regime", nonconvex_dominance},
      {3, "inequality suite", inequality_suite},
      {4, "fixed-point checks", fixed_point_checks},
      {5, "sandwich property", sandwich_property},
      {6, "top-k support enumeration", topk_enumeration},
      {7, "matrix-form z-update", matrix_form},
      {8, "dual solver sanity", dual_sanity},
      {9, "CLI round trips", cli_round_trip},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << "): " << o.detail
              << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
