#pragma once

// Command-line driver: gen, solve, bounds, oracle, check.

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <future>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sogl/admm.hpp"
#include "sogl/bounds.hpp"
#include "sogl/dual.hpp"
#include "sogl/io.hpp"
#include "sogl/oracle.hpp"

namespace sogl {

enum ExitCode : int {
  exit_ok = 0,
  exit_usage = 1,
  exit_validation = 2,
  exit_non_finite = 3,
  exit_too_large = 4,
};

namespace cli_detail {

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

/// Runs `body`, mapping library exceptions to exit codes and messages on `err`.
inline int guarded(std::ostream& err, const std::string& context, const std::function<void()>& body) {
  const std::string prefix = context.empty() ? "error: " : "error: " + context + ": ";
  try {
    body();
    return exit_ok;
  } catch (const ValidationError& e) {
    err << prefix << "invalid " << e.what() << "\n";
    return exit_validation;
  } catch (const ParseError& e) {
    err << prefix << e.what() << "\n";
    return exit_validation;
  } catch (const NonFiniteError& e) {
    err << prefix << e.what() << "\n";
    return exit_non_finite;
  } catch (const TooLargeError& e) {
    err << prefix << e.what() << "\n";
    return exit_too_large;
  } catch (const std::filesystem::filesystem_error& e) {
    err << prefix << e.what() << "\n";
    return exit_validation;
  }
}

inline void emit(const json& j, const std::string& out_path, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty()) {
    out << text;
  } else {
    write_text_atomic(out_path, text);
  }
}

inline std::string record_name(const LoadedInstance& li, const std::string& path) {
  if (!li.name.empty()) return li.name;
  if (path == "-") return "stdin";
  return std::filesystem::path(path).stem().string();
}

struct Stamp {
  bool enabled = false;
  void apply(RunRecord& rec) const {
    if (enabled) rec.timestamp = utc_timestamp();
  }
};

// --- solve ------------------------------------------------------------------

struct SolveArgs {
  std::vector<std::string> inputs;
  std::string algorithm = "admm";
  double rho = 1.0;
  int max_iters = -1;
  double eps_abs = 1e-8;
  double eps_rel = 1e-6;
  double dual_tol = 1e-12;
  std::string dual_direction = "shifted";
  std::string trace_path;
  std::string out_path;
  std::string out_dir;
  bool with_oracle = false;
  Index limit = 12;
  Stamp stamp;
};

inline json solve_config(const SolveArgs& a, int max_iters) {
  json c = {{"algorithm", a.algorithm}, {"max_iters", max_iters}, {"trace", !a.trace_path.empty()}};
  if (a.algorithm == "admm") {
    c["rho"] = a.rho;
    c["eps_abs"] = a.eps_abs;
    c["eps_rel"] = a.eps_rel;
  } else {
    c["tol"] = a.dual_tol;
    c["dual_direction"] = a.dual_direction;
  }
  if (a.with_oracle) c["oracle_limit"] = a.limit;
  return c;
}

inline RunRecord solve_one(const SolveArgs& a, const std::string& path, std::istream& in,
                           std::vector<TraceRow>* trace_out) {
  const LoadedInstance li = parse_instance(path, in);
  const bool trace = !a.trace_path.empty();
  SolveReport rep;
  int max_iters = a.max_iters;
  if (a.algorithm == "admm") {
    AdmmConfig cfg;
    cfg.rho = a.rho;
    if (max_iters > 0) cfg.max_iters = max_iters;
    max_iters = cfg.max_iters;
    cfg.eps_abs = a.eps_abs;
    cfg.eps_rel = a.eps_rel;
    cfg.trace = trace;
    rep = solve_admm(li.inst, li.groups, cfg);
  } else {
    DualConfig cfg;
    if (max_iters > 0) cfg.max_iters = max_iters;
    max_iters = cfg.max_iters;
    cfg.tol = a.dual_tol;
    cfg.direction = a.dual_direction == "shifted" ? DualDirection::shifted : DualDirection::substituted;
    cfg.trace = trace;
    try {
      rep = solve_dual(li.inst, li.groups, cfg);
    } catch (const DualCycleError& e) {
      rep = e.best();
    }
  }
  if (a.with_oracle) {
    rep.oracle_gap = rep.objective - oracle_prox_l0_ogl(li.inst, li.groups, a.limit).value;
  }
  if (!a.stamp.enabled) rep.wall_time = 0.0;
  if (trace_out) *trace_out = rep.trace;

  RunRecord rec;
  rec.instance = record_name(li, path);
  rec.algorithm = a.algorithm;
  rec.config = solve_config(a, max_iters);
  rec.seed = li.seed;
  rec.result = std::move(rep);
  a.stamp.apply(rec);
  return rec;
}

inline int run_solve(const SolveArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
  if (a.inputs.size() == 1) {
    return guarded(err, "", [&] {
      std::vector<TraceRow> rows;
      const RunRecord rec = solve_one(a, a.inputs.front(), in, &rows);
      if (!a.trace_path.empty()) write_text_atomic(a.trace_path, trace_to_csv(rows));
      emit(record_to_json(rec), a.out_path, out);
    });
  }

  // Batch: one independent pipeline per file, each record written atomically.
  if (a.out_dir.empty()) {
    err << "error: several inputs need --out-dir\n";
    return exit_usage;
  }
  if (!a.trace_path.empty() || !a.out_path.empty()) {
    err << "error: --trace and --out take a single input; use --out-dir for batches\n";
    return exit_usage;
  }
  if (std::count(a.inputs.begin(), a.inputs.end(), std::string("-")) > 0) {
    err << "error: stdin input cannot be batched\n";
    return exit_usage;
  }
  std::filesystem::create_directories(a.out_dir);

  struct Outcome {
    int code;
    std::string messages;
  };
  std::vector<std::future<Outcome>> jobs;
  for (const auto& path : a.inputs) {
    jobs.push_back(std::async(std::launch::async, [&a, &in, path] {
      std::ostringstream msgs;
      const int code = guarded(msgs, path, [&] {
        const RunRecord rec = solve_one(a, path, in, nullptr);
        const auto target =
            std::filesystem::path(a.out_dir) / (std::filesystem::path(path).stem().string() + ".record.json");
        write_text_atomic(target.string(), record_to_json(rec).dump(2) + "\n");
      });
      return Outcome{code, msgs.str()};
    }));
  }
  int worst = exit_ok;
  for (auto& job : jobs) {
    const Outcome o = job.get();
    err << o.messages;
    worst = std::max(worst, o.code);
  }
  return worst;
}

// --- bounds / oracle / check / gen -------------------------------------------

struct BoundsArgs {
  std::string input;
  std::string variant = "plain";
  bool with_oracle = false;
  bool literal_l1 = false;
  Index limit = 12;
  double fp_tol = 1e-10;
  int fp_max_iters = 10000;
  std::string out_path;
  Stamp stamp;
};

inline int run_bounds(const BoundsArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
  return guarded(err, "", [&] {
    const LoadedInstance li = parse_instance(a.input, in);
    SandwichOptions opts;
    opts.fixed_point.tol = a.fp_tol;
    opts.fixed_point.max_iters = a.fp_max_iters;
    opts.l1_form = a.literal_l1 ? L1Form::literal : L1Form::derived;
    const BoundVariant variant = parse_bound_variant(a.variant);
    BoundsReport rep = sandwich(li.inst, li.groups, variant, opts);
    if (a.with_oracle) {
      CompositePenalty pen;
      pen.group = li.inst.lambda;
      if (variant == BoundVariant::l1) pen.l1 = li.inst.lambda1;
      if (variant == BoundVariant::l0) pen.l0 = li.inst.lambda0;
      rep.oracle_value = oracle_composite(li.inst.v, li.inst.s, li.groups, pen, a.limit).value;
    }
    RunRecord rec;
    rec.instance = record_name(li, a.input);
    rec.algorithm = std::string("bounds-") + to_string(variant);
    rec.config = {{"variant", a.variant}, {"l1_form", a.literal_l1 ? "literal" : "derived"},
                  {"fp_tol", a.fp_tol}, {"fp_max_iters", a.fp_max_iters}, {"with_oracle", a.with_oracle}};
    if (a.with_oracle) rec.config["oracle_limit"] = a.limit;
    rec.seed = li.seed;
    rec.result = std::move(rep);
    a.stamp.apply(rec);
    emit(record_to_json(rec), a.out_path, out);
  });
}

struct OracleArgs {
  std::string input;
  Index limit = 12;
  std::string out_path;
  Stamp stamp;
};

inline int run_oracle(const OracleArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
  return guarded(err, "", [&] {
    const LoadedInstance li = parse_instance(a.input, in);
    RunRecord rec;
    rec.instance = record_name(li, a.input);
    rec.algorithm = "oracle";
    rec.config = {{"limit", a.limit}};
    rec.seed = li.seed;
    rec.result = oracle_prox_l0_ogl(li.inst, li.groups, a.limit);
    a.stamp.apply(rec);
    emit(record_to_json(rec), a.out_path, out);
  });
}

/// A point file is either a bare JSON array or a run record carrying a point
/// (solve: x_final, oracle: minimizer).
inline Vector read_point(const std::string& path, std::istream& in) {
  const json j = parse_json_text(read_text(path, in), path);
  if (j.is_array()) return vector_from_json(j, "point");
  const RunRecord rec = record_from_json(j);
  if (const auto* s = std::get_if<SolveReport>(&rec.result)) return s->x_final;
  if (const auto* o = std::get_if<OracleResult>(&rec.result)) return o->minimizer;
  throw ParseError(path + ": record of kind '" + result_kind(rec.result) + "' carries no point");
}

struct CheckArgs {
  std::string input;
  std::string point;
  double tol = 1e-6;
  std::string out_path;
  Stamp stamp;
};

inline int run_check(const CheckArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
  if (a.input == "-" && a.point == "-") {
    err << "error: instance and point cannot both come from stdin\n";
    return exit_usage;
  }
  return guarded(err, "", [&] {
    const LoadedInstance li = parse_instance(a.input, in);
    const Vector x = read_point(a.point, in);
    if (x.size() != li.inst.v.size()) {
      throw ValidationError("point", "length " + std::to_string(x.size()) + " does not match n = " +
                                         std::to_string(li.inst.v.size()));
    }
    RunRecord rec;
    rec.instance = record_name(li, a.input);
    rec.algorithm = "check";
    rec.config = {{"tol", a.tol}, {"point", vector_to_json(x)}};
    rec.seed = li.seed;
    rec.result = stationarity_check(x, li.inst, li.groups, a.tol);
    a.stamp.apply(rec);
    emit(record_to_json(rec), a.out_path, out);
  });
}

struct GenArgs {
  GeneratorOptions opt;
  std::string mode = "random";
  std::string out_path;
};

inline int run_gen(GenArgs a, std::ostream& out, std::ostream& err) {
  return guarded(err, "", [&] {
    a.opt.mode = parse_overlap_mode(a.mode);
    emit(instance_to_json(generate_instance(a.opt)), a.out_path, out);
  });
}

}  // namespace cli_detail

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
inline int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
                   std::ostream& err) {
  using namespace cli_detail;
  CLI::App app{"Prox operator of the l0 sparse overlapping group lasso"};
  app.name("sogl");
  app.require_subcommand(1);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Solve the prox problem with ADMM or the dual alternation");
  solve->add_option("inputs", sa.inputs, "Instance file(s), - for stdin")->required();
  solve->add_option("--algorithm", sa.algorithm)->check(CLI::IsMember({"admm", "dual"}))->capture_default_str();
  solve->add_option("--rho", sa.rho, "ADMM penalty")->capture_default_str();
  solve->add_option("--max-iters", sa.max_iters, "Iteration cap (default 10000 admm, 1000 dual)");
  solve->add_option("--eps-abs", sa.eps_abs)->capture_default_str();
  solve->add_option("--eps-rel", sa.eps_rel)->capture_default_str();
  solve->add_option("--dual-tol", sa.dual_tol, "Dual stop threshold on y-tilde change")->capture_default_str();
  solve->add_option("--dual-direction", sa.dual_direction)
      ->check(CLI::IsMember({"shifted", "substituted"}))
      ->capture_default_str();
  solve->add_option("--trace", sa.trace_path, "Write the per-iteration trace as CSV");
  solve->add_option("--out", sa.out_path, "Write the record here instead of stdout");
  solve->add_option("--out-dir", sa.out_dir, "Batch mode: one <stem>.record.json per input");
  solve->add_flag("--with-oracle", sa.with_oracle, "Also report objective minus the brute-force optimum");
  solve->add_option("--limit", sa.limit, "Oracle size limit")->capture_default_str();
  solve->add_flag("--stamp", sa.stamp.enabled, "Record wall time and a UTC timestamp");

  BoundsArgs ba;
  auto* bounds = app.add_subcommand("bounds", "Lower and upper bound values");
  bounds->add_option("input", ba.input, "Instance file, - for stdin")->required();
  bounds->add_option("--variant", ba.variant)->check(CLI::IsMember({"plain", "l1", "l0"}))->capture_default_str();
  bounds->add_flag("--with-oracle", ba.with_oracle, "Also report the brute-force optimum");
  bounds->add_flag("--literal-l1", ba.literal_l1, "Use the literal l1 bound formulas");
  bounds->add_option("--limit", ba.limit, "Oracle size limit")->capture_default_str();
  bounds->add_option("--fp-tol", ba.fp_tol, "Fixed-point tolerance")->capture_default_str();
  bounds->add_option("--fp-max-iters", ba.fp_max_iters)->capture_default_str();
  bounds->add_option("--out", ba.out_path);
  bounds->add_flag("--stamp", ba.stamp.enabled);

  OracleArgs oa;
  auto* oracle = app.add_subcommand("oracle", "Brute-force global minimizer of the prox problem");
  oracle->add_option("input", oa.input)->required();
  oracle->add_option("--limit", oa.limit, "Largest n enumerated")->capture_default_str();
  oracle->add_option("--out", oa.out_path);
  oracle->add_flag("--stamp", oa.stamp.enabled);

  CheckArgs ca;
  auto* check = app.add_subcommand("check", "First-order stationarity of a point");
  check->add_option("input", ca.input)->required();
  check->add_option("--point", ca.point, "JSON array or a solve/oracle record")->required();
  check->add_option("--tol", ca.tol)->capture_default_str();
  check->add_option("--out", ca.out_path);
  check->add_flag("--stamp", ca.stamp.enabled);

  GenArgs ga;
  auto* gen = app.add_subcommand("gen", "Generate a seeded random instance");
  gen->add_option("--seed", ga.opt.seed)->capture_default_str();
  gen->add_option("--n", ga.opt.n)->capture_default_str();
  gen->add_option("--m", ga.opt.m)->capture_default_str();
  gen->add_option("--min-group", ga.opt.min_group)->capture_default_str();
  gen->add_option("--max-group", ga.opt.max_group)->capture_default_str();
  gen->add_option("--mode", ga.mode)->check(CLI::IsMember({"chain", "random", "nested"}))->capture_default_str();
  gen->add_option("--stride", ga.opt.stride, "Chain stride (0: max-group - 1)")->capture_default_str();
  gen->add_option("--s", ga.opt.s)->capture_default_str();
  gen->add_option("--lambda0", ga.opt.lambda0)->capture_default_str();
  gen->add_option("--lambda1", ga.opt.lambda1)->capture_default_str();
  gen->add_option("--lambda", ga.opt.lambda)->capture_default_str();
  gen->add_option("--name", ga.opt.name);
  gen->add_option("--out", ga.out_path);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return exit_ok;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_usage;
  }

  if (*solve) return run_solve(sa, in, out, err);
  if (*bounds) return run_bounds(ba, in, out, err);
  if (*oracle) return run_oracle(oa, in, out, err);
  if (*check) return run_check(ca, in, out, err);
  return run_gen(ga, out, err);
}

}  // namespace sogl
