#pragma once

// JSON layouts for instances and run records, CSV traces, and the seeded
// instance generator.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "sogl/bounds.hpp"
#include "sogl/core.hpp"
#include "sogl/errors.hpp"
#include "sogl/oracle.hpp"
#include "sogl/solve_report.hpp"

namespace sogl {

using json = nlohmann::json;

/// On-disk instance:
///   {"name": "...", "v": [...], "groups": [[0, 1], [1, 2]], "weights": [...],
///    "s": 1, "lambda0": 0.1, "lambda1": 0.5, "lambda": 0.5, "seed": 7}
/// `name`, `weights` and `seed` are optional; any other key is rejected.
struct InstanceFile {
  std::string name;
  Vector v;
  std::vector<std::vector<Index>> groups;
  std::optional<std::vector<double>> weights;
  double s = 1.0;
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  double lambda = 0.0;
  std::optional<std::uint64_t> seed;
};

// ---------------------------------------------------------------------------
// Vector helpers

inline json vector_to_json(const Vector& x) {
  json arr = json::array();
  for (Index i = 0; i < x.size(); ++i) arr.push_back(x[i]);
  return arr;
}

inline Vector vector_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) throw ParseError(field + ": expected an array of numbers");
  Vector out(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(field + "[" + std::to_string(i) + "]: expected a number");
    out[static_cast<Index>(i)] = j[i].get<double>();
  }
  return out;
}

namespace io_detail {

inline double number_field(const json& j, const char* key, double fallback, bool required) {
  if (!j.contains(key)) {
    if (required) throw ParseError(std::string("missing required field '") + key + "'");
    return fallback;
  }
  if (!j[key].is_number()) throw ParseError(std::string(key) + ": expected a number");
  return j[key].get<double>();
}

inline std::string read_stream(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace io_detail

// ---------------------------------------------------------------------------
// Instance files

inline InstanceFile instance_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("instance: expected a JSON object");
  static const std::set<std::string> known = {"name", "v", "groups", "weights", "s",
                                              "lambda0", "lambda1", "lambda", "seed"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw ValidationError(item.key(), "unknown field");
  }

  InstanceFile f;
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw ParseError("name: expected a string");
    f.name = j["name"].get<std::string>();
  }
  if (!j.contains("v")) throw ParseError("missing required field 'v'");
  f.v = vector_from_json(j["v"], "v");

  if (!j.contains("groups")) throw ParseError("missing required field 'groups'");
  const json& gj = j["groups"];
  if (!gj.is_array()) throw ParseError("groups: expected an array of index arrays");
  for (std::size_t i = 0; i < gj.size(); ++i) {
    const std::string name = "groups[" + std::to_string(i) + "]";
    if (!gj[i].is_array()) throw ParseError(name + ": expected an array of indices");
    std::vector<Index> g;
    for (std::size_t k = 0; k < gj[i].size(); ++k) {
      const json& e = gj[i][k];
      const std::string ename = name + "[" + std::to_string(k) + "]";
      if (e.is_number_unsigned()) {
        g.push_back(static_cast<Index>(e.get<std::uint64_t>()));
      } else if (e.is_number_integer()) {
        throw ValidationError(ename, "negative index " + std::to_string(e.get<std::int64_t>()));
      } else {
        throw ParseError(ename + ": expected an integer index");
      }
    }
    f.groups.push_back(std::move(g));
  }

  if (j.contains("weights")) {
    const Vector w = vector_from_json(j["weights"], "weights");
    f.weights = std::vector<double>(w.data(), w.data() + w.size());
  }
  f.s = io_detail::number_field(j, "s", 1.0, true);
  f.lambda0 = io_detail::number_field(j, "lambda0", 0.0, true);
  f.lambda1 = io_detail::number_field(j, "lambda1", 0.0, true);
  f.lambda = io_detail::number_field(j, "lambda", 0.0, true);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ParseError("seed: expected a nonnegative integer");
    f.seed = j["seed"].get<std::uint64_t>();
  }
  return f;
}

inline json instance_to_json(const InstanceFile& f) {
  json j;
  j["name"] = f.name;
  j["v"] = vector_to_json(f.v);
  json groups = json::array();
  for (const auto& g : f.groups) groups.push_back(g);
  j["groups"] = std::move(groups);
  if (f.weights) j["weights"] = *f.weights;
  j["s"] = f.s;
  j["lambda0"] = f.lambda0;
  j["lambda1"] = f.lambda1;
  j["lambda"] = f.lambda;
  if (f.seed) j["seed"] = *f.seed;
  return j;
}

struct LoadedInstance {
  std::string name;
  ProxInstance inst;
  GroupStructure groups;
  std::optional<std::uint64_t> seed;
};

/// Builds and validates the solver structures.
inline LoadedInstance load_instance(const InstanceFile& f) {
  LoadedInstance out;
  out.name = f.name;
  out.seed = f.seed;
  out.groups = GroupStructure(f.v.size(), f.groups, f.weights.value_or(std::vector<double>{}));
  out.inst.v = f.v;
  out.inst.s = f.s;
  out.inst.lambda0 = f.lambda0;
  out.inst.lambda1 = f.lambda1;
  out.inst.lambda = f.lambda;
  out.inst.validate(out.groups);
  return out;
}

inline json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
}

inline std::string read_text(const std::string& path, std::istream& stdin_stream = std::cin) {
  if (path == "-") return io_detail::read_stream(stdin_stream);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  return io_detail::read_stream(in);
}

/// Reads, parses and validates an instance file ("-" reads stdin).
inline LoadedInstance parse_instance(const std::string& path, std::istream& stdin_stream = std::cin) {
  return load_instance(instance_from_json(parse_json_text(read_text(path, stdin_stream), path)));
}

/// Writes `text` to `path` through a temporary file and a rename, so readers
/// never observe a partial file.
inline void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError(path + ": cannot open for writing");
    out << text;
    if (!out) throw ParseError(path + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Generator

enum class OverlapMode { chain, random, nested };

inline OverlapMode parse_overlap_mode(const std::string& s) {
  if (s == "chain") return OverlapMode::chain;
  if (s == "random") return OverlapMode::random;
  if (s == "nested") return OverlapMode::nested;
  throw ValidationError("mode", "unknown overlap mode '" + s + "'");
}

inline const char* to_string(OverlapMode m) {
  switch (m) {
    case OverlapMode::chain: return "chain";
    case OverlapMode::random: return "random";
    case OverlapMode::nested: return "nested";
  }
  return "unknown";
}

struct GeneratorOptions {
  std::uint64_t seed = 0;
  Index n = 8;
  Index m = 3;
  Index min_group = 2;
  Index max_group = 4;
  OverlapMode mode = OverlapMode::random;
  /// chain mode: distance between window starts; 0 means max_group - 1.
  Index stride = 0;
  double s = 1.0;
  double lambda0 = 0.1;
  double lambda1 = 0.5;
  double lambda = 0.5;
  std::string name;
};

/**
 * Deterministic random instance. v is drawn from a standard normal stream; groups
 * follow the overlap mode:
 *  - chain:  windows of max_group consecutive indices starting every `stride`
 *            (clamped to stay inside [0, n));
 *  - random: uniform subsets with sizes uniform in [min_group, max_group];
 *  - nested: prefixes of one random permutation with nondecreasing sizes.
 */
inline InstanceFile generate_instance(const GeneratorOptions& opt) {
  if (opt.n < 1) throw ValidationError("n", "must be at least 1");
  if (opt.m < 1) throw ValidationError("m", "must be at least 1");
  if (opt.min_group < 1 || opt.max_group < opt.min_group) {
    throw ValidationError("group_size", "need 1 <= min_group <= max_group");
  }
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  InstanceFile f;
  f.name = opt.name.empty() ? "gen-seed" + std::to_string(opt.seed) : opt.name;
  f.seed = opt.seed;
  f.s = opt.s;
  f.lambda0 = opt.lambda0;
  f.lambda1 = opt.lambda1;
  f.lambda = opt.lambda;
  f.v = Vector(opt.n);
  for (Index i = 0; i < opt.n; ++i) f.v[i] = normal(rng);

  const Index lo = std::min(opt.min_group, opt.n);
  const Index hi = std::min(opt.max_group, opt.n);
  std::uniform_int_distribution<Index> size_dist(lo, hi);
  switch (opt.mode) {
    case OverlapMode::chain: {
      const Index window = hi;
      const Index stride = opt.stride > 0 ? opt.stride : std::max<Index>(1, window - 1);
      for (Index i = 0; i < opt.m; ++i) {
        const Index start = std::min(i * stride, opt.n - window);
        std::vector<Index> g(static_cast<std::size_t>(window));
        std::iota(g.begin(), g.end(), start);
        f.groups.push_back(std::move(g));
      }
      break;
    }
    case OverlapMode::random: {
      std::vector<Index> perm(static_cast<std::size_t>(opt.n));
      for (Index i = 0; i < opt.m; ++i) {
        std::iota(perm.begin(), perm.end(), Index{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<Index> g(perm.begin(), perm.begin() + size_dist(rng));
        std::sort(g.begin(), g.end());
        f.groups.push_back(std::move(g));
      }
      break;
    }
    case OverlapMode::nested: {
      std::vector<Index> perm(static_cast<std::size_t>(opt.n));
      std::iota(perm.begin(), perm.end(), Index{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<Index> sizes(static_cast<std::size_t>(opt.m));
      for (auto& sz : sizes) sz = size_dist(rng);
      std::sort(sizes.begin(), sizes.end());
      for (Index sz : sizes) {
        std::vector<Index> g(perm.begin(), perm.begin() + sz);
        std::sort(g.begin(), g.end());
        f.groups.push_back(std::move(g));
      }
      break;
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Reports

inline json report_to_json(const SolveReport& r) {
  json trace = json::array();
  for (const auto& row : r.trace) trace.push_back({row.iter, row.objective, row.r_norm, row.s_norm});
  return {{"algorithm", r.algorithm},
          {"x_final", vector_to_json(r.x_final)},
          {"objective", r.objective},
          {"iters", r.iters},
          {"converged", r.converged},
          {"termination", to_string(r.termination)},
          {"trace", trace},
          {"wall_time", r.wall_time},
          {"oracle_gap", r.oracle_gap ? json(*r.oracle_gap) : json(nullptr)}};
}

inline Termination parse_termination(const std::string& s) {
  if (s == "converged") return Termination::converged;
  if (s == "max_iters") return Termination::max_iters;
  if (s == "cycle_detected") return Termination::cycle_detected;
  throw ParseError("termination: unknown value '" + s + "'");
}

inline std::optional<double> optional_number(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

inline SolveReport solve_report_from_json(const json& j) {
  SolveReport r;
  r.algorithm = j.at("algorithm").get<std::string>();
  r.x_final = vector_from_json(j.at("x_final"), "x_final");
  r.objective = j.at("objective").get<double>();
  r.iters = j.at("iters").get<int>();
  r.converged = j.at("converged").get<bool>();
  r.termination = parse_termination(j.at("termination").get<std::string>());
  for (const auto& row : j.at("trace")) {
    r.trace.push_back({row.at(0).get<int>(), row.at(1).get<double>(), row.at(2).get<double>(),
                       row.at(3).get<double>()});
  }
  r.wall_time = j.at("wall_time").get<double>();
  r.oracle_gap = optional_number(j, "oracle_gap");
  return r;
}

inline json report_to_json(const BoundsReport& r) {
  return {{"variant", to_string(r.variant)},
          {"lower_value", r.lower_value},
          {"upper_value", r.upper_value},
          {"lower_minimizer", vector_to_json(r.lower_minimizer)},
          {"upper_minimizer", vector_to_json(r.upper_minimizer)},
          {"upper_relaxed_value", r.upper_relaxed_value ? json(*r.upper_relaxed_value) : json(nullptr)},
          {"oracle_value", r.oracle_value ? json(*r.oracle_value) : json(nullptr)}};
}

inline BoundsReport bounds_report_from_json(const json& j) {
  BoundsReport r;
  r.variant = parse_bound_variant(j.at("variant").get<std::string>());
  r.lower_value = j.at("lower_value").get<double>();
  r.upper_value = j.at("upper_value").get<double>();
  r.lower_minimizer = vector_from_json(j.at("lower_minimizer"), "lower_minimizer");
  r.upper_minimizer = vector_from_json(j.at("upper_minimizer"), "upper_minimizer");
  r.upper_relaxed_value = optional_number(j, "upper_relaxed_value");
  r.oracle_value = optional_number(j, "oracle_value");
  return r;
}

inline OracleMethod parse_oracle_method(const std::string& s) {
  for (auto m : {OracleMethod::support_enum, OracleMethod::grid_1d, OracleMethod::c_scan,
                 OracleMethod::subset_full}) {
    if (s == to_string(m)) return m;
  }
  throw ParseError("method: unknown value '" + s + "'");
}

inline json report_to_json(const OracleResult& r) {
  return {{"value", r.value}, {"minimizer", vector_to_json(r.minimizer)}, {"method", to_string(r.method)}};
}

inline OracleResult oracle_result_from_json(const json& j) {
  return {j.at("value").get<double>(), vector_from_json(j.at("minimizer"), "minimizer"),
          parse_oracle_method(j.at("method").get<std::string>())};
}

inline json report_to_json(const StationarityResult& r) {
  return {{"stationary", r.stationary},
          {"residual", r.residual},
          {"support_residual", r.support_residual},
          {"zero_residual", r.zero_residual},
          {"zeroing_gain", r.zeroing_gain}};
}

inline StationarityResult stationarity_from_json(const json& j) {
  StationarityResult r;
  r.stationary = j.at("stationary").get<bool>();
  r.residual = j.at("residual").get<double>();
  r.support_residual = j.at("support_residual").get<double>();
  r.zero_residual = j.at("zero_residual").get<double>();
  r.zeroing_gain = j.at("zeroing_gain").get<double>();
  return r;
}

// ---------------------------------------------------------------------------
// Run records

using RunResult = std::variant<SolveReport, BoundsReport, OracleResult, StationarityResult>;

/// One CLI invocation's output: what ran, on what, with which settings.
struct RunRecord {
  std::string instance;
  std::string algorithm;
  json config = json::object();
  RunResult result;
  std::optional<std::string> timestamp;
  std::optional<std::uint64_t> seed;
};

inline const char* result_kind(const RunResult& r) {
  switch (r.index()) {
    case 0: return "solve";
    case 1: return "bounds";
    case 2: return "oracle";
    default: return "check";
  }
}

inline json record_to_json(const RunRecord& rec) {
  json j;
  j["instance"] = rec.instance;
  j["algorithm"] = rec.algorithm;
  j["config"] = rec.config;
  j["kind"] = result_kind(rec.result);
  j["result"] = std::visit([](const auto& r) { return report_to_json(r); }, rec.result);
  j["timestamp"] = rec.timestamp ? json(*rec.timestamp) : json(nullptr);
  j["seed"] = rec.seed ? json(*rec.seed) : json(nullptr);
  return j;
}

inline RunRecord record_from_json(const json& j) {
  try {
    RunRecord rec;
    rec.instance = j.at("instance").get<std::string>();
    rec.algorithm = j.at("algorithm").get<std::string>();
    rec.config = j.at("config");
    const std::string kind = j.at("kind").get<std::string>();
    const json& r = j.at("result");
    if (kind == "solve") {
      rec.result = solve_report_from_json(r);
    } else if (kind == "bounds") {
      rec.result = bounds_report_from_json(r);
    } else if (kind == "oracle") {
      rec.result = oracle_result_from_json(r);
    } else if (kind == "check") {
      rec.result = stationarity_from_json(r);
    } else {
      throw ParseError("kind: unknown value '" + kind + "'");
    }
    if (j.contains("timestamp") && !j["timestamp"].is_null()) rec.timestamp = j["timestamp"].get<std::string>();
    if (j.contains("seed") && !j["seed"].is_null()) rec.seed = j["seed"].get<std::uint64_t>();
    return rec;
  } catch (const json::exception& e) {
    throw ParseError(std::string("run record: ") + e.what());
  }
}

/// CSV with header `iter,objective,r_norm,s_norm`, one row per iteration.
inline std::string trace_to_csv(const std::vector<TraceRow>& rows) {
  std::string out = "iter,objective,r_norm,s_norm\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", r.iter, r.objective, r.r_norm, r.s_norm);
    out += buf;
  }
  return out;
}

}  // namespace sogl
