#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sogl/core.hpp"

namespace sogl {

enum class Termination { converged, max_iters, cycle_detected };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iters: return "max_iters";
    case Termination::cycle_detected: return "cycle_detected";
  }
  return "unknown";
}

/// One trace row. For the dual scheme the two residual columns hold the
/// successive change norms of z and y-tilde.
struct TraceRow {
  int iter = 0;
  double objective = 0.0;
  double r_norm = 0.0;
  double s_norm = 0.0;
};

struct SolveReport {
  std::string algorithm;
  Vector x_final;
  double objective = 0.0;
  int iters = 0;
  bool converged = false;
  Termination termination = Termination::max_iters;
  std::vector<TraceRow> trace;
  double wall_time = 0.0;
  std::optional<double> oracle_gap;
};

}  // namespace sogl
