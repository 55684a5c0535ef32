// Evaluates the prox of a small overlapping-group instance with both solvers
// and brackets the plain group-lasso value between its lower and upper bounds.

#include <iomanip>
#include <iostream>

#include "sogl/sogl.hpp"

int main(int argc, char** argv) {
  using namespace sogl;
  const std::string path = argc > 1 ? argv[1] : "chain6.json";
  LoadedInstance li;
  try {
    li = parse_instance(path);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  AdmmConfig cfg;
  cfg.eps_abs = 1e-10;
  cfg.eps_rel = 1e-10;
  const SolveReport admm = solve_admm(li.inst, li.groups, cfg);

  SolveReport dual;
  try {
    dual = solve_dual(li.inst, li.groups);
  } catch (const DualCycleError& e) {
    dual = e.best();
  }

  std::cout << std::setprecision(10);
  std::cout << "admm  F = " << admm.objective << "  after " << admm.iters << " iterations\n";
  std::cout << "dual  F = " << dual.objective << "  (" << to_string(dual.termination) << ")\n";
  std::cout << "x     = " << admm.x_final.transpose() << "\n";

  if (li.groups.n() <= 12) {
    const OracleResult best = oracle_prox_l0_ogl(li.inst, li.groups);
    std::cout << "exact F = " << best.value << "\n";
  }

  const BoundsReport b = sandwich(li.inst, li.groups, BoundVariant::plain);
  std::cout << "group lasso value in [" << b.lower_value << ", " << b.upper_value << "]\n";
  return 0;
}
