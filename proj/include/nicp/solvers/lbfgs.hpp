#pragma once

#include <functional>

#include "nicp/solvers/line_search.hpp"
#include "nicp/solvers/problem.hpp"
#include "nicp/solvers/trace.hpp"

namespace nicp::solvers {

struct GradientSolverConfig {
  int max_iterations = 100;
  double gradient_tolerance = 1e-12;  // stop when ||g||_inf falls below
  LineSearchConfig line_search;
  TraceOptions trace;
};

struct LbfgsConfig : GradientSolverConfig {
  int memory = 10;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
};

// Called for the starting point (step length 0) and after every completed
// iteration with the new iterate, its value after relinearization and the
// step length ||x_new - x_old||.
using IterationCallback = std::function<void(const Eigen::VectorXd&, double, double)>;

MinimizeResult minimize_lbfgs(Objective& objective, Eigen::VectorXd x0, const LbfgsConfig& config,
                              const IterationCallback& on_iteration = {});

SolveTrace solve_lbfgs(const IcpProblem& problem, const LbfgsConfig& config,
                       const GraphParams& initial = {});

}  // namespace nicp::solvers
