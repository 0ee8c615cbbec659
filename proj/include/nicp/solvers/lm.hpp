#pragma once

#include "nicp/solvers/problem.hpp"
#include "nicp/solvers/trace.hpp"

namespace nicp::solvers {

// Solves (J^T J + damping I) delta = -J^T r by sparse Cholesky (LDL^T),
// falling back to a dense LDL^T. Throws std::runtime_error with a condition
// estimate when both factorizations fail.
Eigen::VectorXd lm_step(const ResidualSystem& system, double damping);

struct LmConfig {
  int max_iterations = 20;        // outer iterations (accepted or rejected)
  double initial_damping = 1e-4;
  double accept_factor = 0.5;     // damping multiplier after an accepted step
  double reject_factor = 4.0;     // damping multiplier after a rejected step
  double min_step_norm = 1e-12;
  double min_relative_decrease = 0.0;
  TraceOptions trace;
};

// Levenberg-Marquardt: correspondences recomputed at every accepted point,
// a step is kept only if the recomputed loss decreases. The trace starts
// with the initial state and gains one record per accepted step.
SolveTrace solve_lm(const IcpProblem& problem, const LmConfig& config,
                    const GraphParams& initial = {});

}  // namespace nicp::solvers
