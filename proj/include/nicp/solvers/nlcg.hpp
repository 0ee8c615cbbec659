#pragma once

#include "nicp/solvers/lbfgs.hpp"

namespace nicp::solvers {

// Polak-Ribiere+ nonlinear conjugate gradient.
struct NlcgConfig : GradientSolverConfig {
  int restart_interval = 0;  // 0: restart every dim(x) iterations
};

MinimizeResult minimize_nlcg(Objective& objective, Eigen::VectorXd x0, const NlcgConfig& config,
                             const IterationCallback& on_iteration = {});

SolveTrace solve_nlcg(const IcpProblem& problem, const NlcgConfig& config,
                      const GraphParams& initial = {});

}  // namespace nicp::solvers
