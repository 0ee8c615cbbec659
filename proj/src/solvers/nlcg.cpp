#include "nicp/solvers/nlcg.hpp"

#include <algorithm>
#include <cmath>

namespace nicp::solvers {

MinimizeResult minimize_nlcg(Objective& objective, Eigen::VectorXd x0, const NlcgConfig& config,
                             const IterationCallback& on_iteration) {
  MinimizeResult out;
  out.x = std::move(x0);
  objective.relinearize(out.x);
  Eigen::VectorXd g;
  double f = objective.evaluate(out.x, g);
  if (on_iteration) on_iteration(out.x, f, 0.0);
  const int restart = config.restart_interval > 0 ? config.restart_interval : static_cast<int>(out.x.size());

  Eigen::VectorXd d = -g;
  double previous_slope = 0.0;
  double previous_step = 0.0;
  for (int it = 0; it < config.max_iterations; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= config.gradient_tolerance) {
      out.converged = true;
      break;
    }
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      d = -g;
      slope = -g.squaredNorm();
    }
    const double initial = previous_step > 0.0 ? std::min(1.0, previous_step * previous_slope / slope)
                                               : std::min(1.0, 1.0 / g.norm());
    LineSearchResult ls = strong_wolfe_search(objective, out.x, f, g, d, initial, config.line_search);
    if (!ls.success) {
      out.line_search_failed = true;
      break;
    }
    const Eigen::VectorXd s = ls.step * d;
    out.x += s;
    Eigen::VectorXd g_new = std::move(ls.gradient);
    f = ls.value;
    const bool changed = objective.relinearize(out.x);
    if (changed) f = objective.evaluate(out.x, g_new);

    const bool reset = (it + 1) % restart == 0;
    const double beta = reset ? 0.0 : std::max(0.0, g_new.dot(g_new - g) / g.squaredNorm());
    previous_slope = slope;
    previous_step = ls.step;
    g = std::move(g_new);
    d = -g + beta * d;
    out.iterations = it + 1;
    if (on_iteration) on_iteration(out.x, f, s.norm());
  }
  out.value = f;
  return out;
}

SolveTrace solve_nlcg(const IcpProblem& problem, const NlcgConfig& config, const GraphParams& initial) {
  const IcpEvaluator eval(problem);
  IcpObjective objective(eval);
  const GraphParams start = initial.size() > 0 ? initial : GraphParams(problem.model->graph.node_count());
  TraceRecorder recorder("nlcg", eval.posed(), config.trace);
  recorder.start();
  const auto result = minimize_nlcg(objective, start.vector(), config,
                                    [&](const Eigen::VectorXd& x, double f, double step) {
                                      recorder.record(GraphParams(x), f, step);
                                    });
  return recorder.finish(GraphParams(result.x));
}

}  // namespace nicp::solvers
