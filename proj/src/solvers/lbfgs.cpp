#include "nicp/solvers/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "nicp/common/work_meter.hpp"

namespace nicp::solvers {

namespace {

struct Pair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho = 0.0;
};

Eigen::VectorXd two_loop(const std::deque<Pair>& memory, const Eigen::VectorXd& g) {
  Eigen::VectorXd q = g;
  std::vector<double> alpha(memory.size());
  for (std::size_t i = memory.size(); i-- > 0;) {
    alpha[i] = memory[i].rho * memory[i].s.dot(q);
    q -= alpha[i] * memory[i].y;
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const double beta = memory[i].rho * memory[i].y.dot(q);
    q += (alpha[i] - beta) * memory[i].s;
  }
  work::add(4.0 * static_cast<double>(memory.size() * g.size()) * work::Cost::kDoubleFlop);
  return -q;
}

}  // namespace

MinimizeResult minimize_lbfgs(Objective& objective, Eigen::VectorXd x0, const LbfgsConfig& config,
                              const IterationCallback& on_iteration) {
  MinimizeResult out;
  out.x = std::move(x0);
  objective.relinearize(out.x);
  Eigen::VectorXd g;
  double f = objective.evaluate(out.x, g);
  if (on_iteration) on_iteration(out.x, f, 0.0);
  std::deque<Pair> memory;

  for (int it = 0; it < config.max_iterations; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= config.gradient_tolerance) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd d = two_loop(memory, g);
    if (!(g.dot(d) < 0.0)) {
      memory.clear();
      d = -g;
    }
    const double initial = memory.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;
    LineSearchResult ls = strong_wolfe_search(objective, out.x, f, g, d, initial, config.line_search);
    if (!ls.success) {
      out.line_search_failed = true;
      break;
    }
    const Eigen::VectorXd s = ls.step * d;
    const Eigen::VectorXd y = ls.gradient - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      memory.push_back({s, y, 1.0 / sy});
      if (static_cast<int>(memory.size()) > config.memory) memory.pop_front();
    }
    out.x += s;
    f = ls.value;
    g = std::move(ls.gradient);
    if (objective.relinearize(out.x)) f = objective.evaluate(out.x, g);
    out.iterations = it + 1;
    if (on_iteration) on_iteration(out.x, f, s.norm());
  }
  out.value = f;
  return out;
}

SolveTrace solve_lbfgs(const IcpProblem& problem, const LbfgsConfig& config, const GraphParams& initial) {
  const IcpEvaluator eval(problem);
  IcpObjective objective(eval);
  const GraphParams start = initial.size() > 0 ? initial : GraphParams(problem.model->graph.node_count());
  TraceRecorder recorder("lbfgs", eval.posed(), config.trace);
  recorder.start();
  const auto result = minimize_lbfgs(objective, start.vector(), config,
                                     [&](const Eigen::VectorXd& x, double f, double step) {
                                       recorder.record(GraphParams(x), f, step);
                                     });
  return recorder.finish(GraphParams(result.x));
}

}  // namespace nicp::solvers
