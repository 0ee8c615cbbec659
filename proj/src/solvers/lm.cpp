#include "nicp/solvers/lm.hpp"

#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

namespace nicp::solvers {

Eigen::VectorXd lm_step(const ResidualSystem& system, double damping) {
  if (!(damping > 0.0)) throw std::invalid_argument("lm_step: damping must be positive");
  const Eigen::SparseMatrix<double> jt = system.jacobian.transpose();
  Eigen::SparseMatrix<double> normal = jt * system.jacobian;
  for (Eigen::Index i = 0; i < normal.rows(); ++i) normal.coeffRef(i, i) += damping;
  const Eigen::VectorXd rhs = -(jt * system.residuals);
  work::add(static_cast<double>(system.jacobian.nonZeros()) * 36.0 * work::Cost::kDoubleFlop);

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> sparse(normal);
  if (sparse.info() == Eigen::Success) {
    Eigen::VectorXd x = sparse.solve(rhs);
    if (sparse.info() == Eigen::Success && x.allFinite()) {
      const double n = static_cast<double>(normal.rows());
      work::add(n * n * n / 6.0 * work::Cost::kDoubleFlop);
      return x;
    }
  }

  const Eigen::MatrixXd dense(normal);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(dense);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    Eigen::VectorXd x = ldlt.solve(rhs);
    if (x.allFinite()) return x;
  }
  const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
  std::ostringstream msg;
  msg << "lm_step: factorization of the damped normal equations failed (pivot ratio "
      << (d.maxCoeff() > 0.0 ? d.minCoeff() / d.maxCoeff() : 0.0) << ", damping " << damping << ")";
  throw std::runtime_error(msg.str());
}

SolveTrace solve_lm(const IcpProblem& problem, const LmConfig& config, const GraphParams& initial) {
  const IcpEvaluator eval(problem);
  GraphParams params = initial.size() > 0 ? initial : GraphParams(problem.model->graph.node_count());
  TraceRecorder recorder("lm", eval.posed(), config.trace);
  recorder.start();

  auto matches = eval.correspond(params);
  double loss = eval.frozen_loss(params, matches);
  recorder.record(params, loss, 0.0);

  double damping = config.initial_damping;
  ResidualSystem system = eval.assemble(params, matches);
  for (int it = 0; it < config.max_iterations; ++it) {
    const Eigen::VectorXd delta = lm_step(system, damping);
    const double step_norm = delta.norm();
    if (step_norm < config.min_step_norm) break;

    GraphParams candidate(params.vector() + delta);
    auto candidate_matches = eval.correspond(candidate);
    const double candidate_loss = eval.frozen_loss(candidate, candidate_matches);
    if (candidate_loss < loss) {
      const double decrease = (loss - candidate_loss) / std::max(loss, 1e-300);
      params = std::move(candidate);
      matches = std::move(candidate_matches);
      loss = candidate_loss;
      damping *= config.accept_factor;
      recorder.record(params, loss, step_norm);
      if (decrease < config.min_relative_decrease) break;
      system = eval.assemble(params, matches);
    } else {
      damping *= config.reject_factor;
    }
  }
  return recorder.finish(params);
}

}  // namespace nicp::solvers
