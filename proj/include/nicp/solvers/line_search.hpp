#pragma once

#include <Eigen/Core>

namespace nicp::solvers {

// Smooth objective for the gradient-based solvers.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& gradient) = 0;
  // Hook called at the start of every outer iteration. ICP objectives
  // recompute correspondences here; returns true if the objective changed.
  virtual bool relinearize(const Eigen::VectorXd& /*x*/) { return false; }
};

struct LineSearchConfig {
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_evaluations = 25;
  double max_step = 1e20;
};

struct LineSearchResult {
  bool success = false;
  double step = 0.0;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int evaluations = 0;
};

bool armijo_holds(double f0, double dphi0, double step, double f, double c1);
bool strong_curvature_holds(double dphi0, double dphi, double c2);

// Bracketing + zoom line search for the strong Wolfe conditions along the
// descent direction `direction` from x (value f0, gradient g0). On success
// the returned step satisfies both conditions; this is re-checked before
// returning.
LineSearchResult strong_wolfe_search(Objective& objective, const Eigen::VectorXd& x, double f0,
                                     const Eigen::VectorXd& g0, const Eigen::VectorXd& direction,
                                     double initial_step, const LineSearchConfig& config = {});

}  // namespace nicp::solvers
