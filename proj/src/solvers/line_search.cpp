#include "nicp/solvers/line_search.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nicp::solvers {

bool armijo_holds(double f0, double dphi0, double step, double f, double c1) {
  return f <= f0 + c1 * step * dphi0;
}

bool strong_curvature_holds(double dphi0, double dphi, double c2) {
  return std::abs(dphi) <= c2 * std::abs(dphi0);
}

namespace {

struct Sample {
  double step = 0.0;
  double value = 0.0;
  double slope = 0.0;
};

// Minimizer of the cubic through (a, fa, da) and (b, fb, db), safeguarded to
// the inner 80% of the interval (bisection when the cubic is unusable).
double interpolate(const Sample& a, const Sample& b) {
  const double lo = std::min(a.step, b.step);
  const double hi = std::max(a.step, b.step);
  const double margin = 0.1 * (hi - lo);
  const double d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.step - b.step);
  const double disc = d1 * d1 - a.slope * b.slope;
  double t = 0.5 * (lo + hi);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b.step - a.step);
    const double denom = b.slope - a.slope + 2.0 * d2;
    if (denom != 0.0) {
      const double c = b.step - (b.step - a.step) * (b.slope + d2 - d1) / denom;
      if (std::isfinite(c)) t = c;
    }
  }
  return std::clamp(t, lo + margin, hi - margin);
}

class Phi {
 public:
  Phi(Objective& obj, const Eigen::VectorXd& x, const Eigen::VectorXd& d) : obj_(obj), x_(x), d_(d) {}

  Sample operator()(double step) {
    ++evaluations;
    const Eigen::VectorXd xt = x_ + step * d_;
    last_value = obj_.evaluate(xt, last_gradient);
    return {step, last_value, last_gradient.dot(d_)};
  }

  int evaluations = 0;
  double last_value = 0.0;
  Eigen::VectorXd last_gradient;

 private:
  Objective& obj_;
  const Eigen::VectorXd& x_;
  const Eigen::VectorXd& d_;
};

}  // namespace

LineSearchResult strong_wolfe_search(Objective& objective, const Eigen::VectorXd& x, double f0,
                                     const Eigen::VectorXd& g0, const Eigen::VectorXd& direction,
                                     double initial_step, const LineSearchConfig& config) {
  if (!(config.c1 > 0.0 && config.c1 < config.c2 && config.c2 < 1.0)) {
    throw std::invalid_argument("strong_wolfe_search: need 0 < c1 < c2 < 1");
  }
  LineSearchResult result;
  const double dphi0 = g0.dot(direction);
  if (!(dphi0 < 0.0)) return result;

  Phi phi(objective, x, direction);
  const Sample origin{0.0, f0, dphi0};

  auto accept = [&](const Sample& s) {
    // In-line check of both strong Wolfe conditions.
    if (!armijo_holds(f0, dphi0, s.step, s.value, config.c1) ||
        !strong_curvature_holds(dphi0, s.slope, config.c2)) {
      return false;
    }
    result.success = true;
    result.step = s.step;
    result.value = s.value;
    result.gradient = phi.last_gradient;
    return true;
  };

  auto zoom = [&](Sample lo, Sample hi) {
    while (phi.evaluations < config.max_evaluations) {
      const double t = interpolate(lo, hi);
      const Sample s = phi(t);
      if (!armijo_holds(f0, dphi0, s.step, s.value, config.c1) || s.value >= lo.value) {
        hi = s;
      } else {
        if (strong_curvature_holds(dphi0, s.slope, config.c2)) return accept(s);
        if (s.slope * (hi.step - lo.step) >= 0.0) hi = lo;
        lo = s;
      }
      if (std::abs(hi.step - lo.step) <= 1e-16 * std::max(1.0, std::abs(lo.step))) break;
    }
    return false;
  };

  Sample prev = origin;
  double step = std::min(initial_step, config.max_step);
  bool done = false;
  for (int i = 0; !done && phi.evaluations < config.max_evaluations; ++i) {
    const Sample s = phi(step);
    if (!std::isfinite(s.value)) {
      // Overshot into an invalid region: shrink towards the last good point.
      step = prev.step + 0.5 * (step - prev.step);
      continue;
    }
    if (!armijo_holds(f0, dphi0, s.step, s.value, config.c1) || (i > 0 && s.value >= prev.value)) {
      zoom(prev, s);
      done = true;
    } else if (strong_curvature_holds(dphi0, s.slope, config.c2)) {
      accept(s);
      done = true;
    } else if (s.slope >= 0.0) {
      zoom(s, prev);
      done = true;
    } else {
      prev = s;
      step = std::min(2.0 * step, config.max_step);
    }
  }
  result.evaluations = phi.evaluations;
  return result;
}

}  // namespace nicp::solvers
