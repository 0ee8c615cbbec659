#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "nicp/deform/model.hpp"
#include "nicp/geometry/camera.hpp"
#include "nicp/geometry/closest_point.hpp"
#include "nicp/solvers/line_search.hpp"

namespace nicp::solvers {

using deform::BodyPose;
using deform::DeformationModel;
using deform::GraphParams;
using deform::PosedModel;
using geometry::PinholeCamera;
using geometry::PointCloud;
using geometry::TriMesh;
using geometry::Vec3;

enum class CorrespondenceMode { Euclidean, Projective };

inline constexpr double kDefaultRegWeight = 1e-3;

// One tracking instance: fit D(theta) to the target cloud.
struct IcpProblem {
  PointCloud target;
  std::shared_ptr<const DeformationModel> model;
  BodyPose pose;
  CorrespondenceMode mode = CorrespondenceMode::Euclidean;
  std::vector<PinholeCamera> cameras;  // projective mode: indexed by target camera_ids
  double reg_weight = kDefaultRegWeight;

  void validate() const;
};

struct Correspondence {
  int target = 0;                   // index into the target cloud
  int face = -1;
  Vec3 barycentric = Vec3::Zero();  // frozen footpoint on `face`
  Vec3 point = Vec3::Zero();        // footpoint position when computed
};

// Residuals r = [data; regularizer] with r(p) = C(p, D(theta)) - p for each
// match and sqrt(lambda / |edges|) * (T_j m_jk - T_k m_jk) for each edge, so
// that ||r||^2 equals icp_loss.
struct ResidualSystem {
  Eigen::VectorXd residuals;
  Eigen::SparseMatrix<double, Eigen::RowMajor> jacobian;
  std::size_t matches = 0;
};

// Bound evaluator for one problem. Caches the posed model; correspondences
// are computed explicitly and frozen for loss/gradient/Jacobian evaluation.
class IcpEvaluator {
 public:
  explicit IcpEvaluator(IcpProblem problem);

  const IcpProblem& problem() const { return problem_; }
  const PosedModel& posed() const { return posed_; }
  std::size_t parameter_count() const { return posed_.parameter_count(); }

  // Closest points on D(theta); unmatched points (projective misses) are
  // dropped. Throws std::runtime_error when nothing matches.
  std::vector<Correspondence> correspond(const GraphParams& params) const;

  // Loss with frozen footpoints; optionally the full gradient d(loss)/d(theta),
  // i.e. 2 J^T r.
  double frozen_loss(const GraphParams& params, const std::vector<Correspondence>& matches,
                     Eigen::VectorXd* gradient = nullptr) const;

  ResidualSystem assemble(const GraphParams& params, const std::vector<Correspondence>& matches) const;

  // Regularizer part of the loss, lambda * L_DG-Reg.
  double regularizer(const GraphParams& params) const;

 private:
  IcpProblem problem_;
  PosedModel posed_;
};

// Objective adapter for the gradient solvers: correspondences are
// recomputed in relinearize() and frozen for every evaluate() in between.
class IcpObjective : public Objective {
 public:
  explicit IcpObjective(const IcpEvaluator& evaluator) : evaluator_(evaluator) {}

  double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& gradient) override;
  bool relinearize(const Eigen::VectorXd& x) override;

  const std::vector<Correspondence>& matches() const { return matches_; }

 private:
  const IcpEvaluator& evaluator_;
  std::vector<Correspondence> matches_;
};

// L_ICP(theta; P) + lambda * L_DG-Reg with correspondences recomputed at theta.
double icp_loss(const GraphParams& params, const IcpProblem& problem);
ResidualSystem assemble(const GraphParams& params, const IcpProblem& problem);
// g = J^T r, half the gradient of icp_loss.
Eigen::VectorXd gradient(const GraphParams& params, const IcpProblem& problem);

}  // namespace nicp::solvers
