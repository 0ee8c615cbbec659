#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "nicp/deform/graph.hpp"
#include "nicp/deform/skinning.hpp"

namespace nicp::deform {

// The hierarchical clothing model: embedded deformation E inside, linear
// blend skinning W outside, D(theta) = W(E(M, theta), rho).
struct DeformationModel {
  SkinnedTemplate skin;
  DeformationGraph graph;

  std::size_t parameter_count() const { return graph.parameter_count(); }
  void validate() const;
};

// Per-node rotation matrices (and optionally their axis-angle derivatives)
// for one parameter vector.
struct NodeTransforms {
  std::vector<Mat3> rotation;
  std::vector<std::array<Mat3, 3>> derivative;

  static NodeTransforms evaluate(const GraphParams& params, bool with_derivatives);
};

// E(M, theta): v' = v + sum_k w_k [(R_k - I)(v - g_k) + t_k], which equals the
// usual sum_k w_k [R_k (v - g_k) + g_k + t_k] for normalized weights and is
// exactly the identity at theta = 0.
std::vector<Vec3> embedded_vertices(const TriMesh& template_mesh, const DeformationGraph& graph,
                                    const GraphParams& params);
TriMesh embedded_deform(const TriMesh& template_mesh, const DeformationGraph& graph,
                        const GraphParams& params);

TriMesh deform_full(const SkinnedTemplate& skin, const DeformationGraph& graph,
                    const GraphParams& params, const BodyPose& pose);

// Regularizer over adjacent node pairs (each undirected edge once):
//   L = (1/|edges|) sum ||T_j m_jk - T_k m_jk||^2,
// T_j x = R_j (x - g_j) + g_j + t_j, m_jk the midpoint of the rest positions.
struct RegularizerValue {
  double loss = 0.0;
  Eigen::VectorXd gradient;  // length 6K
};
RegularizerValue dg_reg_loss(const GraphParams& params, const DeformationGraph& graph);

// Per-edge residual e_jk = T_j m_jk - T_k m_jk and its two 3x6 blocks.
struct EdgeResidual {
  Vec3 residual;
  Eigen::Matrix<double, 3, 6> d_first;   // w.r.t. node `first`
  Eigen::Matrix<double, 3, 6> d_second;  // w.r.t. node `second`
};
std::vector<EdgeResidual> regularizer_residuals(const NodeTransforms& transforms,
                                                const GraphParams& params,
                                                const DeformationGraph& graph);

struct JacobianBlock {
  int node = 0;
  Eigen::Matrix<double, 3, 6> block;  // columns: r_k (3), t_k (3)
};
struct VertexJacobian {
  int vertex = 0;
  std::vector<JacobianBlock> blocks;  // one per influencing node
};

// dD_v/dtheta for the selected vertices; LBS enters as the constant linear
// map of the fixed pose.
std::vector<VertexJacobian> deform_jacobian(const SkinnedTemplate& skin, const DeformationGraph& graph,
                                            const GraphParams& params, const BodyPose& pose,
                                            std::span<const int> vertex_ids);

// Stacks per-vertex blocks into a (3 * blocks.size()) x parameter_count matrix.
Eigen::SparseMatrix<double> jacobian_matrix(const std::vector<VertexJacobian>& jacobians,
                                            std::size_t parameter_count);

// A model bound to one body pose, with the skinning map precomputed. This
// is the evaluation object used by the solvers and the tracker.
class PosedModel {
 public:
  PosedModel(std::shared_ptr<const DeformationModel> model, BodyPose pose);

  const DeformationModel& model() const { return *model_; }
  const BodyPose& pose() const { return pose_; }
  const SkinningMap& skinning() const { return skinning_; }
  std::size_t parameter_count() const { return model_->parameter_count(); }

  std::vector<Vec3> vertices(const GraphParams& params) const;
  TriMesh mesh(const GraphParams& params) const;

  void vertex_jacobian(int vertex, const NodeTransforms& transforms, VertexJacobian& out) const;

  // sum_v (dD_v/dtheta)^T vertex_grad[v]; vertex_grad has one entry per
  // template vertex (zeros allowed).
  Eigen::VectorXd pullback(const NodeTransforms& transforms, std::span<const Vec3> vertex_grad) const;

 private:
  std::shared_ptr<const DeformationModel> model_;
  BodyPose pose_;
  SkinningMap skinning_;
};

}  // namespace nicp::deform
