#include "nicp/deform/model.hpp"

#include <stdexcept>

#include "nicp/common/work_meter.hpp"

namespace nicp::deform {

void DeformationModel::validate() const {
  skin.validate();
  graph.validate();
  if (graph.influences.size() != skin.rest.vertices.size()) {
    throw std::invalid_argument("DeformationModel: graph influences do not match template vertices");
  }
}

NodeTransforms NodeTransforms::evaluate(const GraphParams& params, bool with_derivatives) {
  NodeTransforms t;
  const std::size_t k = params.node_count();
  t.rotation.resize(k);
  if (with_derivatives) t.derivative.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const Vec3 r = params.rotation(i);
    t.rotation[i] = rotation_matrix(r);
    if (with_derivatives) t.derivative[i] = rotation_derivatives(r);
  }
  return t;
}

namespace {

void check_params(const DeformationGraph& graph, const GraphParams& params) {
  if (params.node_count() != graph.node_count() || params.size() % 6 != 0) {
    throw std::invalid_argument("GraphParams length " + std::to_string(params.size()) +
                                " does not match 6K = " + std::to_string(graph.parameter_count()));
  }
}

std::vector<Vec3> embed(const std::vector<Vec3>& rest, const DeformationGraph& graph,
                        const GraphParams& params, const NodeTransforms& nt) {
  if (graph.influences.size() != rest.size()) {
    throw std::invalid_argument("embedded_deform: graph influences do not match template vertices");
  }
  std::vector<Mat3> r_minus_i(nt.rotation.size());
  for (std::size_t k = 0; k < nt.rotation.size(); ++k) r_minus_i[k] = nt.rotation[k] - Mat3::Identity();
  std::vector<Vec3> out(rest.size());
  std::size_t influences = 0;
  for (std::size_t v = 0; v < rest.size(); ++v) {
    Vec3 delta = Vec3::Zero();
    for (const auto& inf : graph.influences[v]) {
      delta += inf.weight * (r_minus_i[inf.node] * (rest[v] - graph.nodes[inf.node]) +
                             params.translation(inf.node));
    }
    influences += graph.influences[v].size();
    out[v] = rest[v] + delta;
  }
  work::add(influences * work::Cost::kVertexInfluence);
  return out;
}

}  // namespace

std::vector<Vec3> embedded_vertices(const TriMesh& template_mesh, const DeformationGraph& graph,
                                    const GraphParams& params) {
  check_params(graph, params);
  return embed(template_mesh.vertices, graph, params, NodeTransforms::evaluate(params, false));
}

TriMesh embedded_deform(const TriMesh& template_mesh, const DeformationGraph& graph,
                        const GraphParams& params) {
  TriMesh out = template_mesh;
  out.vertices = embedded_vertices(template_mesh, graph, params);
  out.normals.clear();
  return out;
}

TriMesh deform_full(const SkinnedTemplate& skin, const DeformationGraph& graph,
                    const GraphParams& params, const BodyPose& pose) {
  const SkinningMap map = skinning_map(skin, pose);
  TriMesh out = skin.rest;
  out.vertices = lbs_vertices(map, embedded_vertices(skin.rest, graph, params));
  out.normals.clear();
  return out;
}

std::vector<EdgeResidual> regularizer_residuals(const NodeTransforms& transforms,
                                                const GraphParams& params,
                                                const DeformationGraph& graph) {
  std::vector<EdgeResidual> out(graph.edges.size());
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto [j, k] = graph.edges[e];
    const Vec3 m = 0.5 * (graph.nodes[j] + graph.nodes[k]);
    const Vec3 uj = m - graph.nodes[j];
    const Vec3 uk = m - graph.nodes[k];
    const Vec3 tj = transforms.rotation[j] * uj + graph.nodes[j] + params.translation(j);
    const Vec3 tk = transforms.rotation[k] * uk + graph.nodes[k] + params.translation(k);
    EdgeResidual& r = out[e];
    r.residual = tj - tk;
    for (int i = 0; i < 3; ++i) {
      r.d_first.col(i) = transforms.derivative[j][i] * uj;
      r.d_second.col(i) = -(transforms.derivative[k][i] * uk);
    }
    r.d_first.rightCols<3>() = Mat3::Identity();
    r.d_second.rightCols<3>() = -Mat3::Identity();
  }
  return out;
}

RegularizerValue dg_reg_loss(const GraphParams& params, const DeformationGraph& graph) {
  check_params(graph, params);
  if (graph.edges.empty()) throw std::invalid_argument("dg_reg_loss: graph has no edges");
  const NodeTransforms nt = NodeTransforms::evaluate(params, true);
  const auto residuals = regularizer_residuals(nt, params, graph);
  const double scale = 1.0 / static_cast<double>(graph.edges.size());
  RegularizerValue out;
  out.gradient = Eigen::VectorXd::Zero(params.size());
  for (std::size_t e = 0; e < residuals.size(); ++e) {
    const auto& r = residuals[e];
    out.loss += r.residual.squaredNorm();
    const auto [j, k] = graph.edges[e];
    out.gradient.segment<6>(6 * j) += 2.0 * scale * r.d_first.transpose() * r.residual;
    out.gradient.segment<6>(6 * k) += 2.0 * scale * r.d_second.transpose() * r.residual;
  }
  out.loss *= scale;
  return out;
}

PosedModel::PosedModel(std::shared_ptr<const DeformationModel> model, BodyPose pose)
    : model_(std::move(model)), pose_(std::move(pose)) {
  if (!model_) throw std::invalid_argument("PosedModel: null model");
  model_->validate();
  skinning_ = skinning_map(model_->skin, pose_);
}

std::vector<Vec3> PosedModel::vertices(const GraphParams& params) const {
  check_params(model_->graph, params);
  const auto canonical = embed(model_->skin.rest.vertices, model_->graph, params,
                               NodeTransforms::evaluate(params, false));
  return lbs_vertices(skinning_, canonical);
}

TriMesh PosedModel::mesh(const GraphParams& params) const {
  TriMesh out;
  out.vertices = vertices(params);
  out.faces = model_->skin.rest.faces;
  return out;
}

void PosedModel::vertex_jacobian(int vertex, const NodeTransforms& transforms, VertexJacobian& out) const {
  const auto& graph = model_->graph;
  const Vec3& rest = model_->skin.rest.vertices[vertex];
  const Mat3& a = skinning_.linear[vertex];
  out.vertex = vertex;
  out.blocks.resize(graph.influences[vertex].size());
  for (std::size_t i = 0; i < graph.influences[vertex].size(); ++i) {
    const auto& inf = graph.influences[vertex][i];
    const Vec3 u = rest - graph.nodes[inf.node];
    JacobianBlock& b = out.blocks[i];
    b.node = inf.node;
    for (int c = 0; c < 3; ++c) b.block.col(c) = inf.weight * (a * (transforms.derivative[inf.node][c] * u));
    b.block.rightCols<3>() = inf.weight * a;
  }
  work::add(graph.influences[vertex].size() * work::Cost::kJacobianBlock);
}

Eigen::VectorXd PosedModel::pullback(const NodeTransforms& transforms,
                                     std::span<const Vec3> vertex_grad) const {
  const auto& graph = model_->graph;
  const auto& rest = model_->skin.rest.vertices;
  if (vertex_grad.size() != rest.size()) throw std::invalid_argument("pullback: gradient size mismatch");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parameter_count()));
  std::size_t blocks = 0;
  for (std::size_t v = 0; v < rest.size(); ++v) {
    if (vertex_grad[v].isZero(0.0)) continue;
    const Vec3 a = skinning_.linear[v].transpose() * vertex_grad[v];
    for (const auto& inf : graph.influences[v]) {
      const Vec3 u = rest[v] - graph.nodes[inf.node];
      const Vec3 wa = inf.weight * a;
      for (int c = 0; c < 3; ++c) g[6 * inf.node + c] += wa.dot(transforms.derivative[inf.node][c] * u);
      g.segment<3>(6 * inf.node + 3) += wa;
    }
    blocks += graph.influences[v].size();
  }
  work::add(blocks * work::Cost::kJacobianBlock);
  return g;
}

std::vector<VertexJacobian> deform_jacobian(const SkinnedTemplate& skin, const DeformationGraph& graph,
                                            const GraphParams& params, const BodyPose& pose,
                                            std::span<const int> vertex_ids) {
  check_params(graph, params);
  auto model = std::make_shared<DeformationModel>(DeformationModel{skin, graph});
  const PosedModel posed(model, pose);
  const NodeTransforms nt = NodeTransforms::evaluate(params, true);
  std::vector<VertexJacobian> out(vertex_ids.size());
  for (std::size_t i = 0; i < vertex_ids.size(); ++i) {
    if (vertex_ids[i] < 0 || vertex_ids[i] >= static_cast<int>(skin.rest.vertices.size())) {
      throw std::invalid_argument("deform_jacobian: vertex id out of range");
    }
    posed.vertex_jacobian(vertex_ids[i], nt, out[i]);
  }
  return out;
}

Eigen::SparseMatrix<double> jacobian_matrix(const std::vector<VertexJacobian>& jacobians,
                                            std::size_t parameter_count) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < jacobians.size(); ++i) {
    for (const auto& b : jacobians[i].blocks) {
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 6; ++c) {
          triplets.emplace_back(static_cast<int>(3 * i) + r, 6 * b.node + c, b.block(r, c));
        }
      }
    }
  }
  Eigen::SparseMatrix<double> j(static_cast<Eigen::Index>(3 * jacobians.size()),
                                static_cast<Eigen::Index>(parameter_count));
  j.setFromTriplets(triplets.begin(), triplets.end());
  return j;
}

}  // namespace nicp::deform
