#include "nicp/solvers/problem.hpp"

#include <cmath>
#include <stdexcept>

#include "nicp/common/work_meter.hpp"

namespace nicp::solvers {

void IcpProblem::validate() const {
  if (!model) throw std::invalid_argument("IcpProblem: no deformation model");
  if (target.empty()) throw std::invalid_argument("IcpProblem: empty target cloud");
  target.validate();
  if (!(reg_weight >= 0.0)) throw std::invalid_argument("IcpProblem: regularizer weight must be >= 0");
  if (mode == CorrespondenceMode::Projective) {
    if (cameras.empty()) throw std::invalid_argument("IcpProblem: projective mode needs cameras");
    if (!target.has_camera_ids() && cameras.size() != 1) {
      throw std::invalid_argument("IcpProblem: projective mode needs per-point camera ids");
    }
    for (int id : target.camera_ids) {
      if (id < 0 || id >= static_cast<int>(cameras.size())) {
        throw std::invalid_argument("IcpProblem: camera id out of range");
      }
    }
  }
}

namespace {

IcpProblem checked(IcpProblem p) {
  p.validate();
  return p;
}

}  // namespace

IcpEvaluator::IcpEvaluator(IcpProblem problem)
    : problem_(checked(std::move(problem))), posed_(problem_.model, problem_.pose) {}

std::vector<Correspondence> IcpEvaluator::correspond(const GraphParams& params) const {
  const TriMesh mesh = posed_.mesh(params);
  const geometry::SpatialIndex index(mesh);
  const auto& pts = problem_.target.points;
  std::vector<Correspondence> out;
  out.reserve(pts.size());
  if (problem_.mode == CorrespondenceMode::Euclidean) {
    const auto hits = geometry::closest_points(pts, mesh, index);
    for (std::size_t i = 0; i < hits.size(); ++i) {
      out.push_back({static_cast<int>(i), hits[i].face, hits[i].barycentric, hits[i].point});
    }
  } else {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const int cam = problem_.target.has_camera_ids() ? problem_.target.camera_ids[i] : 0;
      const auto hit = geometry::closest_point_projective(pts[i], mesh, problem_.cameras[cam], index);
      if (hit) out.push_back({static_cast<int>(i), hit->face, hit->barycentric, hit->point});
    }
  }
  if (out.empty()) throw std::runtime_error("IcpEvaluator: no correspondences found");
  return out;
}

double IcpEvaluator::regularizer(const GraphParams& params) const {
  if (problem_.reg_weight == 0.0) return 0.0;
  return problem_.reg_weight * deform::dg_reg_loss(params, posed_.model().graph).loss;
}

double IcpEvaluator::frozen_loss(const GraphParams& params, const std::vector<Correspondence>& matches,
                                 Eigen::VectorXd* gradient) const {
  const auto verts = posed_.vertices(params);
  const auto& faces = posed_.model().skin.rest.faces;
  const auto& pts = problem_.target.points;
  std::vector<Vec3> vertex_grad;
  if (gradient) vertex_grad.assign(verts.size(), Vec3::Zero());
  double loss = 0.0;
  for (const auto& m : matches) {
    const auto& f = faces[m.face];
    const Vec3 c = m.barycentric[0] * verts[f[0]] + m.barycentric[1] * verts[f[1]] +
                   m.barycentric[2] * verts[f[2]];
    const Vec3 r = c - pts[m.target];
    loss += r.squaredNorm();
    if (gradient) {
      for (int k = 0; k < 3; ++k) vertex_grad[f[k]] += 2.0 * m.barycentric[k] * r;
    }
  }
  work::add(matches.size() * 3 * work::Cost::kVectorEntry);
  if (gradient) {
    const auto nt = deform::NodeTransforms::evaluate(params, true);
    *gradient = posed_.pullback(nt, vertex_grad);
  }
  if (problem_.reg_weight > 0.0) {
    const auto reg = deform::dg_reg_loss(params, posed_.model().graph);
    loss += problem_.reg_weight * reg.loss;
    if (gradient) *gradient += problem_.reg_weight * reg.gradient;
  }
  return loss;
}

ResidualSystem IcpEvaluator::assemble(const GraphParams& params,
                                      const std::vector<Correspondence>& matches) const {
  const auto verts = posed_.vertices(params);
  const auto& faces = posed_.model().skin.rest.faces;
  const auto& graph = posed_.model().graph;
  const auto& pts = problem_.target.points;
  const auto nt = deform::NodeTransforms::evaluate(params, true);

  // Vertex Jacobians, computed once per referenced vertex.
  std::vector<int> slot(verts.size(), -1);
  std::vector<deform::VertexJacobian> vjs;
  for (const auto& m : matches) {
    for (int v : faces[m.face]) {
      if (slot[v] >= 0) continue;
      slot[v] = static_cast<int>(vjs.size());
      vjs.emplace_back();
      posed_.vertex_jacobian(v, nt, vjs.back());
    }
  }

  const bool with_reg = problem_.reg_weight > 0.0;
  const std::size_t reg_rows = with_reg ? 3 * graph.edges.size() : 0;
  const auto rows = static_cast<Eigen::Index>(3 * matches.size() + reg_rows);

  ResidualSystem sys;
  sys.matches = matches.size();
  sys.residuals.resize(rows);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(matches.size() * 3 * 4 * 18 + reg_rows * 12);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const auto& m = matches[i];
    const auto& f = faces[m.face];
    const Vec3 c = m.barycentric[0] * verts[f[0]] + m.barycentric[1] * verts[f[1]] +
                   m.barycentric[2] * verts[f[2]];
    const auto row = static_cast<int>(3 * i);
    sys.residuals.segment<3>(row) = c - pts[m.target];
    for (int k = 0; k < 3; ++k) {
      const double b = m.barycentric[k];
      if (b == 0.0) continue;
      for (const auto& blk : vjs[slot[f[k]]].blocks) {
        for (int r = 0; r < 3; ++r) {
          for (int col = 0; col < 6; ++col) {
            triplets.emplace_back(row + r, 6 * blk.node + col, b * blk.block(r, col));
          }
        }
      }
    }
  }

  if (with_reg) {
    const double s = std::sqrt(problem_.reg_weight / static_cast<double>(graph.edges.size()));
    const auto edges = deform::regularizer_residuals(nt, params, graph);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto row = static_cast<int>(3 * matches.size() + 3 * e);
      const auto [j, k] = graph.edges[e];
      sys.residuals.segment<3>(row) = s * edges[e].residual;
      for (int r = 0; r < 3; ++r) {
        for (int col = 0; col < 6; ++col) {
          triplets.emplace_back(row + r, 6 * j + col, s * edges[e].d_first(r, col));
          triplets.emplace_back(row + r, 6 * k + col, s * edges[e].d_second(r, col));
        }
      }
    }
  }

  sys.jacobian.resize(rows, static_cast<Eigen::Index>(graph.parameter_count()));
  sys.jacobian.setFromTriplets(triplets.begin(), triplets.end());
  work::add(triplets.size() * work::Cost::kVectorEntry * 4);
  return sys;
}

double icp_loss(const GraphParams& params, const IcpProblem& problem) {
  const IcpEvaluator eval(problem);
  return eval.frozen_loss(params, eval.correspond(params));
}

ResidualSystem assemble(const GraphParams& params, const IcpProblem& problem) {
  const IcpEvaluator eval(problem);
  return eval.assemble(params, eval.correspond(params));
}

Eigen::VectorXd gradient(const GraphParams& params, const IcpProblem& problem) {
  const IcpEvaluator eval(problem);
  Eigen::VectorXd g;
  eval.frozen_loss(params, eval.correspond(params), &g);
  return 0.5 * g;
}

}  // namespace nicp::solvers

namespace nicp::solvers {

double IcpObjective::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& gradient) {
  if (matches_.empty()) relinearize(x);
  return evaluator_.frozen_loss(GraphParams(x), matches_, &gradient);
}

bool IcpObjective::relinearize(const Eigen::VectorXd& x) {
  matches_ = evaluator_.correspond(GraphParams(x));
  return true;
}

}  // namespace nicp::solvers
