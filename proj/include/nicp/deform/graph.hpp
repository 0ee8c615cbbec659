#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "nicp/deform/rotation.hpp"
#include "nicp/geometry/mesh.hpp"

namespace nicp::deform {

using geometry::TriMesh;

struct NodeInfluence {
  int node = 0;
  double weight = 0.0;
};

// Embedded deformation graph over a canonical-space template.
struct DeformationGraph {
  std::vector<Vec3> nodes;                         // rest positions g_k
  std::vector<std::pair<int, int>> edges;          // undirected, first < second
  std::vector<std::vector<NodeInfluence>> influences;  // per template vertex

  std::size_t node_count() const { return nodes.size(); }
  std::size_t parameter_count() const { return 6 * nodes.size(); }
  // Throws std::invalid_argument when K < 2, edges are malformed or
  // duplicated, or influence weights are negative or do not sum to 1.
  void validate() const;
  // Adjacency lists derived from `edges` (symmetric by construction).
  std::vector<std::vector<int>> adjacency() const;
};

// Flattened parameters theta = {r_k, t_k}: node k occupies entries
// [6k, 6k+3) for the axis-angle rotation and [6k+3, 6k+6) for the translation.
class GraphParams {
 public:
  GraphParams() = default;
  explicit GraphParams(std::size_t node_count) : values_(Eigen::VectorXd::Zero(6 * static_cast<Eigen::Index>(node_count))) {}
  explicit GraphParams(Eigen::VectorXd values);

  std::size_t node_count() const { return static_cast<std::size_t>(values_.size() / 6); }
  Eigen::Index size() const { return values_.size(); }

  auto rotation(std::size_t k) { return values_.segment<3>(6 * static_cast<Eigen::Index>(k)); }
  auto rotation(std::size_t k) const { return values_.segment<3>(6 * static_cast<Eigen::Index>(k)); }
  auto translation(std::size_t k) { return values_.segment<3>(6 * static_cast<Eigen::Index>(k) + 3); }
  auto translation(std::size_t k) const { return values_.segment<3>(6 * static_cast<Eigen::Index>(k) + 3); }

  Eigen::VectorXd& vector() { return values_; }
  const Eigen::VectorXd& vector() const { return values_; }

 private:
  Eigen::VectorXd values_;
};

struct GraphBuildOptions {
  int influence_count = 4;  // m nearest nodes per vertex
  int edge_neighbors = 6;   // k-nearest-node edges before symmetrization
  std::uint64_t seed = 0;   // picks the farthest-point-sampling start vertex
};

// Greedy farthest-point sampling starting from `start`. Ties go to the
// lowest index.
std::vector<int> farthest_point_sampling(std::span<const Vec3> points, std::size_t count, int start);

// Nodes by seeded farthest-point sampling over the vertices, k-nearest-node
// edges (symmetrized), and per-vertex weights over the m nearest nodes with
// w ~ max(0, 1 - d/d_max)^2, d_max the distance to the (m+1)-th nearest
// node, normalized to sum 1.
DeformationGraph build_graph(const TriMesh& mesh, std::size_t node_count,
                             const GraphBuildOptions& options = {});

// Influence weights of one position against fixed nodes (used by
// build_graph; exposed for tests and for re-binding new vertices).
std::vector<NodeInfluence> node_weights(const Vec3& position, std::span<const Vec3> nodes,
                                        int influence_count);

}  // namespace nicp::deform
