#include "nicp/deform/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace nicp::deform {

void DeformationGraph::validate() const {
  const int k = static_cast<int>(nodes.size());
  if (k < 2) throw std::invalid_argument("DeformationGraph: at least two nodes required");
  std::set<std::pair<int, int>> seen;
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= k || b >= k || a >= b) {
      throw std::invalid_argument("DeformationGraph: malformed edge (" + std::to_string(a) + ", " +
                                  std::to_string(b) + ")");
    }
    if (!seen.insert({a, b}).second) throw std::invalid_argument("DeformationGraph: duplicate edge");
  }
  for (std::size_t v = 0; v < influences.size(); ++v) {
    double sum = 0.0;
    for (const auto& inf : influences[v]) {
      if (inf.node < 0 || inf.node >= k) {
        throw std::invalid_argument("DeformationGraph: vertex " + std::to_string(v) +
                                    " references an unknown node");
      }
      if (!(inf.weight >= 0.0)) {
        throw std::invalid_argument("DeformationGraph: negative influence weight");
      }
      sum += inf.weight;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("DeformationGraph: influence weights of vertex " +
                                  std::to_string(v) + " do not sum to 1");
    }
  }
}

std::vector<std::vector<int>> DeformationGraph::adjacency() const {
  std::vector<std::vector<int>> adj(nodes.size());
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());
  return adj;
}

GraphParams::GraphParams(Eigen::VectorXd values) : values_(std::move(values)) {
  if (values_.size() % 6 != 0) throw std::invalid_argument("GraphParams: length must be 6K");
}

std::vector<int> farthest_point_sampling(std::span<const Vec3> points, std::size_t count, int start) {
  if (count > points.size()) throw std::invalid_argument("farthest_point_sampling: count exceeds points");
  if (count == 0) return {};
  if (start < 0 || start >= static_cast<int>(points.size())) {
    throw std::invalid_argument("farthest_point_sampling: start out of range");
  }
  std::vector<double> dist(points.size(), std::numeric_limits<double>::infinity());
  std::vector<int> chosen;
  chosen.reserve(count);
  int current = start;
  for (std::size_t s = 0; s < count; ++s) {
    chosen.push_back(current);
    dist[current] = -1.0;
    int next = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (dist[i] < 0.0) continue;
      dist[i] = std::min(dist[i], (points[i] - points[current]).squaredNorm());
      if (dist[i] > best) {
        best = dist[i];
        next = static_cast<int>(i);
      }
    }
    current = next;
  }
  return chosen;
}

std::vector<NodeInfluence> node_weights(const Vec3& position, std::span<const Vec3> nodes,
                                        int influence_count) {
  if (influence_count < 1) throw std::invalid_argument("node_weights: influence_count must be >= 1");
  if (nodes.empty()) throw std::invalid_argument("node_weights: no nodes");
  std::vector<std::pair<double, int>> d(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) d[k] = {(nodes[k] - position).norm(), static_cast<int>(k)};
  const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(influence_count), nodes.size());
  const std::size_t keep = std::min(m + 1, nodes.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(keep), d.end());

  double d_max;
  if (m < nodes.size()) {
    d_max = d[m].first;
  } else {
    // Fewer than m+1 nodes: extend the support past the farthest one used.
    d_max = 1.5 * d[m - 1].first;
  }

  std::vector<NodeInfluence> out;
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double u = d_max > 0.0 ? std::max(0.0, 1.0 - d[i].first / d_max) : 0.0;
    const double w = u * u;
    if (w > 0.0) {
      out.push_back({d[i].second, w});
      sum += w;
    }
  }
  if (out.empty()) return {{d[0].second, 1.0}};
  for (auto& inf : out) inf.weight /= sum;
  return out;
}

DeformationGraph build_graph(const TriMesh& mesh, std::size_t node_count,
                             const GraphBuildOptions& options) {
  if (node_count > mesh.vertices.size()) {
    throw std::invalid_argument("build_graph: node count " + std::to_string(node_count) +
                                " exceeds vertex count " + std::to_string(mesh.vertices.size()));
  }
  if (node_count < 2) throw std::invalid_argument("build_graph: at least two nodes required");
  if (options.influence_count < 1) throw std::invalid_argument("build_graph: influence count must be >= 1");

  std::mt19937_64 rng(options.seed);
  const int start = static_cast<int>(rng() % mesh.vertices.size());
  const auto ids = farthest_point_sampling(mesh.vertices, node_count, start);

  DeformationGraph graph;
  graph.nodes.reserve(node_count);
  for (int id : ids) graph.nodes.push_back(mesh.vertices[id]);

  const std::size_t k_edges =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(options.edge_neighbors, 1)), node_count - 1);
  std::set<std::pair<int, int>> edges;
  for (std::size_t a = 0; a < node_count; ++a) {
    std::vector<std::pair<double, int>> d;
    d.reserve(node_count - 1);
    for (std::size_t b = 0; b < node_count; ++b) {
      if (a != b) d.push_back({(graph.nodes[a] - graph.nodes[b]).squaredNorm(), static_cast<int>(b)});
    }
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k_edges), d.end());
    for (std::size_t i = 0; i < k_edges; ++i) {
      const int b = d[i].second;
      edges.insert({std::min(static_cast<int>(a), b), std::max(static_cast<int>(a), b)});
    }
  }
  graph.edges.assign(edges.begin(), edges.end());

  graph.influences.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) graph.influences.push_back(node_weights(v, graph.nodes, options.influence_count));
  return graph;
}

}  // namespace nicp::deform
