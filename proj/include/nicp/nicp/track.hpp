#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "nicp/neural/network.hpp"
#include "nicp/nicp/canonical.hpp"
#include "nicp/solvers/problem.hpp"
#include "nicp/solvers/trace.hpp"

namespace nicp::tracking {

using deform::DeformationModel;
using deform::GraphParams;
using solvers::CorrespondenceMode;

struct NicpConfig {
  int iterations = 3;       // N
  int subsample = 4096;     // points fed to the network per iteration
  double reg_weight = solvers::kDefaultRegWeight;
  CorrespondenceMode mode = CorrespondenceMode::Euclidean;
  std::uint64_t seed = 0;   // subsampling

  void validate() const;
};

// Seeded uniform subset of at most `count` points, in input order.
PointCloud subsample(const PointCloud& cloud, int count, std::uint64_t seed);

// One frame expressed in the root body frame of its pose: the subsampled
// cloud, the root-relative posed model and the matching ICP evaluator.
class NicpFrame {
 public:
  NicpFrame(std::shared_ptr<const DeformationModel> model, const PointCloud& cloud, const BodyPose& pose,
            const NicpConfig& config, const std::vector<PinholeCamera>& cameras = {});

  struct Features {
    neural::NetworkInput input;
    double loss = 0.0;  // L_ICP on the subsampled cloud
    std::size_t matches = 0;
  };

  // Correspondences at theta, per-point residuals (zero where unmatched)
  // and the gradient J^T r divided by the match count.
  Features features(const GraphParams& theta) const;

  const solvers::IcpEvaluator& evaluator() const { return evaluator_; }
  const BodyPose& pose() const { return pose_; }
  const Skeleton& skeleton() const { return evaluator_.posed().model().skin.skeleton; }
  TriMesh world_mesh(const GraphParams& theta) const;

 private:
  BodyPose pose_;
  solvers::IcpEvaluator evaluator_;
};

struct TrackResult {
  GraphParams theta;
  TriMesh mesh;              // world frame
  solvers::SolveTrace trace;  // initial state plus one record per iteration
};

// theta^(0) = 0, then N times: correspondences -> (r, g) -> delta theta from
// the network -> theta += delta theta. All network inputs are in the root frame.
// The trace reference mesh, if any, is given in the world frame.
TrackResult track(const neural::UpdateNetwork& network, const PointCloud& cloud, const BodyPose& pose,
                  std::shared_ptr<const DeformationModel> model, const NicpConfig& config,
                  const solvers::TraceOptions& trace = {}, const std::vector<PinholeCamera>& cameras = {});

}  // namespace nicp::tracking
