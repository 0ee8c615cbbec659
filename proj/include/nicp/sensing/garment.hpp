#pragma once

#include "nicp/deform/skinning.hpp"

namespace nicp::sensing {

// Procedural loose dress: an open tube around the legs with a flared hem and
// shallow pleats, skinned to a five-joint lower-body skeleton (root, hips,
// knees). Meters, y up, the subject faces +z.
struct GarmentOptions {
  int rings = 48;        // vertex rows from waist to hem
  int segments = 64;     // vertices around each ring
  double waist_y = 1.0;
  double hem_y = 0.42;
  double waist_radius = 0.16;
  double hem_radius = 0.36;
  double pleat_depth = 0.04;  // relative radial pleat amplitude at the hem
  int pleats = 8;
};

deform::Skeleton lower_body_skeleton();
deform::SkinnedTemplate make_garment(const GarmentOptions& options = {});

}  // namespace nicp::sensing
