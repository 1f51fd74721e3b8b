#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gcreg/cloud.hpp"

namespace gcreg {

enum class SynthShape { kSphere, kBoxRoom, kRandomSurface };

const char* to_string(SynthShape shape);
SynthShape synth_shape_from_string(const std::string& s);

struct SynthConfig {
  std::size_t n_points = 6000;  // points per view
  double overlap_frac = 0.7;     // fraction of each view shared with the other
  double noise_sigma = 0.0;
  double max_rotation_deg = 60.0;
  double max_translation = 0.3;
  double scale = 1.0;  // characteristic shape size (blob radius, room half-height)
  SynthShape shape = SynthShape::kRandomSurface;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthPair {
  PointCloud source;
  PointCloud target;
  RigidTransform gt;  // maps source onto target
  /// (i in source, j in target) for every shared surface sample.
  std::vector<std::pair<std::size_t, std::size_t>> shared;
};

/// Samples the shape surface, sorts the samples along a random view axis and
/// cuts two windows sharing overlap_frac of their points. The target window
/// is moved by a random rigid motion (rotation angle uniform in
/// [0, max_rotation], translation uniform in the ball of max_translation);
/// independent isotropic Gaussian noise is then added to both clouds.
SynthPair synth_pair(const SynthConfig& config);

}  // namespace gcreg
