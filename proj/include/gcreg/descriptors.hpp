#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gcreg/cloud.hpp"

namespace gcreg {

/// Per-point feature vectors at one scale, stored row-major.
struct DescriptorSet {
  int level = 1;
  std::size_t dimension = 0;
  std::vector<double> values;
  /// Points that had no neighbours in range (their row is all zeros).
  std::vector<std::size_t> empty_points;

  std::size_t size() const noexcept { return dimension ? values.size() / dimension : 0; }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * dimension, dimension};
  }
  std::span<double> row(std::size_t i) { return {values.data() + i * dimension, dimension}; }
};

/// Level 1 is the largest radius; radii strictly decrease with level.
struct MultiScaleDescriptors {
  std::vector<DescriptorSet> levels;
  std::vector<double> radii;

  std::size_t level_count() const noexcept { return levels.size(); }
  std::size_t point_count() const noexcept { return levels.empty() ? 0 : levels.front().size(); }
};

struct PpfQuadruple {
  double angle1 = 0.0;  // ∠(pj - pi, ni)
  double angle2 = 0.0;  // ∠(pj - pi, nj)
  double angle3 = 0.0;  // ∠(ni, nj)
  double distance = 0.0;
};

/// Angle in [0, π] between two non-zero vectors.
double vector_angle(const Vec3& a, const Vec3& b);

/// Point pair feature. Coincident points give the all-zero quadruple.
PpfQuadruple ppf(const Vec3& pi, const Vec3& ni, const Vec3& pj, const Vec3& nj);

/// Darboux-frame pair angles used by the FPFH histograms:
/// theta in [-π, π], alpha and phi in [-1, 1]. Returns false for coincident
/// points, in which case the pair contributes nothing.
struct PairAngles {
  double theta = 0.0;
  double alpha = 0.0;
  double phi = 0.0;
};
bool fpfh_pair_angles(const Vec3& ps, const Vec3& ns, const Vec3& pt, const Vec3& nt,
                      PairAngles& out);

/// Bin index of each angle for a histogram of `bins` cells.
std::size_t theta_bin(double theta, std::size_t bins);
std::size_t cosine_bin(double value, std::size_t bins);

struct FpfhOptions {
  std::size_t bins = 11;
  unsigned threads = 1;
};

/// Fast point feature histograms (3 × bins values per point, each sub-histogram
/// normalized to sum 100). Neighbourhoods use strict `< radius`.
DescriptorSet fpfh(const PointCloud& cloud, double radius, const FpfhOptions& options = {});

/// One FPFH level per multiplier with radius = multiplier × voxel_size.
/// Multipliers must be strictly decreasing.
MultiScaleDescriptors multiscale_fpfh(const PointCloud& cloud, double voxel_size,
                                      const std::vector<double>& multipliers,
                                      const FpfhOptions& options = {});

}  // namespace gcreg
