#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>
#include <array>
#include <cstddef>
#include <vector>

#include "gcreg/kdtree.hpp"

namespace gcreg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Ordered 3D points with optional per-point unit normals. `normals` is either
/// empty or the same length as `points`.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  bool has_normals() const noexcept { return !normals.empty(); }

  /// Checks the container invariants (length agreement, finite coordinates,
  /// unit normals within 1e-6). Throws Error(kValidation) on violation.
  void validate() const;
};

/// Proper rigid motion x -> R x + t.
class RigidTransform {
 public:
  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  static RigidTransform identity() { return {}; }
  /// Builds from a homogeneous 4x4 (row-major array of 16). The bottom row must
  /// be (0,0,0,1) within 1e-12 and the rotation block must be proper.
  static RigidTransform from_row_major(const std::array<double, 16>& m);

  const Mat3& rotation() const noexcept { return rotation_; }
  const Vec3& translation() const noexcept { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 rotate(const Vec3& n) const { return rotation_ * n; }

  RigidTransform inverse() const;
  /// (a * b)(x) = a(b(x))
  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);

  Mat4 matrix() const;
  std::array<double, 16> row_major() const;

  /// RᵀR = I and det R = +1, both within `tol`.
  bool is_proper(double tol = 1e-9) const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

/// Rotation of `angle` radians about `axis` (normalized internally).
Mat3 axis_angle(const Vec3& axis, double angle);

/// One output point per occupied voxel, at the centroid of its members. Output
/// order follows the first occurrence of each voxel in the input. Normals, if
/// present, are averaged and renormalized.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size);

/// Exact nearest-neighbour and radius queries over a cloud's points.
class SpatialIndex {
 public:
  explicit SpatialIndex(const PointCloud& cloud);
  explicit SpatialIndex(const std::vector<Vec3>& points);

  struct Hit {
    std::size_t index;
    double distance;
  };

  std::size_t size() const noexcept { return tree_.size(); }

  /// Closest stored point; ties go to the smallest index.
  Hit nearest(const Vec3& query) const;
  /// All indices with distance strictly below `radius`, ascending.
  std::vector<std::size_t> radius(const Vec3& query, double radius) const;
  /// The k closest points ordered by (distance, index).
  std::vector<Hit> knn(const Vec3& query, std::size_t k) const;

 private:
  KdTree tree_;
};

SpatialIndex build_index(const PointCloud& cloud);

struct NormalOptions {
  std::size_t neighbors = 33;
  Vec3 viewpoint = Vec3::Zero();
  unsigned threads = 1;
};

/// PCA normals over the k nearest neighbours (the point itself included),
/// flipped to face `viewpoint`. Points whose neighbourhood covariance has rank
/// below 2 get (0,0,1) and are listed in `degenerate` when it is non-null.
PointCloud estimate_normals(const PointCloud& cloud, const NormalOptions& options = {},
                            std::vector<std::size_t>* degenerate = nullptr);

/// Each superpoint gets the normalized mean of the source normals strictly
/// within `radius`; an empty ball (or a mean that cancels to zero) falls back
/// to the nearest source point's normal.
PointCloud smooth_normals(const PointCloud& superpoints, const PointCloud& source,
                          double radius, unsigned threads = 1);

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& transform);

}  // namespace gcreg
