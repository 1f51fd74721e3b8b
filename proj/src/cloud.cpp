#include "gcreg/cloud.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <cmath>
#include <unordered_map>

#include "gcreg/error.hpp"
#include "gcreg/parallel.hpp"

namespace gcreg {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParameter: return "parameter";
    case ErrorCode::kDegenerate: return "degenerate-input";
    case ErrorCode::kNoConsensus: return "no-consensus";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kUndefinedMetric: return "undefined-metric";
    case ErrorCode::kNonFinite: return "non-finite";
    case ErrorCode::kValidation: return "validation";
  }
  return "unknown";
}

void PointCloud::validate() const {
  require(normals.empty() || normals.size() == points.size(),
          "normals and points differ in length", ErrorCode::kValidation);
  for (const auto& p : points)
    require(p.allFinite(), "non-finite point coordinate", ErrorCode::kValidation);
  for (const auto& n : normals)
    require(std::abs(n.norm() - 1.0) <= 1e-6, "normal is not unit length",
            ErrorCode::kValidation);
}

// ---------------------------------------------------------------------------
// RigidTransform

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {}

RigidTransform RigidTransform::from_row_major(const std::array<double, 16>& m) {
  for (double v : m) require(std::isfinite(v), "non-finite transform entry", ErrorCode::kValidation);
  require(std::abs(m[12]) <= 1e-12 && std::abs(m[13]) <= 1e-12 && std::abs(m[14]) <= 1e-12 &&
              std::abs(m[15] - 1.0) <= 1e-12,
          "transform bottom row must be (0,0,0,1)", ErrorCode::kValidation);
  Mat3 r;
  r << m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10];
  RigidTransform t(r, Vec3(m[3], m[7], m[11]));
  // Text round trips of a rotation lose ~1e-16 per entry; be tolerant here.
  require(t.is_proper(1e-6), "transform rotation block is not a proper rotation",
          ErrorCode::kValidation);
  return t;
}

RigidTransform RigidTransform::inverse() const {
  const Mat3 rt = rotation_.transpose();
  return {rt, -(rt * translation_)};
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation_ * b.rotation_, a.rotation_ * b.translation_ + a.translation_};
}

Mat4 RigidTransform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

std::array<double, 16> RigidTransform::row_major() const {
  const Mat4 m = matrix();
  std::array<double, 16> out{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out[r * 4 + c] = m(r, c);
  return out;
}

bool RigidTransform::is_proper(double tol) const {
  if (!rotation_.allFinite() || !translation_.allFinite()) return false;
  const Mat3 err = rotation_.transpose() * rotation_ - Mat3::Identity();
  return err.cwiseAbs().maxCoeff() <= tol && std::abs(rotation_.determinant() - 1.0) <= tol;
}

Mat3 axis_angle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& transform) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(transform.apply(p));
  out.normals.reserve(cloud.normals.size());
  for (const auto& n : cloud.normals) out.normals.push_back(transform.rotate(n));
  return out;
}

// ---------------------------------------------------------------------------
// Voxel grid

namespace {

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(k.y) + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) + 0x94D049BB133111EBULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

std::int64_t voxel_coord(double v, double voxel) {
  const double f = std::floor(v / voxel);
  require(std::isfinite(f) && std::abs(f) < 4e18, "point out of voxel grid range");
  return static_cast<std::int64_t>(f);
}

}  // namespace

PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  require(voxel_size > 0.0 && std::isfinite(voxel_size), "voxel_size must be positive");
  require(cloud.normals.empty() || cloud.normals.size() == cloud.size(),
          "normals and points differ in length");
  std::unordered_map<VoxelKey, std::size_t, VoxelKeyHash> slots;
  slots.reserve(cloud.size());
  std::vector<Vec3> sums;
  std::vector<Vec3> normal_sums;
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const VoxelKey key{voxel_coord(p.x(), voxel_size), voxel_coord(p.y(), voxel_size),
                       voxel_coord(p.z(), voxel_size)};
    auto [it, inserted] = slots.try_emplace(key, sums.size());
    if (inserted) {
      sums.push_back(Vec3::Zero());
      counts.push_back(0);
      if (cloud.has_normals()) normal_sums.push_back(Vec3::Zero());
    }
    sums[it->second] += p;
    ++counts[it->second];
    if (cloud.has_normals()) normal_sums[it->second] += cloud.normals[i];
  }
  PointCloud out;
  out.points.resize(sums.size());
  for (std::size_t s = 0; s < sums.size(); ++s)
    out.points[s] = counts[s] == 1 ? sums[s] : Vec3(sums[s] / static_cast<double>(counts[s]));
  if (cloud.has_normals()) {
    out.normals.resize(sums.size());
    for (std::size_t s = 0; s < sums.size(); ++s) {
      const double n = normal_sums[s].norm();
      out.normals[s] = n > 1e-12 ? Vec3(normal_sums[s] / n) : Vec3(0, 0, 1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spatial index

namespace {

std::vector<double> flatten(const std::vector<Vec3>& points) {
  std::vector<double> data;
  data.reserve(points.size() * 3);
  for (const auto& p : points) {
    data.push_back(p.x());
    data.push_back(p.y());
    data.push_back(p.z());
  }
  return data;
}

}  // namespace

SpatialIndex::SpatialIndex(const std::vector<Vec3>& points)
    : tree_((require(!points.empty(), "cannot index an empty cloud"), flatten(points)), 3) {}

SpatialIndex::SpatialIndex(const PointCloud& cloud) : SpatialIndex(cloud.points) {}

SpatialIndex::Hit SpatialIndex::nearest(const Vec3& query) const {
  const auto n = tree_.nearest(std::span<const double>(query.data(), 3));
  return {n.index, std::sqrt(n.sq_distance)};
}

std::vector<std::size_t> SpatialIndex::radius(const Vec3& query, double r) const {
  require(r >= 0.0, "radius must be non-negative");
  return tree_.radius(std::span<const double>(query.data(), 3), r);
}

std::vector<SpatialIndex::Hit> SpatialIndex::knn(const Vec3& query, std::size_t k) const {
  std::vector<Hit> out;
  for (const auto& n : tree_.knn(std::span<const double>(query.data(), 3), k))
    out.push_back({n.index, std::sqrt(n.sq_distance)});
  return out;
}

SpatialIndex build_index(const PointCloud& cloud) { return SpatialIndex(cloud); }

// ---------------------------------------------------------------------------
// Normals

PointCloud estimate_normals(const PointCloud& cloud, const NormalOptions& options,
                            std::vector<std::size_t>* degenerate) {
  require(options.neighbors >= 3, "normal estimation needs at least 3 neighbours");
  require(cloud.size() >= options.neighbors, "cloud has fewer points than the neighbour count");
  const SpatialIndex index(cloud);
  PointCloud out;
  out.points = cloud.points;
  out.normals.resize(cloud.size());
  std::vector<char> flagged(cloud.size(), 0);

  parallel_for(cloud.size(), options.threads, [&](std::size_t i) {
    const auto hits = index.knn(cloud.points[i], options.neighbors);
    Vec3 mean = Vec3::Zero();
    for (const auto& h : hits) mean += cloud.points[h.index];
    mean /= static_cast<double>(hits.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& h : hits) {
      const Vec3 d = cloud.points[h.index] - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
    const Vec3 ev = solver.eigenvalues();  // ascending
    if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) {
      out.normals[i] = Vec3(0, 0, 1);
      flagged[i] = 1;
      return;
    }
    Vec3 n = solver.eigenvectors().col(0).normalized();
    if (n.dot(options.viewpoint - cloud.points[i]) < 0.0) n = -n;
    out.normals[i] = n;
  });

  if (degenerate) {
    degenerate->clear();
    for (std::size_t i = 0; i < flagged.size(); ++i)
      if (flagged[i]) degenerate->push_back(i);
  }
  return out;
}

PointCloud smooth_normals(const PointCloud& superpoints, const PointCloud& source, double radius,
                          unsigned threads) {
  require(source.has_normals(), "smooth_normals needs a source cloud with normals");
  require(radius > 0.0, "smoothing radius must be positive");
  const SpatialIndex index(source);
  PointCloud out;
  out.points = superpoints.points;
  out.normals.resize(superpoints.size());
  parallel_for(superpoints.size(), threads, [&](std::size_t i) {
    const Vec3& q = superpoints.points[i];
    Vec3 sum = Vec3::Zero();
    for (std::size_t j : index.radius(q, radius)) sum += source.normals[j];
    const double len = sum.norm();
    out.normals[i] = len > 1e-12 ? Vec3(sum / len) : source.normals[index.nearest(q).index];
  });
  return out;
}

}  // namespace gcreg
