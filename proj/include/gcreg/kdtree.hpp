#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gcreg {

/// Exact k-d tree over row-major points of arbitrary (runtime) dimension.
///
/// Every query returns the same answer as a linear scan that compares squared
/// Euclidean distances accumulated coordinate by coordinate; equal distances
/// are resolved toward the smaller point index. Immutable after construction
/// and safe to query concurrently.
class KdTree {
 public:
  struct Neighbor {
    std::size_t index;
    double sq_distance;
  };

  KdTree() = default;
  KdTree(std::vector<double> data, std::size_t dim);

  std::size_t size() const noexcept { return count_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> point(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }

  Neighbor nearest(std::span<const double> query) const;
  /// Indices whose squared distance is strictly below radius², ascending.
  std::vector<std::size_t> radius(std::span<const double> query, double radius) const;
  /// Up to k neighbours sorted by (distance, index).
  std::vector<Neighbor> knn(std::span<const double> query, std::size_t k) const;

 private:
  struct Node {
    std::uint32_t begin;
    std::uint32_t end;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t split_dim = 0;
    double split_value = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  double sq_dist(std::span<const double> q, std::size_t i) const;

  std::vector<double> data_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::size_t dim_ = 0;
  std::size_t count_ = 0;
};

}  // namespace gcreg
