#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gcreg/cloud.hpp"
#include "gcreg/descriptors.hpp"

namespace gcreg {

/// Nearest target in feature space for every source row.
struct LevelMatch {
  std::vector<std::size_t> target;
  std::vector<double> distance;
};

/// Exact Euclidean nearest neighbour in feature space, ties to the smallest
/// target index.
LevelMatch match_level(const DescriptorSet& source, const DescriptorSet& target,
                       unsigned threads = 1);

/// Candidate target per (source point, level). Levels are stored 0-based here
/// and reported 1-based in correspondences.
class CandidateTable {
 public:
  CandidateTable() = default;
  CandidateTable(std::size_t sources, std::size_t levels)
      : sources_(sources), levels_(levels), target_(sources * levels), distance_(sources * levels) {}

  std::size_t sources() const noexcept { return sources_; }
  std::size_t levels() const noexcept { return levels_; }

  std::size_t target(std::size_t i, std::size_t level) const { return target_[i * levels_ + level]; }
  double distance(std::size_t i, std::size_t level) const { return distance_[i * levels_ + level]; }
  void set(std::size_t i, std::size_t level, std::size_t target, double distance) {
    target_[i * levels_ + level] = target;
    distance_[i * levels_ + level] = distance;
  }

 private:
  std::size_t sources_ = 0;
  std::size_t levels_ = 0;
  std::vector<std::size_t> target_;
  std::vector<double> distance_;
};

CandidateTable build_candidates(const MultiScaleDescriptors& source,
                                const MultiScaleDescriptors& target, unsigned threads = 1);

struct Correspondence {
  std::size_t source;
  std::size_t target;
  int level;  // 1-based level that produced the match
  bool operator==(const Correspondence&) const = default;
};

/// Accepted pairs plus the source indices whose match was judged unreliable.
/// Together they cover every queried source index exactly once.
struct CorrespondenceSet {
  std::vector<Correspondence> pairs;
  std::vector<std::size_t> rejected;
  bool operator==(const CorrespondenceSet&) const = default;
};

/// Two candidates agree when they are the same target point or lie within
/// `d_tol` of each other.
bool candidates_agree(const std::vector<Vec3>& target_points, std::size_t a, std::size_t b,
                      double d_tol);

/// Multi-level consistent voting. For each source point the adjacent level
/// pairs (1,2), (2,3), ... are scanned in order; the first agreeing pair
/// (l, l+1) accepts the level-l candidate. No agreeing pair rejects the point.
CorrespondenceSet consistent_vote(const CandidateTable& candidates,
                                  const std::vector<Vec3>& target_points, double d_tol);

/// Correspondences from a single level with no filtering (all sources kept).
CorrespondenceSet single_level_correspondences(const CandidateTable& candidates,
                                               std::size_t level = 0);

/// Keeps (i, j) iff `backward` (target -> source) maps j back to i; dropped
/// sources move to `rejected`.
CorrespondenceSet mutual_filter(const CorrespondenceSet& forward, const CorrespondenceSet& backward);

/// min(count, n) distinct indices in ascending order, deterministic per seed.
/// Uniform without replacement, or weighted (Efraimidis-Spirakis) when
/// `weights` is non-empty.
std::vector<std::size_t> sample_points(std::size_t n, std::size_t count, std::uint64_t seed,
                                       std::span<const double> weights = {});

/// Row subset of a descriptor set, in the order of `rows`.
DescriptorSet select_rows(const DescriptorSet& set, std::span<const std::size_t> rows);
MultiScaleDescriptors select_rows(const MultiScaleDescriptors& set,
                                  std::span<const std::size_t> rows);

}  // namespace gcreg
