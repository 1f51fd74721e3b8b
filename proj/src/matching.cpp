#include "gcreg/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "gcreg/error.hpp"
#include "gcreg/kdtree.hpp"
#include "gcreg/parallel.hpp"
#include "gcreg/random.hpp"

namespace gcreg {

LevelMatch match_level(const DescriptorSet& source, const DescriptorSet& target, unsigned threads) {
  require(source.dimension == target.dimension, "descriptor dimension mismatch");
  require(source.dimension > 0, "descriptors have zero dimension");
  require(target.size() > 0, "target descriptor set is empty");
  const KdTree tree(target.values, target.dimension);
  LevelMatch out;
  out.target.resize(source.size());
  out.distance.resize(source.size());
  parallel_for(source.size(), threads, [&](std::size_t i) {
    const auto nn = tree.nearest(source.row(i));
    out.target[i] = nn.index;
    out.distance[i] = std::sqrt(nn.sq_distance);
  });
  return out;
}

CandidateTable build_candidates(const MultiScaleDescriptors& source,
                                const MultiScaleDescriptors& target, unsigned threads) {
  require(source.level_count() == target.level_count(), "level count mismatch");
  require(source.level_count() > 0, "no descriptor levels");
  CandidateTable table(source.point_count(), source.level_count());
  for (std::size_t l = 0; l < source.level_count(); ++l) {
    require(source.levels[l].size() == source.point_count(),
            "source levels cover different point counts");
    const LevelMatch m = match_level(source.levels[l], target.levels[l], threads);
    for (std::size_t i = 0; i < m.target.size(); ++i) table.set(i, l, m.target[i], m.distance[i]);
  }
  return table;
}

bool candidates_agree(const std::vector<Vec3>& target_points, std::size_t a, std::size_t b,
                      double d_tol) {
  return a == b || (target_points[a] - target_points[b]).norm() <= d_tol;
}

CorrespondenceSet consistent_vote(const CandidateTable& candidates,
                                  const std::vector<Vec3>& target_points, double d_tol) {
  require(d_tol >= 0.0, "voting tolerance must be non-negative");
  CorrespondenceSet out;
  const std::size_t levels = candidates.levels();
  for (std::size_t i = 0; i < candidates.sources(); ++i) {
    bool accepted = false;
    for (std::size_t l = 0; l + 1 < levels; ++l) {
      const std::size_t a = candidates.target(i, l);
      const std::size_t b = candidates.target(i, l + 1);
      require(a < target_points.size() && b < target_points.size(),
              "candidate index out of range");
      if (candidates_agree(target_points, a, b, d_tol)) {
        out.pairs.push_back({i, a, static_cast<int>(l + 1)});
        accepted = true;
        break;
      }
    }
    if (!accepted) out.rejected.push_back(i);
  }
  return out;
}

CorrespondenceSet single_level_correspondences(const CandidateTable& candidates, std::size_t level) {
  require(level < candidates.levels(), "level out of range");
  CorrespondenceSet out;
  out.pairs.reserve(candidates.sources());
  for (std::size_t i = 0; i < candidates.sources(); ++i)
    out.pairs.push_back({i, candidates.target(i, level), static_cast<int>(level + 1)});
  return out;
}

CorrespondenceSet mutual_filter(const CorrespondenceSet& forward, const CorrespondenceSet& backward) {
  std::unordered_map<std::size_t, std::size_t> back;
  back.reserve(backward.pairs.size());
  for (const auto& c : backward.pairs) back.emplace(c.source, c.target);
  CorrespondenceSet out;
  out.rejected = forward.rejected;
  for (const auto& c : forward.pairs) {
    const auto it = back.find(c.target);
    if (it != back.end() && it->second == c.source)
      out.pairs.push_back(c);
    else
      out.rejected.push_back(c.source);
  }
  std::sort(out.rejected.begin(), out.rejected.end());
  return out;
}

std::vector<std::size_t> sample_points(std::size_t n, std::size_t count, std::uint64_t seed,
                                       std::span<const double> weights) {
  require(count >= 1, "sample count must be at least 1");
  require(weights.empty() || weights.size() == n, "sampling weights length mismatch");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count >= n) return idx;

  Rng rng(seed);
  if (weights.empty()) {
    // Partial Fisher-Yates.
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.index(n - k));
      std::swap(idx[k], idx[j]);
    }
    idx.resize(count);
  } else {
    // Key u^(1/w): the `count` largest keys form a weighted sample without
    // replacement. Zero-weight points are only taken once the rest run out.
    std::vector<double> key(n);
    for (std::size_t i = 0; i < n; ++i) {
      require(weights[i] >= 0.0 && std::isfinite(weights[i]), "sampling weights must be finite and >= 0");
      const double u = rng.uniform();
      key[i] = weights[i] > 0.0 ? std::log(std::max(u, 1e-300)) / weights[i]
                                : -std::numeric_limits<double>::infinity();
    }
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                        return key[a] > key[b] || (key[a] == key[b] && a < b);
                      });
    idx.resize(count);
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

DescriptorSet select_rows(const DescriptorSet& set, std::span<const std::size_t> rows) {
  DescriptorSet out;
  out.level = set.level;
  out.dimension = set.dimension;
  out.values.reserve(rows.size() * set.dimension);
  for (std::size_t r : rows) {
    require(r < set.size(), "row index out of range");
    const auto src = set.row(r);
    out.values.insert(out.values.end(), src.begin(), src.end());
  }
  for (std::size_t k = 0; k < rows.size(); ++k)
    if (std::binary_search(set.empty_points.begin(), set.empty_points.end(), rows[k]))
      out.empty_points.push_back(k);
  return out;
}

MultiScaleDescriptors select_rows(const MultiScaleDescriptors& set,
                                  std::span<const std::size_t> rows) {
  MultiScaleDescriptors out;
  out.radii = set.radii;
  for (const auto& level : set.levels) out.levels.push_back(select_rows(level, rows));
  return out;
}

}  // namespace gcreg
