#include "gcreg/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "gcreg/error.hpp"

namespace gcreg {

namespace {

constexpr std::uint32_t kLeafSize = 10;

bool closer(double da, std::size_t ia, double db, std::size_t ib) {
  return da < db || (da == db && ia < ib);
}

}  // namespace

KdTree::KdTree(std::vector<double> data, std::size_t dim)
    : data_(std::move(data)), dim_(dim) {
  require(dim_ > 0, "kd-tree dimension must be positive");
  require(data_.size() % dim_ == 0, "kd-tree data length is not a multiple of dim");
  count_ = data_.size() / dim_;
  require(count_ > 0, "cannot index an empty point set");
  require(count_ < std::numeric_limits<std::uint32_t>::max(), "too many points to index");
  order_.resize(count_);
  for (std::uint32_t i = 0; i < count_; ++i) order_[i] = i;
  nodes_.reserve(2 * (count_ / kLeafSize + 1));
  build(0, static_cast<std::uint32_t>(count_));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  // Split on the axis of largest spread.
  std::uint32_t best_dim = 0;
  double best_spread = -1.0;
  for (std::uint32_t d = 0; d < dim_; ++d) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::uint32_t k = begin; k < end; ++k) {
      const double v = data_[order_[k] * dim_ + d];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_dim = d;
    }
  }
  if (best_spread <= 0.0) return id;  // all coincident: keep as leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return data_[a * dim_ + best_dim] < data_[b * dim_ + best_dim];
                   });
  const double split = data_[order_[mid] * dim_ + best_dim];
  nodes_[id].split_dim = best_dim;
  nodes_[id].split_value = split;
  const auto left = build(begin, mid);
  const auto right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double KdTree::sq_dist(std::span<const double> q, std::size_t i) const {
  const double* p = data_.data() + i * dim_;
  double s = 0.0;
  for (std::size_t d = 0; d < dim_; ++d) {
    const double diff = q[d] - p[d];
    s += diff * diff;
  }
  return s;
}

KdTree::Neighbor KdTree::nearest(std::span<const double> query) const {
  require(query.size() == dim_, "query dimension mismatch");
  Neighbor best{std::numeric_limits<std::size_t>::max(),
                std::numeric_limits<double>::infinity()};
  // Explicit stack of (node, lower bound on squared distance).
  std::vector<std::pair<std::int32_t, double>> stack{{0, 0.0}};
  while (!stack.empty()) {
    const auto [id, bound] = stack.back();
    stack.pop_back();
    if (bound > best.sq_distance) continue;
    const Node& node = nodes_[id];
    if (node.left < 0) {
      for (std::uint32_t k = node.begin; k < node.end; ++k) {
        const std::size_t i = order_[k];
        const double d = sq_dist(query, i);
        if (closer(d, i, best.sq_distance, best.index)) best = {i, d};
      }
      continue;
    }
    const double diff = query[node.split_dim] - node.split_value;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    stack.emplace_back(far, std::max(bound, diff * diff));
    stack.emplace_back(near, bound);
  }
  return best;
}

std::vector<std::size_t> KdTree::radius(std::span<const double> query, double radius) const {
  require(query.size() == dim_, "query dimension mismatch");
  require(radius >= 0.0, "radius must be non-negative");
  std::vector<std::size_t> out;
  const double r2 = radius * radius;
  if (r2 <= 0.0) return out;
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.left < 0) {
      for (std::uint32_t k = node.begin; k < node.end; ++k) {
        const std::size_t i = order_[k];
        if (sq_dist(query, i) < r2) out.push_back(i);
      }
      continue;
    }
    const double diff = query[node.split_dim] - node.split_value;
    const bool left_first = diff < 0.0;
    // Points on the far side are at least diff² away.
    if (diff * diff < r2) stack.push_back(left_first ? node.right : node.left);
    stack.push_back(left_first ? node.left : node.right);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<KdTree::Neighbor> KdTree::knn(std::span<const double> query, std::size_t k) const {
  require(query.size() == dim_, "query dimension mismatch");
  std::vector<Neighbor> out;
  if (k == 0) return out;
  auto worse = [](const Neighbor& a, const Neighbor& b) {
    return closer(a.sq_distance, a.index, b.sq_distance, b.index);
  };
  // Max-heap on (distance, index): top is the current worst kept neighbour.
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(worse)> heap(worse);
  std::vector<std::pair<std::int32_t, double>> stack{{0, 0.0}};
  while (!stack.empty()) {
    const auto [id, bound] = stack.back();
    stack.pop_back();
    if (heap.size() == k && bound > heap.top().sq_distance) continue;
    const Node& node = nodes_[id];
    if (node.left < 0) {
      for (std::uint32_t j = node.begin; j < node.end; ++j) {
        const std::size_t i = order_[j];
        const double d = sq_dist(query, i);
        if (heap.size() < k) {
          heap.push({i, d});
        } else if (closer(d, i, heap.top().sq_distance, heap.top().index)) {
          heap.pop();
          heap.push({i, d});
        }
      }
      continue;
    }
    const double diff = query[node.split_dim] - node.split_value;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    stack.emplace_back(far, std::max(bound, diff * diff));
    stack.emplace_back(near, bound);
  }
  out.reserve(heap.size());
  while (!heap.empty()) {
    out.push_back(heap.top());
    heap.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace gcreg
