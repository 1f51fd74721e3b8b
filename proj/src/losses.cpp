#include "gcreg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gcreg/error.hpp"
#include "gcreg/kdtree.hpp"

namespace gcreg {

void CircleLossParams::validate() const {
  require(gamma > 0.0, "circle loss gamma must be positive");
  require(delta_p > 0.0 && delta_n > delta_p, "circle loss margins need delta_n > delta_p > 0");
}

namespace {

double feature_distance(const DescriptorSet& a, std::size_t i, const DescriptorSet& b, std::size_t j) {
  const auto ra = a.row(i);
  const auto rb = b.row(j);
  double s = 0.0;
  for (std::size_t d = 0; d < ra.size(); ++d) {
    const double diff = ra[d] - rb[d];
    s += diff * diff;
  }
  return std::sqrt(s);
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

double circle_loss(const DescriptorSet& feat_x, const DescriptorSet& feat_y,
                   std::span<const IndexPair> sampled, const CircleLossParams& params) {
  params.validate();
  require(feat_x.dimension == feat_y.dimension, "circle loss: feature dimension mismatch");
  require(sampled.size() >= 2, "circle loss needs at least 2 sampled correspondences");
  for (const auto& [i, j] : sampled)
    require(i < feat_x.size() && j < feat_y.size(), "circle loss: index out of range");

  const double ninf = -std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (std::size_t a = 0; a < sampled.size(); ++a) {
    const auto [xi, yi] = sampled[a];
    const double dp = feature_distance(feat_x, xi, feat_y, yi);
    const double alpha_p = std::max(dp - params.delta_p, 0.0);
    const double logit_p = params.gamma * alpha_p * (dp - params.delta_p);

    std::vector<double> logit_n;
    for (std::size_t b = 0; b < sampled.size(); ++b) {
      if (sampled[b].first == xi) continue;
      const double dn = feature_distance(feat_x, xi, feat_y, sampled[b].second);
      const double alpha_n = std::max(params.delta_n - dn, 0.0);
      logit_n.push_back(params.gamma * alpha_n * (params.delta_n - dn));
    }
    if (logit_n.empty()) continue;  // log(1 + 0)
    const double peak = *std::max_element(logit_n.begin(), logit_n.end());
    double acc = 0.0;
    for (double v : logit_n) acc += std::exp(v - peak);
    const double lse = peak == ninf ? ninf : peak + std::log(acc);
    total += softplus(logit_p + lse);
  }
  return total / static_cast<double>(sampled.size());
}

double symmetric_circle_loss(const DescriptorSet& feat_x, const DescriptorSet& feat_y,
                             std::span<const IndexPair> sampled, const CircleLossParams& params) {
  std::vector<IndexPair> swapped;
  swapped.reserve(sampled.size());
  for (const auto& [i, j] : sampled) swapped.emplace_back(j, i);
  return 0.5 * (circle_loss(feat_x, feat_y, sampled, params) +
                circle_loss(feat_y, feat_x, swapped, params));
}

std::vector<std::uint8_t> overlap_labels(const PointCloud& x, const PointCloud& y,
                                         const RigidTransform& gt, double dist_threshold) {
  require(dist_threshold > 0.0, "overlap threshold must be positive");
  const SpatialIndex index(y);
  std::vector<std::uint8_t> labels(x.size(), 0);
  for (std::size_t i = 0; i < x.size(); ++i)
    labels[i] = index.nearest(gt.apply(x.points[i])).distance < dist_threshold ? 1 : 0;
  return labels;
}

std::vector<std::uint8_t> saliency_labels(const PointCloud& x, const DescriptorSet& feat_x,
                                          const DescriptorSet& feat_y, const PointCloud& y,
                                          const RigidTransform& gt, double dist_threshold) {
  require(dist_threshold > 0.0, "saliency threshold must be positive");
  require(feat_x.size() == x.size() && feat_y.size() == y.size(),
          "saliency labels: descriptors not aligned with clouds");
  require(feat_x.dimension == feat_y.dimension, "saliency labels: feature dimension mismatch");
  const KdTree tree(feat_y.values, feat_y.dimension);
  std::vector<std::uint8_t> labels(x.size(), 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t j = tree.nearest(feat_x.row(i)).index;
    labels[i] = (gt.apply(x.points[i]) - y.points[j]).norm() < dist_threshold ? 1 : 0;
  }
  return labels;
}

double bce_loss(std::span<const double> pred, std::span<const std::uint8_t> labels,
                std::span<const double> weights) {
  require(pred.size() == labels.size() && pred.size() == weights.size(),
          "bce: prediction, label and weight lengths differ");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred[i], kBceEpsilon, 1.0 - kBceEpsilon);
    total += weights[i] * (labels[i] ? std::log(p) : std::log(1.0 - p));
  }
  return -total;
}

std::vector<double> class_balance_weights(std::span<const std::uint8_t> labels) {
  require(!labels.empty(), "class weights of an empty label set");
  const std::size_t n = labels.size();
  const auto pos = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(),
                                                          [](std::uint8_t v) { return v != 0; }));
  const std::size_t neg = n - pos;
  std::vector<double> w(n, 1.0);
  if (pos == 0 || neg == 0) return w;
  const double wp = static_cast<double>(n) / (2.0 * static_cast<double>(pos));
  const double wn = static_cast<double>(n) / (2.0 * static_cast<double>(neg));
  for (std::size_t i = 0; i < n; ++i) w[i] = labels[i] ? wp : wn;
  return w;
}

LabelSet make_label_set(std::vector<std::uint8_t> overlap, std::vector<std::uint8_t> saliency) {
  for (auto v : overlap) require(v <= 1, "labels must be 0 or 1");
  for (auto v : saliency) require(v <= 1, "labels must be 0 or 1");
  LabelSet s;
  s.overlap_weights = overlap.empty() ? std::vector<double>{} : class_balance_weights(overlap);
  s.saliency_weights = saliency.empty() ? std::vector<double>{} : class_balance_weights(saliency);
  s.overlap = std::move(overlap);
  s.saliency = std::move(saliency);
  return s;
}

double combined_loss(const LossParts& parts) {
  const std::pair<const char*, double> named[] = {
      {"circle_high", parts.circle_high}, {"circle_mid", parts.circle_mid},
      {"circle_low", parts.circle_low},   {"overlap", parts.overlap},
      {"saliency", parts.saliency},
  };
  double sum = 0.0;
  for (const auto& [name, v] : named) {
    if (!std::isfinite(v))
      throw Error(ErrorCode::kNonFinite, std::string("combined loss: part '") + name + "' is not finite");
    sum += v;
  }
  return sum;
}

}  // namespace gcreg
