#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gcreg/cloud.hpp"
#include "gcreg/descriptors.hpp"

namespace gcreg {

// Scalar evaluators of the registration training objectives. No gradients.

struct CircleLossParams {
  double gamma = 16.0;
  double delta_p = 0.1;
  double delta_n = 1.4;
  std::size_t sample_count = 256;

  void validate() const;
};

using IndexPair = std::pair<std::size_t, std::size_t>;

/// Circle loss of anchors x_i against their positive y_σ(i) and the sampled
/// targets of every other anchor as negatives, averaged over the S pairs.
/// Evaluated as softplus(logit_p + logsumexp(logit_n)). Requires S >= 2.
double circle_loss(const DescriptorSet& feat_x, const DescriptorSet& feat_y,
                   std::span<const IndexPair> sampled, const CircleLossParams& params);

/// ½ (L_X + L_Y): the same loss with the roles of the two clouds swapped.
double symmetric_circle_loss(const DescriptorSet& feat_x, const DescriptorSet& feat_y,
                             std::span<const IndexPair> sampled, const CircleLossParams& params);

/// label_i = 1 iff the nearest point of Y to gt(x_i) is closer than the threshold.
std::vector<std::uint8_t> overlap_labels(const PointCloud& x, const PointCloud& y,
                                         const RigidTransform& gt, double dist_threshold);

/// label_i = 1 iff x_i's feature-space nearest neighbour in Y lies within the
/// threshold of gt(x_i).
std::vector<std::uint8_t> saliency_labels(const PointCloud& x, const DescriptorSet& feat_x,
                                          const DescriptorSet& feat_y, const PointCloud& y,
                                          const RigidTransform& gt, double dist_threshold);

inline constexpr double kBceEpsilon = 1e-7;

/// −Σ w_i [ȳ_i log p_i + (1 − ȳ_i) log(1 − p_i)] with p clamped to [ε, 1 − ε].
double bce_loss(std::span<const double> pred, std::span<const std::uint8_t> labels,
                std::span<const double> weights);

/// w_i = n / (2 · |class of i|); a single-class input gets unit weights.
std::vector<double> class_balance_weights(std::span<const std::uint8_t> labels);

struct LabelSet {
  std::vector<std::uint8_t> overlap;
  std::vector<std::uint8_t> saliency;
  std::vector<double> overlap_weights;
  std::vector<double> saliency_weights;
};

LabelSet make_label_set(std::vector<std::uint8_t> overlap, std::vector<std::uint8_t> saliency);

struct LossParts {
  double circle_high = 0.0;
  double circle_mid = 0.0;
  double circle_low = 0.0;
  double overlap = 0.0;
  double saliency = 0.0;
};

/// Unweighted sum of the five parts; throws Error(kNonFinite) naming the first
/// non-finite part.
double combined_loss(const LossParts& parts);

}  // namespace gcreg
