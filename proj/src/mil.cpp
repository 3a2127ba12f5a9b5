#include "crydet/mil.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crydet/errors.hpp"

namespace crydet::mil {

LossVariant loss_variant_from_string(const std::string& name) {
  if (name == "eq3_score_mil") return LossVariant::kEq3ScoreMil;
  if (name == "eq6_rtfm") return LossVariant::kEq6Rtfm;
  throw ConfigError("unknown loss variant: " + name +
                    " (expected eq3_score_mil or eq6_rtfm)");
}

std::string to_string(LossVariant v) {
  return v == LossVariant::kEq3ScoreMil ? "eq3_score_mil" : "eq6_rtfm";
}

void LossConfig::validate() const {
  if (!(margin > 0.0)) throw ContractError("loss config: margin must be > 0");
  if (topk < 1) throw ContractError("loss config: topk must be >= 1");
  if (alpha < 0.0 || lambda1 < 0.0 || lambda2 < 0.0) {
    throw ContractError("loss config: weights must be >= 0");
  }
}

Tensor interpolate_segments(const Tensor& frame_features, int64_t segments) {
  if (frame_features.rank() != 2 || frame_features.shape[0] < 1) {
    throw ContractError("interpolate_segments: need [F,D] with F >= 1");
  }
  if (segments < 1) throw ContractError("interpolate_segments: segments must be >= 1");
  const int64_t f = frame_features.shape[0];
  const int64_t d = frame_features.shape[1];

  Tensor out({segments, d});
  if (segments == 1) {
    for (int64_t c = 0; c < d; ++c) {
      double acc = 0.0;
      for (int64_t r = 0; r < f; ++r) acc += static_cast<double>(frame_features.at2(r, c));
      out.at2(0, c) = static_cast<float>(acc / static_cast<double>(f));
    }
    return out;
  }
  for (int64_t j = 0; j < segments; ++j) {
    // F == 1 gives p = 0 for every row: plain replication
    const double p = f == 1 ? 0.0
                            : static_cast<double>(j) * static_cast<double>(f - 1) /
                                  static_cast<double>(segments - 1);
    const int64_t lo = std::min(static_cast<int64_t>(p), f - 1);
    const int64_t hi = std::min(lo + 1, f - 1);
    const double frac = p - static_cast<double>(lo);
    for (int64_t c = 0; c < d; ++c) {
      out.at2(j, c) = static_cast<float>(
          static_cast<double>(frame_features.at2(lo, c)) * (1.0 - frac) +
          static_cast<double>(frame_features.at2(hi, c)) * frac);
    }
  }
  return out;
}

std::vector<int64_t> topk_by_magnitude(std::span<const double> magnitudes, int k) {
  const int64_t s = static_cast<int64_t>(magnitudes.size());
  if (k < 1 || k > s) {
    throw ContractError("topk_by_magnitude: need 1 <= k <= bag size, got k=" +
                        std::to_string(k) + ", size=" + std::to_string(s));
  }
  std::vector<int64_t> order(static_cast<size_t>(s));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
    return magnitudes[static_cast<size_t>(a)] > magnitudes[static_cast<size_t>(b)];
  });
  order.resize(static_cast<size_t>(k));
  return order;
}

double mil_ranking_loss(std::span<const double> scores_abnormal,
                        std::span<const double> scores_normal) {
  if (scores_abnormal.empty() || scores_normal.empty()) {
    throw ContractError("mil_ranking_loss: bags must be non-empty");
  }
  const double max_a = *std::max_element(scores_abnormal.begin(), scores_abnormal.end());
  const double max_n = *std::max_element(scores_normal.begin(), scores_normal.end());
  return std::max(0.0, 1.0 - max_a + max_n);
}

double smoothness(std::span<const double> scores_abnormal) {
  double acc = 0.0;
  for (size_t i = 0; i + 1 < scores_abnormal.size(); ++i) {
    const double d = scores_abnormal[i + 1] - scores_abnormal[i];
    acc += d * d;
  }
  return acc;
}

double sparsity(std::span<const double> scores_abnormal) {
  double acc = 0.0;
  for (double v : scores_abnormal) acc += v * v;
  return acc;
}

double total_loss_eq3(std::span<const double> scores_abnormal,
                      std::span<const double> scores_normal, const LossConfig& cfg) {
  cfg.validate();
  return mil_ranking_loss(scores_abnormal, scores_normal) +
         cfg.lambda1 * smoothness(scores_abnormal) +
         cfg.lambda2 * sparsity(scores_abnormal);
}

namespace {

// (mean of top-k)^2
double topk_mean_sq(std::span<const double> mags, int k) {
  const auto idx = topk_by_magnitude(mags, k);
  double acc = 0.0;
  for (int64_t i : idx) acc += mags[static_cast<size_t>(i)];
  const double mean = acc / static_cast<double>(k);
  return mean * mean;
}

}  // namespace

double magnitude_loss(std::span<const double> mags_abnormal,
                      std::span<const double> mags_normal, const LossConfig& cfg) {
  cfg.validate();
  const double s_a = topk_mean_sq(mags_abnormal, cfg.topk);
  const double s_n = topk_mean_sq(mags_normal, cfg.topk);
  return std::max(0.0, cfg.margin - (s_a - s_n));
}

double topk_score_bce(const BagScores& bag, int y, int k) {
  if (bag.scores.size() != bag.magnitudes.size()) {
    throw ContractError("topk_score_bce: scores and magnitudes must align");
  }
  if (y != 0 && y != 1) throw ContractError("topk_score_bce: label must be 0 or 1");
  const auto idx = topk_by_magnitude(bag.magnitudes, k);
  double acc = 0.0;
  for (int64_t i : idx) acc += bag.scores[static_cast<size_t>(i)];
  double s = acc / static_cast<double>(k);
  s = std::clamp(s, kBceEps, 1.0 - kBceEps);
  return y == 1 ? -std::log(s) : -std::log(1.0 - s);
}

double total_loss_eq6(const BagScores& abnormal, const BagScores& normal,
                      const LossConfig& cfg) {
  cfg.validate();
  return topk_score_bce(abnormal, 1, cfg.topk) + topk_score_bce(normal, 0, cfg.topk) +
         cfg.alpha * magnitude_loss(abnormal.magnitudes, normal.magnitudes, cfg) +
         cfg.lambda1 * smoothness(abnormal.scores) + cfg.lambda2 * sparsity(abnormal.scores);
}

}  // namespace crydet::mil
