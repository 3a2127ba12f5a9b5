#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crydet/graph.hpp"
#include "crydet/tensor.hpp"

namespace crydet::mil {

// Ordered per-segment feature vectors for one audio file, with its weak
// file-level label. label: 1 = abnormal (cry), 0 = normal.
struct FeatureBag {
  Tensor features;  // [S,D]
  int label = 0;
  std::string source;
};

enum class LossVariant { kEq3ScoreMil, kEq6Rtfm };

LossVariant loss_variant_from_string(const std::string& name);
std::string to_string(LossVariant v);

struct LossConfig {
  double margin = 100.0;
  double alpha = 1e-4;
  double lambda1 = 8e-4;
  double lambda2 = 8e-4;
  int topk = 2;
  LossVariant variant = LossVariant::kEq6Rtfm;

  void validate() const;  // throws ContractError
};

// Per-segment head outputs for one bag, in bag order.
struct BagScores {
  std::vector<double> scores;      // each in (0,1)
  std::vector<double> magnitudes;  // each >= 0
};

constexpr double kBceEps = 1e-7;

// Resamples F frame rows to S segment rows. Row j is read at position
// j*(F-1)/(S-1) by linear interpolation between the surrounding rows;
// S == 1 collapses to the mean row, F == 1 replicates.
Tensor interpolate_segments(const Tensor& frame_features, int64_t segments);

// Indices of the k largest values; ties broken toward the lower index.
// Result is in descending value order.
std::vector<int64_t> topk_by_magnitude(std::span<const double> magnitudes, int k);

// max(0, 1 - max_i f(Va_i) + max_i f(Vn_i))
double mil_ranking_loss(std::span<const double> scores_abnormal,
                        std::span<const double> scores_normal);

// sum_i (f(V_{i+1}) - f(V_i))^2 over the abnormal bag
double smoothness(std::span<const double> scores_abnormal);
// sum_i f(V_i)^2 over the abnormal bag
double sparsity(std::span<const double> scores_abnormal);

// ranking + lambda1 * smoothness + lambda2 * sparsity
double total_loss_eq3(std::span<const double> scores_abnormal,
                      std::span<const double> scores_normal, const LossConfig& cfg);

// With s_x = (mean of top-k magnitudes of bag x)^2:
// max(0, margin - (s_abnormal - s_normal))
double magnitude_loss(std::span<const double> mags_abnormal,
                      std::span<const double> mags_normal, const LossConfig& cfg);

// Mean of the scores at the top-k-by-magnitude indices, clamped to
// [kBceEps, 1-kBceEps], then -y*log(s) - (1-y)*log(1-s).
double topk_score_bce(const BagScores& bag, int y, int k);

// l_S(abnormal) + l_S(normal) + alpha*l_F + lambda1*smoothness +
// lambda2*sparsity (regularizers on the abnormal bag only).
double total_loss_eq6(const BagScores& abnormal, const BagScores& normal,
                      const LossConfig& cfg);

// ---- differentiable versions over graph nodes ----
// Score/magnitude nodes are 1-D [S]. Top-k index sets are fixed from the
// current values; gradient flows only through the selected entries.

template <typename T>
typename diff::Graph<T>::NodeId ranking_loss_node(diff::Graph<T>& g,
                                                  typename diff::Graph<T>::NodeId scores_a,
                                                  typename diff::Graph<T>::NodeId scores_n) {
  auto diff_node = g.sub(g.max_all(scores_n), g.max_all(scores_a));  // max_n - max_a
  return g.relu(g.add_scalar(diff_node, 1.0));
}

template <typename T>
typename diff::Graph<T>::NodeId smoothness_node(diff::Graph<T>& g,
                                                typename diff::Graph<T>::NodeId scores_a) {
  const int64_t s = g.value(scores_a).shape[0];
  if (s < 2) return g.constant(BasicTensor<T>({1}));
  auto d = g.sub(g.slice_rows(scores_a, 1, s), g.slice_rows(scores_a, 0, s - 1));
  return g.sum_all(g.mul(d, d));
}

template <typename T>
typename diff::Graph<T>::NodeId sparsity_node(diff::Graph<T>& g,
                                              typename diff::Graph<T>::NodeId scores_a) {
  return g.sum_all(g.mul(scores_a, scores_a));
}

template <typename T>
typename diff::Graph<T>::NodeId total_loss_eq3_node(diff::Graph<T>& g,
                                                    typename diff::Graph<T>::NodeId scores_a,
                                                    typename diff::Graph<T>::NodeId scores_n,
                                                    const LossConfig& cfg) {
  cfg.validate();
  auto loss = ranking_loss_node(g, scores_a, scores_n);
  loss = g.add(loss, g.scale(smoothness_node(g, scores_a), cfg.lambda1));
  return g.add(loss, g.scale(sparsity_node(g, scores_a), cfg.lambda2));
}

namespace detail {

template <typename T>
std::vector<int64_t> topk_of_node(diff::Graph<T>& g, typename diff::Graph<T>::NodeId mags,
                                  int k) {
  const auto& v = g.value(mags);
  std::vector<double> vals(v.data.begin(), v.data.end());
  return topk_by_magnitude(vals, k);
}

// (mean of top-k entries)^2 as a scalar node
template <typename T>
typename diff::Graph<T>::NodeId topk_mean_sq_node(diff::Graph<T>& g,
                                                  typename diff::Graph<T>::NodeId mags,
                                                  const std::vector<int64_t>& idx) {
  auto mean = g.mean_all(g.gather_rows(mags, idx));
  return g.mul(mean, mean);
}

}  // namespace detail

template <typename T>
typename diff::Graph<T>::NodeId magnitude_loss_node(diff::Graph<T>& g,
                                                    typename diff::Graph<T>::NodeId mags_a,
                                                    typename diff::Graph<T>::NodeId mags_n,
                                                    const LossConfig& cfg) {
  cfg.validate();
  const auto idx_a = detail::topk_of_node(g, mags_a, cfg.topk);
  const auto idx_n = detail::topk_of_node(g, mags_n, cfg.topk);
  auto d = g.sub(detail::topk_mean_sq_node(g, mags_a, idx_a),
                 detail::topk_mean_sq_node(g, mags_n, idx_n));
  // margin - d, hinged
  return g.relu(g.add_scalar(g.scale(d, -1.0), cfg.margin));
}

template <typename T>
typename diff::Graph<T>::NodeId topk_score_bce_node(diff::Graph<T>& g,
                                                    typename diff::Graph<T>::NodeId scores,
                                                    typename diff::Graph<T>::NodeId mags,
                                                    int y, int k) {
  const auto idx = detail::topk_of_node(g, mags, k);
  auto s = g.clamp(g.mean_all(g.gather_rows(scores, idx)), kBceEps, 1.0 - kBceEps);
  if (y == 1) return g.scale(g.log(s), -1.0);
  // -log(1 - s)
  return g.scale(g.log(g.add_scalar(g.scale(s, -1.0), 1.0)), -1.0);
}

template <typename T>
typename diff::Graph<T>::NodeId total_loss_eq6_node(
    diff::Graph<T>& g, typename diff::Graph<T>::NodeId scores_a,
    typename diff::Graph<T>::NodeId mags_a, typename diff::Graph<T>::NodeId scores_n,
    typename diff::Graph<T>::NodeId mags_n, const LossConfig& cfg) {
  cfg.validate();
  auto loss = topk_score_bce_node(g, scores_a, mags_a, 1, cfg.topk);
  loss = g.add(loss, topk_score_bce_node(g, scores_n, mags_n, 0, cfg.topk));
  loss = g.add(loss, g.scale(magnitude_loss_node(g, mags_a, mags_n, cfg), cfg.alpha));
  loss = g.add(loss, g.scale(smoothness_node(g, scores_a), cfg.lambda1));
  return g.add(loss, g.scale(sparsity_node(g, scores_a), cfg.lambda2));
}

}  // namespace crydet::mil
