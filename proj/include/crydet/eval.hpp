#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace crydet::eval {

// Scored 1 s segments with ground-truth labels (1 = cry).
struct ScoredSet {
  std::vector<double> scores;
  std::vector<int> labels;
  std::string provenance;

  void validate() const;  // sizes match, labels binary, scores finite
  size_t size() const { return scores.size(); }
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

struct MetricsReport {
  double accuracy_at_default = 0.0;
  double default_threshold = 0.5;
  double f1_max = 0.0;
  double f1_max_threshold = 0.0;
  double auc = 0.0;
  std::vector<RocPoint> roc;
};

// Fraction of segments with (score >= threshold) == label.
double accuracy_at(const ScoredSet& set, double threshold);

// Max F1 over thresholds at the midpoints of sorted distinct scores plus
// {0,1}; positive class is cry. Ties resolve to the lowest threshold.
// Requires at least one positive.
std::pair<double, double> f1_max(const ScoredSet& set);

// TPR/FPR sweep over distinct score thresholds (descending), AUC by the
// trapezoid rule. Requires both classes. The leading (0,0) anchor carries
// threshold max_score + 1.
std::pair<std::vector<RocPoint>, double> roc_auc(const ScoredSet& set);

MetricsReport compute_report(const ScoredSet& set, double default_threshold = 0.5);

// Writes metrics.json and roc.csv (`fpr,tpr,threshold`, 6 decimals, sorted
// by fpr ascending) into dir.
void emit_report(const MetricsReport& report, const std::filesystem::path& dir);

// Scores CSV `id,score,label` -> ScoredSet.
ScoredSet load_scores_csv(const std::filesystem::path& path);

}  // namespace crydet::eval
