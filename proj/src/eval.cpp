#include "crydet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "crydet/errors.hpp"

#include "json.hpp"

namespace crydet::eval {

void ScoredSet::validate() const {
  if (scores.empty()) throw ContractError("scored set is empty");
  if (scores.size() != labels.size()) {
    throw ContractError("scores and labels must have equal length");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw ContractError("non-finite score");
  }
  for (int l : labels) {
    if (l != 0 && l != 1) throw ContractError("labels must be 0 or 1");
  }
}

double accuracy_at(const ScoredSet& set, double threshold) {
  set.validate();
  size_t correct = 0;
  for (size_t i = 0; i < set.size(); ++i) {
    const int pred = set.scores[i] >= threshold ? 1 : 0;
    if (pred == set.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

namespace {

double f1_at(const ScoredSet& set, double threshold) {
  int64_t tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < set.size(); ++i) {
    const bool pred = set.scores[i] >= threshold;
    if (pred && set.labels[i] == 1) ++tp;
    if (pred && set.labels[i] == 0) ++fp;
    if (!pred && set.labels[i] == 1) ++fn;
  }
  const double denom = 2.0 * tp + fp + fn;
  return denom == 0.0 ? 0.0 : 2.0 * tp / denom;
}

}  // namespace

std::pair<double, double> f1_max(const ScoredSet& set) {
  set.validate();
  if (std::find(set.labels.begin(), set.labels.end(), 1) == set.labels.end()) {
    throw ContractError("f1_max: needs at least one positive");
  }
  std::vector<double> distinct(set.scores);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> grid;
  grid.push_back(0.0);
  for (size_t i = 0; i + 1 < distinct.size(); ++i) {
    grid.push_back(0.5 * (distinct[i] + distinct[i + 1]));
  }
  grid.push_back(1.0);

  double best_f1 = -1.0, best_thr = 0.0;
  for (double thr : grid) {
    const double f1 = f1_at(set, thr);
    if (f1 > best_f1) {  // strict: ties keep the lowest threshold
      best_f1 = f1;
      best_thr = thr;
    }
  }
  return {best_f1, best_thr};
}

std::pair<std::vector<RocPoint>, double> roc_auc(const ScoredSet& set) {
  set.validate();
  int64_t pos = 0, neg = 0;
  for (int l : set.labels) (l == 1 ? pos : neg)++;
  if (pos == 0 || neg == 0) throw ContractError("roc_auc: needs both classes");

  std::vector<double> distinct(set.scores);
  std::sort(distinct.begin(), distinct.end(), std::greater<>());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<RocPoint> points;
  points.push_back({0.0, 0.0, distinct.front() + 1.0});
  // descending thresholds; at threshold t everything with score >= t is
  // predicted positive, so tied scores enter as a group
  int64_t tp = 0, fp = 0;
  double auc = 0.0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  size_t i = 0;
  std::vector<size_t> order(set.size());
  for (size_t j = 0; j < set.size(); ++j) order[j] = j;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return set.scores[a] > set.scores[b]; });

  for (double thr : distinct) {
    while (i < order.size() && set.scores[order[i]] >= thr) {
      (set.labels[order[i]] == 1 ? tp : fp)++;
      ++i;
    }
    const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
    const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
    auc += 0.5 * (fpr - prev_fpr) * (tpr + prev_tpr);
    points.push_back({fpr, tpr, thr});
    prev_fpr = fpr;
    prev_tpr = tpr;
  }
  return {points, auc};
}

MetricsReport compute_report(const ScoredSet& set, double default_threshold) {
  MetricsReport r;
  r.default_threshold = default_threshold;
  r.accuracy_at_default = accuracy_at(set, default_threshold);
  const auto [f1, thr] = f1_max(set);
  r.f1_max = f1;
  r.f1_max_threshold = thr;
  auto [points, auc] = roc_auc(set);
  r.roc = std::move(points);
  r.auc = auc;
  return r;
}

void emit_report(const MetricsReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  nlohmann::json j;
  j["accuracy_at_default"] = report.accuracy_at_default;
  j["default_threshold"] = report.default_threshold;
  j["f1_max"] = report.f1_max;
  j["f1_max_threshold"] = report.f1_max_threshold;
  j["auc"] = report.auc;
  {
    std::ofstream out(dir / "metrics.json", std::ios::binary);
    if (!out) throw Error("cannot write metrics.json");
    out << j.dump(2) << "\n";
  }

  std::vector<RocPoint> sorted = report.roc;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const RocPoint& a, const RocPoint& b) { return a.fpr < b.fpr; });
  std::ofstream out(dir / "roc.csv", std::ios::binary);
  if (!out) throw Error("cannot write roc.csv");
  out << "fpr,tpr,threshold\n";
  char buf[96];
  for (const auto& p : sorted) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f\n", p.fpr, p.tpr, p.threshold);
    out << buf;
  }
}

ScoredSet load_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open scores file " + path.string(), 0);
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty scores file", 1);
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,score,label") throw ParseError("expected header 'id,score,label'", lineno);

  ScoredSet set;
  set.provenance = path.string();
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t c1 = line.rfind(',');
    const size_t c0 = c1 == std::string::npos ? std::string::npos : line.rfind(',', c1 - 1);
    if (c0 == std::string::npos || c1 == std::string::npos) {
      throw ParseError("expected 3 comma-separated fields", lineno);
    }
    try {
      set.scores.push_back(std::stod(line.substr(c0 + 1, c1 - c0 - 1)));
      set.labels.push_back(std::stoi(line.substr(c1 + 1)));
    } catch (const std::exception&) {
      throw ParseError("bad score or label field", lineno);
    }
  }
  set.validate();
  return set;
}

}  // namespace crydet::eval
