#ifndef MILNET_EVAL_H_
#define MILNET_EVAL_H_

#include <array>
#include <cstdint>
#include <vector>

#include "json.hpp"
#include "milnet/models.h"
#include "milnet/polarity.h"

namespace milnet {

// Rows are gold, columns predicted, both in (neg, neu, pos) order.
struct ConfusionMatrix {
  std::array<std::array<long, 3>, 3> counts{};

  void add(Polarity gold, Polarity pred) { ++counts[int(gold)][int(pred)]; }
  long total() const;
  long gold_count(Polarity c) const;
  long predicted_count(Polarity c) const;
};

struct F1Report {
  ConfusionMatrix confusion;
  std::array<double, 3> precision{};
  std::array<double, 3> recall{};
  std::array<double, 3> f1{};
  double macro_f1 = 0.0;

  static F1Report from_confusion(const ConfusionMatrix &cm);
};

// Per-class F1 is 2tp / (2tp + fp + fn), and 0 when that is 0/0.
F1Report macro_f1(const std::vector<Polarity> &gold, const std::vector<Polarity> &pred);

// The most frequent class; ties go to the lower index.
Polarity majority_class(const std::vector<Polarity> &gold);
std::vector<Polarity> majority_baseline(const std::vector<Polarity> &gold);

// Documents 0..n-1 shuffled and dealt into k folds.
struct FoldPlan {
  std::vector<std::vector<int>> folds;

  static FoldPlan make(int num_docs, int k, uint64_t seed);
  int size() const { return static_cast<int>(folds.size()); }
};

struct ScoredSegment {
  int doc = 0;
  double score = 0.0;
  Polarity gold = Polarity::kNeutral;
};

// -1, -1 + step, ..., up to 1.
std::vector<double> threshold_grid(double step);

struct ThresholdFit {
  Thresholds thresholds;
  double macro_f1 = 0.0;
};

// Best (t1 <= t2) on the grid. Ties go to the narrowest neutral band, then
// to the smallest t1.
ThresholdFit best_thresholds(const std::vector<ScoredSegment> &segs, double step);

struct FoldResult {
  Thresholds thresholds;
  double train_f1 = 0.0;
  F1Report test;
  double majority_f1 = 0.0;
};

struct SearchResult {
  std::vector<FoldResult> folds;
  double mean_macro_f1 = 0.0;
  std::array<double, 3> mean_class_f1{};
  double mean_majority_f1 = 0.0;
};

// Fits thresholds on k-1 folds, scores the held-out one, and averages.
SearchResult threshold_search(const std::vector<ScoredSegment> &segs, const FoldPlan &plan,
                              double step);

// Per-segment scores of one variant. Every document needs segment labels.
std::vector<ScoredSegment> score_segments(const Model &model, const std::vector<Document> &docs,
                                          PolaritySource source, bool gated);

struct EvalReport {
  ModelConfig config;
  PolaritySource source = PolaritySource::kSegment;
  bool gated = false;
  int num_docs = 0;
  int num_segments = 0;
  double grid_step = 0.05;
  SearchResult search;

  nlohmann::json to_json() const;
};

EvalReport evaluate_variant(const Model &model, const std::vector<Document> &docs,
                            PolaritySource source, bool gated, int folds = 10,
                            double grid_step = 0.05, uint64_t seed = 1);

}  // namespace milnet

#endif  // MILNET_EVAL_H_
