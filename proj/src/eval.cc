#include "milnet/eval.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "milnet/error.h"
#include "milnet/rng.h"

namespace milnet {

using json = nlohmann::json;

long ConfusionMatrix::total() const {
  long n = 0;
  for (const auto &row : counts) n += std::accumulate(row.begin(), row.end(), 0L);
  return n;
}

long ConfusionMatrix::gold_count(Polarity c) const {
  const auto &row = counts[int(c)];
  return std::accumulate(row.begin(), row.end(), 0L);
}

long ConfusionMatrix::predicted_count(Polarity c) const {
  long n = 0;
  for (const auto &row : counts) n += row[int(c)];
  return n;
}

namespace {

double ratio(long num, long den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; }

// Same arithmetic as F1Report so the fast search and the reports agree.
double class_f1(long tp, long gold, long pred) {
  return ratio(2 * tp, gold + pred);
}

}  // namespace

F1Report F1Report::from_confusion(const ConfusionMatrix &cm) {
  F1Report r;
  r.confusion = cm;
  for (int c = 0; c < 3; ++c) {
    const long tp = cm.counts[c][c];
    const long gold = cm.gold_count(Polarity(c));
    const long pred = cm.predicted_count(Polarity(c));
    r.precision[c] = ratio(tp, pred);
    r.recall[c] = ratio(tp, gold);
    r.f1[c] = class_f1(tp, gold, pred);
  }
  r.macro_f1 = (r.f1[0] + r.f1[1] + r.f1[2]) / 3.0;
  return r;
}

F1Report macro_f1(const std::vector<Polarity> &gold, const std::vector<Polarity> &pred) {
  if (gold.size() != pred.size()) {
    throw ValidationError("gold has " + std::to_string(gold.size()) + " labels, predictions " +
                          std::to_string(pred.size()));
  }
  ConfusionMatrix cm;
  for (size_t i = 0; i < gold.size(); ++i) cm.add(gold[i], pred[i]);
  return F1Report::from_confusion(cm);
}

Polarity majority_class(const std::vector<Polarity> &gold) {
  if (gold.empty()) throw ValidationError("majority baseline needs at least one label");
  std::array<long, 3> n{};
  for (Polarity p : gold) ++n[int(p)];
  return Polarity(std::max_element(n.begin(), n.end()) - n.begin());
}

std::vector<Polarity> majority_baseline(const std::vector<Polarity> &gold) {
  return std::vector<Polarity>(gold.size(), majority_class(gold));
}

FoldPlan FoldPlan::make(int num_docs, int k, uint64_t seed) {
  if (k < 2) throw ValidationError("need at least 2 folds");
  if (num_docs < k) {
    throw ValidationError(std::to_string(num_docs) + " documents cannot fill " + std::to_string(k) +
                          " folds");
  }
  std::vector<int> order(num_docs);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  FoldPlan plan;
  plan.folds.resize(k);
  for (int i = 0; i < num_docs; ++i) plan.folds[i % k].push_back(order[i]);
  for (auto &f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

std::vector<double> threshold_grid(double step) {
  if (!(step > 0.0 && step <= 2.0)) throw ValidationError("grid step must be in (0, 2]");
  const int n = static_cast<int>(std::floor(2.0 / step + 1e-9));
  std::vector<double> grid(n + 1);
  for (int i = 0; i <= n; ++i) grid[i] = -1.0 + i * step;
  return grid;
}

ThresholdFit best_thresholds(const std::vector<ScoredSegment> &segs, double step) {
  const std::vector<double> grid = threshold_grid(step);
  const int g = static_cast<int>(grid.size());
  // below[c][i] = #{gold c, score < grid[i]}, above[c][i] = #{gold c, score > grid[i]}.
  std::array<std::vector<double>, 3> scores;
  for (const ScoredSegment &s : segs) scores[int(s.gold)].push_back(s.score);
  std::array<long, 3> gold{};
  std::array<std::vector<long>, 3> below, above;
  for (int c = 0; c < 3; ++c) {
    std::sort(scores[c].begin(), scores[c].end());
    gold[c] = static_cast<long>(scores[c].size());
    below[c].resize(g);
    above[c].resize(g);
    for (int i = 0; i < g; ++i) {
      below[c][i] = std::lower_bound(scores[c].begin(), scores[c].end(), grid[i]) - scores[c].begin();
      above[c][i] = scores[c].end() - std::upper_bound(scores[c].begin(), scores[c].end(), grid[i]);
    }
  }

  ThresholdFit best;
  int best_width = -1;
  for (int i = 0; i < g; ++i) {
    for (int j = i; j < g; ++j) {
      // Confusion rows per gold class: (neg, neu, pos) predictions.
      long pred_neg = 0, pred_pos = 0, pred_neu = 0;
      std::array<long, 3> tp{};
      for (int c = 0; c < 3; ++c) {
        const long n = below[c][i], p = above[c][j];
        pred_neg += n;
        pred_pos += p;
        pred_neu += gold[c] - n - p;
        if (c == 0) tp[0] = n;
        if (c == 1) tp[1] = gold[c] - n - p;
        if (c == 2) tp[2] = p;
      }
      const double f1 = (class_f1(tp[0], gold[0], pred_neg) + class_f1(tp[1], gold[1], pred_neu) +
                         class_f1(tp[2], gold[2], pred_pos)) /
                        3.0;
      const int width = j - i;
      if (best_width < 0 || f1 > best.macro_f1 || (f1 == best.macro_f1 && width < best_width)) {
        best.macro_f1 = f1;
        best.thresholds = {grid[i], grid[j]};
        best_width = width;
      }
    }
  }
  return best;
}

SearchResult threshold_search(const std::vector<ScoredSegment> &segs, const FoldPlan &plan,
                              double step) {
  if (plan.size() < 2) throw ValidationError("threshold search needs at least 2 folds");
  int max_doc = -1;
  for (const ScoredSegment &s : segs) max_doc = std::max(max_doc, s.doc);
  std::vector<int> fold_of(max_doc + 1, -1);
  for (int f = 0; f < plan.size(); ++f) {
    for (int d : plan.folds[f]) {
      if (d <= max_doc) fold_of[d] = f;
    }
  }
  for (const ScoredSegment &s : segs) {
    if (fold_of[s.doc] < 0) throw ValidationError("document " + std::to_string(s.doc) + " is in no fold");
  }

  SearchResult result;
  for (int f = 0; f < plan.size(); ++f) {
    std::vector<ScoredSegment> train, test;
    for (const ScoredSegment &s : segs) (fold_of[s.doc] == f ? test : train).push_back(s);
    FoldResult fr;
    ThresholdFit fit = best_thresholds(train, step);
    fr.thresholds = fit.thresholds;
    fr.train_f1 = fit.macro_f1;
    std::vector<Polarity> gold, pred, train_gold;
    for (const ScoredSegment &s : test) {
      gold.push_back(s.gold);
      pred.push_back(discretize(s.score, fit.thresholds));
    }
    fr.test = macro_f1(gold, pred);
    for (const ScoredSegment &s : train) train_gold.push_back(s.gold);
    if (!train_gold.empty()) {
      fr.majority_f1 =
          macro_f1(gold, std::vector<Polarity>(gold.size(), majority_class(train_gold))).macro_f1;
    }
    result.folds.push_back(fr);
  }
  const double k = plan.size();
  for (const FoldResult &fr : result.folds) {
    result.mean_macro_f1 += fr.test.macro_f1 / k;
    result.mean_majority_f1 += fr.majority_f1 / k;
    for (int c = 0; c < 3; ++c) result.mean_class_f1[c] += fr.test.f1[c] / k;
  }
  return result;
}

std::vector<ScoredSegment> score_segments(const Model &model, const std::vector<Document> &docs,
                                          PolaritySource source, bool gated) {
  if (gated && model.config().kind == ModelKind::kSegCnn) {
    throw ValidationError("segcnn has no attention weights to gate with");
  }
  for (const Document &d : docs) {
    if (!d.has_segment_labels()) {
      throw ValidationError("document '" + d.id + "' lacks segment_labels");
    }
  }
  std::vector<DocumentOutput> out = model.predict(docs);
  std::vector<ScoredSegment> segs;
  for (size_t d = 0; d < docs.size(); ++d) {
    std::vector<SegmentVerdict> v = segment_verdicts(model.config(), out[d], source);
    for (size_t i = 0; i < v.size(); ++i) {
      segs.push_back({static_cast<int>(d), v[i].score(gated), *docs[d].segments[i].gold});
    }
  }
  return segs;
}

EvalReport evaluate_variant(const Model &model, const std::vector<Document> &docs,
                            PolaritySource source, bool gated, int folds, double grid_step,
                            uint64_t seed) {
  EvalReport r;
  r.config = model.config();
  r.source = source;
  r.gated = gated;
  r.grid_step = grid_step;
  r.num_docs = static_cast<int>(docs.size());
  std::vector<ScoredSegment> segs = score_segments(model, docs, source, gated);
  r.num_segments = static_cast<int>(segs.size());
  r.search = threshold_search(segs, FoldPlan::make(r.num_docs, folds, seed), grid_step);
  return r;
}

json EvalReport::to_json() const {
  json folds = json::array();
  for (const FoldResult &f : search.folds) {
    folds.push_back({{"t1", f.thresholds.t1},
                     {"t2", f.thresholds.t2},
                     {"train_macro_f1", f.train_f1},
                     {"test_macro_f1", f.test.macro_f1},
                     {"test_f1", {{"neg", f.test.f1[0]}, {"neu", f.test.f1[1]}, {"pos", f.test.f1[2]}}},
                     {"majority_macro_f1", f.majority_f1}});
  }
  return {{"model", config.to_json()},
          {"source", source_name(source)},
          {"gated", gated},
          {"documents", num_docs},
          {"segments", num_segments},
          {"grid_step", grid_step},
          {"folds", folds},
          {"mean_macro_f1", search.mean_macro_f1},
          {"mean_f1",
           {{"neg", search.mean_class_f1[0]},
            {"neu", search.mean_class_f1[1]},
            {"pos", search.mean_class_f1[2]}}},
          {"majority_macro_f1", search.mean_majority_f1}};
}

}  // namespace milnet
