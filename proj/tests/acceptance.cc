// One PASS/FAIL line per acceptance criterion; exits 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "milnet/eval.h"
#include "milnet/gradcheck.h"
#include "milnet/polarity.h"
#include "milnet/training.h"

namespace milnet {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char *format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

Verdict gradient_integrity() {
  const auto t0 = Clock::now();
  double worst = 0.0, worst_abs = 0.0;
  long elements = 0, skipped = 0;
  std::set<std::string> models;
  for (const ParamGradCheck &r : gradcheck_suite(1)) {
    worst = std::max(worst, r.max_rel_error);
    worst_abs = std::max(worst_abs, r.max_abs_error);
    elements += r.elements;
    skipped += r.skipped;
    models.insert(r.model);
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && models.size() == 3 && secs < 30.0,
          fmt("max rel error %.2e (abs %.1e) over %ld elements (%ld at kinks) in %zu models, %.1fs", worst,
              worst_abs, elements, skipped, models.size(), secs)};
}

Verdict aggregation_identity() {
  Vocabulary vocab = toy_vocabulary();
  double worst_p = 0.0, worst_pol = 0.0;
  int passes = 0;
  for (uint64_t seed = 1; passes < 1000; ++seed) {
    ModelConfig c = toy_config(ModelKind::kMilNet, AttentionMode::kAttention, seed);
    c.num_classes = 2 + static_cast<int>(seed % 5);
    Model m(c, vocab);
    const std::vector<double> w = class_weights(c.num_classes);
    for (const Document &d : toy_documents(vocab, c.num_classes, seed)) {
      DocumentOutput o = m.forward_document(d);
      double pol_sum = 0.0;
      for (size_t i = 0; i < o.attention.size(); ++i) pol_sum += o.attention[i] * polarity(o.segment_probs[i], w);
      for (int k = 0; k < c.num_classes; ++k) {
        double s = 0.0;
        for (size_t i = 0; i < o.attention.size(); ++i) s += o.attention[i] * o.segment_probs[i][k];
        worst_p = std::max(worst_p, std::abs(o.doc_probs[k] - s));
      }
      worst_pol = std::max(worst_pol, std::abs(polarity(o.doc_probs, w) - pol_sum));
      ++passes;
    }
  }
  return {worst_p < 1e-10 && worst_pol < 1e-10,
          fmt("%d passes: max |p_d - sum a_i p_i| = %.1e, max polarity gap = %.1e", passes, worst_p, worst_pol)};
}

Verdict class_weight_vector() {
  bool ok = class_weights(5) == std::vector<double>{-1, -0.5, 0, 0.5, 1};
  double worst = 0.0;
  for (int c = 2; c <= 11; ++c) {
    std::vector<double> w = class_weights(c);
    ok &= w.front() == -1.0 && w.back() == 1.0;
    for (int i = 1; i < c; ++i) worst = std::max(worst, std::abs(w[i] - w[i - 1] - 2.0 / (c - 1)));
  }
  ok &= worst < 1e-12;
  return {ok, fmt("C=5 exact, C in [2, 11] spacing error %.1e", worst)};
}

Verdict average_mode() {
  std::vector<Document> docs = generate_synthetic(200, 5, 17);
  Vocabulary vocab = Vocabulary::build(docs, 1);
  vocab.index(docs);
  ModelConfig c = toy_config(ModelKind::kMilNet, AttentionMode::kAverage, 5);
  c.num_classes = 5;
  Model m(c, vocab);
  double worst = 0.0;
  for (const DocumentOutput &o : m.predict(docs, 32)) {
    const double n = static_cast<double>(o.segment_probs.size());
    for (int k = 0; k < 5; ++k) {
      double s = 0.0;
      for (const auto &p : o.segment_probs) s += p[k];
      worst = std::max(worst, std::abs(o.doc_probs[k] - s / n));
    }
  }
  return {worst < 1e-12, fmt("200 documents, max |p_d - mean p_i| = %.1e", worst)};
}

// Settings shared by the recovery and neutral-pattern criteria.
ModelConfig recovery_config(ModelKind kind) {
  ModelConfig c;
  c.kind = kind;
  c.num_classes = 5;
  c.embedding_dim = 32;
  c.windows = {2, 3, 4};
  c.feature_maps = 16;
  c.gru_hidden = 16;
  c.attention_dim = 32;
  c.seed = 3;
  return c;
}

struct Recovery {
  double seconds = 0.0;
  EvalReport milnet_gated, milnet_plain, hiernet_plain, hiernet_gated;
};

Recovery run_recovery() {
  const auto t0 = Clock::now();
  std::vector<Document> all = generate_synthetic(5500, 5, 11);
  std::vector<Document> train_docs(all.begin(), all.begin() + 5000), test_docs(all.begin() + 5000, all.end());
  Vocabulary vocab = Vocabulary::build(train_docs, 1);
  vocab.index(train_docs);
  vocab.index(test_docs);
  TrainConfig tc;
  tc.epochs = 10;
  tc.batch_size = 200;
  tc.seed = 3;

  Recovery r;
  Model mil(recovery_config(ModelKind::kMilNet), vocab);
  Model mil_best = *train(mil, train_docs, tc).best;
  r.milnet_gated = evaluate_variant(mil_best, test_docs, PolaritySource::kSegment, true);
  r.milnet_plain = evaluate_variant(mil_best, test_docs, PolaritySource::kSegment, false);

  Model hier(recovery_config(ModelKind::kHierNet), vocab);
  Model hier_best = *train(hier, train_docs, tc).best;
  r.hiernet_plain = evaluate_variant(hier_best, test_docs, PolaritySource::kDocument, false);
  r.hiernet_gated = evaluate_variant(hier_best, test_docs, PolaritySource::kDocument, true);
  r.seconds = seconds_since(t0);
  return r;
}

Verdict synthetic_recovery(const Recovery &r) {
  const double gated = r.milnet_gated.search.mean_macro_f1;
  const double majority = r.milnet_gated.search.mean_majority_f1;
  const double hier = r.hiernet_plain.search.mean_macro_f1;
  return {gated >= 0.80 && gated > majority && gated - hier >= 0.10 && r.seconds < 600.0,
          fmt("MilNet segment gated %.3f, majority %.3f, HierNet document %.3f, %.0fs", gated, majority, hier,
              r.seconds)};
}

Verdict neutral_pattern(const Recovery &r) {
  const double hier_plain = r.hiernet_plain.search.mean_class_f1[1];
  const double hier_gated = r.hiernet_gated.search.mean_class_f1[1];
  const double mil_plain = r.milnet_plain.search.mean_class_f1[1];
  return {hier_plain < 0.10 && hier_gated - hier_plain >= 0.25 && mil_plain > hier_plain,
          fmt("neutral F1: HierNet %.3f, HierNet gated %.3f, MilNet %.3f", hier_plain, hier_gated, mil_plain)};
}

// Every grid pair through discretize, keeping the first of the narrowest
// best-scoring bands.
ThresholdFit brute_force(const std::vector<ScoredSegment> &segs, double step) {
  std::vector<Polarity> gold;
  for (const ScoredSegment &s : segs) gold.push_back(s.gold);
  std::vector<double> grid = threshold_grid(step);
  ThresholdFit best{{0, 0}, -1.0};
  double best_width = 0.0;
  for (size_t i = 0; i < grid.size(); ++i) {
    for (size_t j = i; j < grid.size(); ++j) {
      std::vector<Polarity> pred;
      for (const ScoredSegment &s : segs) pred.push_back(discretize(s.score, {grid[i], grid[j]}));
      const double f = macro_f1(gold, pred).macro_f1;
      const double width = grid[j] - grid[i];
      if (f > best.macro_f1 || (f == best.macro_f1 && width < best_width)) {
        best = {{grid[i], grid[j]}, f};
        best_width = width;
      }
    }
  }
  return best;
}

Verdict threshold_oracle() {
  Rng rng(7);
  std::vector<ScoredSegment> segs;
  for (int i = 0; i < 200; ++i) {
    const int g = static_cast<int>(rng.below(3));
    const double score = std::clamp((g - 1) * 0.4 + rng.uniform(-0.5, 0.5), -1.0, 1.0);
    segs.push_back({i / 4, score, static_cast<Polarity>(g)});
  }
  ThresholdFit fast = best_thresholds(segs, 0.05), slow = brute_force(segs, 0.05);
  bool ok = fast.thresholds.t1 == slow.thresholds.t1 && fast.thresholds.t2 == slow.thresholds.t2 &&
            fast.macro_f1 == slow.macro_f1;

  FoldPlan plan = FoldPlan::make(50, 10, 1);
  SearchResult search = threshold_search(segs, plan, 0.05);
  int exceed = 0;
  for (int k = 0; k < plan.size(); ++k) {
    std::set<int> held(plan.folds[k].begin(), plan.folds[k].end());
    std::vector<ScoredSegment> test;
    for (const ScoredSegment &s : segs) {
      if (held.count(s.doc)) test.push_back(s);
    }
    exceed += search.folds[k].test.macro_f1 > brute_force(test, 0.05).macro_f1 + 1e-12;
  }
  ok &= exceed == 0;
  return {ok, fmt("grid (%.2f, %.2f) F1 %.4f vs brute force (%.2f, %.2f) F1 %.4f; %d folds above oracle",
                  fast.thresholds.t1, fast.thresholds.t2, fast.macro_f1, slow.thresholds.t1, slow.thresholds.t2,
                  slow.macro_f1, exceed)};
}

Verdict batching_equivalence() {
  SyntheticOptions opts;
  opts.min_segments = 1;
  opts.max_segments = 15;
  std::vector<Document> docs = generate_synthetic(100, 5, 23, opts);
  Vocabulary vocab = Vocabulary::build(docs, 1);
  vocab.index(docs);
  double worst = 0.0;
  for (ModelKind kind : {ModelKind::kMilNet, ModelKind::kHierNet, ModelKind::kSegCnn}) {
    ModelConfig c = toy_config(kind, AttentionMode::kAttention, 9);
    c.num_classes = 5;
    Model m(c, vocab);
    std::vector<DocumentOutput> batched = m.predict(docs, 16);
    for (size_t d = 0; d < docs.size(); ++d) {
      DocumentOutput one = m.forward_document(docs[d]);
      auto diff = [&](const std::vector<double> &a, const std::vector<double> &b) {
        for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
      };
      diff(one.doc_probs, batched[d].doc_probs);
      diff(one.attention, batched[d].attention);
      for (size_t i = 0; i < one.segment_probs.size(); ++i) diff(one.segment_probs[i], batched[d].segment_probs[i]);
    }
  }
  return {worst < 1e-8, fmt("100 documents x 3 models, max difference %.1e", worst)};
}

std::string read_bytes(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Verdict determinism() {
  const fs::path dir = fs::temp_directory_path() / "milnet_acceptance";
  fs::create_directories(dir);
  const std::string cli = MILNET_CLI_PATH;
  const fs::path corpus = dir / "corpus.jsonl", ckpt = dir / "model.bin", metrics = dir / "metrics.jsonl",
                 manifest = dir / "manifest.json";
  auto sh = [](const std::string &cmd) { return std::system(cmd.c_str()) == 0; };
  if (!sh(cli + " --seed 4 synth --num-docs 200 --out " + corpus.string())) return {false, "synth failed"};
  const std::string train = cli + " --seed 4 train --corpus " + corpus.string() + " --out " + ckpt.string() +
                            " --metrics " + metrics.string() + " --manifest " + manifest.string() +
                            " --epochs 2 --batch-size 50 --emb-dim 16 --windows 2,3 --maps 8 --gru-hidden 8"
                            " --att-dim 8 > /dev/null";
  std::string bytes[2][3];
  for (int run = 0; run < 2; ++run) {
    if (!sh(train)) return {false, "train run failed"};
    bytes[run][0] = read_bytes(ckpt);
    bytes[run][1] = read_bytes(metrics);
    bytes[run][2] = read_bytes(manifest);
  }
  const bool same_manifest = bytes[0][2] == bytes[1][2];
  const bool same_ckpt = !bytes[0][0].empty() && bytes[0][0] == bytes[1][0];
  const bool same_metrics = !bytes[0][1].empty() && bytes[0][1] == bytes[1][1];
  return {same_manifest && same_ckpt && same_metrics,
          fmt("manifests %s, checkpoints %s (%zu bytes), metric logs %s", same_manifest ? "equal" : "differ",
              same_ckpt ? "identical" : "differ", bytes[0][0].size(), same_metrics ? "identical" : "differ")};
}

Verdict extraction_contract() {
  std::vector<Document> docs = generate_synthetic(50, 5, 31);
  Rng rng(3);
  int over = 0, incomplete = 0, misordered = 0;
  for (const Document &d : docs) {
    std::vector<SegmentVerdict> v(d.segments.size());
    for (size_t i = 0; i < v.size(); ++i) {
      v[i].index = static_cast<int>(i);
      v[i].attention = rng.uniform(0, 1);
      v[i].polarity = rng.uniform(-1, 1);
      v[i].gated = v[i].attention * v[i].polarity;
    }
    for (bool gated : {false, true}) {
      OpinionSummary s = extract_summary(d, v, 0.3, gated);
      over += s.word_count() > static_cast<int>(std::ceil(0.3 * d.word_count() - 1e-9));
      OpinionSummary all = extract_summary(d, v, 1.0, gated);
      incomplete += all.snippets.size() != d.segments.size();
      for (const OpinionSummary *sum : {&s, &all}) {
        const auto &sn = sum->snippets;
        for (size_t i = 1; i < sn.size(); ++i) {
          const bool a_pos = sn[i - 1].sign() == '+', b_pos = sn[i].sign() == '+';
          misordered += (!a_pos && b_pos) || (a_pos == b_pos && sn[i - 1].index > sn[i].index);
        }
      }
    }
  }
  return {over == 0 && incomplete == 0 && misordered == 0,
          fmt("50 documents: %d over budget, %d incomplete at rate 1.0, %d out of order", over, incomplete,
              misordered)};
}

}  // namespace
}  // namespace milnet

int main() {
  using namespace milnet;
  int failures = 0;
  auto report = [&](int id, const char *name, const Verdict &v) {
    std::printf("criterion %d %s: %s - %s\n", id, v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
    failures += !v.pass;
  };
  auto guarded = [](const std::function<Verdict()> &f) {
    try {
      return f();
    } catch (const std::exception &e) {
      return Verdict{false, std::string("threw: ") + e.what()};
    }
  };
  report(1, "gradient integrity", guarded(gradient_integrity));
  report(2, "aggregation identity", guarded(aggregation_identity));
  report(3, "class-weight vector", guarded(class_weight_vector));
  report(4, "average-mode equivalence", guarded(average_mode));
  Recovery recovery;
  Verdict recovery_error;
  try {
    recovery = run_recovery();
  } catch (const std::exception &e) {
    recovery_error = {false, std::string("threw: ") + e.what()};
  }
  const bool trained = recovery_error.detail.empty();
  report(5, "synthetic recovery", trained ? synthetic_recovery(recovery) : recovery_error);
  report(6, "neutral-class pattern", trained ? neutral_pattern(recovery) : recovery_error);
  report(7, "threshold search oracle", guarded(threshold_oracle));
  report(8, "batching equivalence", guarded(batching_equivalence));
  report(9, "determinism", guarded(determinism));
  report(10, "extraction contract", guarded(extraction_contract));
  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
