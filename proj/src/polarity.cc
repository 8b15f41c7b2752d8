#include "milnet/polarity.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "milnet/error.h"

namespace milnet {

std::vector<double> class_weights(int num_classes) {
  if (num_classes < 2) throw ValidationError("class weights need at least 2 classes");
  std::vector<double> w(num_classes);
  for (int c = 0; c < num_classes; ++c) w[c] = -1.0 + 2.0 * c / (num_classes - 1);
  return w;
}

double polarity(std::span<const double> p, std::span<const double> w) {
  if (p.size() != w.size()) {
    throw ShapeError("distribution has " + std::to_string(p.size()) + " classes, weights " +
                     std::to_string(w.size()));
  }
  double s = 0.0;
  for (size_t c = 0; c < p.size(); ++c) s += p[c] * w[c];
  return s;
}

double gated_polarity(double attention, double pol) { return attention * pol; }

std::vector<double> document_polarity_broadcast(std::span<const double> p_d,
                                                std::span<const double> attention,
                                                std::span<const double> w, bool gated) {
  const double pol = polarity(p_d, w);
  std::vector<double> out(attention.size(), pol);
  if (gated) {
    for (size_t i = 0; i < out.size(); ++i) out[i] = gated_polarity(attention[i], pol);
  }
  return out;
}

Polarity discretize(double score, const Thresholds &t) {
  if (score < t.t1) return Polarity::kNegative;
  if (score > t.t2) return Polarity::kPositive;
  return Polarity::kNeutral;
}

const char *source_name(PolaritySource s) {
  return s == PolaritySource::kSegment ? "segment" : "document";
}

PolaritySource parse_source(const std::string &s) {
  if (s == "segment") return PolaritySource::kSegment;
  if (s == "document") return PolaritySource::kDocument;
  throw ValidationError("unknown polarity source '" + s + "' (expected segment or document)");
}

std::vector<SegmentVerdict> segment_verdicts(const ModelConfig &config, const DocumentOutput &out,
                                             PolaritySource source) {
  const bool segment = source == PolaritySource::kSegment;
  if (segment && config.kind == ModelKind::kHierNet) {
    throw ValidationError("hiernet has no segment-level distributions; use --source document");
  }
  if (!segment && config.kind == ModelKind::kSegCnn) {
    throw ValidationError("segcnn has no document-level distribution; use --source segment");
  }
  const size_t m = segment ? out.segment_probs.size() : out.attention.size();
  const std::vector<double> w = class_weights(config.output_classes());
  std::vector<SegmentVerdict> v(m);
  const double doc_pol = segment ? 0.0 : polarity(out.doc_probs, w);
  for (size_t i = 0; i < m; ++i) {
    v[i].index = static_cast<int>(i);
    v[i].source = source;
    v[i].probs = segment ? out.segment_probs[i] : out.doc_probs;
    v[i].attention = out.attention.empty() ? 1.0 : out.attention[i];
    v[i].polarity = segment ? polarity(v[i].probs, w) : doc_pol;
    v[i].gated = gated_polarity(v[i].attention, v[i].polarity);
  }
  return v;
}

int OpinionSummary::word_count() const {
  int n = 0;
  for (const Snippet &s : snippets) n += s.words;
  return n;
}

nlohmann::json OpinionSummary::to_json(const std::string &doc_id) const {
  nlohmann::json snips = nlohmann::json::array();
  for (const Snippet &s : snippets) {
    snips.push_back({{"index", s.index},
                     {"text", s.text},
                     {"sign", std::string(1, s.sign())},
                     {"polarity", s.polarity},
                     {"score", s.score},
                     {"attention", s.attention}});
  }
  return {{"id", doc_id}, {"rate", rate}, {"budget", budget}, {"snippets", snips}};
}

OpinionSummary extract_summary(const Document &doc, const std::vector<SegmentVerdict> &verdicts,
                               double rate, bool use_gated) {
  if (!(rate > 0.0 && rate <= 1.0)) throw ValidationError("compression rate must be in (0, 1]");
  if (verdicts.size() != doc.segments.size()) {
    throw ShapeError("document '" + doc.id + "' has " + std::to_string(doc.segments.size()) +
                     " segments but " + std::to_string(verdicts.size()) + " verdicts");
  }
  OpinionSummary summary;
  summary.rate = rate;
  // Guard against 0.3 × 10 landing a hair above 3.
  summary.budget = static_cast<int>(std::ceil(rate * doc.word_count() - 1e-9));

  std::vector<int> order(verdicts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(verdicts[a].score(use_gated)) > std::abs(verdicts[b].score(use_gated));
  });
  std::vector<bool> keep(verdicts.size(), false);
  int used = 0;
  for (int i : order) {
    const int words = static_cast<int>(doc.segments[i].words.size());
    if (used + words > summary.budget) continue;
    used += words;
    keep[i] = true;
  }
  for (int pass = 0; pass < 2; ++pass) {
    for (size_t i = 0; i < verdicts.size(); ++i) {
      if (!keep[i]) continue;
      const double score = verdicts[i].score(use_gated);
      if ((score < 0.0) != (pass == 1)) continue;
      Snippet s;
      s.index = static_cast<int>(i);
      s.text = doc.segments[i].text;
      s.score = score;
      s.polarity = verdicts[i].polarity;
      s.attention = verdicts[i].attention;
      s.words = static_cast<int>(doc.segments[i].words.size());
      summary.snippets.push_back(std::move(s));
    }
  }
  return summary;
}

}  // namespace milnet
