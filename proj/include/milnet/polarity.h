#ifndef MILNET_POLARITY_H_
#define MILNET_POLARITY_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "milnet/models.h"
#include "milnet/text_data.h"

namespace milnet {

// Uniformly spaced weights from -1 (class 1) to +1 (class C).
std::vector<double> class_weights(int num_classes);

// Σ_c p[c]·w[c].
double polarity(std::span<const double> p, std::span<const double> w);

double gated_polarity(double attention, double pol);

// pol(p_d) for every segment; multiplied by each a_i when gated.
std::vector<double> document_polarity_broadcast(std::span<const double> p_d,
                                                std::span<const double> attention,
                                                std::span<const double> w, bool gated);

struct Thresholds {
  double t1 = 0.0;
  double t2 = 0.0;
};

// Negative below t1, positive above t2, neutral otherwise (boundaries
// included).
Polarity discretize(double score, const Thresholds &t);

enum class PolaritySource { kSegment, kDocument };

const char *source_name(PolaritySource s);
PolaritySource parse_source(const std::string &s);

struct SegmentVerdict {
  int index = 0;
  std::vector<double> probs;  // p_i, or p_d under document broadcast
  double attention = 0.0;
  double polarity = 0.0;
  double gated = 0.0;
  PolaritySource source = PolaritySource::kSegment;
  std::optional<Polarity> label;  // set once thresholds are known

  double score(bool use_gated) const { return use_gated ? gated : polarity; }
};

// Per-segment verdicts from a model's output on one document. Throws
// ValidationError when the model cannot supply the requested source
// (HierNet has no segment distributions, Seg-CNN no document one).
std::vector<SegmentVerdict> segment_verdicts(const ModelConfig &config, const DocumentOutput &out,
                                             PolaritySource source);

struct Snippet {
  int index = 0;
  std::string text;
  double score = 0.0;  // signed (gated) polarity used for ranking
  double polarity = 0.0;
  double attention = 0.0;
  int words = 0;

  char sign() const { return score < 0.0 ? '-' : '+'; }
};

struct OpinionSummary {
  std::vector<Snippet> snippets;  // positives, then negatives
  double rate = 0.0;
  int budget = 0;  // ceil(rate × document words)

  int word_count() const;
  nlohmann::json to_json(const std::string &doc_id) const;
};

// Ranks segments by |score| (earlier segment first on ties) and keeps each
// one that still fits the word budget. Zero scores count as positive.
OpinionSummary extract_summary(const Document &doc, const std::vector<SegmentVerdict> &verdicts,
                               double rate, bool use_gated);

}  // namespace milnet

#endif  // MILNET_POLARITY_H_
