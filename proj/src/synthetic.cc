#include <cmath>
#include <string>

#include "milnet/error.h"
#include "milnet/text_data.h"

namespace milnet {
namespace {

// Word pools carved out of the vocabulary budget. Sentiment-bearing pools are
// small so that every word is seen often; filler dominates the rest.
struct Pools {
  int positive, negative, neutral, filler;

  explicit Pools(int vocab) {
    if (vocab < 20) throw ValidationError("synthetic vocabulary must hold at least 20 words");
    positive = vocab / 10;
    negative = vocab / 10;
    neutral = vocab / 5;
    filler = vocab - positive - negative - neutral;
  }
};

std::string word(char pool, uint64_t i) { return pool + std::to_string(i); }

Segment make_segment(Polarity planted, const Pools &pools, const SyntheticOptions &opts, Rng &rng) {
  const int len = 4 + static_cast<int>(rng.below(7));  // 4..10 words
  std::vector<std::string> words;
  words.reserve(len);
  for (int i = 0; i < len; ++i) words.push_back(word('f', rng.below(pools.filler)));
  // Cue words replace filler at random positions; polar segments sometimes
  // carry a neutral content word as well.
  const int cues = opts.min_cues + static_cast<int>(rng.below(opts.max_cues - opts.min_cues + 1));
  for (int c = 0; c < cues; ++c) {
    std::string cue;
    switch (planted) {
      case Polarity::kPositive:
        cue = word('p', rng.below(pools.positive));
        break;
      case Polarity::kNegative:
        cue = word('n', rng.below(pools.negative));
        break;
      case Polarity::kNeutral:
        cue = word('z', rng.below(pools.neutral));
        break;
    }
    words[rng.below(len)] = cue;
  }
  if (planted != Polarity::kNeutral && rng.bernoulli(opts.neutral_cue_rate)) {
    words[rng.below(len)] = word('z', rng.below(pools.neutral));
  }
  Segment s;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) s.text += ' ';
    s.text += words[i];
  }
  s.words = std::move(words);
  s.gold = planted;
  return s;
}

}  // namespace

int synthetic_label(const std::vector<Polarity> &planted, int num_classes) {
  if (planted.empty()) throw ValidationError("synthetic_label needs at least one segment");
  // Neutral segments carry no evidence about the document label.
  double sum = 0.0;
  int polar = 0;
  for (Polarity p : planted) {
    if (p == Polarity::kNeutral) continue;
    sum += static_cast<int>(p) - 1;
    ++polar;
  }
  const double mean = polar ? sum / polar : 0.0;
  const double x = 1.0 + (mean + 1.0) / 2.0 * (num_classes - 1);
  return static_cast<int>(std::floor(x + 0.5));
}

std::vector<Document> generate_synthetic(int num_docs, int num_classes, uint64_t seed,
                                         const SyntheticOptions &opts) {
  if (num_classes < 2) throw ValidationError("synthetic corpus needs at least 2 classes");
  if (num_docs < 0) throw ValidationError("number of documents must be non-negative");
  if (opts.min_segments < 1 || opts.max_segments < opts.min_segments) {
    throw ValidationError("bad synthetic segment-count range");
  }
  if (opts.neutral_rate < 0.0 || opts.neutral_rate > 1.0) {
    throw ValidationError("neutral rate must be in [0, 1]");
  }
  if (opts.min_cues < 1 || opts.max_cues < opts.min_cues || opts.max_cues > 4) {
    throw ValidationError("cue words per segment must satisfy 1 <= min <= max <= 4");
  }
  if (opts.tendency_concentration <= 0.0) {
    throw ValidationError("tendency concentration must be positive");
  }
  const Pools pools(opts.vocab_size);
  Rng rng(seed);
  std::vector<Document> docs;
  docs.reserve(num_docs);
  const int span = opts.max_segments - opts.min_segments + 1;
  for (int d = 0; d < num_docs; ++d) {
    Document doc;
    doc.id = "synth-" + std::to_string(d);
    const int m = opts.min_segments + static_cast<int>(rng.below(span));
    const double tendency = rng.symmetric_beta(opts.tendency_concentration);
    std::vector<Polarity> planted;
    for (int i = 0; i < m; ++i) {
      Polarity p;
      if (rng.bernoulli(opts.neutral_rate)) {
        p = Polarity::kNeutral;
      } else {
        p = rng.bernoulli(tendency) ? Polarity::kPositive : Polarity::kNegative;
      }
      planted.push_back(p);
      doc.segments.push_back(make_segment(p, pools, opts, rng));
    }
    doc.label = synthetic_label(planted, num_classes);
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace milnet
