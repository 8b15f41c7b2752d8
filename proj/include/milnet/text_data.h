#ifndef MILNET_TEXT_DATA_H_
#define MILNET_TEXT_DATA_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "milnet/rng.h"
#include "milnet/tensor.h"

namespace milnet {

// Segment-level sentiment, used only for evaluation and Seg-CNN training.
enum class Polarity : int8_t { kNegative = 0, kNeutral = 1, kPositive = 2 };

const char *polarity_name(Polarity p);  // "neg" | "neu" | "pos"
Polarity parse_polarity(std::string_view s);

enum class SegmentationKind { kSentence, kEdu };

const char *kind_name(SegmentationKind k);

struct Segment {
  std::string text;
  std::vector<std::string> words;  // lowercased tokens of text
  std::vector<int> tokens;         // vocabulary ids; filled by Vocabulary::index
  std::optional<Polarity> gold;

  bool operator==(const Segment &) const = default;
};

struct Document {
  std::string id;
  int label = 1;  // ordinal class in [1, C]
  std::vector<Segment> segments;
  SegmentationKind kind = SegmentationKind::kSentence;

  bool has_segment_labels() const;
  int word_count() const;
  bool operator==(const Document &) const = default;
};

// Lowercased whitespace tokenization with punctuation split into its own
// tokens.
std::vector<std::string> tokenize(std::string_view text);

// Approximate sentence splitter: breaks after '.', '!' or '?' followed by
// whitespace. Real EDU or sentence segmentation belongs upstream.
std::vector<std::string> split_sentences(std::string_view text);

// One JSON object per line: id, label, segments[, segment_labels, kind].
Document parse_document(std::string_view json_line, int num_classes, int line_no = 1);
std::vector<Document> load_corpus(const std::string &path, int num_classes);
std::string document_to_json(const Document &doc);
void save_corpus(const std::string &path, const std::vector<Document> &docs);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary();
  // Tokens with corpus frequency >= min_count, most frequent first (ties
  // broken lexicographically).
  static Vocabulary build(const std::vector<Document> &docs, int min_count);
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  int id(std::string_view token) const;
  const std::string &token(int id) const { return tokens_.at(id); }
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string> &tokens() const { return tokens_; }

  // Fill Segment::tokens for every segment.
  void index(std::vector<Document> &docs) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct EmbeddingTable {
  Tensor table;  // [vocab × k]
  bool trainable = true;

  int dim() const { return table.cols(); }
};

// Uniform in [-0.1, 0.1] except the all-zero padding row.
EmbeddingTable random_embeddings(const Vocabulary &vocab, int dim, Rng &rng);

// word2vec text format; the first line may be a "count dim" header. Rows for
// vocabulary tokens found in the file are copied, the rest are random.
EmbeddingTable load_embeddings(const std::string &path, const Vocabulary &vocab, int dim,
                               Rng &rng);

// Documents padded to a common shape. Only live segments are materialized;
// `slot` places each one in the [docs × max_segments] grid.
struct Batch {
  std::vector<int> docs;       // corpus indices
  int max_segments = 0;        // M
  int seg_len = 0;             // L, padded token length of every live segment
  std::vector<int> seg_count;  // per document
  std::vector<int> labels;     // per document, 1-based
  std::vector<uint8_t> mask;   // [docs × M], 1 for live segments
  std::vector<int> slot;       // per live segment: b·M + m
  std::vector<int> lengths;    // per live segment: real token count
  std::vector<int> tokens;     // per live segment: L ids, kPad-filled
  std::vector<int> gold;       // per live segment: Polarity or -1

  int num_docs() const { return static_cast<int>(docs.size()); }
  int num_segments() const { return static_cast<int>(slot.size()); }
  // Cells of the full [docs × M × L] grid that hold padding.
  long padded_cells() const;
};

// Segments shorter than min_len are padded up to it.
Batch make_batch(const std::vector<Document> &docs, const std::vector<int> &indices,
                 int min_len);

// Sort by (segment count, longest segment), chunk, then shuffle the batch
// order when rng is given.
std::vector<Batch> make_batches(const std::vector<Document> &docs, int batch_size, int min_len,
                                Rng *rng = nullptr);

struct SyntheticOptions {
  int vocab_size = 300;
  // Probability that a segment is planted neutral.
  double neutral_rate = 0.15;
  // Per-document positive tendency ~ Beta(a, a).
  double tendency_concentration = 0.15;
  int min_segments = 3;
  int max_segments = 12;
  // Sentiment cue words planted per segment.
  int min_cues = 2;
  int max_cues = 2;
  // Chance that a polar segment also carries a neutral content word.
  double neutral_cue_rate = 0.0;
};

// Mean of the polar segments (neg = -1, pos = +1) mapped linearly onto [1, C]
// and rounded; all-neutral documents land in the middle.
int synthetic_label(const std::vector<Polarity> &planted, int num_classes);

std::vector<Document> generate_synthetic(int num_docs, int num_classes, uint64_t seed,
                                         const SyntheticOptions &opts = {});

}  // namespace milnet

#endif  // MILNET_TEXT_DATA_H_
