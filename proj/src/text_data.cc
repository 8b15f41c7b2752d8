#include "milnet/text_data.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "milnet/error.h"

namespace milnet {

using json = nlohmann::json;

const char *polarity_name(Polarity p) {
  switch (p) {
    case Polarity::kNegative:
      return "neg";
    case Polarity::kNeutral:
      return "neu";
    case Polarity::kPositive:
      return "pos";
  }
  return "?";
}

Polarity parse_polarity(std::string_view s) {
  if (s == "neg") return Polarity::kNegative;
  if (s == "neu") return Polarity::kNeutral;
  if (s == "pos") return Polarity::kPositive;
  throw ValidationError("unknown segment label '" + std::string(s) + "'");
}

const char *kind_name(SegmentationKind k) {
  return k == SegmentationKind::kEdu ? "edu" : "sentence";
}

bool Document::has_segment_labels() const {
  return std::all_of(segments.begin(), segments.end(),
                     [](const Segment &s) { return s.gold.has_value(); });
}

int Document::word_count() const {
  int n = 0;
  for (const Segment &s : segments) n += static_cast<int>(s.words.size());
  return n;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c) && c != '\'' && c != '-') {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  size_t start = 0;
  auto emit = [&](size_t end) {
    std::string_view piece = text.substr(start, end - start);
    while (!piece.empty() && std::isspace(static_cast<unsigned char>(piece.front()))) {
      piece.remove_prefix(1);
    }
    while (!piece.empty() && std::isspace(static_cast<unsigned char>(piece.back()))) {
      piece.remove_suffix(1);
    }
    if (!piece.empty()) out.emplace_back(piece);
  };
  for (size_t i = 0; i + 1 < text.size(); ++i) {
    char c = text[i];
    if ((c == '.' || c == '!' || c == '?') &&
        std::isspace(static_cast<unsigned char>(text[i + 1]))) {
      emit(i + 1);
      start = i + 1;
    }
  }
  emit(text.size());
  return out;
}

Document parse_document(std::string_view line, int num_classes, int line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error &e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
  }
  if (!j.is_object()) throw ParseError("expected a JSON object", line_no);
  Document doc;
  try {
    doc.id = j.at("id").get<std::string>();
    doc.label = j.at("label").get<int>();
    const json &segs = j.at("segments");
    if (!segs.is_array()) throw ParseError("'segments' must be an array", line_no);
    for (const json &s : segs) {
      Segment seg;
      seg.text = s.get<std::string>();
      seg.words = tokenize(seg.text);
      doc.segments.push_back(std::move(seg));
    }
    if (j.contains("segment_labels")) {
      const json &labels = j.at("segment_labels");
      if (!labels.is_array() || labels.size() != doc.segments.size()) {
        throw ParseError("'segment_labels' must match 'segments' in length", line_no);
      }
      for (size_t i = 0; i < labels.size(); ++i) {
        doc.segments[i].gold = parse_polarity(labels[i].get<std::string>());
      }
    }
    if (j.contains("kind")) {
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "edu") {
        doc.kind = SegmentationKind::kEdu;
      } else if (kind != "sentence") {
        throw ParseError("'kind' must be \"sentence\" or \"edu\"", line_no);
      }
    }
  } catch (const json::exception &e) {
    throw ParseError(std::string("bad field: ") + e.what(), line_no);
  } catch (const ParseError &) {
    throw;
  } catch (const ValidationError &e) {
    throw ParseError(e.what(), line_no);
  }
  if (doc.label < 1 || doc.label > num_classes) {
    throw ValidationError("line " + std::to_string(line_no) + ": label " +
                          std::to_string(doc.label) + " outside [1, " +
                          std::to_string(num_classes) + "]");
  }
  if (doc.segments.empty()) {
    throw ValidationError("line " + std::to_string(line_no) + ": document '" + doc.id +
                          "' has no segments");
  }
  return doc;
}

std::vector<Document> load_corpus(const std::string &path, int num_classes) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus " + path);
  std::vector<Document> docs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    docs.push_back(parse_document(line, num_classes, line_no));
  }
  return docs;
}

std::string document_to_json(const Document &doc) {
  json j;
  j["id"] = doc.id;
  j["label"] = doc.label;
  json segs = json::array();
  for (const Segment &s : doc.segments) segs.push_back(s.text);
  j["segments"] = std::move(segs);
  if (doc.has_segment_labels()) {
    json labels = json::array();
    for (const Segment &s : doc.segments) labels.push_back(polarity_name(*s.gold));
    j["segment_labels"] = std::move(labels);
  }
  j["kind"] = kind_name(doc.kind);
  return j.dump();
}

void save_corpus(const std::string &path, const std::vector<Document> &docs) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  for (const Document &d : docs) out << document_to_json(d) << '\n';
}

Vocabulary::Vocabulary() : tokens_{"<pad>", "<unk>"}, ids_{{"<pad>", kPad}, {"<unk>", kUnk}} {}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary v;
  if (tokens.size() < 2 || tokens[0] != "<pad>" || tokens[1] != "<unk>") {
    tokens.insert(tokens.begin(), {"<pad>", "<unk>"});
  }
  v.tokens_ = std::move(tokens);
  v.ids_.clear();
  for (size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.ids_.emplace(v.tokens_[i], static_cast<int>(i)).second) {
      throw FormatError("duplicate vocabulary token '" + v.tokens_[i] + "'");
    }
  }
  return v;
}

Vocabulary Vocabulary::build(const std::vector<Document> &docs, int min_count) {
  std::unordered_map<std::string, int> freq;
  for (const Document &d : docs) {
    for (const Segment &s : d.segments) {
      for (const std::string &w : s.words) ++freq[w];
    }
  }
  std::vector<std::pair<std::string, int>> kept;
  for (auto &[w, n] : freq) {
    if (n >= min_count) kept.emplace_back(w, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto &a, const auto &b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens = {"<pad>", "<unk>"};
  for (auto &[w, n] : kept) tokens.push_back(w);
  return from_tokens(std::move(tokens));
}

int Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

void Vocabulary::index(std::vector<Document> &docs) const {
  for (Document &d : docs) {
    for (Segment &s : d.segments) {
      s.tokens.clear();
      for (const std::string &w : s.words) s.tokens.push_back(id(w));
      // A segment of only whitespace still needs one id to encode.
      if (s.tokens.empty()) s.tokens.push_back(kUnk);
    }
  }
}

EmbeddingTable random_embeddings(const Vocabulary &vocab, int dim, Rng &rng) {
  Tensor t = Tensor::zeros({vocab.size(), dim}, true);
  auto d = t.data();
  for (int r = 0; r < vocab.size(); ++r) {
    if (r == Vocabulary::kPad) continue;
    for (int c = 0; c < dim; ++c) d[r * dim + c] = rng.uniform(-0.1, 0.1);
  }
  return {t, true};
}

EmbeddingTable load_embeddings(const std::string &path, const Vocabulary &vocab, int dim,
                               Rng &rng) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open embeddings " + path);
  EmbeddingTable emb = random_embeddings(vocab, dim, rng);
  auto d = emb.table.data();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    std::vector<double> vec;
    std::string num;
    while (fields >> num) {
      try {
        size_t used = 0;
        vec.push_back(std::stod(num, &used));
        if (used != num.size()) throw std::invalid_argument(num);
      } catch (const std::exception &) {
        throw FormatError(path + ":" + std::to_string(line_no) + ": bad number '" + num + "'");
      }
    }
    if (line_no == 1 && vec.size() == 1 &&
        word.find_first_not_of("0123456789") == std::string::npos) {
      if (static_cast<int>(vec[0]) != dim) {
        throw FormatError(path + ": header declares dimension " +
                          std::to_string(static_cast<int>(vec[0])) + ", expected " +
                          std::to_string(dim));
      }
      continue;
    }
    if (static_cast<int>(vec.size()) != dim) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": vector for '" + word +
                        "' has " + std::to_string(vec.size()) + " values, expected " +
                        std::to_string(dim));
    }
    int id = vocab.id(word);
    if (id == Vocabulary::kUnk && word != "<unk>") continue;
    if (id == Vocabulary::kPad) continue;
    std::copy(vec.begin(), vec.end(), d.begin() + static_cast<size_t>(id) * dim);
  }
  return emb;
}

long Batch::padded_cells() const {
  long real = std::accumulate(lengths.begin(), lengths.end(), 0L);
  return static_cast<long>(num_docs()) * max_segments * seg_len - real;
}

Batch make_batch(const std::vector<Document> &docs, const std::vector<int> &indices,
                 int min_len) {
  Batch b;
  b.docs = indices;
  b.seg_len = std::max(1, min_len);
  for (int i : indices) {
    const Document &d = docs.at(i);
    b.max_segments = std::max(b.max_segments, static_cast<int>(d.segments.size()));
    for (const Segment &s : d.segments) {
      b.seg_len = std::max(b.seg_len, static_cast<int>(s.tokens.size()));
    }
  }
  const int M = b.max_segments;
  b.mask.assign(static_cast<size_t>(indices.size()) * M, 0);
  for (size_t bi = 0; bi < indices.size(); ++bi) {
    const Document &d = docs[indices[bi]];
    if (d.segments.empty()) throw ValidationError("document '" + d.id + "' has no segments");
    b.seg_count.push_back(static_cast<int>(d.segments.size()));
    b.labels.push_back(d.label);
    for (size_t m = 0; m < d.segments.size(); ++m) {
      const Segment &s = d.segments[m];
      if (s.tokens.empty()) {
        throw ValidationError("document '" + d.id + "' is not indexed against a vocabulary");
      }
      b.mask[bi * M + m] = 1;
      b.slot.push_back(static_cast<int>(bi) * M + static_cast<int>(m));
      b.lengths.push_back(static_cast<int>(s.tokens.size()));
      b.gold.push_back(s.gold ? static_cast<int>(*s.gold) : -1);
      size_t at = b.tokens.size();
      b.tokens.resize(at + b.seg_len, Vocabulary::kPad);
      std::copy(s.tokens.begin(), s.tokens.end(), b.tokens.begin() + at);
    }
  }
  return b;
}

std::vector<Batch> make_batches(const std::vector<Document> &docs, int batch_size, int min_len,
                                Rng *rng) {
  if (batch_size < 1) throw ValidationError("batch size must be at least 1");
  std::vector<int> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  auto longest = [&](int i) {
    size_t n = 0;
    for (const Segment &s : docs[i].segments) n = std::max(n, s.tokens.size());
    return n;
  };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    size_t sa = docs[a].segments.size(), sb = docs[b].segments.size();
    if (sa != sb) return sa < sb;
    return longest(a) < longest(b);
  });
  std::vector<Batch> batches;
  for (size_t start = 0; start < order.size(); start += batch_size) {
    size_t end = std::min(order.size(), start + static_cast<size_t>(batch_size));
    std::vector<int> chunk(order.begin() + start, order.begin() + end);
    batches.push_back(make_batch(docs, chunk, min_len));
  }
  if (rng) rng->shuffle(batches);
  return batches;
}

}  // namespace milnet
