#include "milnet/models.h"

#include <algorithm>
#include <cmath>

#include "milnet/error.h"

namespace milnet {

using json = nlohmann::json;

const char *model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::kMilNet:
      return "milnet";
    case ModelKind::kHierNet:
      return "hiernet";
    case ModelKind::kSegCnn:
      return "segcnn";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string &s) {
  if (s == "milnet") return ModelKind::kMilNet;
  if (s == "hiernet") return ModelKind::kHierNet;
  if (s == "segcnn") return ModelKind::kSegCnn;
  throw ValidationError("unknown model '" + s + "' (expected milnet, hiernet or segcnn)");
}

bool ModelConfig::uses_gru() const {
  if (kind == ModelKind::kHierNet) return true;
  return kind == ModelKind::kMilNet && attention == AttentionMode::kAttention;
}

bool ModelConfig::uses_attention() const {
  return kind != ModelKind::kSegCnn && attention == AttentionMode::kAttention;
}

void ModelConfig::validate() const {
  if (num_classes < 2) throw ValidationError("need at least 2 classes");
  if (embedding_dim < 1 || feature_maps < 1 || gru_hidden < 1 || attention_dim < 1) {
    throw ValidationError("layer dimensions must be positive");
  }
  if (windows.empty()) throw ValidationError("need at least one convolution window");
  for (int w : windows) {
    if (w < 1) throw ValidationError("window sizes must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0 || recurrent_dropout < 0.0 || recurrent_dropout >= 1.0) {
    throw ValidationError("dropout rates must be in [0, 1)");
  }
}

json ModelConfig::to_json() const {
  return json{{"kind", model_kind_name(kind)},
              {"attention", attention == AttentionMode::kAttention ? "on" : "avg"},
              {"num_classes", num_classes},
              {"embedding_dim", embedding_dim},
              {"windows", windows},
              {"feature_maps", feature_maps},
              {"gru_hidden", gru_hidden},
              {"attention_dim", attention_dim},
              {"dropout", dropout},
              {"recurrent_dropout", recurrent_dropout},
              {"train_embeddings", train_embeddings},
              {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const json &j) {
  ModelConfig c;
  try {
    c.kind = parse_model_kind(j.at("kind").get<std::string>());
    const std::string att = j.at("attention").get<std::string>();
    if (att != "on" && att != "avg") throw ValidationError("attention must be on or avg");
    c.attention = att == "on" ? AttentionMode::kAttention : AttentionMode::kAverage;
    c.num_classes = j.at("num_classes").get<int>();
    c.embedding_dim = j.at("embedding_dim").get<int>();
    c.windows = j.at("windows").get<std::vector<int>>();
    c.feature_maps = j.at("feature_maps").get<int>();
    c.gru_hidden = j.at("gru_hidden").get<int>();
    c.attention_dim = j.at("attention_dim").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.recurrent_dropout = j.at("recurrent_dropout").get<double>();
    c.train_embeddings = j.at("train_embeddings").get<bool>();
    c.seed = j.at("seed").get<uint64_t>();
  } catch (const json::exception &e) {
    throw FormatError(std::string("bad model config: ") + e.what());
  }
  c.validate();
  return c;
}

Model::Model(ModelConfig config, Vocabulary vocab, EmbeddingTable embeddings)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
  config_.validate();
  if (embeddings.table.rows() != vocab_.size() || embeddings.dim() != config_.embedding_dim) {
    throw ShapeError("embedding table " + shape_string(embeddings.table.shape()) +
                     " does not match vocabulary of " + std::to_string(vocab_.size()) +
                     " and dimension " + std::to_string(config_.embedding_dim));
  }
  embeddings_ = embeddings.table;
  embeddings_.node()->requires_grad = config_.train_embeddings;
  Rng root(config_.seed);
  root.fork();  // stream reserved for embeddings
  Rng rng = root.fork();
  build(rng);
}

Model::Model(ModelConfig config, Vocabulary vocab) : config_(std::move(config)), vocab_(std::move(vocab)) {
  config_.validate();
  Rng root(config_.seed);
  Rng emb_rng = root.fork();
  embeddings_ = random_embeddings(vocab_, config_.embedding_dim, emb_rng).table;
  embeddings_.node()->requires_grad = config_.train_embeddings;
  Rng rng = root.fork();
  build(rng);
}

void Model::build(Rng &rng) {
  const ModelConfig &c = config_;
  conv_ = ConvEncoderParams::init(c.embedding_dim, c.windows, c.feature_maps, rng);
  const int seg_dim = conv_.output_dim();
  if (c.uses_gru()) gru_ = BiGruParams::init(seg_dim, c.gru_hidden, rng);
  if (c.uses_attention()) attention_ = AttentionParams::init(gru_.output_dim(), c.attention_dim, rng);
  const int cls_in = c.kind == ModelKind::kHierNet ? 2 * c.gru_hidden : seg_dim;
  classifier_ = ClassifierParams::init(cls_in, c.output_classes(), rng);

  params_.clear();
  params_.push_back({"embed", embeddings_});
  conv_.collect("conv", params_);
  if (c.uses_gru()) gru_.collect("gru", params_);
  if (c.uses_attention()) attention_.collect("att", params_);
  classifier_.collect("cls", params_);
}

long Model::parameter_count() const {
  long n = 0;
  for (const NamedTensor &p : params_) n += p.tensor.size();
  return n;
}

bool Model::decayed(const std::string &name) const { return name == "cls.w" || name == "att.w"; }

void Model::zero_grad() {
  for (const NamedTensor &p : params_) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
}

BatchGraph Model::forward(Tape &t, const Batch &batch, bool train, Rng *dropout_rng) const {
  if (train && !dropout_rng && (config_.dropout > 0.0 || config_.recurrent_dropout > 0.0)) {
    throw Error("training forward pass needs a dropout generator");
  }
  const int B = batch.num_docs();
  const int M = batch.max_segments;
  const int slots = B * M;
  if (batch.seg_len < conv_.max_window()) {
    throw ShapeError("batch padded to " + std::to_string(batch.seg_len) +
                     " tokens, below the widest window " + std::to_string(conv_.max_window()));
  }
  Rng unused(0);
  Rng &drng = dropout_rng ? *dropout_rng : unused;
  auto drop = [&](const Tensor &x) { return ad::dropout(t, x, config_.dropout, train, drng); };
  RecurrentDropout rdrop{config_.recurrent_dropout, train, &drng};

  BatchGraph g;
  Tensor seg = encode_segments(t, embeddings_, batch.tokens, batch.seg_len, batch.lengths, conv_);
  std::vector<int> labels;
  for (int y : batch.labels) labels.push_back(y - 1);

  switch (config_.kind) {
    case ModelKind::kSegCnn: {
      g.segment_probs = classify(t, drop(seg), classifier_);
      bool labelled = std::all_of(batch.gold.begin(), batch.gold.end(), [](int v) { return v >= 0; });
      if (labelled) g.loss = ad::nll(t, g.segment_probs, batch.gold);
      break;
    }
    case ModelKind::kMilNet: {
      g.segment_probs = classify(t, drop(seg), classifier_);
      if (config_.attention == AttentionMode::kAttention) {
        Tensor grid = ad::scatter_rows(t, drop(seg), batch.slot, slots);
        g.hidden = bigru(t, grid, B, M, batch.seg_count, gru_, rdrop);
        g.attention = attend(t, g.hidden, B, M, batch.mask, attention_);
      } else {
        g.attention = average_weights(B, M, batch.mask);
      }
      Tensor probs_grid = ad::scatter_rows(t, g.segment_probs, batch.slot, slots);
      g.doc_probs = ad::bag_weighted_sum(t, g.attention, probs_grid);
      g.loss = ad::nll(t, g.doc_probs, labels);
      break;
    }
    case ModelKind::kHierNet: {
      Tensor grid = ad::scatter_rows(t, drop(seg), batch.slot, slots);
      g.hidden = bigru(t, grid, B, M, batch.seg_count, gru_, rdrop);
      g.attention = config_.attention == AttentionMode::kAttention
                        ? attend(t, g.hidden, B, M, batch.mask, attention_)
                        : average_weights(B, M, batch.mask);
      g.doc_vectors = ad::bag_weighted_sum(t, g.attention, g.hidden);
      g.doc_probs = classify(t, drop(g.doc_vectors), classifier_);
      g.loss = ad::nll(t, g.doc_probs, labels);
      break;
    }
  }
  return g;
}

std::vector<DocumentOutput> Model::outputs(const BatchGraph &g, const Batch &batch) const {
  const int M = batch.max_segments;
  std::vector<DocumentOutput> out(batch.num_docs());
  auto row = [](const Tensor &x, int r) {
    const int c = x.cols();
    return std::vector<double>(x.data().begin() + static_cast<size_t>(r) * c,
                               x.data().begin() + static_cast<size_t>(r + 1) * c);
  };
  int live = 0;
  for (int b = 0; b < batch.num_docs(); ++b) {
    DocumentOutput &o = out[b];
    const int m = batch.seg_count[b];
    for (int i = 0; i < m; ++i, ++live) {
      if (g.segment_probs.defined()) o.segment_probs.push_back(row(g.segment_probs, live));
      if (g.hidden.defined()) o.hidden.push_back(row(g.hidden, b * M + i));
      if (g.attention.defined()) o.attention.push_back(g.attention.at(b * M + i));
    }
    if (g.doc_vectors.defined()) o.doc_vector = row(g.doc_vectors, b);
    if (g.doc_probs.defined()) o.doc_probs = row(g.doc_probs, b);
  }
  return out;
}

std::vector<DocumentOutput> Model::predict(const std::vector<Document> &docs, int batch_size) const {
  std::vector<DocumentOutput> out(docs.size());
  for (const Batch &batch : make_batches(docs, batch_size, conv_.max_window())) {
    Tape t;
    BatchGraph g = forward(t, batch, false, nullptr);
    std::vector<DocumentOutput> part = outputs(g, batch);
    for (int b = 0; b < batch.num_docs(); ++b) out[batch.docs[b]] = std::move(part[b]);
  }
  return out;
}

DocumentOutput Model::forward_document(const Document &doc) const {
  std::vector<Document> one = {doc};
  Batch batch = make_batch(one, {0}, conv_.max_window());
  Tape t;
  return outputs(forward(t, batch, false, nullptr), batch).front();
}

std::vector<double> Model::forward_segment(const Segment &seg) const {
  Document doc;
  doc.segments.push_back(seg);
  DocumentOutput o = forward_document(doc);
  if (o.segment_probs.empty()) throw Error("this model does not classify segments");
  return o.segment_probs.front();
}

double document_nll(const std::vector<double> &p_d, int label) {
  if (label < 1 || label > static_cast<int>(p_d.size())) {
    throw ValidationError("label " + std::to_string(label) + " outside [1, " +
                          std::to_string(p_d.size()) + "]");
  }
  return -std::log(std::max(p_d[label - 1], 1e-12));
}

}  // namespace milnet
