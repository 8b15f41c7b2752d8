#ifndef MILNET_MODELS_H_
#define MILNET_MODELS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "milnet/layers.h"
#include "milnet/tensor.h"
#include "milnet/text_data.h"

namespace milnet {

enum class ModelKind { kMilNet, kHierNet, kSegCnn };
// kAverage disables attention: every live segment gets weight 1/m.
enum class AttentionMode { kAttention, kAverage };

const char *model_kind_name(ModelKind k);
ModelKind parse_model_kind(const std::string &s);

struct ModelConfig {
  ModelKind kind = ModelKind::kMilNet;
  AttentionMode attention = AttentionMode::kAttention;
  int num_classes = 5;
  int embedding_dim = 300;
  std::vector<int> windows = {3, 4, 5};
  int feature_maps = 100;
  int gru_hidden = 50;
  int attention_dim = 100;
  double dropout = 0.5;            // segment vectors / document vector
  double recurrent_dropout = 0.1;  // GRU state fed to the recurrent weights
  bool train_embeddings = true;
  uint64_t seed = 1;

  // Seg-CNN always predicts {neg, neu, pos}.
  int output_classes() const { return kind == ModelKind::kSegCnn ? 3 : num_classes; }
  bool uses_gru() const;
  bool uses_attention() const;
  void validate() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json &j);
};

// Per-document results read back from a forward pass.
struct DocumentOutput {
  std::vector<std::vector<double>> segment_probs;  // MilNet and Seg-CNN
  std::vector<std::vector<double>> hidden;         // bi-GRU states, when computed
  std::vector<double> attention;                   // a_i; empty for Seg-CNN
  std::vector<double> doc_vector;                  // HierNet: Σ a_i h_i
  std::vector<double> doc_probs;                   // MilNet and HierNet
};
using MilNetOutput = DocumentOutput;
using HierNetOutput = DocumentOutput;

// Tensors recorded for one batch.
struct BatchGraph {
  Tensor segment_probs;  // [S × C], live segments in batch order
  Tensor hidden;         // [(B·M) × 2h]
  Tensor attention;      // [B × M]
  Tensor doc_vectors;    // [B × 2h]
  Tensor doc_probs;      // [B × C]
  Tensor loss;           // summed NLL over documents (segments for Seg-CNN)
};

class Model {
 public:
  Model(ModelConfig config, Vocabulary vocab, EmbeddingTable embeddings);
  // Random embeddings drawn from the config seed.
  Model(ModelConfig config, Vocabulary vocab);

  const ModelConfig &config() const { return config_; }
  const Vocabulary &vocab() const { return vocab_; }
  const Tensor &embeddings() const { return embeddings_; }

  // Every learnable tensor, in a fixed order. The embedding table is listed
  // even when frozen.
  const std::vector<NamedTensor> &parameters() const { return params_; }
  long parameter_count() const;
  // Names of tensors that receive weight decay.
  bool decayed(const std::string &name) const;
  void zero_grad();

  // dropout_rng may be null when !train.
  BatchGraph forward(Tape &t, const Batch &batch, bool train, Rng *dropout_rng) const;
  std::vector<DocumentOutput> outputs(const BatchGraph &g, const Batch &batch) const;

  // Inference over a corpus in padded batches.
  std::vector<DocumentOutput> predict(const std::vector<Document> &docs, int batch_size = 64) const;

  // Inference on one indexed document (a batch of one).
  DocumentOutput forward_document(const Document &doc) const;
  // Seg-CNN distribution for one indexed segment.
  std::vector<double> forward_segment(const Segment &seg) const;

 private:
  void build(Rng &rng);

  ModelConfig config_;
  Vocabulary vocab_;
  Tensor embeddings_;
  ConvEncoderParams conv_;
  BiGruParams gru_;
  AttentionParams attention_;
  ClassifierParams classifier_;
  std::vector<NamedTensor> params_;
};

// −log max(p[label], 1e-12) for a 1-based label.
double document_nll(const std::vector<double> &p_d, int label);

}  // namespace milnet

#endif  // MILNET_MODELS_H_
