#ifndef MILNET_LAYERS_H_
#define MILNET_LAYERS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "milnet/rng.h"
#include "milnet/tensor.h"

namespace milnet {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Glorot-uniform [rows × cols] matrix that requires a gradient.
Tensor glorot(int rows, int cols, Rng &rng);

// One filter bank per window width l: W is [(l·k) × maps], b is [maps].
// Matrices are stored input-major so batched rows multiply on the left.
struct ConvEncoderParams {
  std::vector<int> windows;
  int feature_maps = 0;
  std::vector<Tensor> filters;
  std::vector<Tensor> biases;

  static ConvEncoderParams init(int embedding_dim, std::vector<int> windows, int feature_maps,
                                Rng &rng);
  int output_dim() const { return static_cast<int>(windows.size()) * feature_maps; }
  int max_window() const;
  void collect(const std::string &prefix, std::vector<NamedTensor> &out) const;
};

// Encodes S padded segments stored as consecutive blocks of seg_len rows of
// x. Only windows lying inside max(length, max_window) rows of a segment take
// part in max-over-time pooling. Returns [S × output_dim].
Tensor encode_word_matrix(Tape &t, const Tensor &x, int seg_len,
                          const std::vector<int> &lengths, const ConvEncoderParams &p);

// Same, looking rows up in an embedding table first.
Tensor encode_segments(Tape &t, const Tensor &embeddings, const std::vector<int> &tokens,
                       int seg_len, const std::vector<int> &lengths,
                       const ConvEncoderParams &p);

// Single segment as an n×k word matrix; shorter segments are zero-padded up
// to the widest window. Returns [output_dim].
Tensor encode_segment(Tape &t, const Tensor &words, const ConvEncoderParams &p);

// GRU with update gate z, reset gate r and candidate c:
//   z = σ(x·Wz + h·Uz + bz),  r = σ(x·Wr + h·Ur + br)
//   c = tanh(x·Wh + (r ⊙ h)·Uh + bh),  h' = (1 − z) ⊙ h + z ⊙ c
struct GruParams {
  Tensor wz, wr, wh;  // [input × hidden]
  Tensor uz, ur, uh;  // [hidden × hidden]
  Tensor bz, br, bh;  // [hidden]

  static GruParams init(int input, int hidden, Rng &rng);
  int hidden() const { return uz.cols(); }
  void collect(const std::string &prefix, std::vector<NamedTensor> &out) const;
};

// Batched step: h_prev [B × hidden], x [B × input].
Tensor gru_step(Tape &t, const Tensor &h_prev, const Tensor &x, const GruParams &p);

struct BiGruParams {
  GruParams forward, backward;

  static BiGruParams init(int input, int hidden, Rng &rng);
  int output_dim() const { return 2 * forward.hidden(); }
  void collect(const std::string &prefix, std::vector<NamedTensor> &out) const;
};

struct RecurrentDropout {
  double rate = 0.0;
  bool train = false;
  Rng *rng = nullptr;
};

// xs holds B sequences of M rows each (row b·M + m); sequence b has counts[b]
// live rows. Padded steps leave the state unchanged, so the backward
// direction starts from zero at each sequence's own last segment. Returns
// [(B·M) × 2·hidden] with forward states in the first half of each row.
Tensor bigru(Tape &t, const Tensor &xs, int batch, int steps, const std::vector<int> &counts,
             const BiGruParams &p, const RecurrentDropout &drop = {});

// Unbatched convenience over a list of segment vectors: [m × 2·hidden].
Tensor bigru(Tape &t, const std::vector<Tensor> &vs, const BiGruParams &p);

// h' = tanh(h·W + b); score = h'·key; weights = masked softmax over segments.
struct AttentionParams {
  Tensor w;    // [input × attention_dim]
  Tensor b;    // [attention_dim]
  Tensor key;  // [attention_dim × 1], the trained context vector

  static AttentionParams init(int input, int attention_dim, Rng &rng);
  void collect(const std::string &prefix, std::vector<NamedTensor> &out) const;
};

// hs [(B·M) × input], mask [B × M] -> weights [B × M]; masked slots get
// exactly zero.
Tensor attend(Tape &t, const Tensor &hs, int batch, int steps, const std::vector<uint8_t> &mask,
              const AttentionParams &p);

// Uniform weights 1/m over the live slots of each row, as a constant.
Tensor average_weights(int batch, int steps, const std::vector<uint8_t> &mask);

struct ClassifierParams {
  Tensor w;  // [input × classes]
  Tensor b;  // [classes]

  static ClassifierParams init(int input, int classes, Rng &rng);
  int classes() const { return w.cols(); }
  void collect(const std::string &prefix, std::vector<NamedTensor> &out) const;
};

// Row-wise softmax(x·W + b).
Tensor classify(Tape &t, const Tensor &x, const ClassifierParams &p);

}  // namespace milnet

#endif  // MILNET_LAYERS_H_
