#include "milnet/layers.h"

#include <algorithm>
#include <cmath>

#include "milnet/error.h"
#include "milnet/text_data.h"

namespace milnet {

Tensor glorot(int rows, int cols, Rng &rng) {
  const double limit = std::sqrt(6.0 / (rows + cols));
  Tensor t = Tensor::zeros({rows, cols}, true);
  for (double &v : t.data()) v = rng.uniform(-limit, limit);
  return t;
}

namespace {

Tensor zero_bias(int n) { return Tensor::zeros({n}, true); }

}  // namespace

ConvEncoderParams ConvEncoderParams::init(int embedding_dim, std::vector<int> windows,
                                          int feature_maps, Rng &rng) {
  if (windows.empty()) throw ValidationError("convolution needs at least one window size");
  ConvEncoderParams p;
  for (int l : windows) {
    if (l < 1) throw ValidationError("window sizes must be positive");
    p.filters.push_back(glorot(l * embedding_dim, feature_maps, rng));
    p.biases.push_back(zero_bias(feature_maps));
  }
  p.windows = std::move(windows);
  p.feature_maps = feature_maps;
  return p;
}

int ConvEncoderParams::max_window() const {
  return *std::max_element(windows.begin(), windows.end());
}

void ConvEncoderParams::collect(const std::string &prefix, std::vector<NamedTensor> &out) const {
  for (size_t i = 0; i < windows.size(); ++i) {
    const std::string w = std::to_string(windows[i]);
    out.push_back({prefix + ".w" + w, filters[i]});
    out.push_back({prefix + ".b" + w, biases[i]});
  }
}

Tensor encode_word_matrix(Tape &t, const Tensor &x, int seg_len,
                          const std::vector<int> &lengths, const ConvEncoderParams &p) {
  const int widest = p.max_window();
  if (seg_len < widest) {
    throw ShapeError("segments must be padded to at least " + std::to_string(widest) +
                     " rows, got " + std::to_string(seg_len));
  }
  if (x.rows() != seg_len * static_cast<int>(lengths.size())) {
    throw ShapeError("encode: " + shape_string(x.shape()) + " is not " +
                     std::to_string(lengths.size()) + " segments of " + std::to_string(seg_len));
  }
  const int k = x.cols();
  std::vector<Tensor> pooled;
  for (size_t i = 0; i < p.windows.size(); ++i) {
    const int l = p.windows[i];
    if (p.filters[i].rows() != l * k) {
      throw ShapeError("filter bank for width " + std::to_string(l) + " expects embedding dim " +
                       std::to_string(p.filters[i].rows() / l) + ", got " + std::to_string(k));
    }
    Tensor windows = ad::unfold_windows(t, x, seg_len, l);
    Tensor maps = ad::relu(t, ad::add_bias(t, ad::matmul(t, windows, p.filters[i]), p.biases[i]));
    std::vector<int> valid(lengths.size());
    for (size_t s = 0; s < lengths.size(); ++s) {
      valid[s] = std::min(std::max(lengths[s], widest), seg_len) - l + 1;
    }
    pooled.push_back(ad::segment_max_pool(t, maps, seg_len - l + 1, std::move(valid)));
  }
  return pooled.size() == 1 ? pooled[0] : ad::concat_cols(t, pooled);
}

Tensor encode_segments(Tape &t, const Tensor &embeddings, const std::vector<int> &tokens,
                       int seg_len, const std::vector<int> &lengths,
                       const ConvEncoderParams &p) {
  Tensor x = ad::embedding_lookup(t, embeddings, tokens, Vocabulary::kPad);
  return encode_word_matrix(t, x, seg_len, lengths, p);
}

Tensor encode_segment(Tape &t, const Tensor &words, const ConvEncoderParams &p) {
  const int n = words.rows();
  const int widest = p.max_window();
  Tensor x = words.rank() == 1 ? ad::reshape(t, words, {1, words.size()}) : words;
  if (n < widest) {
    x = ad::concat_rows(t, {x, Tensor::zeros({widest - n, x.cols()})});
  }
  Tensor v = encode_word_matrix(t, x, std::max(n, widest), {n}, p);
  return ad::reshape(t, v, {v.cols()});
}

GruParams GruParams::init(int input, int hidden, Rng &rng) {
  GruParams p;
  p.wz = glorot(input, hidden, rng);
  p.wr = glorot(input, hidden, rng);
  p.wh = glorot(input, hidden, rng);
  p.uz = glorot(hidden, hidden, rng);
  p.ur = glorot(hidden, hidden, rng);
  p.uh = glorot(hidden, hidden, rng);
  p.bz = zero_bias(hidden);
  p.br = zero_bias(hidden);
  p.bh = zero_bias(hidden);
  return p;
}

void GruParams::collect(const std::string &prefix, std::vector<NamedTensor> &out) const {
  out.push_back({prefix + ".wz", wz});
  out.push_back({prefix + ".wr", wr});
  out.push_back({prefix + ".wh", wh});
  out.push_back({prefix + ".uz", uz});
  out.push_back({prefix + ".ur", ur});
  out.push_back({prefix + ".uh", uh});
  out.push_back({prefix + ".bz", bz});
  out.push_back({prefix + ".br", br});
  out.push_back({prefix + ".bh", bh});
}

namespace {

// Input projections precomputed for all steps at once.
struct Projected {
  Tensor z, r, h;
};

Projected project(Tape &t, const Tensor &x, const GruParams &p) {
  return {ad::add_bias(t, ad::matmul(t, x, p.wz), p.bz),
          ad::add_bias(t, ad::matmul(t, x, p.wr), p.br),
          ad::add_bias(t, ad::matmul(t, x, p.wh), p.bh)};
}

// live is [B × hidden] of 0/1 or undefined when every row is live.
Tensor step(Tape &t, const Tensor &h_prev, const Tensor &xz, const Tensor &xr, const Tensor &xh,
            const GruParams &p, const Tensor &live, const RecurrentDropout &drop) {
  Tensor h_in = h_prev;
  if (drop.train && drop.rate > 0.0) h_in = ad::dropout(t, h_prev, drop.rate, true, *drop.rng);
  Tensor z = ad::sigmoid(t, ad::add(t, xz, ad::matmul(t, h_in, p.uz)));
  Tensor r = ad::sigmoid(t, ad::add(t, xr, ad::matmul(t, h_in, p.ur)));
  Tensor c = ad::tanh(t, ad::add(t, xh, ad::matmul(t, ad::mul(t, r, h_in), p.uh)));
  if (live.defined()) z = ad::mul(t, z, live);
  return ad::add(t, h_prev, ad::mul(t, z, ad::sub(t, c, h_prev)));
}

}  // namespace

Tensor gru_step(Tape &t, const Tensor &h_prev, const Tensor &x, const GruParams &p) {
  Projected px = project(t, x, p);
  return step(t, h_prev, px.z, px.r, px.h, p, Tensor(), {});
}

BiGruParams BiGruParams::init(int input, int hidden, Rng &rng) {
  BiGruParams p;
  p.forward = GruParams::init(input, hidden, rng);
  p.backward = GruParams::init(input, hidden, rng);
  return p;
}

void BiGruParams::collect(const std::string &prefix, std::vector<NamedTensor> &out) const {
  forward.collect(prefix + ".fwd", out);
  backward.collect(prefix + ".bwd", out);
}

Tensor bigru(Tape &t, const Tensor &xs, int batch, int steps, const std::vector<int> &counts,
             const BiGruParams &p, const RecurrentDropout &drop) {
  if (xs.rows() != batch * steps || static_cast<int>(counts.size()) != batch) {
    throw ShapeError("bigru: " + shape_string(xs.shape()) + " is not " + std::to_string(batch) +
                     " sequences of " + std::to_string(steps));
  }
  const int hidden = p.forward.hidden();
  bool ragged = false;
  for (int c : counts) ragged |= (c != steps);

  // Per-step live masks and row selections.
  std::vector<Tensor> live(steps);
  std::vector<std::vector<int>> rows(steps);
  for (int s = 0; s < steps; ++s) {
    for (int b = 0; b < batch; ++b) rows[s].push_back(b * steps + s);
    if (ragged) {
      std::vector<double> m(static_cast<size_t>(batch) * hidden);
      for (int b = 0; b < batch; ++b) {
        std::fill_n(m.begin() + static_cast<size_t>(b) * hidden, hidden, s < counts[b] ? 1.0 : 0.0);
      }
      live[s] = Tensor::from({batch, hidden}, std::move(m));
    }
  }

  auto run = [&](const GruParams &g, bool reverse) {
    Projected px = project(t, xs, g);
    std::vector<Tensor> states(steps);
    Tensor h = Tensor::zeros({batch, hidden});
    for (int i = 0; i < steps; ++i) {
      const int s = reverse ? steps - 1 - i : i;
      Tensor xz = ad::gather_rows(t, px.z, rows[s]);
      Tensor xr = ad::gather_rows(t, px.r, rows[s]);
      Tensor xh = ad::gather_rows(t, px.h, rows[s]);
      h = step(t, h, xz, xr, xh, g, live[s], drop);
      states[s] = h;
    }
    // Time-major [(steps·B) × hidden] back to sequence-major order.
    Tensor stacked = ad::concat_rows(t, states);
    std::vector<int> order(static_cast<size_t>(batch) * steps);
    for (int b = 0; b < batch; ++b) {
      for (int s = 0; s < steps; ++s) order[b * steps + s] = s * batch + b;
    }
    return ad::gather_rows(t, stacked, std::move(order));
  };

  return ad::concat_cols(t, {run(p.forward, false), run(p.backward, true)});
}

Tensor bigru(Tape &t, const std::vector<Tensor> &vs, const BiGruParams &p) {
  if (vs.empty()) throw ShapeError("bigru: empty sequence");
  std::vector<Tensor> rows;
  for (const Tensor &v : vs) rows.push_back(v.rank() == 1 ? ad::reshape(t, v, {1, v.size()}) : v);
  const int m = static_cast<int>(vs.size());
  return bigru(t, ad::concat_rows(t, rows), 1, m, {m}, p);
}

AttentionParams AttentionParams::init(int input, int attention_dim, Rng &rng) {
  AttentionParams p;
  p.w = glorot(input, attention_dim, rng);
  p.b = zero_bias(attention_dim);
  p.key = glorot(attention_dim, 1, rng);
  return p;
}

void AttentionParams::collect(const std::string &prefix, std::vector<NamedTensor> &out) const {
  out.push_back({prefix + ".w", w});
  out.push_back({prefix + ".b", b});
  out.push_back({prefix + ".key", key});
}

Tensor attend(Tape &t, const Tensor &hs, int batch, int steps, const std::vector<uint8_t> &mask,
              const AttentionParams &p) {
  if (hs.rows() != batch * steps || static_cast<int>(mask.size()) != batch * steps) {
    throw ShapeError("attend: " + shape_string(hs.shape()) + " with mask of " +
                     std::to_string(mask.size()) + " for " + std::to_string(batch) + "x" +
                     std::to_string(steps));
  }
  Tensor proj = ad::tanh(t, ad::add_bias(t, ad::matmul(t, hs, p.w), p.b));
  Tensor scores = ad::reshape(t, ad::matmul(t, proj, p.key), {batch, steps});
  return ad::masked_softmax_rows(t, scores, mask);
}

Tensor average_weights(int batch, int steps, const std::vector<uint8_t> &mask) {
  std::vector<double> w(static_cast<size_t>(batch) * steps, 0.0);
  for (int b = 0; b < batch; ++b) {
    int live = 0;
    for (int s = 0; s < steps; ++s) live += mask[b * steps + s] != 0;
    if (live == 0) throw DegenerateMaskError("average over a row with no live segment");
    for (int s = 0; s < steps; ++s) {
      if (mask[b * steps + s]) w[b * steps + s] = 1.0 / live;
    }
  }
  return Tensor::from({batch, steps}, std::move(w));
}

ClassifierParams ClassifierParams::init(int input, int classes, Rng &rng) {
  return {glorot(input, classes, rng), zero_bias(classes)};
}

void ClassifierParams::collect(const std::string &prefix, std::vector<NamedTensor> &out) const {
  out.push_back({prefix + ".w", w});
  out.push_back({prefix + ".b", b});
}

Tensor classify(Tape &t, const Tensor &x, const ClassifierParams &p) {
  Tensor in = x.rank() == 1 ? ad::reshape(t, x, {1, x.size()}) : x;
  return ad::softmax_rows(t, ad::add_bias(t, ad::matmul(t, in, p.w), p.b));
}

}  // namespace milnet
