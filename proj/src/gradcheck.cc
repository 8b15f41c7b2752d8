#include "milnet/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "milnet/error.h"

namespace milnet {

double gradient_error(double analytic, double numeric, double abs_floor) {
  const double diff = std::abs(analytic - numeric);
  if (diff < abs_floor) return 0.0;
  return diff / std::max(std::abs(analytic), std::abs(numeric));
}

std::vector<ParamGradCheck> check_parameters(const std::vector<NamedTensor> &params,
                                             const std::function<Tensor(Tape &)> &loss,
                                             const GradCheckOptions &opts) {
  for (const NamedTensor &p : params) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  auto value = [&] {
    Tape tape;
    return loss(tape).item();
  };
  const double base = value();
  std::vector<ParamGradCheck> out;
  for (const NamedTensor &p : params) {
    Tensor t = p.tensor;
    if (!t.requires_grad()) continue;
    ParamGradCheck r;
    r.param = p.name;
    r.elements = t.size();
    std::vector<double> analytic(t.grad().begin(), t.grad().end());
    auto w = t.data();
    for (int i = 0; i < t.size(); ++i) {
      const double orig = w[i];
      w[i] = orig + opts.step;
      const double up = value();
      w[i] = orig - opts.step;
      const double down = value();
      w[i] = orig;
      // One-sided slopes that disagree mean [w-h, w+h] straddles a ReLU or
      // max-pool switch, where no difference quotient is meaningful.
      const double fwd = (up - base) / opts.step, bwd = (base - down) / opts.step;
      if (std::abs(fwd - bwd) > opts.kink_tolerance * std::max(1.0, std::abs(fwd))) {
        ++r.skipped;
        continue;
      }
      const double numeric = (up - down) / (2.0 * opts.step);
      r.max_abs_error = std::max(r.max_abs_error, std::abs(analytic[i] - numeric));
      r.max_rel_error =
          std::max(r.max_rel_error, gradient_error(analytic[i], numeric, opts.abs_floor));
    }
    out.push_back(r);
  }
  return out;
}

std::vector<ParamGradCheck> check_model(Model &model, const Batch &batch,
                                        const GradCheckOptions &opts) {
  auto loss = [&](Tape &t) { return model.forward(t, batch, false, nullptr).loss; };
  std::vector<ParamGradCheck> out = check_parameters(model.parameters(), loss, opts);
  for (ParamGradCheck &r : out) r.model = model_kind_name(model.config().kind);
  model.zero_grad();
  return out;
}

ModelConfig toy_config(ModelKind kind, AttentionMode attention, uint64_t seed) {
  ModelConfig c;
  c.kind = kind;
  c.attention = attention;
  c.num_classes = 3;
  c.embedding_dim = 8;
  c.windows = {2, 3};
  c.feature_maps = 4;
  c.gru_hidden = 5;
  c.attention_dim = 6;
  c.seed = seed;
  return c;
}

Vocabulary toy_vocabulary() {
  std::vector<std::string> words = {"<pad>", "<unk>"};
  for (int i = 0; i < 14; ++i) words.push_back("w" + std::to_string(i));
  return Vocabulary::from_tokens(words);
}

std::vector<Document> toy_documents(const Vocabulary &vocab, int num_classes, uint64_t seed) {
  Rng rng(seed);
  std::vector<Document> docs(2);
  for (int d = 0; d < 2; ++d) {
    Document &doc = docs[d];
    doc.id = "toy-" + std::to_string(d);
    doc.label = 1 + static_cast<int>(rng.below(num_classes));
    // The second document is shorter so the batch carries segment padding.
    const int m = d == 0 ? 4 : 1 + static_cast<int>(rng.below(3));
    for (int i = 0; i < m; ++i) {
      Segment s;
      const int len = 1 + static_cast<int>(rng.below(6));
      for (int k = 0; k < len; ++k) {
        s.words.push_back(vocab.token(2 + static_cast<int>(rng.below(vocab.size() - 2))));
      }
      for (size_t k = 0; k < s.words.size(); ++k) s.text += (k ? " " : "") + s.words[k];
      s.gold = Polarity(rng.below(3));
      doc.segments.push_back(std::move(s));
    }
  }
  vocab.index(docs);
  return docs;
}

std::vector<ParamGradCheck> gradcheck_suite(uint64_t seed, const GradCheckOptions &opts) {
  std::vector<ParamGradCheck> all;
  const Vocabulary vocab = toy_vocabulary();
  const std::pair<ModelKind, AttentionMode> variants[] = {
      {ModelKind::kMilNet, AttentionMode::kAttention},
      {ModelKind::kHierNet, AttentionMode::kAttention},
      {ModelKind::kSegCnn, AttentionMode::kAttention},
  };
  for (auto [kind, attention] : variants) {
    Model model(toy_config(kind, attention, seed), vocab);
    // Zero biases put all-padding conv windows exactly on the ReLU kink,
    // where central differences are meaningless.
    Rng jitter(seed);
    for (const NamedTensor &p : model.parameters()) {
      if (p.name.find(".b") == std::string::npos) continue;
      Tensor t = p.tensor;
      for (double &v : t.data()) v = jitter.uniform(-0.1, 0.1);
    }
    std::vector<Document> docs = toy_documents(vocab, model.config().num_classes, seed);
    Batch batch = make_batch(docs, {0, 1}, 3);
    std::vector<ParamGradCheck> r = check_model(model, batch, opts);
    all.insert(all.end(), r.begin(), r.end());
  }
  return all;
}

}  // namespace milnet
