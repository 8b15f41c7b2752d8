#include "milnet/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "milnet/error.h"

namespace milnet {

using json = nlohmann::json;

void adadelta_update(std::span<double> weights, std::span<const double> grads,
                     std::span<double> sq_grad, std::span<double> sq_update, double rho,
                     double epsilon) {
  for (size_t i = 0; i < weights.size(); ++i) {
    const double g = grads[i];
    sq_grad[i] = rho * sq_grad[i] + (1.0 - rho) * g * g;
    const double delta = -std::sqrt(sq_update[i] + epsilon) / std::sqrt(sq_grad[i] + epsilon) * g;
    sq_update[i] = rho * sq_update[i] + (1.0 - rho) * delta * delta;
    weights[i] += delta;
  }
}

void AdadeltaConfig::validate() const {
  if (rho < 0.0 || rho >= 1.0) throw ValidationError("rho must be in [0, 1)");
  if (epsilon <= 0.0) throw ValidationError("epsilon must be positive");
  if (weight_decay < 0.0) throw ValidationError("weight decay must be non-negative");
}

Adadelta::Adadelta(const Model &model, AdadeltaConfig config) : config_(config) {
  config_.validate();
  for (const NamedTensor &p : model.parameters()) {
    sq_grad_.emplace_back(p.tensor.size(), 0.0);
    sq_update_.emplace_back(p.tensor.size(), 0.0);
  }
}

void Adadelta::step(Model &model) {
  const auto &params = model.parameters();
  for (const NamedTensor &p : params) {
    if (!p.tensor.requires_grad() || !p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) {
      if (!std::isfinite(g)) throw NumericalError("non-finite gradient in parameter " + p.name);
    }
  }
  std::vector<double> decayed;
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor t = params[i].tensor;
    if (!t.requires_grad()) continue;
    std::span<const double> g = t.grad();
    if (config_.weight_decay > 0.0 && model.decayed(params[i].name)) {
      decayed.assign(g.begin(), g.end());
      auto w = t.data();
      for (size_t j = 0; j < decayed.size(); ++j) decayed[j] += config_.weight_decay * w[j];
      g = decayed;
    }
    adadelta_update(t.data(), g, sq_grad_[i], sq_update_[i], config_.rho, config_.epsilon);
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be at least 1");
  if (batch_size < 1) throw ValidationError("batch size must be at least 1");
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    throw ValidationError("validation fraction must be in [0, 1)");
  }
  optimizer.validate();
}

json TrainConfig::to_json() const {
  return json{{"epochs", epochs},
              {"batch_size", batch_size},
              {"rho", optimizer.rho},
              {"epsilon", optimizer.epsilon},
              {"weight_decay", optimizer.weight_decay},
              {"validation_fraction", validation_fraction},
              {"seed", seed}};
}

json EpochMetrics::to_json() const {
  return json{{"epoch", epoch},
              {"train_loss", train_loss},
              {"val_loss", val_loss},
              {"val_accuracy", val_accuracy}};
}

Model clone_model(const Model &model) {
  Model copy(model.config(), model.vocab());
  const auto &src = model.parameters();
  const auto &dst = copy.parameters();
  for (size_t i = 0; i < src.size(); ++i) {
    Tensor t = dst[i].tensor;
    std::copy(src[i].tensor.data().begin(), src[i].tensor.data().end(), t.data().begin());
  }
  return copy;
}

namespace {

int argmax(const std::vector<double> &v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

HeldOutScore score_documents(const Model &model, const std::vector<Document> &docs) {
  HeldOutScore score;
  if (docs.empty()) return score;
  std::vector<DocumentOutput> out = model.predict(docs);
  long right = 0, total = 0;
  double nll = 0.0;
  for (size_t d = 0; d < docs.size(); ++d) {
    if (model.config().kind == ModelKind::kSegCnn) {
      for (size_t i = 0; i < docs[d].segments.size(); ++i) {
        if (!docs[d].segments[i].gold) continue;
        const int gold = static_cast<int>(*docs[d].segments[i].gold);
        right += argmax(out[d].segment_probs[i]) == gold;
        nll += document_nll(out[d].segment_probs[i], gold + 1);
        ++total;
      }
    } else {
      right += argmax(out[d].doc_probs) + 1 == docs[d].label;
      nll += document_nll(out[d].doc_probs, docs[d].label);
      ++total;
    }
  }
  if (total) {
    score.accuracy = static_cast<double>(right) / total;
    score.loss = nll / total;
  }
  return score;
}

double accuracy(const Model &model, const std::vector<Document> &docs) {
  return score_documents(model, docs).accuracy;
}

TrainResult train(Model &model, const std::vector<Document> &docs, const TrainConfig &config,
                  const std::function<void(const EpochMetrics &)> &on_epoch) {
  config.validate();
  if (docs.empty()) throw ValidationError("training corpus is empty");
  const bool segcnn = model.config().kind == ModelKind::kSegCnn;
  if (segcnn) {
    for (const Document &d : docs) {
      if (!d.has_segment_labels()) {
        throw ValidationError("Seg-CNN training needs segment_labels; document '" + d.id +
                              "' has none");
      }
    }
  }

  Rng rng(config.seed);
  std::vector<int> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const size_t n_val = docs.size() >= 2
                           ? static_cast<size_t>(std::ceil(config.validation_fraction * docs.size()))
                           : 0;
  std::vector<Document> train_docs, val_docs;
  for (size_t i = 0; i < order.size(); ++i) {
    (i < order.size() - n_val ? train_docs : val_docs).push_back(docs[order[i]]);
  }
  if (train_docs.empty()) throw ValidationError("no training documents left after the validation split");

  int min_len = *std::max_element(model.config().windows.begin(), model.config().windows.end());
  Adadelta opt(model, config.optimizer);
  TrainResult result;
  HeldOutScore best{-1.0, 0.0};
  model.zero_grad();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    long units = 0;
    for (const Batch &batch : make_batches(train_docs, config.batch_size, min_len, &rng)) {
      Tape t;
      BatchGraph g = model.forward(t, batch, true, &rng);
      const int n = segcnn ? batch.num_segments() : batch.num_docs();
      Tensor loss = ad::scale(t, g.loss, 1.0 / n);
      t.backward(loss);
      opt.step(model);
      model.zero_grad();
      loss_sum += g.loss.item();
      units += n;
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(units);
    const HeldOutScore held = score_documents(model, val_docs.empty() ? train_docs : val_docs);
    m.val_accuracy = held.accuracy;
    m.val_loss = held.loss;
    result.metrics.push_back(m);
    if (on_epoch) on_epoch(m);
    if (held.accuracy > best.accuracy || (held.accuracy == best.accuracy && held.loss < best.loss)) {
      best = held;
      result.best_epoch = epoch;
      result.best.emplace(clone_model(model));
    }
  }
  return result;
}

OverfitReport overfit_sanity(Model &model, const std::vector<Document> &docs, int max_steps,
                             AdadeltaConfig optimizer) {
  if (docs.empty() || docs.size() > 8) throw ValidationError("overfit check takes 1 to 8 documents");
  int min_len = *std::max_element(model.config().windows.begin(), model.config().windows.end());
  std::vector<int> all(docs.size());
  std::iota(all.begin(), all.end(), 0);
  Batch batch = make_batch(docs, all, min_len);
  Adadelta opt(model, optimizer);
  OverfitReport report;
  model.zero_grad();
  for (int step = 0;; ++step) {
    report.accuracy = accuracy(model, docs);
    report.steps = step;
    if (report.accuracy == 1.0) {
      report.success = true;
      break;
    }
    if (step == max_steps) break;
    Tape t;
    BatchGraph g = model.forward(t, batch, false, nullptr);
    t.backward(g.loss);
    opt.step(model);
    model.zero_grad();
  }
  return report;
}

}  // namespace milnet
