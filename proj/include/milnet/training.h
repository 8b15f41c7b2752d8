#ifndef MILNET_TRAINING_H_
#define MILNET_TRAINING_H_

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "milnet/models.h"

namespace milnet {

struct AdadeltaConfig {
  double rho = 0.95;
  double epsilon = 1e-6;
  double weight_decay = 1e-5;  // classifier and attention-MLP weights only

  void validate() const;
};

// One Adadelta update of a single tensor, in place:
//   E[g²] ← ρE[g²] + (1−ρ)g²
//   Δ = −√(E[Δ²]+ε) / √(E[g²]+ε) · g
//   E[Δ²] ← ρE[Δ²] + (1−ρ)Δ²;  w ← w + Δ
void adadelta_update(std::span<double> weights, std::span<const double> grads,
                     std::span<double> sq_grad, std::span<double> sq_update, double rho,
                     double epsilon);

class Adadelta {
 public:
  Adadelta(const Model &model, AdadeltaConfig config);

  // Updates every trainable parameter of `model` from its accumulated
  // gradient. Throws NumericalError, before touching any weight, when a
  // gradient holds NaN or infinity.
  void step(Model &model);

  const AdadeltaConfig &config() const { return config_; }
  const std::vector<double> &sq_grad(size_t param) const { return sq_grad_[param]; }
  const std::vector<double> &sq_update(size_t param) const { return sq_update_[param]; }

 private:
  AdadeltaConfig config_;
  std::vector<std::vector<double>> sq_grad_;
  std::vector<std::vector<double>> sq_update_;
};

struct TrainConfig {
  int epochs = 25;
  int batch_size = 200;
  AdadeltaConfig optimizer;
  double validation_fraction = 0.1;
  uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;     // mean NLL per document (per segment for Seg-CNN)
  double val_loss = 0.0;       // same, on the held-out split
  double val_accuracy = 0.0;   // NaN-free: falls back to training accuracy
  nlohmann::json to_json() const;
};

struct TrainResult {
  std::vector<EpochMetrics> metrics;
  // Highest validation accuracy; ties go to the lower validation loss.
  int best_epoch = 0;
  std::optional<Model> best;  // parameters at best_epoch
};

// Deep copy of a model's parameters.
Model clone_model(const Model &model);

struct HeldOutScore {
  double accuracy = 0.0;
  double loss = 0.0;  // mean NLL
};

// Document-level accuracy and NLL (segment-level for Seg-CNN).
HeldOutScore score_documents(const Model &model, const std::vector<Document> &docs);
double accuracy(const Model &model, const std::vector<Document> &docs);

// Trains `model` in place; it holds the final-epoch parameters afterwards.
// docs must already be indexed against model.vocab().
TrainResult train(Model &model, const std::vector<Document> &docs, const TrainConfig &config,
                  const std::function<void(const EpochMetrics &)> &on_epoch = {});

struct OverfitReport {
  bool success = false;
  int steps = 0;
  double accuracy = 0.0;
};

// Full-batch training without dropout until every training document is
// classified correctly or max_steps is reached.
OverfitReport overfit_sanity(Model &model, const std::vector<Document> &docs, int max_steps = 200,
                             AdadeltaConfig optimizer = {});

}  // namespace milnet

#endif  // MILNET_TRAINING_H_
