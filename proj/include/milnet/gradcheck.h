#ifndef MILNET_GRADCHECK_H_
#define MILNET_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "milnet/models.h"

namespace milnet {

struct GradCheckOptions {
  double step = 1e-5;
  double abs_floor = 1e-7;  // differences below this count as agreement
  // Relative gap between one-sided slopes that marks a non-smooth point.
  double kink_tolerance = 1e-3;
};

struct ParamGradCheck {
  std::string model;
  std::string param;
  int elements = 0;
  int skipped = 0;  // elements sitting on a kink
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
};

// |a - n| / max(|a|, |n|), or 0 when |a - n| is below the floor.
double gradient_error(double analytic, double numeric, double abs_floor);

// Central differences of loss() with respect to every element of every
// parameter, against one reverse sweep of the same loss.
std::vector<ParamGradCheck> check_parameters(
    const std::vector<NamedTensor> &params, const std::function<Tensor(Tape &)> &loss,
    const GradCheckOptions &opts = {});

// Model loss on one batch, evaluated without dropout.
std::vector<ParamGradCheck> check_model(Model &model, const Batch &batch,
                                        const GradCheckOptions &opts = {});

// Toy configuration: k=8, windows {2,3}, 4 maps, GRU hidden 5, C=3.
ModelConfig toy_config(ModelKind kind, AttentionMode attention, uint64_t seed);

// Two indexed documents of 1 to 4 segments each, with segment labels, some
// shorter than the widest window.
std::vector<Document> toy_documents(const Vocabulary &vocab, int num_classes, uint64_t seed);
Vocabulary toy_vocabulary();

// MilNet, HierNet and Seg-CNN at toy dims.
std::vector<ParamGradCheck> gradcheck_suite(uint64_t seed, const GradCheckOptions &opts = {});

}  // namespace milnet

#endif  // MILNET_GRADCHECK_H_
