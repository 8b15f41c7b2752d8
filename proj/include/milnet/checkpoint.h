#ifndef MILNET_CHECKPOINT_H_
#define MILNET_CHECKPOINT_H_

#include <string>

#include "json.hpp"
#include "milnet/models.h"

namespace milnet {

// Layout:
//   line 1: "MILNET-CHECKPOINT <version>"
//   line 2: JSON header {config, vocab, params: [{name, shape}], manifest}
//   rest:   float64 little-endian parameter values in header order
inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const Model &model, const std::string &path,
                     const nlohmann::json &manifest = nlohmann::json::object());

struct LoadedCheckpoint {
  Model model;
  nlohmann::json manifest;
};

// Throws FormatError on a bad magic line, version, or any parameter whose name
// or shape disagrees with the model rebuilt from the stored config.
LoadedCheckpoint load_checkpoint(const std::string &path);

}  // namespace milnet

#endif  // MILNET_CHECKPOINT_H_
