#ifndef MILNET_CLI_H_
#define MILNET_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace milnet {

inline constexpr const char *kToolVersion = "0.1.0";

// Hex SHA-256 of a file's bytes.
std::string file_sha256(const std::string &path);

// Everything needed to reproduce an artifact: the command, its resolved
// settings, the seed, input hashes and output path. Contains no timestamps so
// identical runs yield identical manifests.
struct RunManifest {
  std::string command;
  uint64_t seed = 1;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json inputs = nlohmann::json::object();  // path -> sha256
  std::string output;

  void add_input(const std::string &path);
  nlohmann::json to_json() const;
};

// Entry point behind the executable. args excludes the program name.
// Returns 0 on success, 1 for invalid input or flags, 2 for runtime failure.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace milnet

#endif  // MILNET_CLI_H_
