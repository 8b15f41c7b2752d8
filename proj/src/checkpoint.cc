#include "milnet/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "milnet/error.h"

namespace milnet {

using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr const char *kMagic = "MILNET-CHECKPOINT";

}  // namespace

void save_checkpoint(const Model &model, const std::string &path, const json &manifest) {
  json header;
  header["config"] = model.config().to_json();
  header["vocab"] = model.vocab().tokens();
  json params = json::array();
  for (const NamedTensor &p : model.parameters()) {
    params.push_back({{"name", p.name}, {"shape", p.tensor.shape()}});
  }
  header["params"] = std::move(params);
  header["manifest"] = manifest;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write checkpoint " + path);
  out << kMagic << ' ' << kCheckpointVersion << '\n' << header.dump() << '\n';
  for (const NamedTensor &p : model.parameters()) {
    auto d = p.tensor.data();
    out.write(reinterpret_cast<const char *>(d.data()),
              static_cast<std::streamsize>(d.size() * sizeof(double)));
  }
  if (!out) throw Error("failed writing checkpoint " + path);
}

LoadedCheckpoint load_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path);
  std::string line;
  std::getline(in, line);
  std::istringstream magic(line);
  std::string word;
  int version = 0;
  if (!(magic >> word >> version) || word != kMagic) {
    throw FormatError(path + " is not a checkpoint");
  }
  if (version != kCheckpointVersion) {
    throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  std::getline(in, line);
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception &e) {
    throw FormatError(path + ": bad header: " + e.what());
  }
  ModelConfig config = ModelConfig::from_json(header.at("config"));
  Vocabulary vocab = Vocabulary::from_tokens(header.at("vocab").get<std::vector<std::string>>());
  Model model(config, vocab);

  const json &params = header.at("params");
  const auto &expected = model.parameters();
  if (params.size() != expected.size()) {
    throw FormatError(path + ": " + std::to_string(params.size()) + " tensors stored, config needs " +
                      std::to_string(expected.size()));
  }
  for (size_t i = 0; i < expected.size(); ++i) {
    const std::string name = params[i].at("name").get<std::string>();
    const Shape shape = params[i].at("shape").get<Shape>();
    if (name != expected[i].name || shape != expected[i].tensor.shape()) {
      throw FormatError(path + ": tensor " + name + " " + shape_string(shape) +
                        " does not match " + expected[i].name + " " +
                        shape_string(expected[i].tensor.shape()));
    }
  }
  for (const NamedTensor &p : expected) {
    Tensor t = p.tensor;
    auto d = t.data();
    in.read(reinterpret_cast<char *>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
    if (!in) throw FormatError(path + ": truncated while reading " + p.name);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(path + ": trailing bytes after the last tensor");
  }
  return {std::move(model), header.value("manifest", json::object())};
}

}  // namespace milnet
