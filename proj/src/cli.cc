#include "milnet/cli.h"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "milnet/checkpoint.h"
#include "milnet/error.h"
#include "milnet/eval.h"
#include "milnet/gradcheck.h"
#include "milnet/kernels.h"
#include "milnet/polarity.h"
#include "milnet/training.h"

namespace milnet {

using json = nlohmann::json;

std::string file_sha256(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    EVP_DigestUpdate(ctx.get(), buf, static_cast<size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return os.str();
}

void RunManifest::add_input(const std::string &path) { inputs[path] = file_sha256(path); }

json RunManifest::to_json() const {
  return {{"tool", "milnet"},   {"version", kToolVersion}, {"command", command},
          {"seed", seed},       {"config", config},        {"inputs", inputs},
          {"output", output}};
}

namespace {

bool parse_switch(const std::string &v, const char *flag) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw ValidationError(std::string(flag) + " must be on or off, got '" + v + "'");
}

void write_text(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
  if (!out) throw Error("failed writing " + path);
}

// Output file when a path is given, the command's stdout otherwise.
class Sink {
 public:
  Sink(const std::string &path, std::ostream &fallback) : stream_(&fallback) {
    if (path.empty()) return;
    file_.open(path, std::ios::binary);
    if (!file_) throw ValidationError("cannot write " + path);
    stream_ = &file_;
  }
  std::ostream &operator*() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream *stream_;
};

struct Globals {
  uint64_t seed = 1;
  int threads = 0;
};

struct TrainArgs {
  std::string corpus, embeddings, out, final_out, metrics, manifest;
  std::string model = "milnet", attention = "on";
  int classes = 5, min_count = 2;
  bool freeze_embeddings = false;
  ModelConfig config;
  TrainConfig train;
};

int cmd_train(TrainArgs &a, const Globals &g, std::ostream &out, std::ostream &err) {
  ModelConfig cfg = a.config;
  cfg.kind = parse_model_kind(a.model);
  if (a.attention != "on" && a.attention != "avg") {
    throw ValidationError("--attention must be on or avg, got '" + a.attention + "'");
  }
  cfg.attention = a.attention == "on" ? AttentionMode::kAttention : AttentionMode::kAverage;
  cfg.num_classes = a.classes;
  cfg.train_embeddings = !a.freeze_embeddings;
  cfg.seed = g.seed;
  cfg.validate();
  TrainConfig tc = a.train;
  tc.seed = g.seed;
  tc.validate();
  if (a.min_count < 1) throw ValidationError("--min-count must be at least 1");

  RunManifest manifest;
  manifest.command = "train";
  manifest.seed = g.seed;
  manifest.output = a.out;
  std::vector<Document> docs = load_corpus(a.corpus, cfg.num_classes);
  manifest.add_input(a.corpus);
  Vocabulary vocab = Vocabulary::build(docs, a.min_count);
  vocab.index(docs);
  err << "loaded " << docs.size() << " documents, vocabulary " << vocab.size() << "\n";

  std::optional<Model> model;
  if (!a.embeddings.empty()) {
    Rng rng(g.seed);
    EmbeddingTable table = load_embeddings(a.embeddings, vocab, cfg.embedding_dim, rng);
    manifest.add_input(a.embeddings);
    model.emplace(cfg, vocab, table);
  } else {
    model.emplace(cfg, vocab);
  }
  manifest.config = {{"model", cfg.to_json()},
                     {"train", tc.to_json()},
                     {"min_count", a.min_count},
                     {"embeddings", a.embeddings}};
  err << model_kind_name(cfg.kind) << ": " << model->parameter_count() << " parameters\n";

  Sink metrics(a.metrics, out);
  TrainResult result = train(*model, docs, tc, [&](const EpochMetrics &m) {
    *metrics << m.to_json().dump() << "\n";
    err << "epoch " << m.epoch << " loss " << m.train_loss << " val acc " << m.val_accuracy << "\n";
  });
  (*metrics).flush();

  json mj = manifest.to_json();
  mj["best_epoch"] = result.best_epoch;
  save_checkpoint(*result.best, a.out, mj);
  if (!a.final_out.empty()) {
    mj["output"] = a.final_out;
    mj["best_epoch"] = nullptr;
    save_checkpoint(*model, a.final_out, mj);
  }
  if (!a.manifest.empty()) {
    mj["output"] = a.out;
    mj["best_epoch"] = result.best_epoch;
    write_text(a.manifest, mj.dump(2) + "\n");
  }
  err << "best epoch " << result.best_epoch << ", checkpoint " << a.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string ckpt, corpus, report, manifest;
  std::string source = "segment", gated = "on";
  int folds = 10;
  double grid = 0.05;
};

int cmd_eval(const EvalArgs &a, const Globals &g, std::ostream &out, std::ostream &err) {
  const PolaritySource source = parse_source(a.source);
  const bool gated = parse_switch(a.gated, "--gated");
  LoadedCheckpoint ck = load_checkpoint(a.ckpt);
  std::vector<Document> docs = load_corpus(a.corpus, ck.model.config().num_classes);
  ck.model.vocab().index(docs);

  RunManifest manifest;
  manifest.command = "eval";
  manifest.seed = g.seed;
  manifest.output = a.report;
  manifest.add_input(a.ckpt);
  manifest.add_input(a.corpus);
  manifest.config = {{"source", a.source}, {"gated", gated}, {"folds", a.folds}, {"grid", a.grid}};

  EvalReport report = evaluate_variant(ck.model, docs, source, gated, a.folds, a.grid, g.seed);
  json j = report.to_json();
  j["manifest"] = manifest.to_json();
  Sink sink(a.report, out);
  *sink << j.dump(2) << "\n";
  if (!a.manifest.empty()) write_text(a.manifest, manifest.to_json().dump(2) + "\n");
  err << "mean macro-F1 " << report.search.mean_macro_f1 << " over " << a.folds << " folds\n";
  return 0;
}

struct ExtractArgs {
  std::string ckpt, corpus, out, manifest;
  std::string source = "segment", gated = "on";
  double rate = 0.3;
};

int cmd_extract(const ExtractArgs &a, const Globals &g, std::ostream &out, std::ostream &err) {
  const PolaritySource source = parse_source(a.source);
  const bool gated = parse_switch(a.gated, "--gated");
  if (!(a.rate > 0.0 && a.rate <= 1.0)) throw ValidationError("--rate must be in (0, 1]");
  LoadedCheckpoint ck = load_checkpoint(a.ckpt);
  if (gated && ck.model.config().kind == ModelKind::kSegCnn) {
    throw ValidationError("segcnn has no attention weights; use --gated off");
  }
  std::vector<Document> docs = load_corpus(a.corpus, ck.model.config().num_classes);
  ck.model.vocab().index(docs);
  std::vector<DocumentOutput> outputs = ck.model.predict(docs);
  Sink sink(a.out, out);
  for (size_t d = 0; d < docs.size(); ++d) {
    std::vector<SegmentVerdict> v = segment_verdicts(ck.model.config(), outputs[d], source);
    *sink << extract_summary(docs[d], v, a.rate, gated).to_json(docs[d].id).dump() << "\n";
  }
  if (!a.manifest.empty()) {
    RunManifest manifest;
    manifest.command = "extract";
    manifest.seed = g.seed;
    manifest.output = a.out;
    manifest.add_input(a.ckpt);
    manifest.add_input(a.corpus);
    manifest.config = {{"source", a.source}, {"gated", gated}, {"rate", a.rate}};
    write_text(a.manifest, manifest.to_json().dump(2) + "\n");
  }
  err << "summarized " << docs.size() << " documents\n";
  return 0;
}

int cmd_gradcheck(const Globals &g, std::ostream &out, std::ostream &err) {
  const double tolerance = 1e-4;
  double worst = 0.0;
  int skipped = 0, elements = 0;
  for (const ParamGradCheck &r : gradcheck_suite(g.seed)) {
    out << json{{"model", r.model},
                {"param", r.param},
                {"elements", r.elements},
                {"skipped", r.skipped},
                {"max_abs_error", r.max_abs_error},
                {"max_rel_error", r.max_rel_error}}
               .dump()
        << "\n";
    worst = std::max(worst, r.max_rel_error);
    skipped += r.skipped;
    elements += r.elements;
  }
  out << json{{"max_rel_error", worst},
              {"tolerance", tolerance},
              {"elements", elements},
              {"skipped", skipped},
              {"pass", worst < tolerance}}
             .dump()
      << "\n";
  err << "max relative error " << worst << " (" << skipped << " of " << elements
      << " elements on a kink)\n";
  if (worst >= tolerance) throw Error("gradient check failed");
  return 0;
}

struct SynthArgs {
  std::string out;
  int num_docs = 100, classes = 5;
  SyntheticOptions opts;
};

int cmd_synth(const SynthArgs &a, const Globals &g, std::ostream &err) {
  if (a.out.empty()) throw ValidationError("--out is required");
  if (a.num_docs < 1) throw ValidationError("--num-docs must be at least 1");
  save_corpus(a.out, generate_synthetic(a.num_docs, a.classes, g.seed, a.opts));
  err << "wrote " << a.num_docs << " documents to " << a.out << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Multiple-instance sentiment models: train, evaluate, extract summaries", "milnet"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--threads", g.threads, "OpenMP threads (0 = runtime default)");
  app.set_version_flag("--version", kToolVersion);

  TrainArgs ta;
  CLI::App *train_cmd = app.add_subcommand("train", "Train a model on a JSONL corpus");
  train_cmd->add_option("--corpus", ta.corpus, "Training corpus")->required();
  train_cmd->add_option("--out", ta.out, "Best-validation checkpoint")->required();
  train_cmd->add_option("--final-out", ta.final_out, "Final-epoch checkpoint");
  train_cmd->add_option("--metrics", ta.metrics, "Per-epoch JSONL metrics (default stdout)");
  train_cmd->add_option("--manifest", ta.manifest, "Write the run manifest here");
  train_cmd->add_option("--model", ta.model, "milnet, hiernet or segcnn")->capture_default_str();
  train_cmd->add_option("--attention", ta.attention, "on or avg")->capture_default_str();
  train_cmd->add_option("--classes", ta.classes, "Document classes")->capture_default_str();
  train_cmd->add_option("--epochs", ta.train.epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", ta.train.batch_size)->capture_default_str();
  train_cmd->add_option("--embeddings", ta.embeddings, "word2vec text file");
  train_cmd->add_flag("--freeze-embeddings", ta.freeze_embeddings);
  train_cmd->add_option("--min-count", ta.min_count)->capture_default_str();
  train_cmd->add_option("--emb-dim", ta.config.embedding_dim)->capture_default_str();
  train_cmd->add_option("--windows", ta.config.windows)->delimiter(',')->capture_default_str();
  train_cmd->add_option("--maps", ta.config.feature_maps, "Feature maps per window")
      ->capture_default_str();
  train_cmd->add_option("--gru-hidden", ta.config.gru_hidden)->capture_default_str();
  train_cmd->add_option("--att-dim", ta.config.attention_dim)->capture_default_str();
  train_cmd->add_option("--dropout", ta.config.dropout)->capture_default_str();
  train_cmd->add_option("--recurrent-dropout", ta.config.recurrent_dropout)->capture_default_str();
  train_cmd->add_option("--rho", ta.train.optimizer.rho)->capture_default_str();
  train_cmd->add_option("--epsilon", ta.train.optimizer.epsilon)->capture_default_str();
  train_cmd->add_option("--weight-decay", ta.train.optimizer.weight_decay)->capture_default_str();
  train_cmd->add_option("--val-fraction", ta.train.validation_fraction)->capture_default_str();

  EvalArgs ea;
  CLI::App *eval_cmd = app.add_subcommand("eval", "Segment-level polarity evaluation");
  eval_cmd->add_option("--ckpt", ea.ckpt)->required();
  eval_cmd->add_option("--corpus", ea.corpus, "Corpus with segment_labels")->required();
  eval_cmd->add_option("--source", ea.source, "segment or document")->capture_default_str();
  eval_cmd->add_option("--gated", ea.gated, "on or off")->capture_default_str();
  eval_cmd->add_option("--folds", ea.folds)->capture_default_str();
  eval_cmd->add_option("--grid", ea.grid, "Threshold grid step")->capture_default_str();
  eval_cmd->add_option("--report", ea.report, "JSON report (default stdout)");
  eval_cmd->add_option("--manifest", ea.manifest);

  ExtractArgs xa;
  CLI::App *extract_cmd = app.add_subcommand("extract", "Extract opinion summaries");
  extract_cmd->add_option("--ckpt", xa.ckpt)->required();
  extract_cmd->add_option("--corpus", xa.corpus)->required();
  extract_cmd->add_option("--rate", xa.rate, "Compression rate")->capture_default_str();
  extract_cmd->add_option("--gated", xa.gated, "on or off")->capture_default_str();
  extract_cmd->add_option("--source", xa.source, "segment or document")->capture_default_str();
  extract_cmd->add_option("--out", xa.out, "JSONL summaries (default stdout)");
  extract_cmd->add_option("--manifest", xa.manifest);

  app.add_subcommand("gradcheck", "Finite-difference check of every model's gradients");

  SynthArgs sa;
  CLI::App *synth_cmd = app.add_subcommand("synth", "Generate a synthetic labelled corpus");
  synth_cmd->add_option("--num-docs", sa.num_docs)->capture_default_str();
  synth_cmd->add_option("--classes", sa.classes)->capture_default_str();
  synth_cmd->add_option("--out", sa.out)->required();
  synth_cmd->add_option("--vocab-size", sa.opts.vocab_size)->capture_default_str();
  synth_cmd->add_option("--neutral-rate", sa.opts.neutral_rate)->capture_default_str();
  synth_cmd->add_option("--concentration", sa.opts.tendency_concentration)->capture_default_str();
  synth_cmd->add_option("--min-segments", sa.opts.min_segments)->capture_default_str();
  synth_cmd->add_option("--max-segments", sa.opts.max_segments)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion &) {
    out << kToolVersion << "\n";
    return 0;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return 1;
  }

  try {
    if (g.threads < 0) throw ValidationError("--threads must be non-negative");
    if (g.threads > 0) kernels::set_num_threads(g.threads);
    if (train_cmd->parsed()) return cmd_train(ta, g, out, err);
    if (eval_cmd->parsed()) return cmd_eval(ea, g, out, err);
    if (extract_cmd->parsed()) return cmd_extract(xa, g, out, err);
    if (synth_cmd->parsed()) return cmd_synth(sa, g, err);
    return cmd_gradcheck(g, out, err);
  } catch (const ValidationError &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    err << "failed: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace milnet
