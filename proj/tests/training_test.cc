#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "milnet/checkpoint.h"
#include "milnet/error.h"
#include "milnet/gradcheck.h"
#include "milnet/training.h"

namespace milnet {
namespace {

namespace fs = std::filesystem;

struct Corpus {
  std::vector<Document> docs;
  Vocabulary vocab;
};

Corpus synthetic(int n, int classes, uint64_t seed) {
  Corpus c;
  c.docs = generate_synthetic(n, classes, seed);
  c.vocab = Vocabulary::build(c.docs, 1);
  c.vocab.index(c.docs);
  return c;
}

ModelConfig small_config(ModelKind kind, int classes) {
  ModelConfig c = toy_config(kind, AttentionMode::kAttention, 3);
  c.num_classes = classes;
  c.embedding_dim = 12;
  c.feature_maps = 6;
  return c;
}

std::string read_bytes(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST_SUITE("training") {
  TEST_CASE("adadelta first step") {
    std::vector<double> w = {0.0}, g = {1.0}, sg = {0.0}, su = {0.0};
    adadelta_update(w, g, sg, su, 0.95, 1e-6);
    const double delta = -std::sqrt(1e-6) / std::sqrt(0.05 + 1e-6);
    CHECK(w[0] == doctest::Approx(delta).epsilon(1e-14));
    CHECK(sg[0] == doctest::Approx(0.05));
    CHECK(su[0] == doctest::Approx(0.05 * delta * delta));
  }

  TEST_CASE("adadelta zero gradient decays the accumulators") {
    std::vector<double> w = {0.7}, g = {0.0}, sg = {0.4}, su = {0.2};
    adadelta_update(w, g, sg, su, 0.95, 1e-6);
    CHECK(w[0] == 0.7);
    CHECK(sg[0] == doctest::Approx(0.95 * 0.4));
    CHECK(su[0] == doctest::Approx(0.95 * 0.2));
  }

  TEST_CASE("adadelta identical inputs and sign") {
    std::vector<double> w = {1.0, 1.0}, g = {0.3, 0.3}, sg = {0.1, 0.1}, su = {0.01, 0.01};
    adadelta_update(w, g, sg, su, 0.9, 1e-4);
    CHECK(w[0] == w[1]);
    Rng rng(2);
    for (double rho : {0.0, 0.5, 0.95}) {
      for (double eps : {1e-8, 1e-6, 1.0, 1e3}) {
        for (int i = 0; i < 20; ++i) {
          std::vector<double> x = {0.0}, gr = {rng.uniform(-2, 2)}, a = {rng.uniform(0, 1)}, b = {rng.uniform(0, 1)};
          adadelta_update(x, gr, a, b, rho, eps);
          CHECK((x[0] < 0) == (gr[0] > 0));
          CHECK(a[0] >= 0.0);
          CHECK(b[0] >= 0.0);
        }
      }
    }
  }

  TEST_CASE("optimizer applies decay and rejects non-finite gradients") {
    Corpus c = synthetic(4, 3, 1);
    Model m(small_config(ModelKind::kMilNet, 3), c.vocab);
    Adadelta opt(m, {});
    m.zero_grad();
    Tensor w;
    Tensor b;
    for (const NamedTensor &p : m.parameters()) {
      if (p.name == "cls.w") w = p.tensor;
      if (p.name == "cls.b") b = p.tensor;
    }
    const double w0 = w.at(0), b0 = b.at(0);
    w.grad();
    b.grad();
    opt.step(m);
    CHECK(b.at(0) == b0);
    CHECK(w.at(0) != w0);
    CHECK((w.at(0) - w0 < 0) == (w0 > 0));

    const double before = w.at(1);
    w.grad()[3] = std::numeric_limits<double>::quiet_NaN();
    try {
      opt.step(m);
      FAIL("expected a numerical error");
    } catch (const NumericalError &e) {
      CHECK(std::string(e.what()).find("cls.w") != std::string::npos);
    }
    CHECK(w.at(1) == before);
  }

  TEST_CASE("config validation") {
    TrainConfig tc;
    tc.validate();
    tc.epochs = 0;
    CHECK_THROWS_AS(tc.validate(), ValidationError);
    tc = {};
    tc.batch_size = 0;
    CHECK_THROWS_AS(tc.validate(), ValidationError);
    tc = {};
    tc.optimizer.rho = 1.0;
    CHECK_THROWS_AS(tc.validate(), ValidationError);

    Corpus c = synthetic(4, 3, 1);
    Model m(small_config(ModelKind::kMilNet, 3), c.vocab);
    TrainConfig zero;
    zero.epochs = 0;
    CHECK_THROWS_AS(train(m, c.docs, zero), ValidationError);
    CHECK_THROWS_AS(train(m, {}, TrainConfig{}), ValidationError);

    Corpus unlabelled = c;
    for (Document &d : unlabelled.docs) {
      for (Segment &s : d.segments) s.gold.reset();
    }
    Model seg(small_config(ModelKind::kSegCnn, 3), c.vocab);
    CHECK_THROWS_AS(train(seg, unlabelled.docs, TrainConfig{}), ValidationError);
  }

  TEST_CASE("training loss decreases") {
    Corpus c = synthetic(50, 3, 4);
    for (ModelKind kind : {ModelKind::kMilNet, ModelKind::kHierNet, ModelKind::kSegCnn}) {
      Model m(small_config(kind, 3), c.vocab);
      TrainConfig tc;
      tc.epochs = 3;
      tc.batch_size = 10;
      int calls = 0;
      TrainResult r = train(m, c.docs, tc, [&](const EpochMetrics &) { ++calls; });
      INFO(model_kind_name(kind));
      CHECK(calls == 3);
      REQUIRE(r.metrics.size() == 3);
      CHECK(r.metrics.back().train_loss < r.metrics.front().train_loss);
      int rises = 0;
      for (size_t e = 1; e < r.metrics.size(); ++e) rises += r.metrics[e].train_loss >= r.metrics[e - 1].train_loss;
      CHECK(rises <= 1);
      CHECK(r.best.has_value());
      CHECK(r.best_epoch >= 1);
      CHECK(r.best_epoch <= 3);
      double best = 0.0;
      for (const EpochMetrics &e : r.metrics) best = std::max(best, e.val_accuracy);
      CHECK(r.metrics[r.best_epoch - 1].val_accuracy == best);
      for (const EpochMetrics &e : r.metrics) {
        if (e.val_accuracy == best) CHECK(r.metrics[r.best_epoch - 1].val_loss <= e.val_loss);
      }
    }
  }

  TEST_CASE("same seed gives bitwise identical checkpoints") {
    Corpus c = synthetic(30, 3, 6);
    const std::string a = (fs::temp_directory_path() / "milnet_train_a.bin").string();
    const std::string b = (fs::temp_directory_path() / "milnet_train_b.bin").string();
    std::vector<double> losses[2];
    for (int run = 0; run < 2; ++run) {
      Model m(small_config(ModelKind::kMilNet, 3), c.vocab);
      TrainConfig tc;
      tc.epochs = 2;
      tc.batch_size = 8;
      tc.seed = 11;
      TrainResult r = train(m, c.docs, tc);
      for (const EpochMetrics &e : r.metrics) losses[run].push_back(e.train_loss);
      save_checkpoint(*r.best, run == 0 ? a : b);
    }
    CHECK(losses[0] == losses[1]);
    CHECK(read_bytes(a) == read_bytes(b));
  }

  TEST_CASE("clone is deep") {
    Corpus c = synthetic(3, 3, 1);
    Model m(small_config(ModelKind::kHierNet, 3), c.vocab);
    Model copy = clone_model(m);
    Tensor w = m.parameters().back().tensor;
    const double before = copy.parameters().back().tensor.at(0);
    w.data()[0] += 1.0;
    CHECK(copy.parameters().back().tensor.at(0) == before);
  }

  TEST_CASE("overfit sanity") {
    std::vector<Document> docs = generate_synthetic(40, 2, 8);
    std::vector<Document> tiny;
    for (int label : {1, 2}) {
      for (const Document &d : docs) {
        if (d.label == label && tiny.size() < (label == 1 ? 2u : 4u)) tiny.push_back(d);
      }
    }
    REQUIRE(tiny.size() == 4);
    Vocabulary vocab = Vocabulary::build(tiny, 1);
    vocab.index(tiny);
    Model m(small_config(ModelKind::kMilNet, 2), vocab);
    OverfitReport r = overfit_sanity(m, tiny, 200);
    CHECK(r.success);
    CHECK(r.accuracy == 1.0);
    CHECK(r.steps <= 200);

    Model one(small_config(ModelKind::kHierNet, 2), vocab);
    CHECK(overfit_sanity(one, {tiny[0]}, 200).success);

    std::vector<Document> clash = {tiny[0], tiny[0]};
    clash[1].label = clash[0].label == 1 ? 2 : 1;
    Model bad(small_config(ModelKind::kMilNet, 2), vocab);
    OverfitReport rc = overfit_sanity(bad, clash, 50);
    CHECK_FALSE(rc.success);
    CHECK(rc.accuracy <= 0.5);

    std::vector<Document> many(9, tiny[0]);
    CHECK_THROWS_AS(overfit_sanity(bad, many), ValidationError);
  }

  TEST_CASE("accuracy") {
    Corpus c = synthetic(20, 3, 2);
    Model m(small_config(ModelKind::kMilNet, 3), c.vocab);
    std::vector<DocumentOutput> out = m.predict(c.docs);
    int right = 0;
    for (size_t d = 0; d < c.docs.size(); ++d) {
      const auto &p = out[d].doc_probs;
      right += std::max_element(p.begin(), p.end()) - p.begin() + 1 == c.docs[d].label;
    }
    CHECK(accuracy(m, c.docs) == doctest::Approx(right / 20.0));
  }
}

}  // namespace
}  // namespace milnet
