#include <cmath>

#include "doctest.h"
#include "milnet/error.h"
#include "milnet/gradcheck.h"
#include "milnet/polarity.h"

namespace milnet {
namespace {

Document doc_of(const std::vector<std::string> &texts) {
  Document d;
  d.id = "doc";
  for (const std::string &s : texts) {
    Segment seg;
    seg.text = s;
    seg.words = tokenize(s);
    d.segments.push_back(seg);
  }
  return d;
}

std::vector<SegmentVerdict> verdicts_of(const std::vector<double> &scores) {
  std::vector<SegmentVerdict> v(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    v[i].index = static_cast<int>(i);
    v[i].polarity = scores[i];
    v[i].attention = 0.5;
    v[i].gated = scores[i] * 0.5;
  }
  return v;
}

TEST_SUITE("polarity") {
  TEST_CASE("class weights") {
    CHECK(class_weights(5) == std::vector<double>{-1, -0.5, 0, 0.5, 1});
    CHECK(class_weights(2) == std::vector<double>{-1, 1});
    CHECK(class_weights(3) == std::vector<double>{-1, 0, 1});
    for (int c = 2; c <= 10; ++c) {
      std::vector<double> w = class_weights(c);
      for (int i = 1; i < c; ++i) CHECK(w[i] - w[i - 1] == doctest::Approx(2.0 / (c - 1)));
    }
    CHECK_THROWS_AS(class_weights(1), ValidationError);
  }

  TEST_CASE("polarity score") {
    std::vector<double> w = class_weights(5);
    CHECK(polarity(std::vector<double>(5, 0.2), w) == doctest::Approx(0.0));
    CHECK(polarity(std::vector<double>{0, 0, 0, 0, 1}, w) == 1.0);
    CHECK(polarity(std::vector<double>{0.0, 0.1, 0.2, 0.3, 0.4}, w) == doctest::Approx(0.5));
    CHECK_THROWS_AS(polarity(std::vector<double>{0.5, 0.5}, w), ShapeError);
  }

  TEST_CASE("polarity is affine in the distribution") {
    Rng rng(3);
    std::vector<double> w = class_weights(4);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> p(4), q(4), mix(4);
      double sp = 0, sq = 0;
      for (int c = 0; c < 4; ++c) sp += p[c] = rng.uniform(0, 1), sq += q[c] = rng.uniform(0, 1);
      const double alpha = rng.uniform(0, 1);
      for (int c = 0; c < 4; ++c) {
        p[c] /= sp;
        q[c] /= sq;
        mix[c] = alpha * p[c] + (1 - alpha) * q[c];
      }
      CHECK(std::abs(polarity(mix, w) - (alpha * polarity(p, w) + (1 - alpha) * polarity(q, w))) < 1e-12);
      CHECK(std::abs(polarity(p, w)) <= 1.0);
    }
  }

  TEST_CASE("spread mass moves polarity toward zero") {
    std::vector<double> w = class_weights(5);
    const double peaked = polarity(std::vector<double>{0.8, 0.1, 0.05, 0.03, 0.02}, w);
    const double spread = polarity(std::vector<double>{0.4, 0.3, 0.15, 0.1, 0.05}, w);
    CHECK(peaked < spread);
    CHECK(spread < 0.0);
  }

  TEST_CASE("gated polarity") {
    CHECK(gated_polarity(0.0, 0.7) == 0.0);
    CHECK(gated_polarity(1.0, -0.4) == -0.4);
    CHECK(gated_polarity(0.3, -0.5) == doctest::Approx(-0.15));
  }

  TEST_CASE("document broadcast") {
    std::vector<double> w = class_weights(3), p = {0.2, 0.3, 0.5};
    std::vector<double> plain = document_polarity_broadcast(p, std::vector<double>{0.1, 0.6, 0.3}, w, false);
    CHECK(plain == std::vector<double>(3, polarity(p, w)));
    std::vector<double> halves = document_polarity_broadcast(p, std::vector<double>{0.5, 0.5}, w, true);
    CHECK(halves[0] == halves[1]);
    CHECK(halves[0] == doctest::Approx(0.5 * polarity(p, w)));
    std::vector<double> gated = document_polarity_broadcast(p, std::vector<double>{0.2, 0.8}, w, true);
    CHECK(gated[0] != gated[1]);
  }

  TEST_CASE("discretize") {
    Thresholds t{-0.2, 0.3};
    CHECK(discretize(-0.2, t) == Polarity::kNeutral);
    CHECK(discretize(0.3, t) == Polarity::kNeutral);
    CHECK(discretize(-0.21, t) == Polarity::kNegative);
    CHECK(discretize(0.31, t) == Polarity::kPositive);
    Polarity last = Polarity::kNegative;
    for (double s = -1.0; s <= 1.0; s += 0.01) {
      Polarity p = discretize(s, t);
      CHECK(static_cast<int>(p) >= static_cast<int>(last));
      last = p;
    }
  }

  TEST_CASE("source names") {
    CHECK(parse_source("segment") == PolaritySource::kSegment);
    CHECK(std::string(source_name(PolaritySource::kDocument)) == "document");
    CHECK_THROWS_AS(parse_source("sentence"), ValidationError);
  }

  TEST_CASE("segment verdicts from model outputs") {
    Vocabulary vocab = toy_vocabulary();
    std::vector<Document> docs = toy_documents(vocab, 3, 2);
    std::vector<double> w = class_weights(3);

    Model mil(toy_config(ModelKind::kMilNet, AttentionMode::kAttention, 2), vocab);
    for (const Document &d : docs) {
      DocumentOutput o = mil.forward_document(d);
      std::vector<SegmentVerdict> seg = segment_verdicts(mil.config(), o, PolaritySource::kSegment);
      REQUIRE(seg.size() == d.segments.size());
      double sum = 0.0;
      for (const SegmentVerdict &v : seg) {
        CHECK(v.gated == v.attention * v.polarity);
        CHECK(std::abs(v.gated) <= std::abs(v.polarity));
        CHECK(v.polarity == polarity(o.segment_probs[v.index], w));
        sum += v.gated;
      }
      CHECK(std::abs(polarity(o.doc_probs, w) - sum) < 1e-10);

      std::vector<SegmentVerdict> doc = segment_verdicts(mil.config(), o, PolaritySource::kDocument);
      for (const SegmentVerdict &v : doc) CHECK(v.polarity == doc[0].polarity);
    }

    Model hier(toy_config(ModelKind::kHierNet, AttentionMode::kAttention, 2), vocab);
    DocumentOutput ho = hier.forward_document(docs[0]);
    CHECK_THROWS_AS(segment_verdicts(hier.config(), ho, PolaritySource::kSegment), ValidationError);
    std::vector<SegmentVerdict> hv = segment_verdicts(hier.config(), ho, PolaritySource::kDocument);
    for (const SegmentVerdict &v : hv) {
      CHECK(v.polarity == hv[0].polarity);
      CHECK(v.source == PolaritySource::kDocument);
    }

    Model seg(toy_config(ModelKind::kSegCnn, AttentionMode::kAttention, 2), vocab);
    DocumentOutput so = seg.forward_document(docs[0]);
    CHECK_THROWS_AS(segment_verdicts(seg.config(), so, PolaritySource::kDocument), ValidationError);
    for (const SegmentVerdict &v : segment_verdicts(seg.config(), so, PolaritySource::kSegment)) {
      CHECK(v.attention == 1.0);
      CHECK(v.gated == v.polarity);
    }
  }

  TEST_CASE("summary keeps everything at rate one") {
    Document d = doc_of({"good food here", "bad service", "fine", "meh place"});
    OpinionSummary s = extract_summary(d, verdicts_of({0.5, -0.7, 0.1, -0.2}), 1.0, false);
    REQUIRE(s.snippets.size() == 4);
    CHECK(s.snippets[0].index == 0);
    CHECK(s.snippets[1].index == 2);
    CHECK(s.snippets[2].index == 1);
    CHECK(s.snippets[3].index == 3);
    CHECK(s.snippets[0].sign() == '+');
    CHECK(s.snippets[2].sign() == '-');
    CHECK(s.budget == 8);
    CHECK(s.word_count() == 8);
  }

  TEST_CASE("summary budget") {
    Document one = doc_of({"a b c d e f g h i j"});
    OpinionSummary empty = extract_summary(one, verdicts_of({0.9}), 0.3, false);
    CHECK(empty.snippets.empty());
    CHECK(empty.budget == 3);

    Document d = doc_of({"a b c d e", "f g h i j", "k l m n o"});
    OpinionSummary s = extract_summary(d, verdicts_of({0.9, -0.8, 0.1}), 10.0 / 15.0, false);
    REQUIRE(s.snippets.size() == 2);
    CHECK(s.snippets[0].index == 0);
    CHECK(s.snippets[1].index == 1);
    CHECK(s.word_count() <= s.budget);

    OpinionSummary gated = extract_summary(d, verdicts_of({0.9, -0.8, 0.1}), 1.0, true);
    CHECK(gated.snippets[0].score == doctest::Approx(0.45));

    OpinionSummary skip = extract_summary(doc_of({"a b c d", "e f g h i j", "k"}), verdicts_of({0.1, 0.9, 0.05}),
                                          5.0 / 11.0, false);
    REQUIRE(skip.snippets.size() == 2);
    CHECK(skip.snippets[0].index == 0);
    CHECK(skip.snippets[1].index == 2);

    OpinionSummary ties = extract_summary(doc_of({"a", "b", "c"}), verdicts_of({0.5, 0.5, -0.5}), 0.5, false);
    REQUIRE(ties.snippets.size() == 2);
    CHECK(ties.snippets[0].index == 0);
    CHECK(ties.snippets[1].index == 1);
  }

  TEST_CASE("summary budget is never exceeded") {
    std::vector<Document> docs = generate_synthetic(30, 5, 9);
    Rng rng(1);
    for (const Document &d : docs) {
      std::vector<double> scores;
      for (size_t i = 0; i < d.segments.size(); ++i) scores.push_back(rng.uniform(-1, 1));
      for (double rate : {0.1, 0.3, 0.7}) {
        OpinionSummary s = extract_summary(d, verdicts_of(scores), rate, false);
        CHECK(s.word_count() <= s.budget);
        CHECK(s.budget == static_cast<int>(std::ceil(rate * d.word_count() - 1e-9)));
        OpinionSummary again = extract_summary(d, verdicts_of(scores), rate, false);
        CHECK(again.to_json(d.id) == s.to_json(d.id));
      }
    }
  }

  TEST_CASE("summary argument errors") {
    Document d = doc_of({"a", "b"});
    CHECK_THROWS_AS(extract_summary(d, verdicts_of({0.1, 0.2}), 0.0, false), ValidationError);
    CHECK_THROWS_AS(extract_summary(d, verdicts_of({0.1, 0.2}), 1.5, false), ValidationError);
    CHECK_THROWS_AS(extract_summary(d, verdicts_of({0.1}), 0.5, false), ShapeError);
  }

  TEST_CASE("summary json") {
    Document d = doc_of({"great food", "rude staff"});
    nlohmann::json j = extract_summary(d, verdicts_of({0.8, -0.6}), 1.0, false).to_json("r1");
    CHECK(j["id"] == "r1");
    REQUIRE(j["snippets"].size() == 2);
    CHECK(j["snippets"][0]["text"] == "great food");
    CHECK(j["snippets"][0]["sign"] == "+");
    CHECK(j["snippets"][1]["sign"] == "-");
    CHECK(j["snippets"][1]["polarity"] == -0.6);
    CHECK(j["snippets"][1].contains("attention"));
  }
}

}  // namespace
}  // namespace milnet
