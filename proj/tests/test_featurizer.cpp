#include <doctest.h>

#include "support.hpp"
#include "toxinspect/error.hpp"
#include "toxinspect/featurizer.hpp"

using namespace toxinspect;

namespace {

const std::vector<std::string> kThreeDocs{"bad bad word", "good word", "word"};

double weight_of(const FeatureVector& fv, const Vocabulary& vocab, std::string_view term) {
  const auto idx = vocab.index_of(term);
  REQUIRE(idx.has_value());
  for (const auto& [i, w] : fv.entries) {
    if (i == *idx) return w;
  }
  return 0.0;
}

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("You are AWFUL!") == std::vector<std::string>{"you", "are", "awful"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("جيد جدا") == std::vector<std::string>{"جيد", "جدا"});
  CHECK(tokenize("...!!! ,,") .empty());
  CHECK(tokenize("Straße GROSS") == std::vector<std::string>{"strasse", "gross"});
  CHECK(tokenize("well,done;ok") == std::vector<std::string>{"well", "done", "ok"});
}

TEST_CASE("build_vocabulary on the three-document corpus") {
  const Vocabulary v = build_vocabulary(kThreeDocs);
  REQUIRE(v.size() == 3);
  CHECK(v.term(0) == "bad");
  CHECK(v.term(1) == "good");
  CHECK(v.term(2) == "word");
  CHECK(v.n_docs() == 3);
  CHECK(v.doc_freq(*v.index_of("word")) == 3);
  CHECK(v.doc_freq(*v.index_of("bad")) == 1);

  const Vocabulary v2 = build_vocabulary(kThreeDocs, 2);
  REQUIRE(v2.size() == 1);
  CHECK(v2.term(0) == "word");

  CHECK_THROWS_AS(build_vocabulary(std::vector<std::string>{}), Error);
  CHECK_THROWS_AS(build_vocabulary(kThreeDocs, 4), Error);
}

TEST_CASE("vectorize matches the frozen oracle values") {
  // tests/oracles/derive_values.py: bad=0.9590558761 word=0.2832169250
  const Vocabulary v = build_vocabulary(kThreeDocs);
  const FeatureVector fv = vectorize("bad bad word", v);
  CHECK(weight_of(fv, v, "bad") == doctest::Approx(0.9590558761).epsilon(1e-9));
  CHECK(weight_of(fv, v, "word") == doctest::Approx(0.2832169250).epsilon(1e-9));
  CHECK(std::abs(weight_of(fv, v, "bad") - 0.9590) < 1e-4);
  CHECK(std::abs(weight_of(fv, v, "word") - 0.2832) < 1e-4);

  const FeatureVector single = vectorize("word", v);
  REQUIRE(single.entries.size() == 1);
  CHECK(single.entries[0].second == doctest::Approx(1.0));

  CHECK(vectorize("zzz qqq", v).empty());
  CHECK(vectorize("", v).empty());
}

TEST_CASE("vocabulary json round trip and validation") {
  const Vocabulary v = build_vocabulary(kThreeDocs);
  const auto j = v.to_json();
  CHECK(j.at("n_docs") == 3);
  CHECK(j.at("terms").size() == 3);
  CHECK(j.at("terms")[2].at("term") == "word");
  CHECK(j.at("terms")[2].at("df") == 3);
  CHECK(Vocabulary::from_json(j) == v);
  CHECK(Vocabulary::from_json(j).fingerprint() == v.fingerprint());

  auto bad_index = j;
  bad_index["terms"][0]["index"] = 7;
  CHECK_THROWS_AS(Vocabulary::from_json(bad_index), Error);
  auto bad_df = j;
  bad_df["terms"][0]["df"] = 4;
  CHECK_THROWS_AS(Vocabulary::from_json(bad_df), Error);
  CHECK(build_vocabulary(kThreeDocs, 2).fingerprint() != v.fingerprint());
}

TEST_CASE("property: vectors are unit norm and match brute-force tf-idf") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const auto corpus = testing::random_corpus(rng, 10, 8);
    const std::size_t min_df = 1 + rng() % 2;
    Vocabulary v;
    try {
      v = build_vocabulary(corpus, min_df);
    } catch (const Error&) {
      continue;  // everything filtered out
    }
    const std::string text = corpus[rng() % corpus.size()] + " " + testing::random_word(rng);
    const FeatureVector fv = vectorize(text, v);
    const auto expected = testing::oracle_tfidf(corpus, text, min_df);
    REQUIRE(fv.entries.size() == expected.size());
    for (const auto& [idx, w] : fv.entries) {
      REQUIRE(idx < v.size());
      CHECK(std::abs(w - expected.at(v.term(idx))) < 1e-9);
    }
    if (!fv.empty()) CHECK(std::abs(fv.norm() - 1.0) < 1e-9);
    for (std::size_t i = 0; i < v.size(); ++i) {
      CHECK(v.doc_freq(static_cast<std::uint32_t>(i)) >= 1);
      CHECK(v.doc_freq(static_cast<std::uint32_t>(i)) <= v.n_docs());
    }
  }
}

TEST_CASE("property: fitting is deterministic") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto corpus = testing::random_corpus(rng, 10, 8);
    const Vocabulary a = build_vocabulary(corpus);
    const Vocabulary b = build_vocabulary(corpus);
    CHECK(a == b);
    CHECK(vectorize(corpus.front(), a) == vectorize(corpus.front(), b));
  }
}
