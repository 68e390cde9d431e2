#include <doctest.h>

#include "support.hpp"
#include "toxinspect/csv.hpp"
#include "toxinspect/dataset.hpp"
#include "toxinspect/error.hpp"

using namespace toxinspect;

namespace {

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kBadRequest;
}

std::string message_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  FAIL("expected an Error");
  return {};
}

Dataset plain(std::size_t n) {
  Dataset ds;
  for (std::size_t i = 0; i < n; ++i) ds.add_comment({"c" + std::to_string(i), "text " + std::to_string(i), {}});
  return ds;
}

}  // namespace

TEST_CASE("jsonl ingest maps fields") {
  const Dataset ds = ingest_dataset(
      "{\"id\":\"a1\",\"text\":\"you are awful\",\"label\":1,\"split\":\"train\"}\n"
      "{\"id\":\"a2\",\"text\":\"have a nice day\"}\n",
      DatasetFormat::kJsonl);
  REQUIRE(ds.size() == 2);
  const LabelRecord* a1 = ds.current_label("a1");
  REQUIRE(a1 != nullptr);
  CHECK(a1->hard == Label::kToxic);
  CHECK(a1->source == LabelSource::kGold);
  CHECK(a1->iteration == 0);
  CHECK_FALSE(a1->soft.has_value());
  CHECK(ds.split("a1") == Split::kTrain);

  CHECK(ds.current_label("a2") == nullptr);
  CHECK_FALSE(ds.split("a2").has_value());
  CHECK(ds.comment("a2").text == "have a nice day");
}

TEST_CASE("jsonl label variants") {
  const Dataset ds = ingest_dataset(
      "{\"id\":\"a\",\"text\":\"x\",\"label\":\"normal\"}\n"
      "{\"id\":\"b\",\"text\":\"x\",\"label\":\"offensive\"}\n"
      "{\"id\":\"c\",\"text\":\"x\",\"label\":true}\n"
      "{\"id\":\"d\",\"text\":\"x\",\"label\":\"0\"}\n"
      "{\"id\":\"e\",\"text\":\"x\",\"score\":0.7}\n"
      "\n",
      DatasetFormat::kJsonl);
  CHECK(ds.current_label("a")->hard == Label::kNonToxic);
  CHECK(ds.current_label("b")->hard == Label::kToxic);
  CHECK(ds.current_label("c")->hard == Label::kToxic);
  CHECK(ds.current_label("d")->hard == Label::kNonToxic);
  CHECK(ds.current_label("e")->source == LabelSource::kBlackbox);
  CHECK(ds.current_label("e")->hard == Label::kToxic);
  CHECK(*ds.current_label("e")->soft == 0.7);
}

TEST_CASE("jsonl errors carry the row number") {
  CHECK(message_of([] { ingest_dataset("{\"id\":\"a\",\"text\":\"x\"}\n{oops\n", DatasetFormat::kJsonl); })
            .starts_with("row 2:"));
  CHECK(message_of([] { ingest_dataset("{\"id\":\"a\",\"text\":\"  \"}\n", DatasetFormat::kJsonl); })
            .starts_with("row 1:"));
  CHECK(message_of([] {
          ingest_dataset("{\"id\":\"a\",\"text\":\"x\",\"split\":\"dev\"}\n", DatasetFormat::kJsonl);
        }).find("dev") != std::string::npos);
  CHECK(code_of([] { ingest_dataset("{\"id\":\"a\",\"text\":\"x\",\"label\":2}\n", DatasetFormat::kJsonl); }) ==
        ErrorCode::kBadRequest);
  CHECK(code_of([] { ingest_dataset("{\"id\":\"a\",\"text\":\"\xff\"}\n", DatasetFormat::kJsonl); }) ==
        ErrorCode::kBadRequest);
}

TEST_CASE("csv with duplicated ids lists every duplicate") {
  std::string content = "id,text,label\n";
  for (int i = 0; i < 100; ++i) {
    const int id = i < 97 ? i : i - 50;  // rows 97..99 reuse ids 47..49
    content += "c" + std::to_string(id) + ",comment number " + std::to_string(i) + "," + std::to_string(i % 2) + "\n";
  }
  try {
    ingest_dataset(content, DatasetFormat::kCsv);
    FAIL("expected duplicate error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBadRequest);
    const auto dups = e.detail().at("duplicates").get<std::vector<std::string>>();
    CHECK(dups == std::vector<std::string>{"c47", "c48", "c49"});
  }
}

TEST_CASE("csv quoting and malformed rows") {
  const Dataset ds = ingest_dataset(
      "id,text,label,split\r\n"
      "q1,\"hello, \"\"world\"\"\nsecond line\",normal,test\r\n"
      "q2,plain,1,\r\n",
      DatasetFormat::kCsv);
  CHECK(ds.comment("q1").text == "hello, \"world\"\nsecond line");
  CHECK(ds.current_label("q1")->hard == Label::kNonToxic);
  CHECK(ds.split("q1") == Split::kTest);
  CHECK_FALSE(ds.split("q2").has_value());

  CHECK(message_of([] { ingest_dataset("id,text\na,one\nb,two,extra\n", DatasetFormat::kCsv); })
            .starts_with("row 3:"));
  CHECK(message_of([] { ingest_dataset("id,text\na,\"unterminated\n", DatasetFormat::kCsv); })
            .find("row 2") != std::string::npos);
  CHECK(code_of([] { ingest_dataset("name,body\na,b\n", DatasetFormat::kCsv); }) == ErrorCode::kBadRequest);
}

TEST_CASE("csv parser round-trips quoted fields") {
  const std::vector<std::string> fields{"plain", "with,comma", "with \"quote\"", "multi\nline", ""};
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) line += (i ? "," : "") + csv::quote(fields[i]);
  const auto rows = csv::parse(line + "\n");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].fields == fields);
}

TEST_CASE("map_to_binary") {
  CHECK(map_to_binary("normal") == Label::kNonToxic);
  CHECK(map_to_binary("offensive") == Label::kToxic);
  CHECK(map_to_binary("NORMAL  ") == Label::kNonToxic);
  CHECK(map_to_binary("Ok", {"ok", "normal"}) == Label::kNonToxic);
  CHECK(code_of([] { map_to_binary("   "); }) == ErrorCode::kBadRequest);
}

TEST_CASE("label history is append-only and newest wins") {
  Dataset ds = plain(1);
  ds.append_label({"c0", Label::kToxic, std::nullopt, LabelSource::kGold, 0});
  ds.append_label({"c0", Label::kNonToxic, std::nullopt, LabelSource::kEvaluator, 2});
  CHECK(ds.current_label("c0")->hard == Label::kNonToxic);
  CHECK(ds.label_history().size() == 2);
  CHECK(code_of([&] { ds.append_label({"c0", Label::kToxic, std::nullopt, LabelSource::kEvaluator, 1}); }) ==
        ErrorCode::kConflict);
  CHECK(code_of([&] { ds.append_label({"c0", Label::kToxic, 0.4, LabelSource::kGold, 3}); }) ==
        ErrorCode::kBadRequest);
  CHECK(code_of([&] { ds.append_label({"zz", Label::kToxic, std::nullopt, LabelSource::kGold, 0}); }) ==
        ErrorCode::kNotFound);
}

TEST_CASE("assign_split counts and determinism") {
  const Dataset a = assign_split(plain(10), 0.2, 7);
  const Dataset b = assign_split(plain(10), 0.2, 7);
  CHECK(a.ids_in_split(Split::kTest).size() == 2);
  CHECK(a.ids_in_split(Split::kTrain).size() == 8);
  CHECK(a == b);

  Dataset pre = plain(10);
  for (std::size_t i = 0; i < 10; ++i) pre.set_split("c" + std::to_string(i), i < 3 ? Split::kTest : Split::kTrain);
  CHECK(assign_split(pre, 0.5, 1) == pre);

  CHECK(code_of([] { assign_split(plain(10), 0.0, 1); }) == ErrorCode::kBadRequest);
  CHECK(code_of([] { assign_split(plain(10), 1.0, 1); }) == ErrorCode::kBadRequest);
}

TEST_CASE("assign_split stratifies by label") {
  Dataset ds = plain(100);
  for (std::size_t i = 0; i < 100; ++i) {
    ds.append_label({"c" + std::to_string(i), i % 2 ? Label::kToxic : Label::kNonToxic, std::nullopt,
                     LabelSource::kGold, 0});
  }
  const Dataset out = assign_split(ds, 0.2, 3);
  std::size_t toxic = 0, nontoxic = 0;
  for (const auto& id : out.ids_in_split(Split::kTest)) {
    (out.current_label(id)->hard == Label::kToxic ? toxic : nontoxic) += 1;
  }
  CHECK(toxic == 10);
  CHECK(nontoxic == 10);

  Dataset lonely = plain(5);
  for (std::size_t i = 0; i < 5; ++i) {
    lonely.append_label({"c" + std::to_string(i), i == 0 ? Label::kToxic : Label::kNonToxic, std::nullopt,
                         LabelSource::kGold, 0});
  }
  CHECK(code_of([&] { assign_split(lonely, 0.2, 3); }) == ErrorCode::kBadRequest);
  CHECK(assign_split(lonely, 0.2, 3, false).unsplit_ids().empty());
}

TEST_CASE("property: split assignment is a partition") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + rng() % 60;
    Dataset ds = plain(n);
    const auto labels = testing::random_labels(rng, n);
    std::size_t toxic = 0;
    for (auto l : labels) toxic += l == Label::kToxic;
    const bool label_it = toxic >= 2 && n - toxic >= 2;
    if (label_it) {
      for (std::size_t i = 0; i < n; ++i) {
        ds.append_label({"c" + std::to_string(i), labels[i], std::nullopt, LabelSource::kGold, 0});
      }
    }
    const double f = 0.1 + 0.8 * static_cast<double>(rng() % 100) / 100.0;
    const Dataset out = assign_split(ds, f, rng());
    const auto train = out.ids_in_split(Split::kTrain);
    const auto test = out.ids_in_split(Split::kTest);
    CHECK(train.size() + test.size() == n);
    CHECK_FALSE(train.empty());
    CHECK_FALSE(test.empty());
    std::set<std::string> all(train.begin(), train.end());
    all.insert(test.begin(), test.end());
    CHECK(all.size() == n);
  }
}

TEST_CASE("property: ingest -> serialize -> ingest round-trips") {
  std::mt19937_64 rng(5);
  const std::vector<std::string> pieces{"hello", "مرحبا", "a,b", "say \"hi\"", "x\ny", "émoji 🙂", "tab\there"};
  for (int trial = 0; trial < 200; ++trial) {
    Dataset ds;
    const std::size_t n = 1 + rng() % 12;
    for (std::size_t i = 0; i < n; ++i) {
      std::string text = pieces[rng() % pieces.size()];
      for (std::size_t k = rng() % 3; k > 0; --k) text += " " + pieces[rng() % pieces.size()];
      std::optional<std::string> lang;
      if (rng() % 2) lang = rng() % 2 ? "en" : "ar";
      const std::string id = "id-" + std::to_string(trial) + "-" + std::to_string(i);
      ds.add_comment({id, text, lang});
      switch (rng() % 3) {
        case 0: break;
        case 1:
          ds.append_label({id, rng() % 2 ? Label::kToxic : Label::kNonToxic, std::nullopt, LabelSource::kGold, 0});
          break;
        default: {
          const double s = static_cast<double>(rng() % 1000) / 999.0;
          ds.append_label({id, s >= 0.5 ? Label::kToxic : Label::kNonToxic, s, LabelSource::kBlackbox, 0});
        }
      }
      if (rng() % 2) ds.set_split(id, rng() % 2 ? Split::kTrain : Split::kTest);
    }
    const Dataset back = ingest_dataset(serialize_jsonl(ds), DatasetFormat::kJsonl);
    CHECK(back == ds);
  }
}
