#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <fstream>
#include <thread>

#include "support.hpp"
#include "toxinspect/blackbox.hpp"
#include "toxinspect/error.hpp"

using namespace toxinspect;
using nlohmann::json;

namespace {

// A local stand-in for the analyze endpoint. `respond` picks the status for
// the n-th request (0-based); 200 replies carry `score`.
class FakeScorer {
 public:
  explicit FakeScorer(std::function<int(int)> respond, double score = 0.8)
      : respond_(std::move(respond)), score_(score) {
    server_.Post("/v1/analyze", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = calls_++;
      last_key_ = req.get_param_value("key");
      last_body_ = req.body;
      const int status = respond_(n);
      res.status = status;
      if (status == 200) {
        json body = json::parse(req.body);
        const std::string text = body["comment"]["text"];
        const double s = text == "bad score" ? 1.5 : score_;
        res.set_content(json{{"attributeScores", {{"TOXICITY", {{"summaryScore", {{"value", s}}}}}}}}.dump(),
                        "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeScorer() {
    server_.stop();
    thread_.join();
  }

  ScorerConfig config() const {
    ScorerConfig c;
    c.kind = ScorerKind::kHttp;
    c.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/v1/analyze";
    c.api_key = "k&y";
    c.backoff_base = std::chrono::milliseconds(1);
    return c;
  }
  int calls() const { return calls_.load(); }
  std::string last_key() const { return last_key_; }
  std::string last_body() const { return last_body_; }

 private:
  std::function<int(int)> respond_;
  double score_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> calls_{0};
  std::string last_key_, last_body_;
};

Dataset unlabeled(const std::vector<std::string>& texts) {
  Dataset ds;
  for (std::size_t i = 0; i < texts.size(); ++i) ds.add_comment({"c" + std::to_string(i), texts[i], {}});
  return ds;
}

}  // namespace

TEST_CASE("stub lexicon scores") {
  ToxicityClient stub(ScorerConfig{});
  CHECK(stub.score_comment("a", "you idiot").score == doctest::Approx(0.8807970780).epsilon(1e-10));
  CHECK(stub.score_comment("b", "idiot thanks").score == 0.5);
  CHECK(stub.score_comment("c", "nothing here").score == 0.5);
  CHECK(stub.score_comment("d", "Thanks, THANKS!").score == doctest::Approx(1.0 / (1.0 + std::exp(4.0))));
  CHECK(stub.score_comment("e", "you idiot").score == stub.score_comment("f", "you idiot").score);
  CHECK_THROWS_AS(stub.score_comment("g", "   "), Error);
  CHECK(stub.requests_sent() == 0);

  ScorerConfig other;
  other.toxic_words = {"zap"};
  CHECK(ToxicityClient(other).scorer_id() != stub.scorer_id());
  CHECK(ToxicityClient(other).score_comment("h", "zap").score == doctest::Approx(0.8807970780));
}

TEST_CASE("seed_labels binarizes at the threshold") {
  ScorerConfig cfg;
  cfg.toxic_words = {"t"};
  cfg.benign_words = {"b"};
  ToxicityClient stub(cfg);
  // sigma(2) ~ 0.88, sigma(-2) ~ 0.12, sigma(0) = 0.5
  const Dataset ds = unlabeled({"t", "b", "t b"});
  const Dataset seeded = seed_labels(ds, stub, 0.5);
  CHECK(seeded.current_label("c0")->hard == Label::kToxic);
  CHECK(seeded.current_label("c1")->hard == Label::kNonToxic);
  CHECK(seeded.current_label("c2")->hard == Label::kToxic);
  for (const auto& id : seeded.ids()) {
    CHECK(seeded.current_label(id)->source == LabelSource::kBlackbox);
    CHECK(seeded.current_label(id)->iteration == 0);
    CHECK(seeded.current_label(id)->soft.has_value());
  }
  const Dataset strict = seed_labels(ds, stub, 0.95);
  for (const auto& id : strict.ids()) CHECK(strict.current_label(id)->hard == Label::kNonToxic);

  CHECK_THROWS_AS(seed_labels(seeded, stub, 0.5), Error);
  CHECK(seed_labels(seeded, stub, 0.95, true).current_label("c0")->hard == Label::kNonToxic);
  CHECK_THROWS_AS(seed_labels(ds, stub, 1.0), Error);
}

TEST_CASE("http scorer sends the provider request shape") {
  FakeScorer fake([](int) { return 200; }, 0.8);
  ToxicityClient client(fake.config());
  CHECK(client.score_comment("a", "hello there").score == 0.8);
  CHECK(fake.last_key() == "k&y");
  const json body = json::parse(fake.last_body());
  CHECK(body["comment"]["text"] == "hello there");
  CHECK(body["requestedAttributes"].contains("TOXICITY"));
  CHECK(client.requests_sent() == 1);
}

TEST_CASE("http scorer retries transient failures") {
  FakeScorer fake([](int n) { return n < 2 ? (n == 0 ? 503 : 429) : 200; });
  ToxicityClient client(fake.config());
  CHECK(client.score_comment("a", "text").score == 0.8);
  CHECK(fake.calls() == 3);
  CHECK(client.requests_sent() == 3);
}

TEST_CASE("http scorer gives up after max_retries") {
  FakeScorer fake([](int) { return 500; });
  auto cfg = fake.config();
  cfg.max_retries = 2;
  ToxicityClient client(cfg);
  try {
    client.score_comment("a", "text");
    FAIL("expected upstream failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUpstreamFailure);
  }
  CHECK(fake.calls() == 3);
}

TEST_CASE("http scorer does not retry auth failures") {
  FakeScorer fake([](int) { return 403; });
  ToxicityClient client(fake.config());
  CHECK_THROWS_AS(client.score_comment("a", "text"), Error);
  CHECK(fake.calls() == 1);
}

TEST_CASE("http scorer rejects out-of-range scores and bad configs") {
  FakeScorer fake([](int) { return 200; });
  ToxicityClient client(fake.config());
  CHECK_THROWS_AS(client.score_comment("a", "bad score"), Error);

  auto no_key = fake.config();
  no_key.api_key.clear();
  CHECK_THROWS_AS(ToxicityClient{no_key}, Error);
  auto no_endpoint = fake.config();
  no_endpoint.endpoint.clear();
  CHECK_THROWS_AS(ToxicityClient{no_endpoint}, Error);
}

TEST_CASE("unreachable scorer fails after retries") {
  ScorerConfig cfg;
  cfg.kind = ScorerKind::kHttp;
  cfg.endpoint = "http://127.0.0.1:1/analyze";
  cfg.api_key = "k";
  cfg.max_retries = 1;
  cfg.backoff_base = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::seconds(1);
  ToxicityClient client(cfg);
  CHECK_THROWS_AS(client.score_comment("a", "text"), Error);
  CHECK(client.requests_sent() == 2);
}

TEST_CASE("warm cache makes no requests and returns identical labels") {
  testing::TempDir dir;
  FakeScorer fake([](int) { return 200; }, 0.7);
  auto cfg = fake.config();
  cfg.cache_path = dir.path() / "cache.jsonl";
  const Dataset ds = unlabeled({"one", "two", "three", "four", "five", "six"});

  ToxicityClient cold(cfg);
  const Dataset first = seed_labels(ds, cold, 0.5);
  CHECK(cold.requests_sent() == 6);

  ToxicityClient warm(cfg);
  const Dataset second = seed_labels(ds, warm, 0.5);
  CHECK(warm.requests_sent() == 0);
  CHECK(second == first);
  CHECK(fake.calls() == 6);

  std::ifstream in(*cfg.cache_path);
  std::string line;
  std::getline(in, line);
  const json entry = json::parse(line);
  CHECK(entry.contains("hash"));
  CHECK(entry["score"] == 0.7);
  CHECK(entry["scorer_id"] == cold.scorer_id());
}

TEST_CASE("cache tolerates a torn final line") {
  testing::TempDir dir;
  const auto path = dir.path() / "cache.jsonl";
  {
    ScoreCache cache(path);
    cache.store("h1", 0.25, "s");
  }
  std::ofstream(path, std::ios::app) << "{\"hash\":\"h2\",\"sco";
  ScoreCache reopened(path);
  CHECK(reopened.lookup("h1", "s") == 0.25);
  CHECK_FALSE(reopened.lookup("h2", "s").has_value());
  CHECK_FALSE(reopened.lookup("h1", "other").has_value());
}

TEST_CASE("seeding is all or nothing") {
  FakeScorer fake([](int n) { return n == 4 ? 400 : 200; });
  auto cfg = fake.config();
  cfg.max_concurrent = 3;
  ToxicityClient client(cfg);
  const Dataset ds = unlabeled({"a", "b", "c", "d", "e", "f", "g", "h"});
  const Dataset copy = ds;
  CHECK_THROWS_AS(seed_labels(ds, client, 0.5), Error);
  CHECK(ds == copy);
  CHECK(ds.unlabeled_ids().size() == 8);
}

TEST_CASE("concurrent scoring respects the in-flight limit") {
  std::atomic<int> in_flight{0}, peak{0};
  httplib::Server server;
  server.Post("/a", [&](const httplib::Request&, httplib::Response& res) {
    const int now = ++in_flight;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    --in_flight;
    res.set_content(R"({"attributeScores":{"TOXICITY":{"summaryScore":{"value":0.1}}}})", "application/json");
  });
  server.new_task_queue = [] { return new httplib::ThreadPool(16); };
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ScorerConfig cfg;
  cfg.kind = ScorerKind::kHttp;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/a";
  cfg.api_key = "k";
  cfg.max_concurrent = 3;
  ToxicityClient client(cfg);
  std::vector<Comment> comments;
  for (int i = 0; i < 12; ++i) comments.push_back({"c" + std::to_string(i), "text " + std::to_string(i), {}});
  const auto scores = client.score_all(comments);
  server.stop();
  t.join();
  CHECK(scores.size() == 12);
  CHECK(scores[5].comment_id == "c5");
  CHECK(peak.load() <= 3);
  CHECK(peak.load() >= 2);
}
