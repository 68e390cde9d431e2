#include "toxinspect/blackbox.hpp"

#include <httplib.h>

#include <cstdlib>
#include <exception>
#include <fstream>
#include <regex>
#include <set>
#include <thread>

#include "text_util.hpp"
#include "toxinspect/classifier.hpp"
#include "toxinspect/error.hpp"
#include "toxinspect/featurizer.hpp"
#include "toxinspect/hash.hpp"

namespace toxinspect {

using nlohmann::json;

std::vector<std::string> ScorerConfig::default_toxic_words() {
  return {"idiot", "stupid", "moron", "trash", "hate", "kill", "awful", "dumb", "shut", "disgusting"};
}

std::vector<std::string> ScorerConfig::default_benign_words() {
  return {"thanks", "thank", "lovely", "great", "kind", "nice", "love", "welcome", "please", "helpful"};
}

ScorerConfig ScorerConfig::from_json(const json& j) {
  ScorerConfig c;
  if (j.is_null()) return c;
  try {
    const std::string kind = j.value("kind", std::string("stub"));
    if (kind == "stub") {
      c.kind = ScorerKind::kStub;
    } else if (kind == "http") {
      c.kind = ScorerKind::kHttp;
    } else {
      fail(ErrorCode::kBadRequest, "unknown scorer kind '" + kind + "'");
    }
    c.endpoint = j.value("endpoint", c.endpoint);
    c.attribute = j.value("attribute", c.attribute);
    c.max_concurrent = j.value("max_concurrent", c.max_concurrent);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.backoff_base = std::chrono::milliseconds(j.value("backoff_ms", c.backoff_base.count()));
    if (j.contains("cache_path") && !j["cache_path"].is_null()) {
      c.cache_path = j["cache_path"].get<std::string>();
    }
    if (j.contains("toxic_words")) c.toxic_words = j["toxic_words"].get<std::vector<std::string>>();
    if (j.contains("benign_words")) c.benign_words = j["benign_words"].get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kBadRequest, std::string("invalid scorer config: ") + e.what());
  }
  if (const char* key = std::getenv(kApiKeyEnvVar)) c.api_key = key;
  return c;
}

double lexicon_score(std::string_view text, std::span<const std::string> toxic_words,
                     std::span<const std::string> benign_words) {
  std::set<std::string> toxic;
  std::set<std::string> benign;
  for (const auto& w : toxic_words) {
    for (auto& t : tokenize(w)) toxic.insert(std::move(t));
  }
  for (const auto& w : benign_words) {
    for (auto& t : tokenize(w)) benign.insert(std::move(t));
  }
  long hits = 0;
  for (const auto& token : tokenize(text)) {
    if (toxic.contains(token)) ++hits;
    if (benign.contains(token)) --hits;
  }
  return sigmoid(2.0 * static_cast<double>(hits));
}

// ---------------------------------------------------------------------------
// Cache

ScoreCache::ScoreCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    // A torn final line from an interrupted run is skipped, not fatal.
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    entries_[{j.value("hash", ""), j.value("scorer_id", "")}] = j.value("score", 0.0);
  }
}

std::optional<double> ScoreCache::lookup(const std::string& hash, const std::string& scorer_id) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find({hash, scorer_id});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ScoreCache::store(const std::string& hash, double score, const std::string& scorer_id) {
  std::lock_guard lock(mu_);
  if (!entries_.emplace(std::pair{hash, scorer_id}, score).second) return;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app);
  out << json{{"hash", hash}, {"score", score}, {"scorer_id", scorer_id}}.dump() << '\n';
  if (!out) fail(ErrorCode::kUpstreamFailure, "cannot write score cache " + path_.string());
}

std::size_t ScoreCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// Client

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // /path[?query]
};

Endpoint parse_endpoint(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/?#]+)([^#]*)$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) fail(ErrorCode::kBadRequest, "invalid scorer endpoint '" + url + "'");
  Endpoint e{m[1].str(), m[2].str()};
  if (e.path.empty()) e.path = "/";
  return e;
}

}  // namespace

ToxicityClient::ToxicityClient(ScorerConfig config) : config_(std::move(config)) {
  if (config_.max_concurrent < 1) fail(ErrorCode::kBadRequest, "max_concurrent must be >= 1");
  if (config_.max_retries < 0) fail(ErrorCode::kBadRequest, "max_retries must be >= 0");
  if (config_.kind == ScorerKind::kHttp) {
    if (config_.endpoint.empty() || config_.api_key.empty()) {
      fail(ErrorCode::kBadRequest, std::string("http scorer requires an endpoint and an API key (") +
                                       kApiKeyEnvVar + ")");
    }
    parse_endpoint(config_.endpoint);
    scorer_id_ = "http:" + config_.endpoint + "#" + config_.attribute;
  } else {
    json lists = {{"toxic", config_.toxic_words}, {"benign", config_.benign_words}};
    scorer_id_ = "stub-lexicon:" + sha256_hex(lists.dump()).substr(0, 16);
  }
  if (config_.cache_path) cache_.emplace(*config_.cache_path);
}

double ToxicityClient::fetch(std::string_view text) {
  const Endpoint ep = parse_endpoint(config_.endpoint);
  httplib::Client cli(ep.origin);
  cli.set_connection_timeout(config_.timeout);
  cli.set_read_timeout(config_.timeout);
  const std::string path = ep.path + (ep.path.find('?') == std::string::npos ? "?" : "&") +
                           "key=" + httplib::detail::encode_query_param(config_.api_key);
  const json body = {{"comment", {{"text", text}}},
                     {"requestedAttributes", {{config_.attribute, json::object()}}},
                     {"doNotStore", true}};
  const std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config_.backoff_base * (1 << (attempt - 1)));
    ++requests_;
    auto res = cli.Post(path, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      fail(ErrorCode::kUpstreamFailure,
           "scorer rejected the request with HTTP " + std::to_string(res->status),
           {{"status", res->status}});
    }
    const json reply = json::parse(res->body, nullptr, false);
    try {
      const double v =
          reply.at("attributeScores").at(config_.attribute).at("summaryScore").at("value").get<double>();
      if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::kUpstreamFailure, "scorer returned a score outside [0,1]");
      return v;
    } catch (const json::exception&) {
      fail(ErrorCode::kUpstreamFailure, "scorer response lacks a summary score");
    }
  }
  fail(ErrorCode::kUpstreamFailure,
       "scorer failed after " + std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
}

ToxicityScore ToxicityClient::score_comment(std::string_view comment_id, std::string_view text) {
  if (text::trim(text).empty()) {
    fail(ErrorCode::kBadRequest, "cannot score empty text");
  }
  ToxicityScore out;
  out.comment_id = std::string(comment_id);
  out.scorer_id = scorer_id_;
  out.retrieved_at = std::chrono::system_clock::now();
  const std::string hash = cache_ ? sha256_hex(text) : std::string();
  if (cache_) {
    if (auto hit = cache_->lookup(hash, scorer_id_)) {
      out.score = *hit;
      return out;
    }
  }
  out.score = config_.kind == ScorerKind::kStub
                  ? lexicon_score(text, config_.toxic_words, config_.benign_words)
                  : fetch(text);
  if (cache_) cache_->store(hash, out.score, scorer_id_);
  return out;
}

std::vector<ToxicityScore> ToxicityClient::score_all(std::span<const Comment> comments) {
  std::vector<ToxicityScore> out(comments.size());
  const std::size_t workers =
      config_.kind == ScorerKind::kStub
          ? 1
          : std::min<std::size_t>(static_cast<std::size_t>(config_.max_concurrent), comments.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;

  auto work = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= comments.size()) return;
      try {
        out[i] = score_comment(comments[i].id, comments[i].text);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
  return out;
}

Dataset seed_labels(const Dataset& dataset, ToxicityClient& client, double threshold, bool overwrite) {
  if (!(threshold > 0.0 && threshold < 1.0)) fail(ErrorCode::kBadRequest, "threshold must lie in (0,1)");
  if (dataset.empty()) fail(ErrorCode::kBadRequest, "dataset is empty");
  if (!overwrite && dataset.unlabeled_ids().size() != dataset.size()) {
    fail(ErrorCode::kConflict, "dataset already carries labels; pass overwrite to reseed");
  }
  const std::vector<ToxicityScore> scores = client.score_all(dataset.comments());
  Dataset seeded = dataset;
  for (const auto& s : scores) {
    const Label hard = s.score >= threshold ? Label::kToxic : Label::kNonToxic;
    seeded.append_label(LabelRecord{s.comment_id, hard, s.score, LabelSource::kBlackbox, 0});
  }
  return seeded;
}

}  // namespace toxinspect
