#pragma once

// Black-box toxicity scoring: an HTTP client for a Perspective-style analyze
// endpoint, or an offline lexicon stub. Used to seed noisy labels.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "toxinspect/dataset.hpp"

namespace toxinspect {

inline constexpr const char* kApiKeyEnvVar = "TOXINSPECT_API_KEY";

enum class ScorerKind { kHttp, kStub };

struct ScorerConfig {
  ScorerKind kind = ScorerKind::kStub;
  std::string endpoint;  // e.g. https://host/v1alpha1/comments:analyze
  std::string api_key;   // never serialised
  std::string attribute = "TOXICITY";
  int max_concurrent = 4;
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{200};
  std::chrono::seconds timeout{10};
  std::optional<std::filesystem::path> cache_path;
  std::vector<std::string> toxic_words = default_toxic_words();
  std::vector<std::string> benign_words = default_benign_words();

  static std::vector<std::string> default_toxic_words();
  static std::vector<std::string> default_benign_words();

  // Reads everything except the key; `api_key` falls back to the environment.
  static ScorerConfig from_json(const nlohmann::json& j);
};

struct ToxicityScore {
  std::string comment_id;
  double score = 0.0;
  std::string scorer_id;
  std::chrono::system_clock::time_point retrieved_at;
};

// sigmoid(2 * (toxic hits - benign hits)); hits count tokens, not types.
double lexicon_score(std::string_view text, std::span<const std::string> toxic_words,
                     std::span<const std::string> benign_words);

// JSON-lines cache keyed by content hash and scorer id.
class ScoreCache {
 public:
  explicit ScoreCache(std::filesystem::path path);

  std::optional<double> lookup(const std::string& hash, const std::string& scorer_id) const;
  void store(const std::string& hash, double score, const std::string& scorer_id);
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, double> entries_;
};

class ToxicityClient {
 public:
  explicit ToxicityClient(ScorerConfig config);

  const std::string& scorer_id() const { return scorer_id_; }
  const ScorerConfig& config() const { return config_; }

  // Throws Error(kUpstreamFailure) once retries are exhausted or on a
  // non-retryable response, Error(kBadRequest) on empty text.
  ToxicityScore score_comment(std::string_view comment_id, std::string_view text);

  // Scores every comment, keeping at most max_concurrent requests in flight.
  // Fails as a whole if any comment fails.
  std::vector<ToxicityScore> score_all(std::span<const Comment> comments);

  // Outbound HTTP requests made so far, retries included.
  std::size_t requests_sent() const { return requests_.load(); }

 private:
  double fetch(std::string_view text);

  ScorerConfig config_;
  std::string scorer_id_;
  std::optional<ScoreCache> cache_;
  std::atomic<std::size_t> requests_{0};
};

// Labels every comment with source=blackbox, hard = 1 iff score >= threshold.
// Without `overwrite`, comments that already carry a label are an error. All
// or nothing: on failure the input is untouched and the error propagates.
Dataset seed_labels(const Dataset& dataset, ToxicityClient& client, double threshold = 0.5,
                    bool overwrite = false);

}  // namespace toxinspect
