#pragma once

// Session lifecycle on top of the store, shared by the HTTP service and the
// CLI. Mutations of one session are serialised; distinct sessions run in
// parallel. Reads take a shared lock and see a consistent snapshot.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "toxinspect/blackbox.hpp"
#include "toxinspect/feedback.hpp"
#include "toxinspect/session_store.hpp"

namespace toxinspect {

struct OpenBatch {
  int iteration = 0;  // 1-based
  std::vector<BatchItem> items;

  nlohmann::json to_json() const;
};

class Workspace {
 public:
  explicit Workspace(std::filesystem::path store_root);

  SessionStore& store() { return store_; }

  // Starts a draft; a random id is generated when none is given.
  std::string create_session(SessionMode mode, const SessionConfig& config,
                             std::optional<std::string> id = {});

  // Gold sessions start as soon as their dataset arrives, as do blackbox
  // sessions whose rows already carry scores; the rest wait for seed().
  nlohmann::json upload_dataset(const std::string& id, std::string_view content, DatasetFormat format,
                                const IngestConfig& ingest = {});

  nlohmann::json seed(const std::string& id, const ScorerConfig& scorer, double threshold,
                      bool overwrite = false);

  nlohmann::json info(const std::string& id);
  DiagnosisSummary diagnose(const std::string& id);
  OpenBatch batch(const std::string& id);

  // `iteration` names the batch the caller reviewed; anything but the open
  // batch is a conflict, so a retried submit never applies twice.
  MetricsReport submit(const std::string& id, int iteration, const std::vector<LabelEdit>& edits,
                       Actor actor = Actor::kHuman);

  std::vector<MetricsReport> metrics(const std::string& id);
  Explanation explain(const std::string& id, const std::string& comment_id, std::size_t k);
  GlobalExplanation explain_global(const std::string& id, std::size_t k);

  std::vector<MetricsReport> run_oracle(const std::string& id, const OracleConfig& oracle);

  nlohmann::json export_archive(const std::string& id);
  std::string import_archive(const nlohmann::json& archive, std::optional<std::string> new_id = {});

 private:
  struct Entry {
    std::shared_mutex mu;
    DraftSession draft;
    std::optional<Session> session;
  };

  std::shared_ptr<Entry> entry(const std::string& id);
  Session& active(Entry& e);
  const Session& active(const Entry& e) const;
  void start(Entry& e);

  SessionStore store_;
  std::mutex entries_mu_;
  std::map<std::string, std::shared_ptr<Entry>> entries_;
};

}  // namespace toxinspect
