#pragma once

// On-disk session store. One directory per session:
//
//   session.json       config, schedule, metric history (status draft|active)
//   dataset.jsonl      the seeded dataset the session started from
//   corrections.log    append-only JSON lines, one Correction each
//   model_iter{k}.json model trained after iteration k
//
// corrections.log is the source of truth; loading an active session replays it
// over dataset.jsonl and checks the result against the stored history.

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "toxinspect/dataset.hpp"
#include "toxinspect/feedback.hpp"

namespace toxinspect {

// A session that has not started yet: it may lack a dataset or seed labels.
struct DraftSession {
  std::string id;
  SessionMode mode = SessionMode::kGold;
  SessionConfig config;
  std::optional<Dataset> dataset;
};

using StoredSession = std::variant<DraftSession, Session>;

bool is_valid_session_id(std::string_view id);

class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path dir(std::string_view id) const;
  bool exists(std::string_view id) const;
  std::vector<std::string> list() const;

  void save_draft(const DraftSession& draft);
  // Rewrites every file of the session.
  void save_session(const Session& session);
  // Appends the newest iteration's log entries and model, then rewrites
  // session.json.
  void append_iteration(const Session& session);

  StoredSession load(std::string_view id) const;

  nlohmann::json export_archive(std::string_view id) const;
  // Writes the archive's files under `new_id` (or the archived id) and returns
  // the id after verifying that the session loads.
  std::string import_archive(const nlohmann::json& archive, std::optional<std::string> new_id = {});

 private:
  std::filesystem::path root_;
};

}  // namespace toxinspect
