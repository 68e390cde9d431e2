#include "toxinspect/session_store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "toxinspect/error.hpp"

namespace toxinspect {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kArchiveFormat = "toxinspect-session-archive";

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kNotFound, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write-then-rename so a crash never leaves a half-written file behind.
void write_file(const fs::path& path, std::string_view content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) fail(ErrorCode::kUpstreamFailure, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string model_file(std::size_t k) { return "model_iter" + std::to_string(k) + ".json"; }

std::string correction_lines(std::span<const Correction> log) {
  std::string out;
  for (const auto& c : log) out += c.to_json().dump() + "\n";
  return out;
}

json session_json(const Session& s) {
  json history = json::array();
  for (const auto& r : s.metric_history()) history.push_back(r.to_json());
  json reference = nullptr;
  if (s.reference()) {
    reference = json::object();
    for (const auto& [id, label] : *s.reference()) reference[id] = to_int(label);
  }
  return {{"format_version", kFormatVersion},
          {"id", s.id()},
          {"status", "active"},
          {"mode", to_string(s.mode())},
          {"config", s.config().to_json()},
          {"schedule", s.schedule()},
          {"current_iteration", s.current_iteration()},
          {"vocab_fingerprint", s.vocabulary().fingerprint()},
          {"metric_history", std::move(history)},
          {"reference", std::move(reference)}};
}

std::vector<Correction> parse_log(const std::string& content) {
  std::vector<Correction> log;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      // Only a torn final line is tolerated.
      if (in.peek() == std::char_traits<char>::eof()) break;
      fail(ErrorCode::kConflict, "corrections.log line " + std::to_string(line_no) + " is corrupt");
    }
    log.push_back(Correction::from_json(j));
  }
  return log;
}

}  // namespace

bool is_valid_session_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
           c == '_';
  });
}

SessionStore::SessionStore(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

fs::path SessionStore::dir(std::string_view id) const {
  if (!is_valid_session_id(id)) fail(ErrorCode::kBadRequest, "invalid session id '" + std::string(id) + "'");
  return root_ / std::string(id);
}

bool SessionStore::exists(std::string_view id) const {
  return is_valid_session_id(id) && fs::exists(dir(id) / "session.json");
}

std::vector<std::string> SessionStore::list() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (entry.is_directory() && fs::exists(entry.path() / "session.json")) {
      ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

void SessionStore::save_draft(const DraftSession& draft) {
  const fs::path d = dir(draft.id);
  fs::create_directories(d);
  if (draft.dataset) write_file(d / "dataset.jsonl", serialize_jsonl(*draft.dataset));
  const json j = {{"format_version", kFormatVersion},
                  {"id", draft.id},
                  {"status", "draft"},
                  {"mode", to_string(draft.mode)},
                  {"config", draft.config.to_json()},
                  {"has_dataset", draft.dataset.has_value()}};
  write_file(d / "session.json", j.dump(2));
}

void SessionStore::save_session(const Session& session) {
  const fs::path d = dir(session.id());
  fs::create_directories(d);
  write_file(d / "dataset.jsonl", serialize_jsonl(session.seed_dataset()));
  write_file(d / "corrections.log", correction_lines(session.correction_log()));
  const auto& models = session.model_snapshots();
  for (std::size_t k = 0; k < models.size(); ++k) write_file(d / model_file(k), models[k].to_json().dump());
  write_file(d / "session.json", session_json(session).dump(2));
}

void SessionStore::append_iteration(const Session& session) {
  const fs::path d = dir(session.id());
  const int k = session.current_iteration();
  const auto& log = session.correction_log();
  auto first = std::find_if(log.begin(), log.end(), [k](const Correction& c) { return c.iteration == k; });
  {
    std::ofstream out(d / "corrections.log", std::ios::binary | std::ios::app);
    out << correction_lines(std::span(first, log.end()));
    out.flush();
    if (!out) fail(ErrorCode::kUpstreamFailure, "cannot append to corrections.log");
  }
  write_file(d / model_file(static_cast<std::size_t>(k)), session.latest_model().to_json().dump());
  write_file(d / "session.json", session_json(session).dump(2));
}

StoredSession SessionStore::load(std::string_view id) const {
  const fs::path d = dir(id);
  if (!fs::exists(d / "session.json")) fail(ErrorCode::kNotFound, "no session '" + std::string(id) + "'");
  json meta;
  try {
    meta = json::parse(read_file(d / "session.json"));
  } catch (const json::exception& e) {
    fail(ErrorCode::kConflict, std::string("session.json is corrupt: ") + e.what());
  }
  const SessionMode mode = parse_session_mode(meta.at("mode").get<std::string>());
  const SessionConfig config = SessionConfig::from_json(meta.at("config"));
  const std::string status = meta.at("status").get<std::string>();

  std::optional<Dataset> dataset;
  if (fs::exists(d / "dataset.jsonl")) {
    dataset = ingest_dataset(read_file(d / "dataset.jsonl"), DatasetFormat::kJsonl);
  }
  if (status == "draft") return DraftSession{std::string(id), mode, config, std::move(dataset)};
  if (!dataset) fail(ErrorCode::kConflict, "active session without dataset.jsonl");

  std::optional<std::map<std::string, Label>> reference;
  if (meta.contains("reference") && !meta["reference"].is_null()) {
    reference.emplace();
    for (const auto& [cid, v] : meta["reference"].items()) {
      reference->emplace(cid, label_from_int(v.get<long long>()));
    }
  }
  const std::string log_text = fs::exists(d / "corrections.log") ? read_file(d / "corrections.log") : "";
  const std::vector<Correction> log = parse_log(log_text);

  Session session = Session::replay(std::string(id), *dataset, mode, config, reference, log);

  // The stored history may lag the log by one iteration after a crash, never
  // disagree with it.
  const auto& stored = meta.at("metric_history");
  const auto& replayed = session.metric_history();
  if (stored.size() > replayed.size()) {
    fail(ErrorCode::kConflict, "session.json records more iterations than corrections.log");
  }
  for (std::size_t k = 0; k < stored.size(); ++k) {
    if (!(MetricsReport::from_json(stored[k]) == replayed[k])) {
      fail(ErrorCode::kConflict, "replay diverged from the stored metric history at iteration " +
                                     std::to_string(k));
    }
  }
  if (meta.at("schedule").get<BatchSchedule>() != session.schedule()) {
    fail(ErrorCode::kConflict, "replay produced a different batch schedule");
  }
  return session;
}

json SessionStore::export_archive(std::string_view id) const {
  const fs::path d = dir(id);
  if (!fs::exists(d / "session.json")) fail(ErrorCode::kNotFound, "no session '" + std::string(id) + "'");
  json files = json::object();
  for (const auto& entry : fs::directory_iterator(d)) {
    if (!entry.is_regular_file() || entry.path().extension() == ".tmp") continue;
    files[entry.path().filename().string()] = read_file(entry.path());
  }
  return {{"format", kArchiveFormat}, {"version", kFormatVersion}, {"id", id}, {"files", std::move(files)}};
}

std::string SessionStore::import_archive(const json& archive, std::optional<std::string> new_id) {
  if (!archive.is_object() || archive.value("format", "") != kArchiveFormat) {
    fail(ErrorCode::kBadRequest, "not a session archive");
  }
  const std::string id = new_id.value_or(archive.at("id").get<std::string>());
  if (exists(id)) fail(ErrorCode::kConflict, "session '" + id + "' already exists");
  const fs::path d = dir(id);
  fs::create_directories(d);
  try {
    for (const auto& [name, content] : archive.at("files").items()) {
      const fs::path rel(name);
      if (rel.has_parent_path() || name.empty() || name == "." || name == "..") {
        fail(ErrorCode::kBadRequest, "archive entry '" + name + "' is not a plain file name");
      }
      std::string text = content.get<std::string>();
      if (name == "session.json") {
        json meta = json::parse(text);
        meta["id"] = id;
        text = meta.dump(2);
      }
      write_file(d / rel, text);
    }
    load(id);
  } catch (...) {
    fs::remove_all(d);
    throw;
  }
  return id;
}

}  // namespace toxinspect
