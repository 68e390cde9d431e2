#include "toxinspect/workspace.hpp"

#include <algorithm>
#include <random>
#include <variant>

#include "toxinspect/error.hpp"

namespace toxinspect {

using nlohmann::json;

json OpenBatch::to_json() const {
  json rows = json::array();
  for (const auto& item : items) {
    json row = {{"comment_id", item.comment.id},
                {"text", item.comment.text},
                {"label", to_int(item.label.hard)},
                {"source", to_string(item.label.source)},
                {"split", to_string(item.split)},
                {"proba", item.proba}};
    if (item.comment.lang) row["lang"] = *item.comment.lang;
    if (item.label.soft) row["score"] = *item.label.soft;
    rows.push_back(std::move(row));
  }
  return {{"iteration", iteration}, {"items", std::move(rows)}};
}

namespace {

std::string random_id() {
  static constexpr char kHex[] = "0123456789abcdef";
  std::random_device rd;
  std::string id = "s-";
  for (int i = 0; i < 12; ++i) id.push_back(kHex[rd() % 16]);
  return id;
}

json dataset_summary(const Dataset& ds) {
  return {{"n_comments", ds.size()},
          {"n_unlabeled", ds.unlabeled_ids().size()},
          {"n_train", ds.ids_in_split(Split::kTrain).size()},
          {"n_test", ds.ids_in_split(Split::kTest).size()}};
}

}  // namespace

Workspace::Workspace(std::filesystem::path store_root) : store_(std::move(store_root)) {}

std::shared_ptr<Workspace::Entry> Workspace::entry(const std::string& id) {
  std::lock_guard lock(entries_mu_);
  if (auto it = entries_.find(id); it != entries_.end()) return it->second;
  if (!store_.exists(id)) fail(ErrorCode::kNotFound, "no session '" + id + "'");
  auto e = std::make_shared<Entry>();
  StoredSession stored = store_.load(id);
  if (auto* draft = std::get_if<DraftSession>(&stored)) {
    e->draft = std::move(*draft);
  } else {
    Session& s = std::get<Session>(stored);
    e->draft = DraftSession{s.id(), s.mode(), s.config(), s.seed_dataset()};
    e->session.emplace(std::move(s));
  }
  entries_.emplace(id, e);
  return e;
}

Session& Workspace::active(Entry& e) {
  if (!e.session) fail(ErrorCode::kConflict, "session '" + e.draft.id + "' has not started yet");
  return *e.session;
}

const Session& Workspace::active(const Entry& e) const {
  if (!e.session) fail(ErrorCode::kConflict, "session '" + e.draft.id + "' has not started yet");
  return *e.session;
}

void Workspace::start(Entry& e) {
  const SessionConfig& cfg = e.draft.config;
  Dataset ds = assign_split(*e.draft.dataset, cfg.test_fraction, cfg.seed);
  Session s = Session::create(e.draft.id, std::move(ds), e.draft.mode, cfg);
  store_.save_session(s);
  e.session.emplace(std::move(s));
}

std::string Workspace::create_session(SessionMode mode, const SessionConfig& config,
                                      std::optional<std::string> id) {
  if (!(config.threshold > 0.0 && config.threshold < 1.0)) {
    fail(ErrorCode::kBadRequest, "threshold must lie in (0,1)");
  }
  if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0)) {
    fail(ErrorCode::kBadRequest, "test_fraction must lie in (0,1)");
  }
  std::lock_guard lock(entries_mu_);
  std::string sid = id.value_or(random_id());
  while (!id && (store_.exists(sid) || entries_.contains(sid))) sid = random_id();
  if (!is_valid_session_id(sid)) fail(ErrorCode::kBadRequest, "invalid session id '" + sid + "'");
  if (store_.exists(sid) || entries_.contains(sid)) fail(ErrorCode::kConflict, "session '" + sid + "' exists");
  auto e = std::make_shared<Entry>();
  e->draft = DraftSession{sid, mode, config, std::nullopt};
  store_.save_draft(e->draft);
  entries_.emplace(sid, e);
  return sid;
}

json Workspace::upload_dataset(const std::string& id, std::string_view content, DatasetFormat format,
                               const IngestConfig& ingest) {
  auto e = entry(id);
  std::unique_lock lock(e->mu);
  if (e->session || e->draft.dataset) fail(ErrorCode::kConflict, "session '" + id + "' already has a dataset");
  Dataset ds = ingest_dataset(content, format, ingest);
  if (ds.empty()) fail(ErrorCode::kBadRequest, "dataset is empty");

  bool ready = e->draft.mode == SessionMode::kGold;
  if (e->draft.mode == SessionMode::kBlackbox && ds.unlabeled_ids().empty()) {
    ready = std::all_of(ds.comments().begin(), ds.comments().end(), [&](const Comment& c) {
      return ds.current_label(c.id)->source == LabelSource::kBlackbox;
    });
  }
  json summary = dataset_summary(ds);
  e->draft.dataset = std::move(ds);
  if (ready) {
    try {
      start(*e);
    } catch (...) {
      e->draft.dataset.reset();
      throw;
    }
  } else {
    store_.save_draft(e->draft);
  }
  summary["status"] = e->session ? "active" : "draft";
  return summary;
}

json Workspace::seed(const std::string& id, const ScorerConfig& scorer, double threshold, bool overwrite) {
  auto e = entry(id);
  std::unique_lock lock(e->mu);
  if (e->session) fail(ErrorCode::kConflict, "session '" + id + "' has already started");
  if (e->draft.mode != SessionMode::kBlackbox) {
    fail(ErrorCode::kBadRequest, "seeding applies to blackbox sessions only");
  }
  if (!e->draft.dataset) fail(ErrorCode::kConflict, "upload a dataset before seeding");

  ToxicityClient client(scorer);
  Dataset seeded = seed_labels(*e->draft.dataset, client, threshold, overwrite);
  const DiagnosisSummary d = toxinspect::diagnose(seeded, SessionMode::kBlackbox, threshold);
  e->draft.dataset = std::move(seeded);
  store_.save_draft(e->draft);
  start(*e);
  return {{"n_seeded", d.n_toxic + d.n_nontoxic},
          {"n_toxic", d.n_toxic},
          {"n_nontoxic", d.n_nontoxic},
          {"scorer_id", client.scorer_id()},
          {"requests_sent", client.requests_sent()},
          {"status", "active"}};
}

json Workspace::info(const std::string& id) {
  auto e = entry(id);
  std::shared_lock lock(e->mu);
  json j = {{"id", id}, {"mode", to_string(e->draft.mode)}, {"config", e->draft.config.to_json()}};
  if (e->session) {
    j["status"] = e->session->complete() ? "complete" : "active";
    j["current_iteration"] = e->session->current_iteration();
    j["n_comments"] = e->session->dataset().size();
  } else {
    j["status"] = "draft";
    j["current_iteration"] = 0;
    j["n_comments"] = e->draft.dataset ? e->draft.dataset->size() : 0;
  }
  return j;
}

DiagnosisSummary Workspace::diagnose(const std::string& id) {
  auto e = entry(id);
  std::shared_lock lock(e->mu);
  if (e->session) return e->session->diagnose();
  if (!e->draft.dataset) fail(ErrorCode::kConflict, "session '" + id + "' has no dataset yet");
  return toxinspect::diagnose(*e->draft.dataset, e->draft.mode, e->draft.config.threshold);
}

OpenBatch Workspace::batch(const std::string& id) {
  auto e = entry(id);
  std::shared_lock lock(e->mu);
  const Session& s = active(*e);
  return OpenBatch{s.current_iteration() + 1, s.next_batch()};
}

MetricsReport Workspace::submit(const std::string& id, int iteration, const std::vector<LabelEdit>& edits,
                                Actor actor) {
  auto e = entry(id);
  std::unique_lock lock(e->mu);
  Session& s = active(*e);
  if (iteration <= s.current_iteration()) {
    fail(ErrorCode::kConflict, "iteration " + std::to_string(iteration) + " is already closed",
         {{"open_iteration", s.complete() ? json(nullptr) : json(s.current_iteration() + 1)}});
  }
  if (s.complete()) fail(ErrorCode::kSessionComplete, "session complete");
  if (iteration != s.current_iteration() + 1) {
    fail(ErrorCode::kConflict, "iteration " + std::to_string(iteration) + " is not open",
         {{"open_iteration", s.current_iteration() + 1}});
  }
  MetricsReport report = s.submit_corrections(edits, actor);
  store_.append_iteration(s);
  return report;
}

std::vector<MetricsReport> Workspace::metrics(const std::string& id) {
  auto e = entry(id);
  std::shared_lock lock(e->mu);
  return active(*e).metric_history();
}

Explanation Workspace::explain(const std::string& id, const std::string& comment_id, std::size_t k) {
  auto e = entry(id);
  std::shared_lock lock(e->mu);
  return active(*e).explain(comment_id, k);
}

GlobalExplanation Workspace::explain_global(const std::string& id, std::size_t k) {
  auto e = entry(id);
  std::shared_lock lock(e->mu);
  return active(*e).explain_global(k);
}

std::vector<MetricsReport> Workspace::run_oracle(const std::string& id, const OracleConfig& oracle) {
  auto e = entry(id);
  std::unique_lock lock(e->mu);
  Session& s = active(*e);
  if (s.complete()) fail(ErrorCode::kSessionComplete, "session complete");
  try {
    run_with_oracle(s, oracle);
  } catch (...) {
    store_.save_session(s);
    throw;
  }
  store_.save_session(s);
  return s.metric_history();
}

json Workspace::export_archive(const std::string& id) {
  auto e = entry(id);
  std::shared_lock lock(e->mu);
  return store_.export_archive(id);
}

std::string Workspace::import_archive(const json& archive, std::optional<std::string> new_id) {
  std::lock_guard lock(entries_mu_);
  if (new_id && entries_.contains(*new_id)) fail(ErrorCode::kConflict, "session '" + *new_id + "' exists");
  return store_.import_archive(archive, std::move(new_id));
}

}  // namespace toxinspect
