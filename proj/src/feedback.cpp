#include "toxinspect/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "toxinspect/error.hpp"

namespace toxinspect {

using nlohmann::json;

std::string_view to_string(SessionMode m) { return m == SessionMode::kGold ? "gold" : "blackbox"; }

std::string_view to_string(BatchStrategy s) {
  return s == BatchStrategy::kRandomStratified ? "random_stratified" : "uncertainty";
}

std::string_view to_string(Actor a) { return a == Actor::kHuman ? "human" : "oracle"; }

SessionMode parse_session_mode(std::string_view s) {
  if (s == "gold") return SessionMode::kGold;
  if (s == "blackbox") return SessionMode::kBlackbox;
  fail(ErrorCode::kBadRequest, "unknown session mode '" + std::string(s) + "'");
}

BatchStrategy parse_batch_strategy(std::string_view s) {
  if (s == "random_stratified") return BatchStrategy::kRandomStratified;
  if (s == "uncertainty") return BatchStrategy::kUncertainty;
  fail(ErrorCode::kBadRequest, "unknown batch strategy '" + std::string(s) + "'");
}

Actor parse_actor(std::string_view s) {
  if (s == "human") return Actor::kHuman;
  if (s == "oracle") return Actor::kOracle;
  fail(ErrorCode::kBadRequest, "unknown actor '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Config and record serialisation

BatchStrategy SessionConfig::effective_strategy(SessionMode mode) const {
  if (strategy) return *strategy;
  return mode == SessionMode::kGold ? BatchStrategy::kRandomStratified : BatchStrategy::kUncertainty;
}

json SessionConfig::to_json() const {
  return {{"seed", seed},
          {"strategy", strategy ? json(to_string(*strategy)) : json(nullptr)},
          {"threshold", threshold},
          {"train",
           {{"loss", to_string(train.loss)},
            {"epochs", train.epochs},
            {"learning_rate", train.learning_rate},
            {"l2_reg", train.l2_reg},
            {"seed", train.seed}}},
          {"min_df", min_df},
          {"test_fraction", test_fraction}};
}

SessionConfig SessionConfig::from_json(const json& j) {
  SessionConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) fail(ErrorCode::kBadRequest, "session config must be an object");
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("strategy") && !j["strategy"].is_null()) {
      c.strategy = parse_batch_strategy(j["strategy"].get<std::string>());
    }
    c.threshold = j.value("threshold", c.threshold);
    c.min_df = j.value("min_df", c.min_df);
    c.test_fraction = j.value("test_fraction", c.test_fraction);
    if (j.contains("train")) {
      const json& t = j["train"];
      c.train.loss = parse_loss(t.value("loss", std::string(to_string(c.train.loss))));
      c.train.epochs = t.value("epochs", c.train.epochs);
      c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
      c.train.l2_reg = t.value("l2_reg", c.train.l2_reg);
      c.train.seed = t.value("seed", c.train.seed);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kBadRequest, std::string("invalid session config: ") + e.what());
  }
  return c;
}

json Correction::to_json() const {
  return {{"comment_id", comment_id},
          {"old_label", to_int(old_label)},
          {"new_label", to_int(new_label)},
          {"iteration", iteration},
          {"actor", to_string(actor)}};
}

Correction Correction::from_json(const json& j) {
  Correction c;
  c.comment_id = j.at("comment_id").get<std::string>();
  c.old_label = label_from_int(j.at("old_label").get<long long>());
  c.new_label = label_from_int(j.at("new_label").get<long long>());
  c.iteration = j.at("iteration").get<int>();
  c.actor = parse_actor(j.at("actor").get<std::string>());
  return c;
}

json DiagnosisSummary::to_json() const {
  json j = {{"n_comments", n_comments},
            {"n_toxic", n_toxic},
            {"n_nontoxic", n_nontoxic},
            {"n_unlabeled", n_unlabeled},
            {"fractions", {{"toxic", toxic_fraction}, {"nontoxic", nontoxic_fraction}}}};
  if (score_histogram) j["score_histogram"] = *score_histogram;
  if (borderline) j["borderline"] = *borderline;
  return j;
}

// ---------------------------------------------------------------------------
// Diagnosis

DiagnosisSummary diagnose(const Dataset& dataset, SessionMode mode, double threshold) {
  DiagnosisSummary d;
  d.n_comments = dataset.size();
  for (const auto& c : dataset.comments()) {
    const LabelRecord* rec = dataset.current_label(c.id);
    if (!rec) {
      ++d.n_unlabeled;
    } else if (rec->hard == Label::kToxic) {
      ++d.n_toxic;
    } else {
      ++d.n_nontoxic;
    }
  }
  const std::size_t labeled = d.n_toxic + d.n_nontoxic;
  if (labeled > 0) {
    d.toxic_fraction = static_cast<double>(d.n_toxic) / static_cast<double>(labeled);
    d.nontoxic_fraction = static_cast<double>(d.n_nontoxic) / static_cast<double>(labeled);
  }
  if (mode == SessionMode::kBlackbox) {
    // Latest black-box score per comment; evaluator records carry no score.
    std::map<std::string_view, double> scores;
    for (const auto& rec : dataset.label_history()) {
      if (rec.soft) scores[rec.comment_id] = *rec.soft;
    }
    std::array<std::size_t, 10> hist{};
    std::size_t borderline = 0;
    for (const auto& [_, s] : scores) {
      const auto bin = std::min<std::size_t>(static_cast<std::size_t>(std::floor(s * 10.0)), 9);
      ++hist[bin];
      if (std::abs(s - threshold) <= 0.05) ++borderline;
    }
    d.score_histogram = hist;
    d.borderline = borderline;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Scheduling

namespace {

std::vector<std::size_t> chunk_sizes(std::size_t n) {
  std::vector<std::size_t> sizes(kIterations, n / kIterations);
  for (std::size_t k = 0; k < n % kIterations; ++k) ++sizes[k];
  return sizes;
}

double uncertainty(const std::map<std::string, double>& probas, const std::string& id) {
  auto it = probas.find(id);
  if (it == probas.end()) fail(ErrorCode::kBadRequest, "no model probability for '" + id + "'");
  return std::abs(it->second - 0.5);
}

}  // namespace

BatchSchedule schedule_batches(const Dataset& dataset, BatchStrategy strategy, std::uint64_t seed,
                               const std::map<std::string, double>* probas) {
  if (dataset.empty()) fail(ErrorCode::kBadRequest, "cannot schedule an empty dataset");
  if (auto missing = dataset.unsplit_ids(); !missing.empty()) {
    fail(ErrorCode::kBadRequest, "comments without a split assignment", {{"ids", missing}});
  }
  if (strategy == BatchStrategy::kUncertainty && probas == nullptr) {
    fail(ErrorCode::kBadRequest, "uncertainty scheduling requires a model");
  }

  std::vector<std::string> train = dataset.ids_in_split(Split::kTrain);
  std::vector<std::string> test = dataset.ids_in_split(Split::kTest);
  std::mt19937_64 rng(seed);

  auto by_uncertainty = [&](const std::string& a, const std::string& b) {
    const double ua = uncertainty(*probas, a);
    const double ub = uncertainty(*probas, b);
    if (ua != ub) return ua < ub;
    return a < b;
  };
  if (strategy == BatchStrategy::kRandomStratified) {
    std::shuffle(train.begin(), train.end(), rng);
    std::shuffle(test.begin(), test.end(), rng);
  } else {
    std::sort(train.begin(), train.end(), by_uncertainty);
    std::sort(test.begin(), test.end(), by_uncertainty);
  }

  const auto total = chunk_sizes(dataset.size());
  const auto test_sizes = chunk_sizes(test.size());
  BatchSchedule schedule(kIterations);
  std::size_t ti = 0;
  std::size_t ri = 0;
  for (int k = 0; k < kIterations; ++k) {
    const std::size_t n_test = test_sizes[k];
    const std::size_t n_train = total[k] - n_test;
    auto& batch = schedule[k];
    batch.insert(batch.end(), train.begin() + static_cast<std::ptrdiff_t>(ri),
                 train.begin() + static_cast<std::ptrdiff_t>(ri + n_train));
    batch.insert(batch.end(), test.begin() + static_cast<std::ptrdiff_t>(ti),
                 test.begin() + static_cast<std::ptrdiff_t>(ti + n_test));
    ri += n_train;
    ti += n_test;
    if (strategy == BatchStrategy::kRandomStratified) {
      std::shuffle(batch.begin(), batch.end(), rng);
    } else {
      std::sort(batch.begin(), batch.end(), by_uncertainty);
    }
  }
  return schedule;
}

// ---------------------------------------------------------------------------
// Session

Session Session::create(std::string id, Dataset dataset, SessionMode mode, SessionConfig config) {
  if (dataset.empty()) fail(ErrorCode::kBadRequest, "dataset is empty");
  if (!(config.threshold > 0.0 && config.threshold < 1.0)) {
    fail(ErrorCode::kBadRequest, "threshold must lie in (0,1)");
  }
  if (auto unlabeled = dataset.unlabeled_ids(); !unlabeled.empty()) {
    std::string msg = mode == SessionMode::kGold ? "gold mode requires every comment labeled; unlabeled:"
                                                 : "blackbox mode requires seeded labels; unlabeled:";
    for (std::size_t i = 0; i < std::min<std::size_t>(unlabeled.size(), 20); ++i) {
      msg += " " + unlabeled[i];
    }
    if (unlabeled.size() > 20) msg += " ...";
    fail(ErrorCode::kBadRequest, msg, {{"unlabeled", unlabeled}});
  }
  const LabelSource expected = mode == SessionMode::kGold ? LabelSource::kGold : LabelSource::kBlackbox;
  std::vector<std::string> wrong_source;
  for (const auto& c : dataset.comments()) {
    if (dataset.current_label(c.id)->source != expected) wrong_source.push_back(c.id);
  }
  if (!wrong_source.empty()) {
    fail(ErrorCode::kBadRequest,
         std::string(to_string(mode)) + " mode requires every label to come from source '" +
             std::string(to_string(expected)) + "'",
         {{"ids", wrong_source}});
  }
  if (auto unsplit = dataset.unsplit_ids(); !unsplit.empty()) {
    fail(ErrorCode::kBadRequest, "comments without a split assignment", {{"ids", unsplit}});
  }

  Session s;
  s.id_ = std::move(id);
  s.mode_ = mode;
  s.config_ = config;
  s.train_ids_ = dataset.ids_in_split(Split::kTrain);
  s.test_ids_ = dataset.ids_in_split(Split::kTest);
  if (s.train_ids_.empty() || s.test_ids_.empty()) {
    fail(ErrorCode::kBadRequest, "train and test splits must both be non-empty");
  }

  std::vector<std::string> train_texts;
  train_texts.reserve(s.train_ids_.size());
  for (const auto& cid : s.train_ids_) train_texts.push_back(dataset.comment(cid).text);
  s.vocab_ = build_vocabulary(train_texts, config.min_df);
  for (std::size_t i = 0; i < s.train_ids_.size(); ++i) {
    s.train_features_.push_back(vectorize(train_texts[i], s.vocab_));
    s.feature_index_.emplace(s.train_ids_[i], i);
  }
  for (std::size_t i = 0; i < s.test_ids_.size(); ++i) {
    s.test_features_.push_back(vectorize(dataset.comment(s.test_ids_[i]).text, s.vocab_));
    s.feature_index_.emplace(s.test_ids_[i], i);
  }
  s.background_ = Background::from_features(s.train_features_, s.vocab_.size());

  s.seed_dataset_ = dataset;
  s.dataset_ = std::move(dataset);

  LinearModel baseline = s.fit();
  const BatchStrategy strategy = config.effective_strategy(mode);
  if (strategy == BatchStrategy::kUncertainty) {
    std::map<std::string, double> probas;
    for (const auto& cid : s.train_ids_) {
      probas[cid] = predict_proba(baseline, s.train_features_[s.feature_index_.find(cid)->second]);
    }
    for (const auto& cid : s.test_ids_) {
      probas[cid] = predict_proba(baseline, s.test_features_[s.feature_index_.find(cid)->second]);
    }
    s.schedule_ = schedule_batches(s.dataset_, strategy, config.seed, &probas);
  } else {
    s.schedule_ = schedule_batches(s.dataset_, strategy, config.seed);
  }

  s.history_.push_back(s.evaluate(baseline, 0));
  s.models_.push_back(std::move(baseline));
  return s;
}

std::vector<Label> Session::current_labels(std::span<const std::string> ids) const {
  std::vector<Label> out;
  out.reserve(ids.size());
  for (const auto& cid : ids) out.push_back(dataset_.current_label(cid)->hard);
  return out;
}

LinearModel Session::fit() const {
  return train(train_features_, current_labels(train_ids_), vocab_, config_.train);
}

std::optional<double> Session::reference_f1(const LinearModel& model) const {
  if (!reference_) return std::nullopt;
  std::vector<Label> preds;
  std::vector<Label> golds;
  for (std::size_t i = 0; i < test_ids_.size(); ++i) {
    preds.push_back(predict(model, test_features_[i], config_.threshold));
    golds.push_back(reference_->at(test_ids_[i]));
  }
  return macro_f1(preds, golds);
}

MetricsReport Session::evaluate(const LinearModel& model, int iteration) const {
  const std::vector<Label> golds = current_labels(test_ids_);
  std::vector<Label> preds;
  std::vector<double> probs;
  preds.reserve(test_ids_.size());
  probs.reserve(test_ids_.size());
  for (const auto& fv : test_features_) {
    const double p = predict_proba(model, fv);
    probs.push_back(p);
    preds.push_back(p >= config_.threshold ? Label::kToxic : Label::kNonToxic);
  }
  const MacroF1 f1 = macro_f1_detail(preds, golds);

  MetricsReport r;
  r.iteration = iteration;
  r.macro_f1 = f1.macro;
  r.per_class_f1 = f1.per_class;
  r.cross_entropy = cross_entropy(probs, golds);
  r.n_test = test_ids_.size();
  r.reference_macro_f1 = reference_f1(model);
  return r;
}

DiagnosisSummary Session::diagnose() const {
  return toxinspect::diagnose(dataset_, mode_, config_.threshold);
}

std::vector<BatchItem> Session::next_batch() const {
  if (complete()) fail(ErrorCode::kSessionComplete, "session complete");
  const LinearModel& model = models_.back();
  std::vector<BatchItem> items;
  for (const auto& cid : schedule_[static_cast<std::size_t>(current_iteration_)]) {
    BatchItem item;
    item.comment = dataset_.comment(cid);
    item.label = *dataset_.current_label(cid);
    item.split = *dataset_.split(cid);
    const std::size_t row = feature_index_.find(cid)->second;
    const auto& features = item.split == Split::kTrain ? train_features_ : test_features_;
    item.proba = predict_proba(model, features[row]);
    items.push_back(std::move(item));
  }
  return items;
}

MetricsReport Session::submit_corrections(std::span<const LabelEdit> edits, Actor default_actor) {
  if (complete()) fail(ErrorCode::kSessionComplete, "session complete");
  const int iteration = current_iteration_ + 1;
  const auto& batch = schedule_[static_cast<std::size_t>(current_iteration_)];
  const std::set<std::string_view> in_batch(batch.begin(), batch.end());

  std::map<std::string_view, const LabelEdit*> by_id;
  for (const auto& e : edits) {
    if (!in_batch.contains(e.comment_id)) {
      fail(ErrorCode::kBadRequest, "correction for '" + e.comment_id + "' is outside the open batch",
           {{"comment_id", e.comment_id}, {"iteration", iteration}});
    }
    if (!by_id.emplace(e.comment_id, &e).second) {
      fail(ErrorCode::kBadRequest, "duplicate correction for '" + e.comment_id + "'",
           {{"comment_id", e.comment_id}});
    }
  }

  std::vector<Label> before;
  std::vector<Label> after;
  std::vector<Correction> logged;
  for (const auto& cid : batch) {
    const Label old_label = dataset_.current_label(cid)->hard;
    Label new_label = old_label;
    Actor actor = default_actor;
    if (auto it = by_id.find(cid); it != by_id.end()) {
      new_label = it->second->new_label;
      actor = it->second->actor.value_or(default_actor);
    }
    before.push_back(old_label);
    after.push_back(new_label);
    logged.push_back(Correction{cid, old_label, new_label, iteration, actor});
  }

  // Training can still reject the corrected labels (e.g. a single class left),
  // so keep the previous labels until the new model exists.
  Dataset previous = dataset_;
  for (const auto& c : logged) {
    dataset_.append_label(LabelRecord{c.comment_id, c.new_label, std::nullopt,
                                      LabelSource::kEvaluator, iteration});
  }
  LinearModel model;
  try {
    model = fit();
  } catch (...) {
    dataset_ = std::move(previous);
    throw;
  }
  corrections_.insert(corrections_.end(), logged.begin(), logged.end());

  MetricsReport report = evaluate(model, iteration);
  report.mse_correction = correction_mse(before, after);
  report.n_corrected = static_cast<std::size_t>(
      std::count_if(logged.begin(), logged.end(),
                    [](const Correction& c) { return c.old_label != c.new_label; }));
  report.normalized_gain = normalized_gain(history_.back().macro_f1, report.macro_f1);

  history_.push_back(report);
  models_.push_back(std::move(model));
  current_iteration_ = iteration;
  return report;
}

void Session::attach_reference(std::map<std::string, Label> reference) {
  for (const auto& c : dataset_.comments()) {
    if (!reference.contains(c.id)) {
      fail(ErrorCode::kBadRequest, "reference labels do not cover comment '" + c.id + "'");
    }
  }
  reference_ = std::move(reference);
  for (std::size_t k = 0; k < history_.size(); ++k) {
    history_[k].reference_macro_f1 = reference_f1(models_[k]);
  }
}

Explanation Session::explain(std::string_view comment_id, std::size_t k) const {
  const auto split = dataset_.split(comment_id);
  if (!split) fail(ErrorCode::kNotFound, "unknown comment '" + std::string(comment_id) + "'");
  const std::size_t row = feature_index_.find(comment_id)->second;
  const auto& fv = *split == Split::kTrain ? train_features_[row] : test_features_[row];
  return explain_local(models_.back(), fv, background_, vocab_, k, std::string(comment_id));
}

GlobalExplanation Session::explain_global(std::size_t k) const {
  return toxinspect::explain_global(models_.back(), vocab_, k);
}

Session Session::replay(std::string id, const Dataset& seed_dataset, SessionMode mode,
                        const SessionConfig& config,
                        const std::optional<std::map<std::string, Label>>& reference,
                        std::span<const Correction> log) {
  Session s = create(std::move(id), seed_dataset, mode, config);
  if (reference) s.attach_reference(*reference);

  std::size_t pos = 0;
  while (pos < log.size()) {
    const int iteration = log[pos].iteration;
    if (iteration != s.current_iteration_ + 1) {
      fail(ErrorCode::kConflict, "correction log out of order at entry " + std::to_string(pos));
    }
    std::vector<LabelEdit> edits;
    const std::size_t start = pos;
    while (pos < log.size() && log[pos].iteration == iteration) {
      edits.push_back(LabelEdit{log[pos].comment_id, log[pos].new_label, log[pos].actor});
      ++pos;
    }
    s.submit_corrections(edits);
    const auto replayed = std::span(s.corrections_).subspan(start);
    if (!std::equal(replayed.begin(), replayed.end(), log.begin() + static_cast<std::ptrdiff_t>(start),
                    log.begin() + static_cast<std::ptrdiff_t>(pos))) {
      fail(ErrorCode::kConflict,
           "correction log does not match the seeded dataset at iteration " + std::to_string(iteration));
    }
  }
  return s;
}

// ---------------------------------------------------------------------------

std::vector<MetricsReport> run_with_oracle(Session& session, const OracleConfig& oracle) {
  if (!(oracle.effort >= 0.0 && oracle.effort <= 1.0)) {
    fail(ErrorCode::kBadRequest, "oracle effort must lie in [0,1]");
  }
  session.attach_reference(oracle.reference_labels);
  std::mt19937_64 rng(oracle.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (!session.complete()) {
    std::vector<LabelEdit> edits;
    for (const auto& item : session.next_batch()) {
      const Label truth = oracle.reference_labels.at(item.comment.id);
      if (item.label.hard != truth && (oracle.effort >= 1.0 || unit(rng) < oracle.effort)) {
        edits.push_back(LabelEdit{item.comment.id, truth, Actor::kOracle});
      }
    }
    session.submit_corrections(edits, Actor::kOracle);
  }
  return session.metric_history();
}

}  // namespace toxinspect
