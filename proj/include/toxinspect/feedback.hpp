#pragma once

// The feedback session: seed labels, five 20% review batches drawn from both
// splits, retrain-and-evaluate after each batch, append-only correction log.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "toxinspect/classifier.hpp"
#include "toxinspect/dataset.hpp"
#include "toxinspect/explain.hpp"
#include "toxinspect/featurizer.hpp"
#include "toxinspect/metrics.hpp"

namespace toxinspect {

inline constexpr int kIterations = 5;

enum class SessionMode { kGold, kBlackbox };
enum class BatchStrategy { kRandomStratified, kUncertainty };
enum class Actor { kHuman, kOracle };

std::string_view to_string(SessionMode m);
std::string_view to_string(BatchStrategy s);
std::string_view to_string(Actor a);
SessionMode parse_session_mode(std::string_view s);
BatchStrategy parse_batch_strategy(std::string_view s);
Actor parse_actor(std::string_view s);

struct SessionConfig {
  std::uint64_t seed = 42;
  // Unset: random_stratified in gold mode, uncertainty in blackbox mode.
  std::optional<BatchStrategy> strategy;
  double threshold = 0.5;
  TrainConfig train;
  std::size_t min_df = 1;
  // Used when a dataset arrives without a split.
  double test_fraction = 0.2;

  BatchStrategy effective_strategy(SessionMode mode) const;
  nlohmann::json to_json() const;
  static SessionConfig from_json(const nlohmann::json& j);
  bool operator==(const SessionConfig&) const = default;
};

struct Correction {
  std::string comment_id;
  Label old_label = Label::kNonToxic;
  Label new_label = Label::kNonToxic;
  int iteration = 1;
  Actor actor = Actor::kHuman;

  nlohmann::json to_json() const;
  static Correction from_json(const nlohmann::json& j);
  bool operator==(const Correction&) const = default;
};

// What a reviewer submits for one comment of the open batch.
struct LabelEdit {
  std::string comment_id;
  Label new_label = Label::kNonToxic;
  std::optional<Actor> actor;  // defaults to the submit call's actor
};

struct BatchItem {
  Comment comment;
  LabelRecord label;
  Split split = Split::kTrain;
  double proba = 0.5;  // latest model's toxicity probability
};

using BatchSchedule = std::vector<std::vector<std::string>>;

struct DiagnosisSummary {
  std::size_t n_comments = 0;
  std::size_t n_toxic = 0;
  std::size_t n_nontoxic = 0;
  std::size_t n_unlabeled = 0;
  double toxic_fraction = 0.0;     // of labeled comments
  double nontoxic_fraction = 0.0;  // of labeled comments
  // Blackbox mode only.
  std::optional<std::array<std::size_t, 10>> score_histogram;
  std::optional<std::size_t> borderline;  // |score - threshold| <= 0.05

  nlohmann::json to_json() const;
};

DiagnosisSummary diagnose(const Dataset& dataset, SessionMode mode, double threshold = 0.5);

// Five batches partitioning all comments. Global batch sizes are n/5 with the
// remainder on the earliest batches; each split is spread as evenly as
// possible so that every batch holds train and test items whenever each split
// has at least five. `probas` (id -> model probability) is required for the
// uncertainty strategy, which orders by |p - 0.5| then id.
BatchSchedule schedule_batches(const Dataset& dataset, BatchStrategy strategy, std::uint64_t seed,
                               const std::map<std::string, double>* probas = nullptr);

struct OracleConfig {
  std::map<std::string, Label> reference_labels;
  double effort = 1.0;  // probability of fixing each wrong label
  std::uint64_t seed = 42;
};

class Session {
 public:
  // Validates preconditions, fits the vocabulary on the training split, trains
  // the iteration-0 model, builds the batch schedule and records the baseline.
  static Session create(std::string id, Dataset dataset, SessionMode mode,
                        SessionConfig config = {});

  const std::string& id() const { return id_; }
  SessionMode mode() const { return mode_; }
  const SessionConfig& config() const { return config_; }
  const Dataset& dataset() const { return dataset_; }
  const Dataset& seed_dataset() const { return seed_dataset_; }
  const BatchSchedule& schedule() const { return schedule_; }
  int current_iteration() const { return current_iteration_; }
  bool complete() const { return current_iteration_ >= kIterations; }
  const std::vector<Correction>& correction_log() const { return corrections_; }
  const std::vector<MetricsReport>& metric_history() const { return history_; }
  const std::vector<LinearModel>& model_snapshots() const { return models_; }
  const LinearModel& latest_model() const { return models_.back(); }
  const Vocabulary& vocabulary() const { return vocab_; }
  const Background& background() const { return background_; }
  const std::optional<std::map<std::string, Label>>& reference() const { return reference_; }

  DiagnosisSummary diagnose() const;

  // The open batch (iteration current+1) in schedule order. Read-only.
  std::vector<BatchItem> next_batch() const;

  // Applies the edits to the open batch; batch items without an edit are
  // confirmed as-is. Retrains from scratch, evaluates on the test split and
  // closes the iteration.
  MetricsReport submit_corrections(std::span<const LabelEdit> edits,
                                   Actor default_actor = Actor::kHuman);

  // Hidden reference for scripted runs; fills reference_macro_f1 on every
  // report so far and every later one.
  void attach_reference(std::map<std::string, Label> reference);

  Explanation explain(std::string_view comment_id, std::size_t k = 10) const;
  GlobalExplanation explain_global(std::size_t k = 10) const;

  // Rebuilds a session from its seeded dataset and correction log.
  static Session replay(std::string id, const Dataset& seed_dataset, SessionMode mode,
                        const SessionConfig& config,
                        const std::optional<std::map<std::string, Label>>& reference,
                        std::span<const Correction> log);

 private:
  Session() = default;

  std::vector<Label> current_labels(std::span<const std::string> ids) const;
  MetricsReport evaluate(const LinearModel& model, int iteration) const;
  std::optional<double> reference_f1(const LinearModel& model) const;
  LinearModel fit() const;

  std::string id_;
  SessionMode mode_ = SessionMode::kGold;
  SessionConfig config_;
  Dataset seed_dataset_;
  Dataset dataset_;
  BatchSchedule schedule_;
  int current_iteration_ = 0;
  std::vector<Correction> corrections_;
  std::vector<MetricsReport> history_;
  std::vector<LinearModel> models_;
  std::optional<std::map<std::string, Label>> reference_;

  // Derived once at creation; texts and splits never change.
  Vocabulary vocab_;
  std::vector<std::string> train_ids_;
  std::vector<std::string> test_ids_;
  std::vector<FeatureVector> train_features_;
  std::vector<FeatureVector> test_features_;
  std::map<std::string, std::size_t, std::less<>> feature_index_;  // id -> row in train or test
  Background background_;
};

// Plays the evaluator for all remaining iterations: each wrong label in the
// open batch is fixed with probability `effort`. Returns the full history.
std::vector<MetricsReport> run_with_oracle(Session& session, const OracleConfig& oracle);

}  // namespace toxinspect
