#pragma once

// Comments under audit, their label history and the train/test split.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace toxinspect {

enum class Label : std::uint8_t { kNonToxic = 0, kToxic = 1 };

constexpr int to_int(Label l) { return static_cast<int>(l); }
constexpr Label flip(Label l) { return l == Label::kToxic ? Label::kNonToxic : Label::kToxic; }
Label label_from_int(long long v);

enum class LabelSource { kGold, kBlackbox, kEvaluator };
enum class Split { kTrain, kTest };

std::string_view to_string(LabelSource s);
std::string_view to_string(Split s);
LabelSource parse_label_source(std::string_view s);
// Accepts "train" / "test" after trimming and case folding.
Split parse_split(std::string_view s);

struct Comment {
  std::string id;
  std::string text;
  std::optional<std::string> lang;

  bool operator==(const Comment&) const = default;
};

struct LabelRecord {
  std::string comment_id;
  Label hard = Label::kNonToxic;
  std::optional<double> soft;  // present iff source == kBlackbox
  LabelSource source = LabelSource::kGold;
  int iteration = 0;  // 0 = seed

  bool operator==(const LabelRecord&) const = default;
};

class Dataset {
 public:
  // Rejects duplicate ids and texts that are blank after trimming.
  void add_comment(Comment comment);

  // Appends to the history; the newest record becomes current. A record may not
  // carry an iteration older than the comment's current record.
  void append_label(LabelRecord record);

  void set_split(std::string_view id, Split split);

  const std::vector<Comment>& comments() const { return comments_; }
  const std::vector<LabelRecord>& label_history() const { return history_; }
  std::size_t size() const { return comments_.size(); }
  bool empty() const { return comments_.empty(); }

  bool contains(std::string_view id) const;
  const Comment& comment(std::string_view id) const;
  const LabelRecord* current_label(std::string_view id) const;
  std::optional<Split> split(std::string_view id) const;

  // Ids in insertion order.
  std::vector<std::string> ids() const;
  std::vector<std::string> ids_in_split(Split split) const;
  std::vector<std::string> unlabeled_ids() const;
  std::vector<std::string> unsplit_ids() const;

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<Comment> comments_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<LabelRecord> history_;
  std::map<std::string, std::size_t, std::less<>> current_;  // id -> position in history_
  std::map<std::string, Split, std::less<>> split_;
};

enum class DatasetFormat { kJsonl, kCsv };
DatasetFormat parse_dataset_format(std::string_view s);

struct IngestConfig {
  std::string id_field = "id";
  std::string text_field = "text";
  std::string label_field = "label";
  std::string split_field = "split";
  std::string lang_field = "lang";
  // Optional black-box score column; when present the row's label is recorded
  // with source = blackbox.
  std::string score_field = "score";
  std::set<std::string> nontoxic_sentinels{"normal"};
  double blackbox_threshold = 0.5;
};

// Parses a whole JSONL or CSV document. Labeled rows get a gold record at
// iteration 0 (blackbox when a score is present); unlabeled rows stay
// unlabeled. Throws Error(kBadRequest) with the 1-based row number on malformed
// input and lists every duplicated id.
Dataset ingest_dataset(std::istream& in, DatasetFormat format, const IngestConfig& config = {});
Dataset ingest_dataset(std::string_view content, DatasetFormat format,
                       const IngestConfig& config = {});

// Writes one JSONL line per comment with its current label, score and split.
// For a dataset holding only iteration-0 records this is the exact inverse of
// ingest_dataset with the default config.
void serialize_jsonl(const Dataset& dataset, std::ostream& out);
std::string serialize_jsonl(const Dataset& dataset);

// 0 when the trimmed, case-folded label is a sentinel, else 1.
Label map_to_binary(std::string_view raw_label,
                    const std::set<std::string>& nontoxic_sentinels = {"normal"});

// Assigns train/test to every unassigned comment. When `stratified` is set and
// labels exist, each label class is split in proportion; unlabeled comments
// form their own stratum. Pre-assigned comments are never touched.
Dataset assign_split(Dataset dataset, double test_fraction, std::uint64_t seed,
                     bool stratified = true);

}  // namespace toxinspect
