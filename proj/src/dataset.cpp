#include "toxinspect/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <iterator>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "text_util.hpp"
#include "toxinspect/csv.hpp"
#include "toxinspect/error.hpp"

namespace toxinspect {

using nlohmann::json;

Label label_from_int(long long v) {
  if (v == 0) return Label::kNonToxic;
  if (v == 1) return Label::kToxic;
  fail(ErrorCode::kBadRequest, "label must be 0 or 1, got " + std::to_string(v));
}

std::string_view to_string(LabelSource s) {
  switch (s) {
    case LabelSource::kGold: return "gold";
    case LabelSource::kBlackbox: return "blackbox";
    case LabelSource::kEvaluator: return "evaluator";
  }
  return "gold";
}

std::string_view to_string(Split s) { return s == Split::kTrain ? "train" : "test"; }

LabelSource parse_label_source(std::string_view s) {
  if (s == "gold") return LabelSource::kGold;
  if (s == "blackbox") return LabelSource::kBlackbox;
  if (s == "evaluator") return LabelSource::kEvaluator;
  fail(ErrorCode::kBadRequest, "unknown label source '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
  const std::string folded = text::fold_case(text::trim(s));
  if (folded == "train") return Split::kTrain;
  if (folded == "test") return Split::kTest;
  fail(ErrorCode::kBadRequest, "unknown split token '" + std::string(s) + "'");
}

DatasetFormat parse_dataset_format(std::string_view s) {
  if (s == "jsonl") return DatasetFormat::kJsonl;
  if (s == "csv") return DatasetFormat::kCsv;
  fail(ErrorCode::kBadRequest, "unknown dataset format '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Dataset

void Dataset::add_comment(Comment comment) {
  if (comment.id.empty()) fail(ErrorCode::kBadRequest, "comment id is empty");
  if (text::trim(comment.text).empty()) {
    fail(ErrorCode::kBadRequest, "comment '" + comment.id + "' has empty text");
  }
  if (index_.contains(comment.id)) {
    fail(ErrorCode::kBadRequest, "duplicate id '" + comment.id + "'",
         {{"duplicates", {comment.id}}});
  }
  index_.emplace(comment.id, comments_.size());
  comments_.push_back(std::move(comment));
}

void Dataset::append_label(LabelRecord record) {
  if (!contains(record.comment_id)) {
    fail(ErrorCode::kNotFound, "label for unknown comment '" + record.comment_id + "'");
  }
  if (record.iteration < 0) fail(ErrorCode::kBadRequest, "negative label iteration");
  if (record.soft.has_value() != (record.source == LabelSource::kBlackbox)) {
    fail(ErrorCode::kBadRequest, "soft score must accompany exactly the blackbox records");
  }
  if (record.soft && !(*record.soft >= 0.0 && *record.soft <= 1.0)) {
    fail(ErrorCode::kBadRequest, "soft score outside [0,1]");
  }
  auto it = current_.find(record.comment_id);
  if (it != current_.end() && history_[it->second].iteration > record.iteration) {
    fail(ErrorCode::kConflict, "label for '" + record.comment_id + "' at iteration " +
                                   std::to_string(record.iteration) +
                                   " predates its current record");
  }
  const std::size_t pos = history_.size();
  current_.insert_or_assign(record.comment_id, pos);
  history_.push_back(std::move(record));
}

void Dataset::set_split(std::string_view id, Split split) {
  if (!contains(id)) fail(ErrorCode::kNotFound, "split for unknown comment '" + std::string(id) + "'");
  split_.insert_or_assign(std::string(id), split);
}

bool Dataset::contains(std::string_view id) const { return index_.find(id) != index_.end(); }

const Comment& Dataset::comment(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) fail(ErrorCode::kNotFound, "unknown comment '" + std::string(id) + "'");
  return comments_[it->second];
}

const LabelRecord* Dataset::current_label(std::string_view id) const {
  auto it = current_.find(id);
  return it == current_.end() ? nullptr : &history_[it->second];
}

std::optional<Split> Dataset::split(std::string_view id) const {
  auto it = split_.find(id);
  if (it == split_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Dataset::ids() const {
  std::vector<std::string> out;
  out.reserve(comments_.size());
  for (const auto& c : comments_) out.push_back(c.id);
  return out;
}

std::vector<std::string> Dataset::ids_in_split(Split split) const {
  std::vector<std::string> out;
  for (const auto& c : comments_) {
    auto it = split_.find(c.id);
    if (it != split_.end() && it->second == split) out.push_back(c.id);
  }
  return out;
}

std::vector<std::string> Dataset::unlabeled_ids() const {
  std::vector<std::string> out;
  for (const auto& c : comments_) {
    if (!current_.contains(c.id)) out.push_back(c.id);
  }
  return out;
}

std::vector<std::string> Dataset::unsplit_ids() const {
  std::vector<std::string> out;
  for (const auto& c : comments_) {
    if (!split_.contains(c.id)) out.push_back(c.id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ingest

Label map_to_binary(std::string_view raw_label, const std::set<std::string>& nontoxic_sentinels) {
  const std::string_view trimmed = text::trim(raw_label);
  if (trimmed.empty()) fail(ErrorCode::kBadRequest, "empty raw label");
  if (nontoxic_sentinels.empty()) fail(ErrorCode::kBadRequest, "empty non-toxic sentinel set");
  const std::string folded = text::fold_case(trimmed);
  for (const auto& sentinel : nontoxic_sentinels) {
    if (text::fold_case(text::trim(sentinel)) == folded) return Label::kNonToxic;
  }
  return Label::kToxic;
}

namespace {

// One row, already pulled out of its container format. Empty optionals mean the
// field was absent or blank.
struct RawRow {
  std::size_t row = 0;
  std::optional<std::string> id;
  std::optional<std::string> text;
  std::optional<Label> label;
  std::optional<std::string> split;
  std::optional<std::string> lang;
  std::optional<double> score;
};

[[noreturn]] void row_error(std::size_t row, const std::string& what) {
  fail(ErrorCode::kBadRequest, "row " + std::to_string(row) + ": " + what, {{"row", row}});
}

Label label_from_string(std::string_view raw, const IngestConfig& config, std::size_t row) {
  const std::string_view t = text::trim(raw);
  if (t == "0") return Label::kNonToxic;
  if (t == "1") return Label::kToxic;
  try {
    return map_to_binary(t, config.nontoxic_sentinels);
  } catch (const Error& e) {
    row_error(row, e.what());
  }
}

double score_from_string(std::string_view raw, std::size_t row) {
  const std::string s(text::trim(raw));
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    row_error(row, "score '" + s + "' is not a number");
  }
  if (used != s.size()) row_error(row, "score '" + s + "' is not a number");
  return v;
}

RawRow read_json_row(const json& obj, std::size_t row, const IngestConfig& config) {
  if (!obj.is_object()) row_error(row, "expected a JSON object");
  RawRow out;
  out.row = row;
  auto string_field = [&](const std::string& name) -> std::optional<std::string> {
    auto it = obj.find(name);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    row_error(row, "field '" + name + "' must be a string");
  };
  out.id = string_field(config.id_field);
  out.text = string_field(config.text_field);
  out.split = string_field(config.split_field);
  out.lang = string_field(config.lang_field);
  if (auto it = obj.find(config.label_field); it != obj.end() && !it->is_null()) {
    if (it->is_boolean()) {
      out.label = it->get<bool>() ? Label::kToxic : Label::kNonToxic;
    } else if (it->is_number_integer()) {
      const auto v = it->get<long long>();
      if (v != 0 && v != 1) row_error(row, "numeric label must be 0 or 1");
      out.label = label_from_int(v);
    } else if (it->is_string()) {
      out.label = label_from_string(it->get<std::string>(), config, row);
    } else {
      row_error(row, "label must be 0, 1 or a string");
    }
  }
  if (auto it = obj.find(config.score_field); it != obj.end() && !it->is_null()) {
    if (!it->is_number()) row_error(row, "score must be a number");
    out.score = it->get<double>();
  }
  return out;
}

std::vector<RawRow> read_jsonl(std::string_view content, const IngestConfig& config) {
  std::vector<RawRow> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    ++line_no;
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (text::trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      row_error(line_no, std::string("malformed JSON: ") + e.what());
    }
    rows.push_back(read_json_row(obj, line_no, config));
  }
  return rows;
}

std::vector<RawRow> read_csv(std::string_view content, const IngestConfig& config) {
  std::vector<csv::Row> table = csv::parse(content);
  if (table.empty()) fail(ErrorCode::kBadRequest, "CSV input has no header row");
  const auto& header = table.front().fields;
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (text::trim(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  const auto id_col = column(config.id_field);
  const auto text_col = column(config.text_field);
  if (!id_col || !text_col) {
    fail(ErrorCode::kBadRequest, "CSV header must name '" + config.id_field + "' and '" +
                                     config.text_field + "' columns",
         {{"row", 1}});
  }
  const auto label_col = column(config.label_field);
  const auto split_col = column(config.split_field);
  const auto lang_col = column(config.lang_field);
  const auto score_col = column(config.score_field);

  std::vector<RawRow> rows;
  for (std::size_t r = 1; r < table.size(); ++r) {
    const auto& rec = table[r];
    if (rec.fields.size() != header.size()) {
      row_error(rec.line, "expected " + std::to_string(header.size()) + " fields, got " +
                              std::to_string(rec.fields.size()));
    }
    auto cell = [&](std::optional<std::size_t> col) -> std::optional<std::string> {
      if (!col || text::trim(rec.fields[*col]).empty()) return std::nullopt;
      return rec.fields[*col];
    };
    RawRow out;
    out.row = rec.line;
    out.id = cell(id_col);
    if (out.id) out.id = std::string(text::trim(*out.id));
    out.text = cell(text_col);
    out.split = cell(split_col);
    out.lang = cell(lang_col);
    if (auto l = cell(label_col)) out.label = label_from_string(*l, config, rec.line);
    if (auto s = cell(score_col)) out.score = score_from_string(*s, rec.line);
    rows.push_back(std::move(out));
  }
  return rows;
}

}  // namespace

Dataset ingest_dataset(std::string_view content, DatasetFormat format, const IngestConfig& config) {
  if (!text::is_valid_utf8(content)) fail(ErrorCode::kBadRequest, "input is not valid UTF-8");
  if (content.starts_with("\xEF\xBB\xBF")) content.remove_prefix(3);

  const std::vector<RawRow> rows =
      format == DatasetFormat::kJsonl ? read_jsonl(content, config) : read_csv(content, config);

  std::vector<std::string> duplicates;
  {
    std::map<std::string_view, int> seen;
    for (const auto& r : rows) {
      if (!r.id) row_error(r.row, "missing id");
      if (++seen[*r.id] == 2) duplicates.push_back(*r.id);
    }
  }
  if (!duplicates.empty()) {
    std::string msg = "duplicate ids:";
    for (const auto& d : duplicates) msg += " " + d;
    fail(ErrorCode::kBadRequest, msg, {{"duplicates", duplicates}});
  }

  Dataset ds;
  for (const auto& r : rows) {
    if (!r.text || text::trim(*r.text).empty()) row_error(r.row, "empty text");
    ds.add_comment(Comment{*r.id, *r.text, r.lang});
    std::optional<Split> split;
    if (r.split) {
      try {
        split = parse_split(*r.split);
      } catch (const Error& e) {
        row_error(r.row, e.what());
      }
      ds.set_split(*r.id, *split);
    }
    if (r.score) {
      if (!(*r.score >= 0.0 && *r.score <= 1.0)) row_error(r.row, "score outside [0,1]");
      const Label hard = r.label.value_or(*r.score >= config.blackbox_threshold ? Label::kToxic
                                                                                 : Label::kNonToxic);
      ds.append_label(LabelRecord{*r.id, hard, r.score, LabelSource::kBlackbox, 0});
    } else if (r.label) {
      ds.append_label(LabelRecord{*r.id, *r.label, std::nullopt, LabelSource::kGold, 0});
    }
  }
  return ds;
}

Dataset ingest_dataset(std::istream& in, DatasetFormat format, const IngestConfig& config) {
  std::string content{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return ingest_dataset(std::string_view(content), format, config);
}

void serialize_jsonl(const Dataset& dataset, std::ostream& out) {
  for (const auto& c : dataset.comments()) {
    json row;
    row["id"] = c.id;
    row["text"] = c.text;
    if (c.lang) row["lang"] = *c.lang;
    if (const LabelRecord* rec = dataset.current_label(c.id)) {
      row["label"] = to_int(rec->hard);
      if (rec->soft) row["score"] = *rec->soft;
    }
    if (auto s = dataset.split(c.id)) row["split"] = to_string(*s);
    out << row.dump() << '\n';
  }
}

std::string serialize_jsonl(const Dataset& dataset) {
  std::ostringstream os;
  serialize_jsonl(dataset, os);
  return os.str();
}

// ---------------------------------------------------------------------------
// Split assignment

Dataset assign_split(Dataset dataset, double test_fraction, std::uint64_t seed, bool stratified) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    fail(ErrorCode::kBadRequest, "test_fraction must lie in (0,1)");
  }
  const std::vector<std::string> pending = dataset.unsplit_ids();
  if (pending.empty()) return dataset;

  // Strata: 0 = nontoxic, 1 = toxic, 2 = unlabeled.
  std::array<std::vector<std::string>, 3> strata;
  for (const auto& id : pending) {
    const LabelRecord* rec = stratified ? dataset.current_label(id) : nullptr;
    strata[rec ? to_int(rec->hard) : 2].push_back(id);
  }
  if (stratified) {
    for (int cls = 0; cls < 2; ++cls) {
      if (strata[cls].size() == 1) {
        fail(ErrorCode::kBadRequest, "stratification impossible: class " + std::to_string(cls) +
                                         " has fewer than 2 items");
      }
    }
  }

  // Largest-remainder apportionment keeps the overall test count at
  // round(n * fraction) while splitting each stratum proportionally.
  const std::size_t n = pending.size();
  std::size_t total_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  if (n >= 2) total_test = std::clamp<std::size_t>(total_test, 1, n - 1);
  std::array<std::size_t, 3> quota{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (int s = 0; s < 3; ++s) {
    const double exact = static_cast<double>(strata[s].size()) * static_cast<double>(total_test) /
                         static_cast<double>(n);
    quota[s] = static_cast<std::size_t>(std::floor(exact));
    remainder[s] = exact - static_cast<double>(quota[s]);
    assigned += quota[s];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainder[a] > remainder[b]; });
  for (int s : order) {
    if (assigned >= total_test) break;
    if (quota[s] < strata[s].size()) {
      ++quota[s];
      ++assigned;
    }
  }

  std::mt19937_64 rng(seed);
  for (int s = 0; s < 3; ++s) {
    auto& ids = strata[s];
    std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      dataset.set_split(ids[i], i < quota[s] ? Split::kTest : Split::kTrain);
    }
  }
  return dataset;
}

}  // namespace toxinspect
