#pragma once

// Unigram TF-IDF features. Vocabulary is fitted on training texts only.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace toxinspect {

// Case-folded tokens split on Unicode whitespace and punctuation. Script
// agnostic; no stemming.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
 public:
  Vocabulary() = default;

  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  std::size_t n_docs() const { return n_docs_; }

  std::optional<std::uint32_t> index_of(std::string_view term) const;
  const std::string& term(std::uint32_t index) const { return terms_[index]; }
  std::size_t doc_freq(std::uint32_t index) const { return doc_freq_[index]; }
  double idf(std::uint32_t index) const { return idf_[index]; }

  // Stable SHA-256 over the JSON form; binds a model to the vocabulary it was
  // trained against.
  std::string fingerprint() const;

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

  bool operator==(const Vocabulary& other) const {
    return n_docs_ == other.n_docs_ && terms_ == other.terms_ && doc_freq_ == other.doc_freq_;
  }

 private:
  friend Vocabulary build_vocabulary(std::span<const std::string>, std::size_t);
  void finalize();

  std::size_t n_docs_ = 0;
  std::vector<std::string> terms_;  // sorted; position is the index
  std::vector<std::size_t> doc_freq_;
  std::vector<double> idf_;
  std::map<std::string, std::uint32_t, std::less<>> lookup_;
};

// Keeps the terms whose document frequency reaches `min_df`, indexed in
// lexicographic (byte) order.
Vocabulary build_vocabulary(std::span<const std::string> train_texts, std::size_t min_df = 1);

// Sparse vector, entries sorted by index. Non-empty vectors have unit L2 norm.
struct FeatureVector {
  std::vector<std::pair<std::uint32_t, double>> entries;

  bool empty() const { return entries.empty(); }
  double norm() const;
  bool operator==(const FeatureVector&) const = default;
};

// Raw term counts times smoothed idf ln((1+N)/(1+df)) + 1, L2 normalized.
// Out-of-vocabulary tokens are ignored.
FeatureVector vectorize(std::string_view text, const Vocabulary& vocab);

}  // namespace toxinspect
