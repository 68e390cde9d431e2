#include "toxinspect/featurizer.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <cmath>
#include <set>

#include "text_util.hpp"
#include "toxinspect/error.hpp"
#include "toxinspect/hash.hpp"

namespace toxinspect {

namespace {

bool is_separator(UChar32 c) { return u_isUWhiteSpace(c) || u_ispunct(c); }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  const auto* p = reinterpret_cast<const uint8_t*>(text.data());
  const int32_t n = static_cast<int32_t>(text.size());
  int32_t i = 0;
  int32_t start = -1;
  auto flush = [&](int32_t end) {
    if (start >= 0 && end > start) {
      tokens.push_back(text::fold_case(text.substr(static_cast<std::size_t>(start),
                                                   static_cast<std::size_t>(end - start))));
    }
    start = -1;
  };
  while (i < n) {
    const int32_t at = i;
    UChar32 c;
    U8_NEXT(p, i, n, c);
    // Invalid bytes act as separators.
    if (c < 0 || is_separator(c)) {
      flush(at);
    } else if (start < 0) {
      start = at;
    }
  }
  flush(n);
  return tokens;
}

// ---------------------------------------------------------------------------

std::optional<std::uint32_t> Vocabulary::index_of(std::string_view term) const {
  auto it = lookup_.find(term);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::finalize() {
  lookup_.clear();
  idf_.resize(terms_.size());
  const double n = static_cast<double>(n_docs_);
  for (std::uint32_t i = 0; i < terms_.size(); ++i) {
    lookup_.emplace(terms_[i], i);
    idf_[i] = std::log((1.0 + n) / (1.0 + static_cast<double>(doc_freq_[i]))) + 1.0;
  }
}

std::string Vocabulary::fingerprint() const { return sha256_hex(to_json().dump()); }

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json terms = nlohmann::json::array();
  for (std::uint32_t i = 0; i < terms_.size(); ++i) {
    terms.push_back({{"term", terms_[i]}, {"index", i}, {"df", doc_freq_[i]}});
  }
  return {{"n_docs", n_docs_}, {"terms", std::move(terms)}};
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  Vocabulary v;
  v.n_docs_ = j.at("n_docs").get<std::size_t>();
  if (v.n_docs_ == 0) fail(ErrorCode::kBadRequest, "vocabulary n_docs must be >= 1");
  const auto& terms = j.at("terms");
  v.terms_.resize(terms.size());
  v.doc_freq_.resize(terms.size());
  std::vector<bool> filled(terms.size(), false);
  for (const auto& t : terms) {
    const auto idx = t.at("index").get<std::size_t>();
    if (idx >= terms.size() || filled[idx]) {
      fail(ErrorCode::kBadRequest, "vocabulary indices are not a bijection onto 0..n-1");
    }
    filled[idx] = true;
    v.terms_[idx] = t.at("term").get<std::string>();
    v.doc_freq_[idx] = t.at("df").get<std::size_t>();
    if (v.doc_freq_[idx] < 1 || v.doc_freq_[idx] > v.n_docs_) {
      fail(ErrorCode::kBadRequest, "document frequency out of range for '" + v.terms_[idx] + "'");
    }
  }
  v.finalize();
  if (v.lookup_.size() != v.terms_.size()) fail(ErrorCode::kBadRequest, "duplicate vocabulary term");
  return v;
}

Vocabulary build_vocabulary(std::span<const std::string> train_texts, std::size_t min_df) {
  if (train_texts.empty()) fail(ErrorCode::kBadRequest, "cannot build a vocabulary from no texts");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : train_texts) {
    const auto tokens = tokenize(doc);
    const std::set<std::string> unique(tokens.begin(), tokens.end());
    for (const auto& t : unique) ++df[t];
  }
  Vocabulary v;
  v.n_docs_ = train_texts.size();
  // std::map iterates in byte order, which fixes the index assignment.
  for (const auto& [term, count] : df) {
    if (count >= min_df) {
      v.terms_.push_back(term);
      v.doc_freq_.push_back(count);
    }
  }
  if (v.terms_.empty()) fail(ErrorCode::kBadRequest, "vocabulary is empty after min_df filtering");
  v.finalize();
  return v;
}

// ---------------------------------------------------------------------------

double FeatureVector::norm() const {
  double s = 0.0;
  for (const auto& [_, w] : entries) s += w * w;
  return std::sqrt(s);
}

FeatureVector vectorize(std::string_view text, const Vocabulary& vocab) {
  std::map<std::uint32_t, double> counts;
  for (const auto& token : tokenize(text)) {
    if (auto idx = vocab.index_of(token)) counts[*idx] += 1.0;
  }
  FeatureVector fv;
  fv.entries.reserve(counts.size());
  double sq = 0.0;
  for (const auto& [idx, tf] : counts) {
    const double w = tf * vocab.idf(idx);
    fv.entries.emplace_back(idx, w);
    sq += w * w;
  }
  if (sq > 0.0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& [_, w] : fv.entries) w *= inv;
  }
  return fv;
}

}  // namespace toxinspect
