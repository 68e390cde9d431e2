#pragma once

// Shared fixtures, random generators and brute-force oracles for the tests and
// the acceptance binary. Nothing here calls into the library's numeric code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "toxinspect/dataset.hpp"
#include "toxinspect/feedback.hpp"
#include "toxinspect/synthetic.hpp"

namespace testing {

using toxinspect::Label;

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("toxinspect-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// --- generators -------------------------------------------------------------

inline std::vector<Label> random_labels(std::mt19937_64& rng, std::size_t n) {
  std::bernoulli_distribution coin(0.5);
  std::vector<Label> out(n);
  for (auto& l : out) l = coin(rng) ? Label::kToxic : Label::kNonToxic;
  return out;
}

inline std::vector<double> random_probs(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& p : out) {
    const double u = unit(rng);
    // Occasionally hit the clipping boundaries exactly.
    p = u < 0.05 ? 0.0 : u > 0.95 ? 1.0 : unit(rng);
  }
  return out;
}

inline std::string random_word(std::mt19937_64& rng, std::size_t alphabet = 8) {
  std::uniform_int_distribution<std::size_t> len(1, 3);
  std::uniform_int_distribution<std::size_t> ch(0, alphabet - 1);
  std::string w;
  for (std::size_t i = len(rng); i > 0; --i) w.push_back(static_cast<char>('a' + ch(rng)));
  return w;
}

inline std::vector<std::string> random_corpus(std::mt19937_64& rng, std::size_t max_docs,
                                              std::size_t max_terms) {
  std::uniform_int_distribution<std::size_t> n_docs(1, max_docs);
  std::uniform_int_distribution<std::size_t> n_terms(1, max_terms);
  std::vector<std::string> docs(n_docs(rng));
  for (auto& d : docs) {
    for (std::size_t i = n_terms(rng); i > 0; --i) d += (d.empty() ? "" : " ") + random_word(rng);
  }
  return docs;
}

// --- datasets -----------------------------------------------------------------

// Synthetic comments with the given labels recorded at iteration 0, split with
// a stratified 80/20 draw.
inline toxinspect::Dataset labeled_dataset(const toxinspect::synthetic::Corpus& corpus,
                                           const std::vector<Label>& labels, bool blackbox,
                                           std::uint64_t seed = 42, double test_fraction = 0.2) {
  using namespace toxinspect;
  const auto scores = synthetic::scores_for(labels, seed + 7);
  Dataset ds;
  for (std::size_t i = 0; i < corpus.comments.size(); ++i) {
    ds.add_comment(corpus.comments[i]);
    LabelRecord r{corpus.comments[i].id, labels[i], std::nullopt, LabelSource::kGold, 0};
    if (blackbox) {
      r.source = LabelSource::kBlackbox;
      r.soft = scores[i];
    }
    ds.append_label(std::move(r));
  }
  return assign_split(std::move(ds), test_fraction, seed);
}

inline toxinspect::Dataset gold_dataset(std::size_t n, std::uint64_t seed = 42) {
  const auto corpus = toxinspect::synthetic::make_corpus(n, seed);
  return labeled_dataset(corpus, corpus.clean_labels, false, seed);
}

inline std::map<std::string, Label> reference_of(const toxinspect::synthetic::Corpus& corpus) {
  std::map<std::string, Label> ref;
  for (std::size_t i = 0; i < corpus.comments.size(); ++i) ref[corpus.comments[i].id] = corpus.clean_labels[i];
  return ref;
}

// --- brute-force oracles ------------------------------------------------------

inline int bit(Label l) { return l == Label::kToxic ? 1 : 0; }

// Confusion-matrix counting; precision/recall form of F1.
inline double oracle_macro_f1(const std::vector<Label>& preds, const std::vector<Label>& golds) {
  std::set<int> classes;
  for (Label g : golds) classes.insert(bit(g));
  double total = 0.0;
  for (int c : classes) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const bool p = bit(preds[i]) == c;
      const bool g = bit(golds[i]) == c;
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
    }
    const double precision = tp + fp == 0 ? 0.0 : tp / (tp + fp);
    const double recall = tp + fn == 0 ? 0.0 : tp / (tp + fn);
    total += precision + recall == 0 ? 0.0 : 2 * precision * recall / (precision + recall);
  }
  return total / static_cast<double>(classes.size());
}

inline double oracle_cross_entropy(const std::vector<double>& probs, const std::vector<Label>& labels) {
  const double eps = 1e-12;
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::min(std::max(probs[i], eps), 1.0 - eps);
    const double y = bit(labels[i]);
    sum += y * std::log(p) + (1 - y) * std::log(1 - p);
  }
  return -sum / static_cast<double>(probs.size());
}

inline double oracle_mse(const std::vector<Label>& before, const std::vector<Label>& after) {
  double sum = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const double d = bit(before[i]) - bit(after[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(before.size());
}

inline double oracle_gain(double prev, double curr) {
  return prev == 1.0 ? curr - prev : (curr - prev) / (1.0 - prev);
}

// term -> weight for whitespace-separated lowercase ASCII text.
inline std::map<std::string, double> oracle_tfidf(const std::vector<std::string>& corpus, const std::string& text,
                                                  std::size_t min_df = 1) {
  auto words = [](const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
  };
  std::map<std::string, double> df;
  for (const auto& d : corpus) {
    const auto ws = words(d);
    for (const auto& w : std::set<std::string>(ws.begin(), ws.end())) df[w] += 1;
  }
  const double n = static_cast<double>(corpus.size());
  std::map<std::string, double> v;
  for (const auto& w : words(text)) {
    if (df.contains(w) && df[w] >= static_cast<double>(min_df)) v[w] += 1;
  }
  double norm = 0.0;
  for (auto& [w, x] : v) {
    x *= std::log((1 + n) / (1 + df[w])) + 1;
    norm += x * x;
  }
  for (auto& [w, x] : v) x /= std::sqrt(norm);
  return v;
}

}  // namespace testing
