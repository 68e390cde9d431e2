#include "toxinspect/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "toxinspect/error.hpp"

namespace toxinspect::synthetic {

const std::vector<std::string>& toxic_lexicon() {
  static const std::vector<std::string> words{"idiot",   "stupid",    "moron",     "trash", "loser",
                                              "pathetic", "disgusting", "worthless", "ugly",  "dumb"};
  return words;
}

const std::vector<std::string>& benign_lexicon() {
  static const std::vector<std::string> words{"lovely",  "thanks",    "kind",     "great",   "helpful",
                                              "wonderful", "friendly", "welcome", "nice", "beautiful"};
  return words;
}

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words{"the", "a",      "you",   "are",   "this",
                                              "is",  "really", "today", "people", "so"};
  return words;
}

Corpus make_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> n_class(2, 4);
  std::uniform_int_distribution<int> n_filler(1, 4);
  std::uniform_int_distribution<std::size_t> pick(0, 9);

  Corpus corpus;
  corpus.comments.reserve(n);
  corpus.clean_labels.reserve(n);
  const int width = static_cast<int>(std::to_string(n).size());
  for (std::size_t i = 0; i < n; ++i) {
    const Label label = coin(rng) ? Label::kToxic : Label::kNonToxic;
    const auto& lexicon = label == Label::kToxic ? toxic_lexicon() : benign_lexicon();
    std::vector<std::string> words;
    for (int k = n_class(rng); k > 0; --k) words.push_back(lexicon[pick(rng)]);
    for (int k = n_filler(rng); k > 0; --k) words.push_back(filler_words()[pick(rng)]);
    std::shuffle(words.begin(), words.end(), rng);
    std::string text;
    for (const auto& w : words) {
      if (!text.empty()) text.push_back(' ');
      text += w;
    }
    std::string id = std::to_string(i);
    id.insert(0, static_cast<std::size_t>(width) - id.size(), '0');
    corpus.comments.push_back(Comment{"c" + id, std::move(text), "en"});
    corpus.clean_labels.push_back(label);
  }
  return corpus;
}

std::vector<Label> inject_noise(std::span<const Label> clean, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) fail(ErrorCode::kBadRequest, "noise rate must lie in [0,1]");
  std::vector<Label> noisy(clean.begin(), clean.end());
  std::vector<std::size_t> order(clean.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto flips = static_cast<std::size_t>(std::llround(rate * static_cast<double>(clean.size())));
  for (std::size_t i = 0; i < flips; ++i) noisy[order[i]] = flip(noisy[order[i]]);
  return noisy;
}

std::vector<double> scores_for(std::span<const Label> labels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> low(0.0, 0.5);
  std::uniform_real_distribution<double> high(0.5, 1.0);
  std::vector<double> out;
  out.reserve(labels.size());
  for (Label l : labels) out.push_back(l == Label::kToxic ? high(rng) : low(rng));
  return out;
}

}  // namespace toxinspect::synthetic
