#pragma once

// Synthetic toxicity corpora for benchmarks and demos: each comment mixes words
// from one of two disjoint ten-word lexicons with shared filler words, so the
// clean labels are linearly separable.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "toxinspect/dataset.hpp"

namespace toxinspect::synthetic {

const std::vector<std::string>& toxic_lexicon();
const std::vector<std::string>& benign_lexicon();
const std::vector<std::string>& filler_words();

struct Corpus {
  std::vector<Comment> comments;
  std::vector<Label> clean_labels;
};

Corpus make_corpus(std::size_t n, std::uint64_t seed);

// Flips exactly round(rate * n) labels chosen uniformly at random.
std::vector<Label> inject_noise(std::span<const Label> clean, double rate, std::uint64_t seed);

// Black-box style scores consistent with `labels` at threshold 0.5: toxic
// labels draw from [0.5, 1), non-toxic from [0, 0.5).
std::vector<double> scores_for(std::span<const Label> labels, std::uint64_t seed);

}  // namespace toxinspect::synthetic
