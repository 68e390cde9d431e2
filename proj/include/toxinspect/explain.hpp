#pragma once

// Word-importance explanations for the linear model. For a linear model with
// independent features the exact Shapley value of feature j against a
// background mean mu is w_j * (x_j - mu_j), so no sampling is needed.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "toxinspect/classifier.hpp"
#include "toxinspect/featurizer.hpp"

namespace toxinspect {

struct Background {
  std::vector<double> mean;

  // Per-feature mean of the given (training) vectors.
  static Background from_features(std::span<const FeatureVector> features, std::size_t dim);
};

struct TermWeight {
  std::string term;
  double value = 0.0;

  bool operator==(const TermWeight&) const = default;
};

struct Explanation {
  std::string comment_id;
  double base_value = 0.0;                   // w . mu + b
  std::map<std::string, double> contributions;  // term -> phi
  std::vector<TermWeight> top_toxic;         // phi > 0, by |phi| desc
  std::vector<TermWeight> top_nontoxic;      // phi < 0, by |phi| desc
  double decision_score = 0.0;               // w . x + b

  nlohmann::json to_json() const;
};

Explanation explain_local(const LinearModel& model, const FeatureVector& fv, const Background& bg,
                          const Vocabulary& vocab, std::size_t k = 10,
                          std::string comment_id = {});

struct GlobalExplanation {
  std::vector<TermWeight> toxic;     // most positive coefficients first
  std::vector<TermWeight> nontoxic;  // most negative coefficients first

  nlohmann::json to_json() const;
};

// Zero coefficients are excluded; ties resolve by term order.
GlobalExplanation explain_global(const LinearModel& model, const Vocabulary& vocab,
                                 std::size_t k = 10);

}  // namespace toxinspect
