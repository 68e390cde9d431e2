#include "toxinspect/explain.hpp"

#include <algorithm>
#include <cmath>

#include "toxinspect/error.hpp"

namespace toxinspect {

Background Background::from_features(std::span<const FeatureVector> features, std::size_t dim) {
  Background bg;
  bg.mean.assign(dim, 0.0);
  if (features.empty()) return bg;
  for (const auto& fv : features) {
    for (const auto& [j, x] : fv.entries) {
      if (j >= dim) fail(ErrorCode::kBadRequest, "feature index exceeds background dimension");
      bg.mean[j] += x;
    }
  }
  const double n = static_cast<double>(features.size());
  for (double& m : bg.mean) m /= n;
  return bg;
}

namespace {

// |value| descending, then term ascending.
void rank(std::vector<TermWeight>& list, std::size_t k) {
  std::sort(list.begin(), list.end(), [](const TermWeight& a, const TermWeight& b) {
    const double aa = std::abs(a.value);
    const double bb = std::abs(b.value);
    if (aa != bb) return aa > bb;
    return a.term < b.term;
  });
  if (list.size() > k) list.resize(k);
}

nlohmann::json to_json(const std::vector<TermWeight>& list, const char* key) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : list) out.push_back({{"term", t.term}, {key, t.value}});
  return out;
}

}  // namespace

Explanation explain_local(const LinearModel& model, const FeatureVector& fv, const Background& bg,
                          const Vocabulary& vocab, std::size_t k, std::string comment_id) {
  if (k < 1) fail(ErrorCode::kBadRequest, "k must be >= 1");
  const std::size_t dim = model.dim();
  if (bg.mean.size() != dim || vocab.size() != dim) {
    fail(ErrorCode::kBadRequest, "model, background and vocabulary dimensions disagree");
  }

  Explanation ex;
  ex.comment_id = std::move(comment_id);
  ex.decision_score = model.decision(fv);
  ex.base_value = model.bias;
  for (std::size_t j = 0; j < dim; ++j) ex.base_value += model.weights[j] * bg.mean[j];

  // Walk the dense background alongside the sparse input.
  auto it = fv.entries.begin();
  for (std::uint32_t j = 0; j < dim; ++j) {
    double x = 0.0;
    if (it != fv.entries.end() && it->first == j) {
      x = it->second;
      ++it;
    }
    if (x == 0.0 && bg.mean[j] == 0.0) continue;
    const double phi = model.weights[j] * (x - bg.mean[j]);
    ex.contributions.emplace(vocab.term(j), phi);
    if (phi > 0.0) ex.top_toxic.push_back({vocab.term(j), phi});
    if (phi < 0.0) ex.top_nontoxic.push_back({vocab.term(j), phi});
  }
  rank(ex.top_toxic, k);
  rank(ex.top_nontoxic, k);
  return ex;
}

nlohmann::json Explanation::to_json() const {
  return {{"comment_id", comment_id},
          {"base_value", base_value},
          {"contributions", contributions},
          {"top_toxic", toxinspect::to_json(top_toxic, "contribution")},
          {"top_nontoxic", toxinspect::to_json(top_nontoxic, "contribution")},
          {"decision_score", decision_score}};
}

GlobalExplanation explain_global(const LinearModel& model, const Vocabulary& vocab, std::size_t k) {
  if (k < 1) fail(ErrorCode::kBadRequest, "k must be >= 1");
  if (vocab.size() != model.dim()) {
    fail(ErrorCode::kBadRequest, "model and vocabulary dimensions disagree");
  }
  GlobalExplanation g;
  for (std::uint32_t j = 0; j < model.dim(); ++j) {
    const double w = model.weights[j];
    if (w > 0.0) g.toxic.push_back({vocab.term(j), w});
    if (w < 0.0) g.nontoxic.push_back({vocab.term(j), w});
  }
  rank(g.toxic, k);
  rank(g.nontoxic, k);
  return g;
}

nlohmann::json GlobalExplanation::to_json() const {
  return {{"toxic", toxinspect::to_json(toxic, "coefficient")},
          {"nontoxic", toxinspect::to_json(nontoxic, "coefficient")}};
}

}  // namespace toxinspect
