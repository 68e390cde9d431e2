#include "toxinspect/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "toxinspect/error.hpp"

namespace toxinspect {

std::string_view to_string(Loss loss) { return loss == Loss::kLogistic ? "logistic" : "hinge"; }

Loss parse_loss(std::string_view s) {
  if (s == "logistic") return Loss::kLogistic;
  if (s == "hinge") return Loss::kHinge;
  fail(ErrorCode::kBadRequest, "unknown loss '" + std::string(s) + "'");
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

void check_dimension(const FeatureVector& fv, std::size_t dim) {
  if (!fv.entries.empty() && fv.entries.back().first >= dim) {
    fail(ErrorCode::kBadRequest, "feature index " + std::to_string(fv.entries.back().first) +
                                     " exceeds model dimension " + std::to_string(dim));
  }
}

}  // namespace

double LinearModel::decision(const FeatureVector& fv) const {
  check_dimension(fv, weights.size());
  double z = bias;
  for (const auto& [j, x] : fv.entries) z += weights[j] * x;
  return z;
}

nlohmann::json LinearModel::to_json() const {
  return {{"loss", to_string(loss)},
          {"bias", bias},
          {"weights", weights},
          {"vocab_fingerprint", vocab_fingerprint}};
}

LinearModel LinearModel::from_json(const nlohmann::json& j) {
  LinearModel m;
  m.loss = parse_loss(j.at("loss").get<std::string>());
  m.bias = j.at("bias").get<double>();
  m.weights = j.at("weights").get<std::vector<double>>();
  m.vocab_fingerprint = j.at("vocab_fingerprint").get<std::string>();
  return m;
}

LinearModel train(std::span<const FeatureVector> features, std::span<const Label> labels,
                  const Vocabulary& vocab, const TrainConfig& config) {
  if (features.size() != labels.size()) {
    fail(ErrorCode::kBadRequest, "features and labels differ in length");
  }
  if (features.size() < 2) fail(ErrorCode::kBadRequest, "training needs at least 2 examples");
  if (config.epochs < 1) fail(ErrorCode::kBadRequest, "epochs must be >= 1");
  if (!(config.learning_rate > 0.0)) fail(ErrorCode::kBadRequest, "learning_rate must be > 0");
  if (!(config.l2_reg >= 0.0)) fail(ErrorCode::kBadRequest, "l2_reg must be >= 0");
  const auto toxic = std::count(labels.begin(), labels.end(), Label::kToxic);
  if (toxic == 0 || toxic == static_cast<std::ptrdiff_t>(labels.size())) {
    fail(ErrorCode::kBadRequest, "training labels contain a single class");
  }
  const std::size_t dim = vocab.size();
  for (const auto& fv : features) check_dimension(fv, dim);

  // Weights are stored as scale * v so the L2 shrink is O(1) per step.
  std::vector<double> v(dim, 0.0);
  double scale = 1.0;
  double bias = 0.0;
  const double lr = config.learning_rate;
  const double decay = 1.0 - lr * config.l2_reg;
  if (!(decay > 0.0)) fail(ErrorCode::kBadRequest, "learning_rate * l2_reg must be < 1");

  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const FeatureVector& fv = features[i];
      double dot = 0.0;
      for (const auto& [j, x] : fv.entries) dot += v[j] * x;
      const double z = scale * dot + bias;

      double g = 0.0;  // d loss / d z
      if (config.loss == Loss::kLogistic) {
        g = sigmoid(z) - static_cast<double>(to_int(labels[i]));
      } else {
        const double s = labels[i] == Label::kToxic ? 1.0 : -1.0;
        if (s * z < 1.0) g = -s;
      }

      scale *= decay;
      if (g != 0.0) {
        const double step = lr * g / scale;
        for (const auto& [j, x] : fv.entries) v[j] -= step * x;
        bias -= lr * g;
      }
      if (scale < 1e-9) {
        for (double& w : v) w *= scale;
        scale = 1.0;
      }
    }
  }

  LinearModel model;
  model.weights.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) model.weights[j] = scale * v[j];
  model.bias = bias;
  model.loss = config.loss;
  model.vocab_fingerprint = vocab.fingerprint();
  return model;
}

double predict_proba(const LinearModel& model, const FeatureVector& fv) {
  return sigmoid(model.decision(fv));
}

Label predict(const LinearModel& model, const FeatureVector& fv, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    fail(ErrorCode::kBadRequest, "threshold must lie in (0,1)");
  }
  return predict_proba(model, fv) >= threshold ? Label::kToxic : Label::kNonToxic;
}

LogisticObjective logistic_objective(const LinearModel& model,
                                     std::span<const FeatureVector> features,
                                     std::span<const Label> labels, double l2_reg) {
  if (features.size() != labels.size() || features.empty()) {
    fail(ErrorCode::kBadRequest, "features and labels must be non-empty and equal in length");
  }
  LogisticObjective out;
  out.grad_weights.assign(model.dim(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double z = model.decision(features[i]);
    const double s = labels[i] == Label::kToxic ? 1.0 : -1.0;
    out.value += softplus(-s * z) * inv_n;
    const double g = (sigmoid(z) - static_cast<double>(to_int(labels[i]))) * inv_n;
    for (const auto& [j, x] : features[i].entries) out.grad_weights[j] += g * x;
    out.grad_bias += g;
  }
  double sq = 0.0;
  for (std::size_t j = 0; j < model.dim(); ++j) {
    sq += model.weights[j] * model.weights[j];
    out.grad_weights[j] += l2_reg * model.weights[j];
  }
  out.value += 0.5 * l2_reg * sq;
  return out;
}

}  // namespace toxinspect
