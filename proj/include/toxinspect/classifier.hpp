#pragma once

// Linear toxicity model over TF-IDF features, trained with SGD.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "toxinspect/dataset.hpp"
#include "toxinspect/featurizer.hpp"

namespace toxinspect {

enum class Loss { kLogistic, kHinge };

std::string_view to_string(Loss loss);
Loss parse_loss(std::string_view s);

struct TrainConfig {
  Loss loss = Loss::kLogistic;
  int epochs = 50;
  double learning_rate = 0.1;
  double l2_reg = 1e-4;
  std::uint64_t seed = 42;

  bool operator==(const TrainConfig&) const = default;
};

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  Loss loss = Loss::kLogistic;
  std::string vocab_fingerprint;

  std::size_t dim() const { return weights.size(); }
  // w . x + b. Throws Error(kBadRequest) if an index exceeds the dimension.
  double decision(const FeatureVector& fv) const;

  nlohmann::json to_json() const;
  static LinearModel from_json(const nlohmann::json& j);

  bool operator==(const LinearModel&) const = default;
};

double sigmoid(double z);

// From-scratch SGD with L2 regularisation; example order is reshuffled every
// epoch by a generator seeded from config.seed. Requires both classes.
LinearModel train(std::span<const FeatureVector> features, std::span<const Label> labels,
                  const Vocabulary& vocab, const TrainConfig& config = {});

// Logistic path: sigmoid(w.x + b). Hinge path: sigmoid of the margin, used as a
// calibration surrogate so cross-entropy stays defined.
double predict_proba(const LinearModel& model, const FeatureVector& fv);

// Ties at the threshold classify as toxic.
Label predict(const LinearModel& model, const FeatureVector& fv, double threshold = 0.5);

// Full-batch regularised logistic objective
//   (1/n) sum log(1 + exp(-s_i (w.x_i + b))) + (l2/2) |w|^2,  s_i = +-1
// and its analytic gradient. The SGD step in train() is its per-example form.
struct LogisticObjective {
  double value = 0.0;
  std::vector<double> grad_weights;
  double grad_bias = 0.0;
};
LogisticObjective logistic_objective(const LinearModel& model,
                                     std::span<const FeatureVector> features,
                                     std::span<const Label> labels, double l2_reg);

}  // namespace toxinspect
