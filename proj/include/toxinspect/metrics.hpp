#pragma once

// Hard and soft metrics reported after every feedback iteration.

#include <map>
#include <optional>
#include <span>
#include <string>

#include "json.hpp"
#include "toxinspect/dataset.hpp"

namespace toxinspect {

inline constexpr double kProbabilityClip = 1e-12;

struct MacroF1 {
  double macro = 0.0;
  std::map<int, double> per_class;  // classes present in the gold labels
};

// Per-class F1 (0/0 -> 0), averaged without weights over the classes that
// occur in `golds`.
MacroF1 macro_f1_detail(std::span<const Label> preds, std::span<const Label> golds);
double macro_f1(std::span<const Label> preds, std::span<const Label> golds);

// Mean binary cross-entropy in nats; probabilities clipped to [1e-12, 1 - 1e-12].
double cross_entropy(std::span<const double> probs, std::span<const Label> labels);

// Mean squared difference between a batch's labels before and after review,
// i.e. the flipped fraction.
double correction_mse(std::span<const Label> before, std::span<const Label> after);

// (f1_curr - f1_prev) / (1 - f1_prev); when f1_prev == 1 the plain difference.
double normalized_gain(double f1_prev, double f1_curr);

struct MetricsReport {
  int iteration = 0;
  double macro_f1 = 0.0;
  double cross_entropy = 0.0;
  double mse_correction = 0.0;
  double normalized_gain = 0.0;
  std::map<int, double> per_class_f1;
  std::size_t n_test = 0;
  std::size_t n_corrected = 0;
  // Macro-F1 of the same predictions against a hidden reference; only set for
  // sessions driven by a scripted evaluator.
  std::optional<double> reference_macro_f1;

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
  bool operator==(const MetricsReport&) const = default;
};

}  // namespace toxinspect
