#include "toxinspect/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "toxinspect/error.hpp"

namespace toxinspect {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) fail(ErrorCode::kBadRequest, std::string(what) + ": length mismatch");
  if (a == 0) fail(ErrorCode::kBadRequest, std::string(what) + ": empty input");
}

}  // namespace

MacroF1 macro_f1_detail(std::span<const Label> preds, std::span<const Label> golds) {
  check_lengths(preds.size(), golds.size(), "macro_f1");
  // counts[gold][pred]
  std::array<std::array<std::size_t, 2>, 2> counts{};
  for (std::size_t i = 0; i < preds.size(); ++i) ++counts[to_int(golds[i])][to_int(preds[i])];

  MacroF1 out;
  double sum = 0.0;
  for (int c = 0; c < 2; ++c) {
    const std::size_t tp = counts[c][c];
    const std::size_t fn = counts[c][1 - c];
    const std::size_t fp = counts[1 - c][c];
    if (tp + fn == 0) continue;  // class absent from golds
    const double denom = static_cast<double>(2 * tp + fp + fn);
    const double f1 = denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
    out.per_class[c] = f1;
    sum += f1;
  }
  out.macro = sum / static_cast<double>(out.per_class.size());
  return out;
}

double macro_f1(std::span<const Label> preds, std::span<const Label> golds) {
  return macro_f1_detail(preds, golds).macro;
}

double cross_entropy(std::span<const double> probs, std::span<const Label> labels) {
  check_lengths(probs.size(), labels.size(), "cross_entropy");
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (std::isnan(probs[i])) fail(ErrorCode::kBadRequest, "cross_entropy: NaN probability");
    const double p = std::clamp(probs[i], kProbabilityClip, 1.0 - kProbabilityClip);
    sum += labels[i] == Label::kToxic ? std::log(p) : std::log1p(-p);
  }
  return -sum / static_cast<double>(probs.size());
}

double correction_mse(std::span<const Label> before, std::span<const Label> after) {
  check_lengths(before.size(), after.size(), "correction_mse");
  double sum = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const double d = static_cast<double>(to_int(before[i]) - to_int(after[i]));
    sum += d * d;
  }
  return sum / static_cast<double>(before.size());
}

double normalized_gain(double f1_prev, double f1_curr) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(f1_prev) || !in_unit(f1_curr)) {
    fail(ErrorCode::kBadRequest, "normalized_gain: F1 values must lie in [0,1]");
  }
  if (f1_prev == 1.0) return f1_curr - f1_prev;
  return (f1_curr - f1_prev) / (1.0 - f1_prev);
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [c, f] : per_class_f1) per_class[std::to_string(c)] = f;
  nlohmann::json j = {{"iteration", iteration},
                      {"macro_f1", macro_f1},
                      {"cross_entropy", cross_entropy},
                      {"mse_correction", mse_correction},
                      {"normalized_gain", normalized_gain},
                      {"per_class_f1", std::move(per_class)},
                      {"n_test", n_test},
                      {"n_corrected", n_corrected}};
  if (reference_macro_f1) j["reference_macro_f1"] = *reference_macro_f1;
  return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.iteration = j.at("iteration").get<int>();
  r.macro_f1 = j.at("macro_f1").get<double>();
  r.cross_entropy = j.at("cross_entropy").get<double>();
  r.mse_correction = j.at("mse_correction").get<double>();
  r.normalized_gain = j.at("normalized_gain").get<double>();
  for (const auto& [k, v] : j.at("per_class_f1").items()) r.per_class_f1[std::stoi(k)] = v.get<double>();
  r.n_test = j.at("n_test").get<std::size_t>();
  r.n_corrected = j.at("n_corrected").get<std::size_t>();
  if (j.contains("reference_macro_f1")) r.reference_macro_f1 = j.at("reference_macro_f1").get<double>();
  return r;
}

}  // namespace toxinspect
