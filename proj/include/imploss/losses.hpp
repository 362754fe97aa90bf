#pragma once

#include <string>
#include <utility>
#include <vector>

#include "imploss/model.hpp"

namespace imploss {

enum class WeightProvenance { uniform, focal, imp, dimp_quality_numerators };

struct WeightTable {
  std::vector<double> weights;
  WeightProvenance provenance = WeightProvenance::uniform;

  void validate_for(const Dataset& ds, double cap) const;
  void save_csv(const std::string& path) const;
  static WeightTable load_csv(const std::string& path);
};

// Probabilities are clamped to [kProbFloor, 1] inside every log.
inline constexpr double kProbFloor = 1e-12;

double safe_log(double p);

// -(1/M) sum_i log p(y_i|x_i)
double ce_loss(const ClassifierParams& params, const Dataset& ds);

// -(1/N) sum_i w_i log p(y_i|x_i)
double wce_loss(const ClassifierParams& params, const Dataset& ds,
                const WeightTable& weights);

// (1 - p_true)^gamma
double focal_weight(double p_true, double gamma);

// clamp(quality / max(diversity, floor), 0, cap)
double imp_weight(double quality, double diversity, double floor, double cap);

// clamp(quality / max(model_prob, floor), 0, cap); model_prob comes from the
// current step's forward pass.
double dimp_weight(double quality, double model_prob, double floor, double cap);

// Unclamped batch loss (lhs) and its distillation bound (rhs):
//   rhs = -(2/N) sum q_i log p_i + (1/N) sum p_i log p_i
// Returned as a pair for inequality auditing; lhs >= rhs always.
std::pair<double, double> dimp_lower_bound(const ClassifierParams& params,
                                           const std::vector<Example>& batch,
                                           const std::vector<double>& quality_scores);

}  // namespace imploss
