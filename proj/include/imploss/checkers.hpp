#pragma once

#include "imploss/trainer.hpp"

namespace imploss {

// Instrumentation for the cost-structure accounting: IMP needs two checker
// fits and two full-dataset scoring passes, DIMP one of each.
struct PipelineCounters {
  int checker_fits = 0;
  int scoring_passes = 0;
};

// CE fit on the small real-world set; the weight numerators for both IMP
// and DIMP come from this model.
ClassifierParams fit_quality_checker(const Dataset& small_real, TrainConfig config,
                                     PipelineCounters* counters = nullptr);

// CE fit on the full synthetic training set; the IMP weight denominator.
ClassifierParams fit_diversity_checker(const Dataset& synthetic, TrainConfig config,
                                       PipelineCounters* counters = nullptr);

// Probability the checker assigns to each example's *given* label, in
// dataset order. batch_size only chunks the pass for timing parity with the
// training phases; results are identical for any value.
std::vector<double> score_dataset(const ClassifierParams& checker, const Dataset& ds,
                                  PipelineCounters* counters = nullptr,
                                  int batch_size = 64);

WeightProvider make_imp_provider(const std::vector<double>& quality_scores,
                                 const std::vector<double>& diversity_scores,
                                 double floor, double cap);

WeightProvider make_dimp_provider(const std::vector<double>& quality_scores,
                                  double floor, double cap);

}  // namespace imploss
