#include "imploss/checkers.hpp"

#include <cmath>

#include "imploss/errors.hpp"

namespace imploss {

namespace {

ClassifierParams fit_ce(const Dataset& ds, TrainConfig config,
                        PipelineCounters* counters) {
  config.loss_kind = LossKind::ce;
  if (counters) counters->checker_fits += 1;
  return train(ds, config, WeightProvider::uniform()).params;
}

}  // namespace

ClassifierParams fit_quality_checker(const Dataset& small_real, TrainConfig config,
                                     PipelineCounters* counters) {
  return fit_ce(small_real, config, counters);
}

ClassifierParams fit_diversity_checker(const Dataset& synthetic, TrainConfig config,
                                       PipelineCounters* counters) {
  return fit_ce(synthetic, config, counters);
}

std::vector<double> score_dataset(const ClassifierParams& checker, const Dataset& ds,
                                  PipelineCounters* counters, int batch_size) {
  if (checker.num_classes != ds.num_classes)
    throw ValidationError("score_dataset: checker has C=" +
                          std::to_string(checker.num_classes) + ", dataset has C=" +
                          std::to_string(ds.num_classes));
  if (checker.d < ds.feature_dim)
    throw ValidationError("score_dataset: checker feature dim too small");
  if (batch_size < 1) throw ValidationError("score_dataset: batch_size must be >= 1");
  if (counters) counters->scoring_passes += 1;

  std::vector<double> scores;
  scores.reserve(ds.size());
  for (std::size_t begin = 0; begin < ds.size();
       begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(begin + static_cast<std::size_t>(batch_size), ds.size());
    for (std::size_t i = begin; i < end; ++i) {
      const Example& ex = ds.examples[i];
      scores.push_back(
          std::exp(predict_log_proba(checker, ex.features)[ex.label]));
    }
  }
  return scores;
}

WeightProvider make_imp_provider(const std::vector<double>& quality_scores,
                                 const std::vector<double>& diversity_scores,
                                 double floor, double cap) {
  if (quality_scores.size() != diversity_scores.size())
    throw ValidationError("make_imp_provider: score sequences misaligned");
  WeightProvider p;
  p.kind = WeightProvider::Kind::precomputed;
  p.floor = floor;
  p.cap = cap;
  p.table.provenance = WeightProvenance::imp;
  p.table.weights.reserve(quality_scores.size());
  for (std::size_t i = 0; i < quality_scores.size(); ++i)
    p.table.weights.push_back(
        imp_weight(quality_scores[i], diversity_scores[i], floor, cap));
  return p;
}

WeightProvider make_dimp_provider(const std::vector<double>& quality_scores,
                                  double floor, double cap) {
  for (double q : quality_scores)
    if (!(q >= 0.0 && q <= 1.0))
      throw ValidationError("make_dimp_provider: quality score out of [0,1]");
  WeightProvider p;
  p.kind = WeightProvider::Kind::dynamic_quality;
  p.floor = floor;
  p.cap = cap;
  p.quality_scores = quality_scores;
  return p;
}

}  // namespace imploss
