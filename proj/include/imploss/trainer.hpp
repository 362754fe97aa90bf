#pragma once

#include <functional>

#include "imploss/losses.hpp"
#include "imploss/model.hpp"

namespace imploss {

// Per-example loss-weight source used by train(). The uniform and focal
// kinds need no checkers; precomputed carries a fixed table (IMP); the
// dynamic kind carries only the constant quality numerators and divides by
// the current model probability each step (DIMP).
struct WeightProvider {
  enum class Kind { uniform, focal, precomputed, dynamic_quality };

  Kind kind = Kind::uniform;
  double gamma = 0.0;                  // focal
  WeightTable table;                   // precomputed
  std::vector<double> quality_scores;  // dynamic_quality
  double floor = 1e-4;
  double cap = 100.0;

  void validate_for(const Dataset& ds, LossKind loss_kind) const;

  static WeightProvider uniform();
  static WeightProvider focal(double gamma);
};

// Called once per example per optimization step with the weight actually
// applied; used by the noise study to track DIMP weight trajectories.
using WeightObserver =
    std::function<void(int epoch, std::size_t example_index, double weight)>;

struct TrainResult {
  ClassifierParams params;
  TrainHistory history;
};

// Seeded-reshuffle minibatch SGD over `epochs * ceil(N/batch)` steps.
// Deterministic given (config.seed, dataset order); the per-epoch shuffle
// seed is mix_seed(config.seed, epoch). The same forward pass supplies both
// the dynamic weights and the gradient.
TrainResult train(const Dataset& ds, const TrainConfig& config,
                  const WeightProvider& provider,
                  const Dataset* heldout = nullptr,
                  const WeightObserver& observer = {});

}  // namespace imploss
