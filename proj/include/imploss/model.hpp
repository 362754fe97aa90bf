#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "imploss/corpus.hpp"

namespace imploss {

enum class Architecture { linear, one_hidden };

// Softmax classifier parameters. For `linear`, w1 is d x C and b1 has C
// entries. For `one_hidden` (tanh activation), w1 is d x h, b1 has h
// entries, w2 is h x C and b2 has C entries. Gradients reuse this layout.
struct ClassifierParams {
  Architecture arch = Architecture::linear;
  int d = 0;
  int num_classes = 0;
  int hidden = 0;  // 0 for linear
  std::vector<double> w1, b1, w2, b2;

  void check_finite(long step = -1) const;
  static ClassifierParams zeros_like(const ClassifierParams& p);
};

ClassifierParams init_params(int d, int num_classes, std::optional<int> hidden,
                             std::uint64_t seed);

// Raw logits; fills `hidden_out` with the tanh activations for one_hidden.
std::vector<double> compute_logits(const ClassifierParams& params, const SparseVec& x,
                                   std::vector<double>* hidden_out = nullptr);

// Softmax probabilities over the C classes; stable max-shifted formulation.
std::vector<double> predict_proba(const ClassifierParams& params, const SparseVec& x);
std::vector<double> predict_log_proba(const ClassifierParams& params, const SparseVec& x);

// Analytic gradient of -(1/|B|) sum_i w_i log p(y_i|x_i). Weights are
// constants; no gradient flows through them.
ClassifierParams grad_weighted_ce(const ClassifierParams& params,
                                  const std::vector<Example>& batch,
                                  const std::vector<double>& weights);

ClassifierParams sgd_step(const ClassifierParams& params,
                          const ClassifierParams& gradient, double learning_rate);

// Checkpoint I/O: versioned JSON with an explicit shape header.
void save_params(const ClassifierParams& params, const std::string& path);
ClassifierParams load_params(const std::string& path);

enum class LossKind { ce, focal, imp, dimp };

std::string loss_kind_name(LossKind k);
LossKind loss_kind_from_name(const std::string& s);

struct TrainConfig {
  double learning_rate = 0.5;   // 0.1 is a better default for one_hidden
  int epochs = 30;
  int batch_size = 32;
  std::uint64_t seed = 0;
  LossKind loss_kind = LossKind::ce;
  double gamma = 0.0;           // focal focusing parameter
  double weight_floor = 1e-4;   // epsilon in the weight denominators
  double weight_cap = 100.0;
  bool normalize_batch_weights = false;
  std::optional<int> hidden_units;

  void validate() const;
};

struct EpochStats {
  double train_loss = 0.0;
  std::optional<double> heldout_accuracy;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  void save_csv(const std::string& path) const;
};

}  // namespace imploss
