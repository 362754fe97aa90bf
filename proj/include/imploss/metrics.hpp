#pragma once

#include <string>
#include <vector>

#include "imploss/model.hpp"

namespace imploss {

struct ClassStats {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassStats> per_class;
  std::size_t n_examples = 0;

  static std::string csv_header();
  std::string csv_row() const;
};

// Argmax prediction with ties broken toward the lowest class index;
// per-class F1 with 0/0 treated as 0; macro F1 averages all C classes.
EvalReport evaluate(const ClassifierParams& params, const Dataset& ds);

int predict_class(const ClassifierParams& params, const SparseVec& x);

// (1/M) sum_i sum_y -p(y|x_i) log p(y|x_i): the model's predictive entropy
// averaged over the reference inputs.
double model_conditional_entropy(const ClassifierParams& params,
                                 const Dataset& reference);

// (1/M) sum_i KL(num(.|x_i) || den(.|x_i)) with denominator probabilities
// floored at 1e-12.
double model_conditional_kl(const ClassifierParams& params_num,
                            const ClassifierParams& params_den,
                            const Dataset& reference);

}  // namespace imploss
