#include "imploss/metrics.hpp"

#include <cmath>
#include <sstream>

#include "imploss/errors.hpp"
#include "imploss/losses.hpp"

namespace imploss {

int predict_class(const ClassifierParams& params, const SparseVec& x) {
  std::vector<double> p = predict_proba(params, x);
  int best = 0;
  for (int c = 1; c < static_cast<int>(p.size()); ++c)
    if (p[c] > p[best]) best = c;  // strict: ties go to the lowest index
  return best;
}

EvalReport evaluate(const ClassifierParams& params, const Dataset& ds) {
  if (params.num_classes != ds.num_classes || params.d < ds.feature_dim)
    throw ValidationError("evaluate: model and dataset dimensions differ");
  if (ds.examples.empty()) throw ValidationError("evaluate: empty dataset");
  const int C = ds.num_classes;
  std::vector<std::vector<std::size_t>> confusion(
      C, std::vector<std::size_t>(C, 0));  // [gold][pred]
  std::size_t correct = 0;
  for (const Example& ex : ds.examples) {
    const int pred = predict_class(params, ex.features);
    confusion[ex.label][pred] += 1;
    if (pred == ex.label) ++correct;
  }

  EvalReport report;
  report.n_examples = ds.size();
  report.accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());
  report.per_class.resize(C);
  double f1_sum = 0.0;
  for (int c = 0; c < C; ++c) {
    std::size_t tp = confusion[c][c], fp = 0, fn = 0;
    for (int o = 0; o < C; ++o) {
      if (o == c) continue;
      fp += confusion[o][c];
      fn += confusion[c][o];
    }
    ClassStats& s = report.per_class[c];
    s.precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
    s.recall = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
    s.f1 = (s.precision + s.recall > 0.0)
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    f1_sum += s.f1;
  }
  report.macro_f1 = f1_sum / C;
  return report;
}

std::string EvalReport::csv_header() { return "accuracy,macro_f1,n_examples"; }

std::string EvalReport::csv_row() const {
  std::ostringstream out;
  out.precision(17);
  out << accuracy << ',' << macro_f1 << ',' << n_examples;
  return out.str();
}

double model_conditional_entropy(const ClassifierParams& params,
                                 const Dataset& reference) {
  if (reference.examples.empty())
    throw ValidationError("model_conditional_entropy: empty reference");
  double sum = 0.0;
  for (const Example& ex : reference.examples) {
    std::vector<double> lp = predict_log_proba(params, ex.features);
    for (double l : lp) sum -= std::exp(l) * l;
  }
  return sum / static_cast<double>(reference.size());
}

double model_conditional_kl(const ClassifierParams& params_num,
                            const ClassifierParams& params_den,
                            const Dataset& reference) {
  if (reference.examples.empty())
    throw ValidationError("model_conditional_kl: empty reference");
  double sum = 0.0;
  for (const Example& ex : reference.examples) {
    std::vector<double> lp_num = predict_log_proba(params_num, ex.features);
    std::vector<double> lp_den = predict_log_proba(params_den, ex.features);
    for (std::size_t c = 0; c < lp_num.size(); ++c) {
      const double p = std::exp(lp_num[c]);
      sum += p * (lp_num[c] - std::max(lp_den[c], std::log(kProbFloor)));
    }
  }
  return sum / static_cast<double>(reference.size());
}

}  // namespace imploss
