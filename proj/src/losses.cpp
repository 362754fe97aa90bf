#include "imploss/losses.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "imploss/errors.hpp"

namespace imploss {

namespace {

const char* provenance_name(WeightProvenance p) {
  switch (p) {
    case WeightProvenance::focal: return "focal";
    case WeightProvenance::imp: return "imp";
    case WeightProvenance::dimp_quality_numerators: return "dimp_quality_numerators";
    default: return "uniform";
  }
}

WeightProvenance provenance_from_name(const std::string& s) {
  if (s == "uniform") return WeightProvenance::uniform;
  if (s == "focal") return WeightProvenance::focal;
  if (s == "imp") return WeightProvenance::imp;
  if (s == "dimp_quality_numerators") return WeightProvenance::dimp_quality_numerators;
  throw ParseError("unknown weight provenance '" + s + "'");
}

}  // namespace

double safe_log(double p) {
  return std::log(std::clamp(p, kProbFloor, 1.0));
}

void WeightTable::validate_for(const Dataset& ds, double cap) const {
  if (weights.size() != ds.size())
    throw ValidationError("weight table length " + std::to_string(weights.size()) +
                          " != dataset size " + std::to_string(ds.size()));
  for (double w : weights)
    if (!std::isfinite(w) || w < 0.0 || w > cap)
      throw ValidationError("weight out of [0, cap]");
}

void WeightTable::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out << "index,weight,provenance\n";
  out.precision(17);
  for (std::size_t i = 0; i < weights.size(); ++i)
    out << i << ',' << weights[i] << ',' << provenance_name(provenance) << '\n';
}

WeightTable WeightTable::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  WeightTable t;
  std::string line;
  std::getline(in, line);  // header
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string idx, w, prov;
    if (!std::getline(ss, idx, ',') || !std::getline(ss, w, ',') ||
        !std::getline(ss, prov))
      throw ParseError(path + " line " + std::to_string(line_no) + ": bad row");
    t.weights.push_back(std::stod(w));
    t.provenance = provenance_from_name(prov);
  }
  return t;
}

double ce_loss(const ClassifierParams& params, const Dataset& ds) {
  double sum = 0.0;
  for (const Example& ex : ds.examples)
    sum -= predict_log_proba(params, ex.features)[ex.label];
  return sum / static_cast<double>(ds.size());
}

double wce_loss(const ClassifierParams& params, const Dataset& ds,
                const WeightTable& weights) {
  if (weights.weights.size() != ds.size())
    throw ValidationError("wce_loss: weight table misaligned with dataset");
  double sum = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Example& ex = ds.examples[i];
    if (weights.weights[i] != 0.0)
      sum -= weights.weights[i] * predict_log_proba(params, ex.features)[ex.label];
  }
  return sum / static_cast<double>(ds.size());
}

double focal_weight(double p_true, double gamma) {
  if (!(p_true > 0.0 && p_true <= 1.0))
    throw ValidationError("focal_weight: p_true must lie in (0,1]");
  if (gamma < 0.0) throw ValidationError("focal_weight: gamma must be >= 0");
  return std::pow(1.0 - p_true, gamma);
}

double imp_weight(double quality, double diversity, double floor, double cap) {
  return std::clamp(quality / std::max(diversity, floor), 0.0, cap);
}

double dimp_weight(double quality, double model_prob, double floor, double cap) {
  return std::clamp(quality / std::max(model_prob, floor), 0.0, cap);
}

std::pair<double, double> dimp_lower_bound(const ClassifierParams& params,
                                           const std::vector<Example>& batch,
                                           const std::vector<double>& quality_scores) {
  if (batch.size() != quality_scores.size())
    throw ValidationError("dimp_lower_bound: quality scores misaligned");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double lhs = 0.0, distilled = 0.0, entropy_term = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double p = std::exp(
        predict_log_proba(params, batch[i].features)[batch[i].label]);
    if (p <= 0.0) throw NumericError("dimp_lower_bound: zero model probability");
    const double q = quality_scores[i];
    const double log_p = std::log(p);
    lhs -= (q / p) * log_p;
    distilled -= 2.0 * q * log_p;
    entropy_term += p * log_p;
  }
  return {lhs * inv_n, (distilled + entropy_term) * inv_n};
}

}  // namespace imploss
