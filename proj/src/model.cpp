#include "imploss/model.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "imploss/errors.hpp"
#include "imploss/rng.hpp"

namespace imploss {

using json = nlohmann::json;

namespace {

void check_vec_finite(const std::vector<double>& v, const char* name, long step) {
  for (double x : v)
    if (!std::isfinite(x))
      throw NumericError(std::string("non-finite value in ") + name, step);
}

}  // namespace

std::vector<double> compute_logits(const ClassifierParams& p, const SparseVec& x,
                                   std::vector<double>* hidden_out) {
  const int C = p.num_classes;
  if (p.arch == Architecture::linear) {
    std::vector<double> logits(p.b1);
    for (const auto& [idx, val] : x) {
      if (idx >= static_cast<std::uint32_t>(p.d))
        throw ValidationError("feature index out of range for model");
      const double* row = &p.w1[static_cast<std::size_t>(idx) * C];
      for (int c = 0; c < C; ++c) logits[c] += row[c] * val;
    }
    return logits;
  }
  const int h = p.hidden;
  std::vector<double> pre(p.b1);
  for (const auto& [idx, val] : x) {
    if (idx >= static_cast<std::uint32_t>(p.d))
      throw ValidationError("feature index out of range for model");
    const double* row = &p.w1[static_cast<std::size_t>(idx) * h];
    for (int j = 0; j < h; ++j) pre[j] += row[j] * val;
  }
  for (int j = 0; j < h; ++j) pre[j] = std::tanh(pre[j]);
  std::vector<double> logits(p.b2);
  for (int j = 0; j < h; ++j) {
    const double* row = &p.w2[static_cast<std::size_t>(j) * C];
    for (int c = 0; c < C; ++c) logits[c] += row[c] * pre[j];
  }
  if (hidden_out) *hidden_out = std::move(pre);
  return logits;
}

void ClassifierParams::check_finite(long step) const {
  check_vec_finite(w1, "w1", step);
  check_vec_finite(b1, "b1", step);
  check_vec_finite(w2, "w2", step);
  check_vec_finite(b2, "b2", step);
}

ClassifierParams ClassifierParams::zeros_like(const ClassifierParams& p) {
  ClassifierParams z = p;
  std::fill(z.w1.begin(), z.w1.end(), 0.0);
  std::fill(z.b1.begin(), z.b1.end(), 0.0);
  std::fill(z.w2.begin(), z.w2.end(), 0.0);
  std::fill(z.b2.begin(), z.b2.end(), 0.0);
  return z;
}

ClassifierParams init_params(int d, int num_classes, std::optional<int> hidden,
                             std::uint64_t seed) {
  if (d < 1 || num_classes < 1)
    throw ValidationError("init_params: d and C must be >= 1");
  ClassifierParams p;
  p.d = d;
  p.num_classes = num_classes;
  Rng rng(seed);
  if (hidden && *hidden > 0) {
    p.arch = Architecture::one_hidden;
    p.hidden = *hidden;
    p.w1.resize(static_cast<std::size_t>(d) * p.hidden);
    p.b1.assign(p.hidden, 0.0);
    p.w2.resize(static_cast<std::size_t>(p.hidden) * num_classes);
    p.b2.assign(num_classes, 0.0);
    for (double& w : p.w1) w = rng.uniform(-0.05, 0.05);
    for (double& w : p.w2) w = rng.uniform(-0.05, 0.05);
  } else {
    p.arch = Architecture::linear;
    p.w1.resize(static_cast<std::size_t>(d) * num_classes);
    p.b1.assign(num_classes, 0.0);
    for (double& w : p.w1) w = rng.uniform(-0.05, 0.05);
  }
  return p;
}

std::vector<double> predict_log_proba(const ClassifierParams& params,
                                      const SparseVec& x) {
  std::vector<double> logits = compute_logits(params, x);
  double m = logits[0];
  for (double l : logits) {
    if (!std::isfinite(l)) throw NumericError("non-finite logit");
    m = std::max(m, l);
  }
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - m);
  const double lse = m + std::log(sum);
  for (double& l : logits) l -= lse;
  return logits;
}

std::vector<double> predict_proba(const ClassifierParams& params, const SparseVec& x) {
  std::vector<double> lp = predict_log_proba(params, x);
  for (double& l : lp) l = std::exp(l);
  return lp;
}

ClassifierParams grad_weighted_ce(const ClassifierParams& params,
                                  const std::vector<Example>& batch,
                                  const std::vector<double>& weights) {
  if (batch.size() != weights.size())
    throw ValidationError("grad_weighted_ce: |weights| != |batch|");
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0)
      throw ValidationError("grad_weighted_ce: weights must be finite and >= 0");
  }
  const int C = params.num_classes;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  ClassifierParams g = ClassifierParams::zeros_like(params);

  // Fixed iteration order keeps the reduction bit-reproducible.
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Example& ex = batch[i];
    const double scale = weights[i] * inv_b;
    if (scale == 0.0) continue;
    std::vector<double> hidden;
    std::vector<double> logits = compute_logits(params, ex.features,
                                           params.arch == Architecture::one_hidden
                                               ? &hidden
                                               : nullptr);
    double m = logits[0];
    for (double l : logits) m = std::max(m, l);
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - m);
    std::vector<double> delta(C);
    for (int c = 0; c < C; ++c) delta[c] = std::exp(logits[c] - m) / sum;
    delta[ex.label] -= 1.0;

    if (params.arch == Architecture::linear) {
      for (const auto& [idx, val] : ex.features) {
        double* row = &g.w1[static_cast<std::size_t>(idx) * C];
        for (int c = 0; c < C; ++c) row[c] += scale * val * delta[c];
      }
      for (int c = 0; c < C; ++c) g.b1[c] += scale * delta[c];
    } else {
      const int h = params.hidden;
      std::vector<double> dpre(h, 0.0);
      for (int j = 0; j < h; ++j) {
        const double* row = &params.w2[static_cast<std::size_t>(j) * C];
        double* grow = &g.w2[static_cast<std::size_t>(j) * C];
        double dh = 0.0;
        for (int c = 0; c < C; ++c) {
          grow[c] += scale * hidden[j] * delta[c];
          dh += row[c] * delta[c];
        }
        dpre[j] = dh * (1.0 - hidden[j] * hidden[j]);
      }
      for (int c = 0; c < C; ++c) g.b2[c] += scale * delta[c];
      for (const auto& [idx, val] : ex.features) {
        double* row = &g.w1[static_cast<std::size_t>(idx) * h];
        for (int j = 0; j < h; ++j) row[j] += scale * val * dpre[j];
      }
      for (int j = 0; j < h; ++j) g.b1[j] += scale * dpre[j];
    }
  }
  return g;
}

ClassifierParams sgd_step(const ClassifierParams& params,
                          const ClassifierParams& gradient, double learning_rate) {
  if (params.w1.size() != gradient.w1.size() ||
      params.w2.size() != gradient.w2.size())
    throw ValidationError("sgd_step: shape mismatch");
  ClassifierParams out = params;
  auto axpy = [&](std::vector<double>& dst, const std::vector<double>& g) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= learning_rate * g[i];
  };
  axpy(out.w1, gradient.w1);
  axpy(out.b1, gradient.b1);
  axpy(out.w2, gradient.w2);
  axpy(out.b2, gradient.b2);
  out.check_finite();
  return out;
}

void save_params(const ClassifierParams& params, const std::string& path) {
  json j;
  j["version"] = 1;
  j["arch"] = params.arch == Architecture::linear ? "linear" : "one_hidden";
  j["d"] = params.d;
  j["num_classes"] = params.num_classes;
  j["hidden"] = params.hidden;
  j["w1"] = params.w1;
  j["b1"] = params.b1;
  j["w2"] = params.w2;
  j["b2"] = params.b2;
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out << j.dump() << '\n';
}

ClassifierParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw ParseError(path + ": unsupported checkpoint version");
  ClassifierParams p;
  p.arch = j["arch"].get<std::string>() == "linear" ? Architecture::linear
                                                    : Architecture::one_hidden;
  p.d = j["d"].get<int>();
  p.num_classes = j["num_classes"].get<int>();
  p.hidden = j["hidden"].get<int>();
  p.w1 = j["w1"].get<std::vector<double>>();
  p.b1 = j["b1"].get<std::vector<double>>();
  p.w2 = j["w2"].get<std::vector<double>>();
  p.b2 = j["b2"].get<std::vector<double>>();
  p.check_finite();
  return p;
}

std::string loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::ce: return "ce";
    case LossKind::focal: return "focal";
    case LossKind::imp: return "imp";
    case LossKind::dimp: return "dimp";
  }
  return "ce";
}

LossKind loss_kind_from_name(const std::string& s) {
  if (s == "ce") return LossKind::ce;
  if (s == "focal") return LossKind::focal;
  if (s == "imp") return LossKind::imp;
  if (s == "dimp") return LossKind::dimp;
  throw ValidationError("unknown loss kind '" + s + "'");
}

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw ValidationError("learning_rate must be > 0");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (gamma < 0.0) throw ValidationError("gamma must be >= 0");
  if (weight_floor <= 0.0) throw ValidationError("weight_floor must be > 0");
  if (weight_floor >= weight_cap)
    throw ValidationError("weight_floor must be < weight_cap");
}

void TrainHistory::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out << "epoch,loss,accuracy,seconds\n";
  out.precision(17);
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    out << e << ',' << epochs[e].train_loss << ',';
    if (epochs[e].heldout_accuracy) out << *epochs[e].heldout_accuracy;
    out << ',' << epochs[e].seconds << '\n';
  }
}

}  // namespace imploss
