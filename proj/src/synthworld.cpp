#include "imploss/synthworld.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "imploss/errors.hpp"
#include "imploss/losses.hpp"
#include "imploss/rng.hpp"

namespace imploss {

using json = nlohmann::json;

namespace {

constexpr double kRowFloor = 1e-6;

std::vector<double> exp_normalized(Rng& rng, int n) {
  std::vector<double> v(n);
  double sum = 0.0;
  for (double& x : v) {
    x = -std::log(1.0 - rng.uniform());
    sum += x;
  }
  for (double& x : v) x /= sum;
  return v;
}

std::vector<double> mix_and_floor(const std::vector<double>& base,
                                  const std::vector<double>& other, double lambda) {
  std::vector<double> row(base.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    row[i] = std::max((1.0 - lambda) * base[i] + lambda * other[i], kRowFloor);
    sum += row[i];
  }
  for (double& x : row) x /= sum;
  return row;
}

double clamped_neg_log_prob(const std::vector<double>& log_probs, int y) {
  return -std::max(log_probs[y], std::log(kProbFloor));
}

std::size_t draw_index(Rng& rng, const std::vector<double>& probs) {
  double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  return probs.size() - 1;
}

}  // namespace

void WorldSpec::validate() const {
  if (K < 2) throw ValidationError("world spec: K must be >= 2");
  if (C < 2) throw ValidationError("world spec: C must be >= 2");
  if (d < 1) throw ValidationError("world spec: d must be >= 1");
  if (covariate_shift < 0.0 || covariate_shift > 1.0)
    throw ValidationError("world spec: covariate_shift must lie in [0,1]");
  if (label_shift < 0.0) throw ValidationError("world spec: label_shift must be >= 0");
}

void JointWorld::validate() const {
  const std::size_t K = support.size();
  if (K < 2 || num_classes < 2)
    throw ValidationError("world: K and C must be >= 2");
  auto check_marginal = [&](const std::vector<double>& m, const char* name) {
    if (m.size() != K) throw ValidationError(std::string(name) + ": wrong length");
    double sum = 0.0;
    for (double x : m) {
      if (x < 0.0) throw ValidationError(std::string(name) + ": negative entry");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw ValidationError(std::string(name) + ": does not sum to 1");
  };
  check_marginal(p_x, "p_x");
  check_marginal(q_x, "q_x");
  auto check_rows = [&](const std::vector<std::vector<double>>& rows, const char* name) {
    if (rows.size() != K) throw ValidationError(std::string(name) + ": wrong length");
    for (const auto& row : rows) {
      if (row.size() != static_cast<std::size_t>(num_classes))
        throw ValidationError(std::string(name) + ": row has wrong length");
      double sum = 0.0;
      for (double x : row) {
        if (x < 0.0) throw ValidationError(std::string(name) + ": negative entry");
        sum += x;
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw ValidationError(std::string(name) + ": row does not sum to 1");
    }
  };
  check_rows(p_y_given_x, "p_y_given_x");
  check_rows(q_y_given_x, "q_y_given_x");
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t b = a + 1; b < K; ++b)
      if (support[a] == support[b])
        throw ValidationError("support vectors are not pairwise distinct");
}

JointWorld make_world(const WorldSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  JointWorld world;
  world.num_classes = spec.C;
  world.feature_dim = spec.d;
  world.seed = spec.seed;

  const int nnz = std::min(4, spec.d);
  std::set<SparseVec> seen;
  while (world.support.size() < static_cast<std::size_t>(spec.K)) {
    std::set<std::uint32_t> idxs;
    while (static_cast<int>(idxs.size()) < nnz)
      idxs.insert(static_cast<std::uint32_t>(rng.below(spec.d)));
    SparseVec v;
    double norm_sq = 0.0;
    for (std::uint32_t i : idxs) {
      double val = rng.uniform(-1.0, 1.0);
      v.emplace_back(i, val);
      norm_sq += val * val;
    }
    if (norm_sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& [i, val] : v) val *= inv;
    if (seen.insert(v).second) world.support.push_back(std::move(v));
  }

  world.p_x = exp_normalized(rng, spec.K);
  if (spec.covariate_shift == 0.0) {
    world.q_x = world.p_x;
  } else {
    std::vector<double> r = exp_normalized(rng, spec.K);
    world.q_x.resize(spec.K);
    double sum = 0.0;
    for (int k = 0; k < spec.K; ++k) {
      world.q_x[k] = (1.0 - spec.covariate_shift) * world.p_x[k] +
                     spec.covariate_shift * r[k];
      sum += world.q_x[k];
    }
    for (double& x : world.q_x) x /= sum;
  }

  const double lambda = std::min(spec.label_shift, 1.0);
  for (int k = 0; k < spec.K; ++k) {
    world.p_y_given_x.push_back(exp_normalized(rng, spec.C));
    if (lambda == 0.0) {
      world.q_y_given_x.push_back(world.p_y_given_x.back());
    } else {
      std::vector<double> r = exp_normalized(rng, spec.C);
      world.q_y_given_x.push_back(
          mix_and_floor(world.p_y_given_x.back(), r, lambda));
    }
  }

  world.validate();
  return world;
}

Dataset sample(const JointWorld& world, Which which, int n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("sample: n must be >= 1");
  const auto& marginal = which == Which::P ? world.p_x : world.q_x;
  const auto& cond = which == Which::P ? world.p_y_given_x : world.q_y_given_x;

  Rng rng(seed);
  Dataset ds;
  ds.num_classes = world.num_classes;
  ds.feature_dim = world.feature_dim;
  ds.examples.reserve(n);
  for (int i = 0; i < n; ++i) {
    const std::size_t k = draw_index(rng, marginal);
    Example ex;
    ex.features = world.support[k];
    ex.label = static_cast<int>(draw_index(rng, cond[k]));
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

double exact_expected_ce(const JointWorld& world, Which which,
                         const ClassifierParams& params) {
  const auto& marginal = which == Which::P ? world.p_x : world.q_x;
  const auto& cond = which == Which::P ? world.p_y_given_x : world.q_y_given_x;
  double total = 0.0;
  for (std::size_t k = 0; k < world.support_size(); ++k) {
    std::vector<double> lp = predict_log_proba(params, world.support[k]);
    double inner = 0.0;
    for (int y = 0; y < world.num_classes; ++y)
      inner += cond[k][y] * clamped_neg_log_prob(lp, y);
    total += marginal[k] * inner;
  }
  return total;
}

double exact_weighted_expectation(const JointWorld& world,
                                  const ClassifierParams& params) {
  double total = 0.0;
  for (std::size_t k = 0; k < world.support_size(); ++k) {
    std::vector<double> lp = predict_log_proba(params, world.support[k]);
    double inner = 0.0;
    for (int y = 0; y < world.num_classes; ++y) {
      const double p = world.p_y_given_x[k][y];
      const double q = world.q_y_given_x[k][y];
      if (q == 0.0) {
        if (p > 0.0)
          throw ValidationError("importance ratio undefined: Q(y|x)=0 with P(y|x)>0");
        continue;
      }
      inner += q * (p / q) * clamped_neg_log_prob(lp, y);
    }
    total += world.q_x[k] * inner;
  }
  return total;
}

double exact_weighted_variance(const JointWorld& world,
                               const ClassifierParams& params) {
  double mean = 0.0, second = 0.0;
  for (std::size_t k = 0; k < world.support_size(); ++k) {
    std::vector<double> lp = predict_log_proba(params, world.support[k]);
    for (int y = 0; y < world.num_classes; ++y) {
      const double p = world.p_y_given_x[k][y];
      const double q = world.q_y_given_x[k][y];
      if (q == 0.0) {
        if (p > 0.0)
          throw ValidationError("importance ratio undefined: Q(y|x)=0 with P(y|x)>0");
        continue;
      }
      const double z = (p / q) * clamped_neg_log_prob(lp, y);
      const double mass = world.q_x[k] * q;
      mean += mass * z;
      second += mass * z * z;
    }
  }
  return second - mean * mean;
}

double true_conditional_entropy(const JointWorld& world, Which which) {
  const auto& marginal = which == Which::P ? world.p_x : world.q_x;
  const auto& cond = which == Which::P ? world.p_y_given_x : world.q_y_given_x;
  double total = 0.0;
  for (std::size_t k = 0; k < world.support_size(); ++k) {
    double h = 0.0;
    for (double c : cond[k])
      if (c > 0.0) h -= c * std::log(c);
    total += marginal[k] * h;
  }
  return total;
}

double true_conditional_kl(const JointWorld& world, KlDirection direction) {
  const bool p_num = direction == KlDirection::P_given_Q;
  const auto& marginal = p_num ? world.p_x : world.q_x;
  const auto& num = p_num ? world.p_y_given_x : world.q_y_given_x;
  const auto& den = p_num ? world.q_y_given_x : world.p_y_given_x;
  double total = 0.0;
  for (std::size_t k = 0; k < world.support_size(); ++k) {
    double kl = 0.0;
    for (int y = 0; y < world.num_classes; ++y) {
      if (num[k][y] == 0.0) continue;
      if (den[k][y] == 0.0)
        throw ValidationError("KL undefined: denominator row has a zero where "
                              "the numerator is positive");
      kl += num[k][y] * std::log(num[k][y] / den[k][y]);
    }
    total += marginal[k] * kl;
  }
  return total;
}

namespace {

std::vector<std::size_t> seeded_subset(std::size_t n, std::size_t count,
                                       std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

Dataset inject_label_swap(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0)
    throw ValidationError("inject_label_swap: fraction must lie in [0,1]");
  if (ds.num_classes < 2)
    throw ValidationError("inject_label_swap: no different label exists for C=1");
  Dataset out = ds;
  const auto count = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(ds.size())));
  Rng rng(mix_seed(seed, 1));
  for (std::size_t i : seeded_subset(ds.size(), count, seed)) {
    Example& ex = out.examples[i];
    const int offset = static_cast<int>(rng.below(ds.num_classes - 1));
    ex.label = offset >= ex.label ? offset + 1 : offset;
    ex.tag = SourceTag::swapped;
  }
  return out;
}

Dataset inject_duplicates(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0)
    throw ValidationError("inject_duplicates: fraction must lie in [0,1]");
  Dataset out = ds;
  const auto count = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(ds.size())));
  for (std::size_t i : seeded_subset(ds.size(), count, seed)) {
    Example copy = ds.examples[i];
    copy.tag = SourceTag::duplicated;
    out.examples.push_back(std::move(copy));
  }
  return out;
}

void JointWorld::save_jsonl(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  json header;
  header["version"] = 1;
  header["K"] = support.size();
  header["C"] = num_classes;
  header["d"] = feature_dim;
  header["seed"] = seed;
  out << header.dump() << '\n';
  for (std::size_t k = 0; k < support.size(); ++k) {
    json rec;
    json feats = json::array();
    for (const auto& [idx, val] : support[k]) feats.push_back({idx, val});
    rec["support"] = feats;
    rec["p_x"] = p_x[k];
    rec["q_x"] = q_x[k];
    rec["p_row"] = p_y_given_x[k];
    rec["q_row"] = q_y_given_x[k];
    out << rec.dump() << '\n';
  }
}

JointWorld JointWorld::load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty world file");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!header.contains("version") || header["version"].get<int>() != 1)
    throw ParseError(path + ": unsupported world file version");

  JointWorld world;
  world.num_classes = header["C"].get<int>();
  world.feature_dim = header["d"].get<int>();
  world.seed = header["seed"].get<std::uint64_t>();
  const auto K = header["K"].get<std::size_t>();
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
    SparseVec v;
    for (const auto& pair : rec["support"])
      v.emplace_back(pair[0].get<std::uint32_t>(), pair[1].get<double>());
    world.support.push_back(std::move(v));
    world.p_x.push_back(rec["p_x"].get<double>());
    world.q_x.push_back(rec["q_x"].get<double>());
    world.p_y_given_x.push_back(rec["p_row"].get<std::vector<double>>());
    world.q_y_given_x.push_back(rec["q_row"].get<std::vector<double>>());
  }
  if (world.support.size() != K)
    throw ParseError(path + ": expected " + std::to_string(K) + " support rows");
  world.validate();
  return world;
}

}  // namespace imploss
