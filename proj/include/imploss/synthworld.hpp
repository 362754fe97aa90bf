#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "imploss/corpus.hpp"
#include "imploss/model.hpp"

namespace imploss {

enum class Which { P, Q };
enum class KlDirection { P_given_Q, Q_given_P };  // P||Q and Q||P

// Finite ground-truth joint distributions P(x,y) and Q(x,y) over K support
// vectors and C classes. Every expectation over them is an exact finite sum,
// which is what makes the estimator and convergence claims checkable.
struct JointWorld {
  std::vector<SparseVec> support;           // K distinct unit-norm vectors
  std::vector<double> p_x, q_x;             // length K, each sums to 1
  std::vector<std::vector<double>> p_y_given_x, q_y_given_x;  // K x C
  int num_classes = 0;
  int feature_dim = 0;
  std::uint64_t seed = 0;

  std::size_t support_size() const { return support.size(); }
  void validate() const;

  void save_jsonl(const std::string& path) const;
  static JointWorld load_jsonl(const std::string& path);
};

struct WorldSpec {
  int K = 16;
  int C = 3;
  int d = 32;
  double covariate_shift = 0.0;  // 0 forces q_x == p_x
  double label_shift = 0.0;      // mixture distance between p and q rows
  std::uint64_t seed = 0;

  void validate() const;
};

// Seeded construction: sparse unit-norm support vectors; conditional rows
// from normalized seeded exponentials; q rows mixed toward a random row by
// label_shift, then floored at 1e-6 and renormalized so importance ratios
// stay finite.
JointWorld make_world(const WorldSpec& spec);

Dataset sample(const JointWorld& world, Which which, int n, std::uint64_t seed);

// sum_x m(x) sum_y cond(y|x) * (-log p_model(y|x)) over the K x C grid.
double exact_expected_ce(const JointWorld& world, Which which,
                         const ClassifierParams& params);

// E_Q[(P(y|x)/Q(y|x)) * (-log p_model(y|x))] by exact summation.
double exact_weighted_expectation(const JointWorld& world,
                                  const ClassifierParams& params);

// Exact Var_Q(Z) of the single-draw importance-weighted loss term; feeds
// the Chebyshev deviation bound.
double exact_weighted_variance(const JointWorld& world,
                               const ClassifierParams& params);

double true_conditional_entropy(const JointWorld& world, Which which);
double true_conditional_kl(const JointWorld& world, KlDirection direction);

// Replaces the label of a seeded floor(fraction*N)-subset with a uniformly
// random different label; affected examples are tagged swapped.
Dataset inject_label_swap(const Dataset& ds, double fraction, std::uint64_t seed);

// Appends one copy of a seeded floor(fraction*N)-subset at the end; the
// copies are tagged duplicated.
Dataset inject_duplicates(const Dataset& ds, double fraction, std::uint64_t seed);

}  // namespace imploss
