#include <doctest.h>

#include <cmath>

#include "imploss/checkers.hpp"
#include "imploss/errors.hpp"
#include "imploss/synthworld.hpp"

using namespace imploss;

namespace {

WorldSpec small_spec(std::uint64_t seed) {
  WorldSpec s;
  s.K = 8;
  s.C = 4;
  s.d = 16;
  s.label_shift = 0.5;
  s.seed = seed;
  return s;
}

TrainConfig checker_config(std::uint64_t seed) {
  TrainConfig c;
  c.epochs = 5;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("fit_quality_checker: deterministic and counted") {
  JointWorld w = make_world(small_spec(1));
  Dataset ds = sample(w, Which::P, 300, 2);
  PipelineCounters counters;
  ClassifierParams a = fit_quality_checker(ds, checker_config(3), &counters);
  ClassifierParams b = fit_quality_checker(ds, checker_config(3));
  CHECK(a.w1 == b.w1);
  CHECK(a.b1 == b.b1);
  CHECK(counters.checker_fits == 1);
  CHECK(counters.scoring_passes == 0);
}

TEST_CASE("fit_diversity_checker: duplication raises its own probability") {
  // Fit the checker twice on datasets that differ only in one example being
  // duplicated 40 extra times; that example's scored probability must rise.
  JointWorld w = make_world(small_spec(4));
  Dataset base = sample(w, Which::Q, 200, 5);
  Dataset boosted = base;
  for (int i = 0; i < 40; ++i) boosted.examples.push_back(base.examples[0]);

  ClassifierParams plain = fit_diversity_checker(base, checker_config(6));
  ClassifierParams heavy = fit_diversity_checker(boosted, checker_config(6));

  Dataset probe;
  probe.num_classes = base.num_classes;
  probe.feature_dim = base.feature_dim;
  probe.examples = {base.examples[0]};
  CHECK(score_dataset(heavy, probe)[0] > score_dataset(plain, probe)[0]);
}

TEST_CASE("score_dataset: untrained model scores 1/C everywhere") {
  JointWorld w = make_world(small_spec(7));
  Dataset ds = sample(w, Which::Q, 50, 8);
  ClassifierParams m = init_params(w.feature_dim, w.num_classes, std::nullopt, 0);
  std::fill(m.w1.begin(), m.w1.end(), 0.0);
  PipelineCounters counters;
  std::vector<double> s = score_dataset(m, ds, &counters);
  REQUIRE(s.size() == ds.size());
  for (double p : s) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(counters.scoring_passes == 1);
  CHECK(counters.checker_fits == 0);
}

TEST_CASE("score_dataset: probabilities in (0,1], batch size irrelevant") {
  JointWorld w = make_world(small_spec(9));
  Dataset ds = sample(w, Which::Q, 157, 10);
  ClassifierParams checker = fit_diversity_checker(ds, checker_config(11));
  std::vector<double> a = score_dataset(checker, ds, nullptr, 64);
  std::vector<double> b = score_dataset(checker, ds, nullptr, 7);
  CHECK(a == b);
  for (double p : a) {
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("score_dataset: swapped labels score lower on average") {
  JointWorld w = make_world(small_spec(12));
  Dataset clean = sample(w, Which::P, 400, 13);
  ClassifierParams qc = fit_quality_checker(clean, checker_config(14));

  Dataset probe = sample(w, Which::P, 200, 15);
  Dataset corrupted = inject_label_swap(probe, 1.0, 16);
  std::vector<double> s_clean = score_dataset(qc, probe);
  std::vector<double> s_bad = score_dataset(qc, corrupted);
  double mean_clean = 0.0, mean_bad = 0.0;
  for (double p : s_clean) mean_clean += p;
  for (double p : s_bad) mean_bad += p;
  CHECK(mean_clean > mean_bad);
}

TEST_CASE("score_dataset: class-count mismatch rejected") {
  JointWorld w = make_world(small_spec(17));
  Dataset ds = sample(w, Which::Q, 20, 18);
  ClassifierParams wrong = init_params(w.feature_dim, w.num_classes + 1,
                                       std::nullopt, 0);
  CHECK_THROWS_AS(score_dataset(wrong, ds), ValidationError);
}

TEST_CASE("make_imp_provider: table is the clamped ratio") {
  WeightProvider p = make_imp_provider({0.8, 0.5, 0.9}, {0.4, 1e-9, 0.9},
                                       1e-4, 100.0);
  CHECK(p.kind == WeightProvider::Kind::precomputed);
  CHECK(p.table.provenance == WeightProvenance::imp);
  REQUIRE(p.table.weights.size() == 3);
  CHECK(p.table.weights[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(p.table.weights[1] == 100.0);  // denominator floored, then capped
  CHECK(p.table.weights[2] == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(make_imp_provider({0.5}, {0.5, 0.5}, 1e-4, 100.0),
                  ValidationError);
}

TEST_CASE("make_dimp_provider: stores numerators, validates range") {
  WeightProvider p = make_dimp_provider({0.25, 1.0, 0.0}, 1e-4, 100.0);
  CHECK(p.kind == WeightProvider::Kind::dynamic_quality);
  CHECK(p.quality_scores == std::vector<double>{0.25, 1.0, 0.0});
  CHECK(p.floor == 1e-4);
  CHECK(p.cap == 100.0);
  CHECK_THROWS_AS(make_dimp_provider({1.5}, 1e-4, 100.0), ValidationError);
  CHECK_THROWS_AS(make_dimp_provider({-0.1}, 1e-4, 100.0), ValidationError);
}

TEST_CASE("dimp training weight shrinks as the model fits one example") {
  // Single repeated example, q fixed: the applied weight q / p_model(y|x)
  // must fall monotonically across epochs as p_model(y|x) climbs.
  Dataset ds;
  ds.num_classes = 2;
  ds.feature_dim = 2;
  for (int i = 0; i < 4; ++i) ds.examples.push_back({{{0u, 1.0}}, 0});

  TrainConfig config;
  config.loss_kind = LossKind::dimp;
  config.epochs = 6;
  config.batch_size = 4;
  config.seed = 77;

  std::vector<double> per_epoch;
  WeightObserver obs = [&](int epoch, std::size_t, double weight) {
    if (static_cast<std::size_t>(epoch) >= per_epoch.size())
      per_epoch.resize(epoch + 1, 0.0);
    per_epoch[epoch] = weight;  // all four examples are identical
  };
  train(ds, config, make_dimp_provider({0.9, 0.9, 0.9, 0.9}, 1e-4, 100.0),
        nullptr, obs);

  REQUIRE(per_epoch.size() == 6);
  for (std::size_t e = 1; e < per_epoch.size(); ++e)
    CHECK(per_epoch[e] < per_epoch[e - 1]);
  CHECK(per_epoch[0] == doctest::Approx(0.9 / 0.5).epsilon(0.05));
}

TEST_CASE("imp pipeline end to end improves over raw ce under label shift") {
  WorldSpec spec = small_spec(20);
  spec.label_shift = 0.8;
  JointWorld w = make_world(spec);
  Dataset q_train = sample(w, Which::Q, 1500, 21);
  Dataset p_small = sample(w, Which::P, 300, 22);

  PipelineCounters counters;
  ClassifierParams qc = fit_quality_checker(p_small, checker_config(23), &counters);
  ClassifierParams dc = fit_diversity_checker(q_train, checker_config(24), &counters);
  std::vector<double> quality = score_dataset(qc, q_train, &counters);
  std::vector<double> diversity = score_dataset(dc, q_train, &counters);
  CHECK(counters.checker_fits == 2);
  CHECK(counters.scoring_passes == 2);

  TrainConfig config;
  config.loss_kind = LossKind::imp;
  config.seed = 25;
  config.epochs = 15;
  TrainResult imp = train(q_train, config,
                          make_imp_provider(quality, diversity, 1e-4, 100.0));
  config.loss_kind = LossKind::ce;
  TrainResult ce = train(q_train, config, WeightProvider::uniform());

  CHECK(exact_expected_ce(w, Which::P, imp.params) <
        exact_expected_ce(w, Which::P, ce.params));
}
