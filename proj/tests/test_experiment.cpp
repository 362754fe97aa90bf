#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "imploss/errors.hpp"
#include "imploss/experiment.hpp"

using namespace imploss;

namespace {

namespace fs = std::filesystem;

WorldSpec tiny_world(std::uint64_t seed) {
  WorldSpec s;
  s.K = 8;
  s.C = 3;
  s.d = 16;
  s.label_shift = 0.5;
  s.seed = seed;
  return s;
}

ExperimentConfig tiny_config(const std::string& out_dir) {
  ExperimentConfig c;
  c.world = tiny_world(1);
  c.train_n = 400;
  c.small_real_n = 150;
  c.test_n = 200;
  c.train.epochs = 4;
  c.checker_epochs = 3;
  c.seeds = {11};
  c.out_dir = out_dir;
  return c;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

const CellResult& cell_for(const ExperimentReport& r, LossKind k) {
  for (const CellResult& c : r.cells)
    if (c.loss == k) return c;
  FAIL("missing cell");
  return r.cells.front();
}

}  // namespace

TEST_CASE("run_experiment: phase applicability per loss") {
  ExperimentConfig config = tiny_config("/tmp/imploss_exp_phases");
  config.losses = {LossKind::ce, LossKind::focal, LossKind::imp, LossKind::dimp};
  config.train.gamma = 1.0;
  ExperimentReport report = run_experiment(config);
  REQUIRE(report.cells.size() == 4);
  REQUIRE(report.all_ok());

  const CellResult& ce = cell_for(report, LossKind::ce);
  CHECK(ce.timing.build_qc == 0.0);
  CHECK(ce.timing.build_dc == 0.0);
  CHECK(ce.timing.precalculate_weights == 0.0);
  CHECK(ce.timing.training > 0.0);
  CHECK(ce.counters.checker_fits == 0);
  CHECK(ce.counters.scoring_passes == 0);

  const CellResult& focal = cell_for(report, LossKind::focal);
  CHECK(focal.counters.checker_fits == 0);
  CHECK(focal.timing.build_qc == 0.0);

  const CellResult& imp = cell_for(report, LossKind::imp);
  CHECK(imp.timing.build_qc > 0.0);
  CHECK(imp.timing.build_dc > 0.0);
  CHECK(imp.timing.precalculate_weights > 0.0);
  CHECK(imp.timing.training > 0.0);
  CHECK(imp.counters.checker_fits == 2);
  CHECK(imp.counters.scoring_passes == 2);

  const CellResult& dimp = cell_for(report, LossKind::dimp);
  CHECK(dimp.timing.build_qc > 0.0);
  CHECK(dimp.timing.build_dc == 0.0);
  CHECK(dimp.counters.checker_fits == 1);
  CHECK(dimp.counters.scoring_passes == 1);

  // timing totals cover the phases
  for (const CellResult& c : report.cells) {
    const double sum = c.timing.build_qc + c.timing.build_dc +
                       c.timing.precalculate_weights + c.timing.training;
    CHECK(c.timing.total >= sum * 0.98);
  }
}

TEST_CASE("run_experiment: artifacts and report schema") {
  const std::string out = "/tmp/imploss_exp_artifacts";
  fs::remove_all(out);
  ExperimentConfig config = tiny_config(out);
  config.losses = {LossKind::ce, LossKind::imp};
  ExperimentReport report = run_experiment(config);
  REQUIRE(report.all_ok());

  std::vector<std::string> lines = read_lines(report.report_path);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] ==
        "version,loss,seed,accuracy,macro_f1,final_train_loss,build_qc_s,"
        "build_dc_s,precalc_s,train_s,total_s,checker_fits,scoring_passes,"
        "history,error");
  for (std::size_t i = 1; i < lines.size(); ++i)
    CHECK(split_csv(lines[i]).size() >= 14);

  for (const CellResult& c : report.cells) {
    CHECK(fs::exists(c.history_path));
    std::vector<std::string> hist = read_lines(c.history_path);
    CHECK(hist[0] == "epoch,loss,accuracy,seconds");
    CHECK(hist.size() == static_cast<std::size_t>(config.train.epochs) + 1);
  }
  CHECK(fs::exists(out + "/imp_11_weights.csv"));
  CHECK(fs::exists(out + "/imp_11_model.json"));
  CHECK(fs::exists(out + "/world_11.jsonl"));
}

TEST_CASE("run_experiment: metric fields are reproducible") {
  ExperimentConfig config = tiny_config("/tmp/imploss_exp_repro");
  config.losses = {LossKind::dimp};
  ExperimentReport a = run_experiment(config);
  config.out_dir = "/tmp/imploss_exp_repro2";
  ExperimentReport b = run_experiment(config);
  REQUIRE(a.all_ok());
  REQUIRE(b.all_ok());
  CHECK(a.cells[0].eval.accuracy == b.cells[0].eval.accuracy);
  CHECK(a.cells[0].eval.macro_f1 == b.cells[0].eval.macro_f1);
  CHECK(a.cells[0].final_train_loss == b.cells[0].final_train_loss);
}

TEST_CASE("run_experiment: config validation") {
  ExperimentConfig config = tiny_config("/tmp/imploss_exp_bad");
  config.world.reset();  // neither world nor paths
  CHECK_THROWS_AS(config.validate(), ValidationError);

  config = tiny_config("/tmp/imploss_exp_bad");
  config.train_path = "somewhere.jsonl";  // both sources at once
  CHECK_THROWS_AS(config.validate(), ValidationError);

  config = tiny_config("/tmp/imploss_exp_bad");
  config.seeds = {3, 3};
  CHECK_THROWS_AS(config.validate(), ValidationError);
}

TEST_CASE("score_datasets: ordering and corrupted-label placement") {
  JointWorld w = make_world(tiny_world(40));
  Dataset train_set = sample(w, Which::Q, 300, 41);
  Dataset small_real = sample(w, Which::P, 200, 42);

  // corrupt a fixed block of labels; those rows should sink in the ranking
  Dataset corrupted = train_set;
  Dataset swapped_block = inject_label_swap(
      Dataset{{corrupted.examples.begin(), corrupted.examples.begin() + 60},
              corrupted.num_classes, corrupted.feature_dim},
      1.0, 43);
  for (int i = 0; i < 60; ++i) corrupted.examples[i] = swapped_block.examples[i];

  TrainConfig checker;
  checker.epochs = 8;
  checker.seed = 44;
  std::vector<ScoreRow> rows =
      score_datasets(corrupted, small_real, ScoreMode::imp, checker, 1e-4, 100.0);
  REQUIRE(rows.size() == corrupted.size());
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(rows[i - 1].weight >= rows[i].weight);
  for (const ScoreRow& r : rows)
    CHECK(r.weight ==
          doctest::Approx(std::min(100.0, r.quality / std::max(r.denominator, 1e-4)))
              .epsilon(1e-12));

  // corrupted indices should be over-represented in the bottom half
  std::size_t bottom_corrupted = 0;
  for (std::size_t i = rows.size() / 2; i < rows.size(); ++i)
    if (rows[i].index < 60) ++bottom_corrupted;
  CHECK(bottom_corrupted > 30);

  const std::string path = "/tmp/imploss_scores.csv";
  save_score_csv(rows, path);
  std::vector<std::string> lines = read_lines(path);
  CHECK(lines[0] == "index,label,quality,denominator,weight");
  CHECK(lines.size() == rows.size() + 1);
}

TEST_CASE("score_datasets: dimp_static uses the ce-trained model as denominator") {
  JointWorld w = make_world(tiny_world(50));
  Dataset train_set = sample(w, Which::Q, 200, 51);
  Dataset small_real = sample(w, Which::P, 150, 52);
  TrainConfig checker;
  checker.epochs = 5;
  checker.seed = 53;
  std::vector<ScoreRow> rows = score_datasets(train_set, small_real,
                                              ScoreMode::dimp_static, checker,
                                              1e-4, 100.0);
  REQUIRE(rows.size() == train_set.size());
  for (const ScoreRow& r : rows) {
    CHECK(r.denominator > 0.0);
    CHECK(r.denominator <= 1.0);
  }
}

TEST_CASE("run_noise_study: group stats and output schemas") {
  NoiseStudyConfig config;
  config.world = tiny_world(60);
  config.seeds = {5};
  config.train_n = 300;
  config.small_real_n = 150;
  config.test_n = 150;
  config.train.epochs = 3;
  config.checker_epochs = 3;
  config.out_dir = "/tmp/imploss_noise";
  fs::remove_all(config.out_dir);

  NoiseStudyResult result = run_noise_study(config);
  REQUIRE(result.per_seed_groups.size() == 1);
  std::set<SourceTag> groups;
  std::size_t total = 0;
  for (const NoiseGroupStats& g : result.per_seed_groups[0]) {
    groups.insert(g.group);
    total += g.count;
    CHECK(g.mean_quality > 0.0);
    CHECK(g.mean_imp_weight > 0.0);
  }
  CHECK(groups.size() == 3);
  CHECK(total >= static_cast<std::size_t>(config.train_n));

  std::vector<std::string> summary = read_lines(result.summary_path);
  CHECK(summary[0] ==
        "seed,group,count,mean_quality,mean_diversity,mean_imp_weight");
  CHECK(summary.size() == 4);

  std::vector<std::string> plot = read_lines(result.plot_path);
  CHECK(plot[0] == "seed,group,epoch,quantity,value");
  // 3 groups x epochs rows of dimp weight means
  CHECK(plot.size() == 1 + 3 * static_cast<std::size_t>(config.train.epochs));

  std::vector<std::string> eval_lines = read_lines(config.out_dir + "/eval.csv");
  CHECK(eval_lines[0] == "seed,loss,accuracy,macro_f1,n_examples");
  CHECK(eval_lines.size() == 5);  // four loss kinds
}

TEST_CASE("run_noise_study: clean control collapses to one group") {
  NoiseStudyConfig config;
  config.world = tiny_world(61);
  config.seeds = {6};
  config.train_n = 200;
  config.small_real_n = 120;
  config.test_n = 120;
  config.train.epochs = 2;
  config.checker_epochs = 2;
  config.apply_noise = false;
  config.out_dir = "/tmp/imploss_noise_clean";
  fs::remove_all(config.out_dir);

  NoiseStudyResult result = run_noise_study(config);
  REQUIRE(result.per_seed_groups.size() == 1);
  REQUIRE(result.per_seed_groups[0].size() == 1);
  CHECK(result.per_seed_groups[0][0].group == SourceTag::original);
  CHECK(result.per_seed_groups[0][0].count ==
        static_cast<std::size_t>(config.train_n));
}

TEST_CASE("run_experiment: golden metric columns on a fixed-seed tiny run") {
  ExperimentConfig config;
  config.world = tiny_world(0);
  config.world->K = 8;
  config.world->C = 3;
  config.world->d = 16;
  config.world->label_shift = 0.5;
  config.world->seed = 77;
  config.train_n = 200;
  config.small_real_n = 100;
  config.test_n = 100;
  config.train.epochs = 3;
  config.checker_epochs = 2;
  config.losses = {LossKind::ce, LossKind::imp, LossKind::dimp};
  config.seeds = {5};
  config.out_dir = "/tmp/imploss_exp_golden";
  fs::remove_all(config.out_dir);

  ExperimentReport report = run_experiment(config);
  std::vector<std::string> lines = read_lines(report.report_path);
  REQUIRE(lines.size() == 4);

  // version,loss,seed,accuracy,macro_f1,final_train_loss for each cell,
  // frozen from a reference run; timing columns are excluded
  const std::vector<std::vector<std::string>> golden = {
      {"1", "ce", "5", "0.65000000000000002", "0.48321048321048327",
       "1.0379489246061835"},
      {"1", "imp", "5", "0.77000000000000002", "0.70088270088270088",
       "0.94096837048723225"},
      {"1", "dimp", "5", "0.63", "0.45014245014245019",
       "0.96801694545603889"},
  };
  for (std::size_t row = 0; row < golden.size(); ++row) {
    std::vector<std::string> fields = split_csv(lines[row + 1]);
    REQUIRE(fields.size() >= 13);
    for (std::size_t col = 0; col < 6; ++col)
      CHECK(fields[col] == golden[row][col]);
  }
  // counter columns
  CHECK(split_csv(lines[1])[11] == "0");
  CHECK(split_csv(lines[2])[11] == "2");
  CHECK(split_csv(lines[2])[12] == "2");
  CHECK(split_csv(lines[3])[11] == "1");
  CHECK(split_csv(lines[3])[12] == "1");
}

TEST_CASE("load_experiment_config: full round trip of keys") {
  const std::string path = "/tmp/imploss_config.cfg";
  std::ofstream out(path);
  out << "# comment line\n"
         "world.K = 10\n"
         "world.C = 4\n"
         "world.d = 24\n"
         "world.covariate_shift = 0.0\n"
         "world.label_shift = 0.6\n"
         "world.seed = 9\n"
         "train_n = 500\n"
         "small_real_n = 200\n"
         "test_n = 250\n"
         "losses = ce,imp,dimp\n"
         "learning_rate = 0.25\n"
         "epochs = 7\n"
         "batch_size = 16\n"
         "weight_floor = 0.001\n"
         "weight_cap = 50\n"
         "checker_epochs = 4\n"
         "seeds = 1,2,3\n"
         "out_dir = /tmp/imploss_cfg_out\n";
  out.close();

  ExperimentConfig config = load_experiment_config(path);
  REQUIRE(config.world.has_value());
  CHECK(config.world->K == 10);
  CHECK(config.world->C == 4);
  CHECK(config.world->label_shift == 0.6);
  CHECK(config.train_n == 500);
  CHECK(config.losses ==
        std::vector<LossKind>{LossKind::ce, LossKind::imp, LossKind::dimp});
  CHECK(config.train.learning_rate == 0.25);
  CHECK(config.train.epochs == 7);
  CHECK(config.train.batch_size == 16);
  CHECK(config.train.weight_floor == 0.001);
  CHECK(config.train.weight_cap == 50.0);
  CHECK(config.checker_epochs == 4);
  CHECK(config.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(config.out_dir == "/tmp/imploss_cfg_out");
}

TEST_CASE("load_experiment_config: unknown key is an error") {
  const std::string path = "/tmp/imploss_config_bad.cfg";
  std::ofstream(path) << "world.K = 8\nnonsense_key = 1\n";
  CHECK_THROWS_AS(load_experiment_config(path), ValidationError);
}
