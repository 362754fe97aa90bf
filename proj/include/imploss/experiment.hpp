#pragma once

#include <optional>
#include <string>
#include <vector>

#include "imploss/checkers.hpp"
#include "imploss/metrics.hpp"
#include "imploss/synthworld.hpp"

namespace imploss {

struct PhaseTiming {
  double build_qc = 0.0;
  double build_dc = 0.0;
  double precalculate_weights = 0.0;
  double training = 0.0;
  double total = 0.0;
};

struct ExperimentConfig {
  // Data source: either a synthetic world ...
  std::optional<WorldSpec> world;
  int train_n = 2000;
  int small_real_n = 300;
  int test_n = 1000;
  // ... or files on disk (jsonl).
  std::string train_path, small_real_path, test_path;

  std::vector<LossKind> losses{LossKind::ce};
  TrainConfig train;
  int checker_epochs = 5;
  std::optional<int> checker_hidden_units;
  int precalc_batch_size = 64;
  std::vector<std::uint64_t> seeds{0};
  std::string out_dir = "out";

  void validate() const;
};

struct CellResult {
  LossKind loss = LossKind::ce;
  std::uint64_t seed = 0;
  EvalReport eval;
  double final_train_loss = 0.0;
  PhaseTiming timing;
  PipelineCounters counters;
  std::string history_path;
  std::string error;  // nonempty if this cell failed

  bool ok() const { return error.empty(); }
};

struct ExperimentReport {
  std::vector<CellResult> cells;
  std::string report_path;

  bool all_ok() const;
};

// One (loss, seed) grid: per cell fit whatever checkers the loss needs,
// precompute weights, train, evaluate, and write all artifacts under
// config.out_dir. A failed cell is recorded, not fatal.
ExperimentReport run_experiment(const ExperimentConfig& config);

struct ScoreRow {
  std::size_t index = 0;
  int label = 0;
  double quality = 0.0;
  double denominator = 0.0;  // diversity prob (imp) or model prob (dimp_static)
  double weight = 0.0;
};

enum class ScoreMode { imp, dimp_static };

// Ranks training examples by weight, descending; the pruning-scorer view.
std::vector<ScoreRow> score_datasets(const Dataset& train_set,
                                     const Dataset& small_real, ScoreMode mode,
                                     const TrainConfig& checker_config,
                                     double floor, double cap);

void save_score_csv(const std::vector<ScoreRow>& rows, const std::string& path);

struct NoiseStudyConfig {
  WorldSpec world;
  std::vector<std::uint64_t> seeds{0};
  int train_n = 1200;
  int small_real_n = 300;
  int test_n = 600;
  TrainConfig train;
  int checker_epochs = 5;
  bool apply_noise = true;  // false: clean control run, single group
  std::string out_dir = "noise_out";
};

struct NoiseGroupStats {
  SourceTag group;
  std::size_t count = 0;
  double mean_quality = 0.0;
  double mean_diversity = 0.0;
  double mean_imp_weight = 0.0;
};

struct NoiseStudyResult {
  // per seed, stats for the original / swapped / duplicated groups
  std::vector<std::vector<NoiseGroupStats>> per_seed_groups;
  std::string summary_path;
  std::string plot_path;
};

// Controlled-noise experiment: thirds of the training set are kept
// clean, label-swapped, and duplicated; checkers are fit, every loss kind is
// trained, and group-level score/weight summaries plus tidy per-epoch DIMP
// weight series are written.
NoiseStudyResult run_noise_study(const NoiseStudyConfig& config);

// Flat key=value config file; unknown keys are an error.
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace imploss
