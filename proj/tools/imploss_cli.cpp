// Command-line front end: experiment runner, dataset scorer, noise study,
// synthetic-world utilities, and model evaluation.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "imploss/errors.hpp"
#include "imploss/experiment.hpp"

using namespace imploss;

namespace {

struct WorldFlags {
  int K = 16, C = 3, d = 32;
  double covariate_shift = 0.0, label_shift = 0.0;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--K", K, "support points");
    cmd->add_option("--C", C, "classes");
    cmd->add_option("--d", d, "feature dimension");
    cmd->add_option("--covariate-shift", covariate_shift, "0 keeps q(x)=p(x)");
    cmd->add_option("--label-shift", label_shift, "conditional mixing strength");
    cmd->add_option("--world-seed", seed, "world construction seed");
  }

  WorldSpec spec() const {
    WorldSpec s;
    s.K = K;
    s.C = C;
    s.d = d;
    s.covariate_shift = covariate_shift;
    s.label_shift = label_shift;
    s.seed = seed;
    return s;
  }
};

FileFormat format_from(const std::string& name) {
  if (name == "jsonl") return FileFormat::jsonl;
  if (name == "tsv") return FileFormat::tsv;
  throw ValidationError("unknown format: " + name);
}

int run_command(const std::string& config_path, const std::string& out_dir,
                const std::vector<std::string>& losses,
                const std::vector<std::uint64_t>& seeds, int epochs) {
  ExperimentConfig config = load_experiment_config(config_path);
  if (!out_dir.empty()) config.out_dir = out_dir;
  if (!losses.empty()) {
    config.losses.clear();
    for (const std::string& l : losses)
      config.losses.push_back(loss_kind_from_name(l));
  }
  if (!seeds.empty()) config.seeds = seeds;
  if (epochs > 0) config.train.epochs = epochs;
  config.validate();

  ExperimentReport report = run_experiment(config);
  for (const CellResult& cell : report.cells) {
    if (cell.ok())
      std::printf("%-6s seed=%llu accuracy=%.4f macro_f1=%.4f total=%.3fs\n",
                  loss_kind_name(cell.loss).c_str(),
                  static_cast<unsigned long long>(cell.seed),
                  cell.eval.accuracy, cell.eval.macro_f1, cell.timing.total);
    else
      std::printf("%-6s seed=%llu FAILED: %s\n",
                  loss_kind_name(cell.loss).c_str(),
                  static_cast<unsigned long long>(cell.seed),
                  cell.error.c_str());
  }
  std::printf("report: %s\n", report.report_path.c_str());
  return report.all_ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"importance-weighted cross-entropy training toolkit"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "run an experiment grid from a config file");
  std::string config_path, out_dir;
  std::vector<std::string> loss_names;
  std::vector<std::uint64_t> seed_list;
  int epochs_override = 0;
  run_cmd->add_option("--config", config_path, "key=value config file")->required();
  run_cmd->add_option("--out-dir", out_dir, "override output directory");
  run_cmd->add_option("--loss", loss_names, "override loss kinds (ce/focal/imp/dimp)");
  run_cmd->add_option("--seed", seed_list, "override repetition seeds");
  run_cmd->add_option("--epochs", epochs_override, "override training epochs");

  // score
  auto* score_cmd = app.add_subcommand("score", "rank training examples by weight");
  std::string score_train, score_small, score_mode = "imp",
              score_out = "scores.csv", score_format = "jsonl";
  double score_floor = 1e-4, score_cap = 100.0;
  int score_epochs = 5;
  std::uint64_t score_seed = 0;
  score_cmd->add_option("--train", score_train, "training dataset")->required();
  score_cmd->add_option("--small-real", score_small, "small real-world dataset")->required();
  score_cmd->add_option("--mode", score_mode, "imp or dimp_static");
  score_cmd->add_option("--format", score_format, "jsonl or tsv");
  score_cmd->add_option("--out", score_out, "output csv path");
  score_cmd->add_option("--floor", score_floor, "weight denominator floor");
  score_cmd->add_option("--cap", score_cap, "weight cap");
  score_cmd->add_option("--checker-epochs", score_epochs, "checker training epochs");
  score_cmd->add_option("--seed", score_seed, "checker seed");

  // noise-study
  auto* noise_cmd = app.add_subcommand("noise-study",
                                       "clean/swapped/duplicated group study");
  WorldFlags noise_world;
  noise_world.attach(noise_cmd);
  NoiseStudyConfig noise_config;
  std::vector<std::uint64_t> noise_seeds{0};
  bool no_noise = false;
  noise_cmd->add_option("--seed", noise_seeds, "repetition seeds");
  noise_cmd->add_option("--train-n", noise_config.train_n, "training examples");
  noise_cmd->add_option("--small-real-n", noise_config.small_real_n,
                        "small real-world examples");
  noise_cmd->add_option("--test-n", noise_config.test_n, "test examples");
  noise_cmd->add_option("--epochs", noise_config.train.epochs, "training epochs");
  noise_cmd->add_option("--checker-epochs", noise_config.checker_epochs,
                        "checker training epochs");
  noise_cmd->add_option("--out-dir", noise_config.out_dir, "output directory");
  noise_cmd->add_flag("--no-noise", no_noise, "clean control run");

  // make-world
  auto* world_cmd = app.add_subcommand("make-world", "construct a synthetic world");
  WorldFlags world_flags;
  world_flags.attach(world_cmd);
  std::string world_out = "world.jsonl";
  world_cmd->add_option("--out", world_out, "world jsonl path");

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "draw a dataset from a world");
  std::string sample_world, sample_which = "q", sample_out = "dataset.jsonl";
  int sample_n = 1000;
  std::uint64_t sample_seed = 0;
  sample_cmd->add_option("--world", sample_world, "world jsonl path")->required();
  sample_cmd->add_option("--which", sample_which, "p or q");
  sample_cmd->add_option("-n,--n", sample_n, "number of draws");
  sample_cmd->add_option("--seed", sample_seed, "sampling seed");
  sample_cmd->add_option("--out", sample_out, "dataset jsonl path");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  std::string eval_model, eval_data, eval_format = "jsonl", eval_out;
  eval_cmd->add_option("--model", eval_model, "model checkpoint json")->required();
  eval_cmd->add_option("--data", eval_data, "dataset path")->required();
  eval_cmd->add_option("--format", eval_format, "jsonl or tsv");
  eval_cmd->add_option("--out", eval_out, "optional csv output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd)
      return run_command(config_path, out_dir, loss_names, seed_list,
                         epochs_override);

    if (*score_cmd) {
      Dataset train_set = load_dataset(score_train, format_from(score_format));
      LoadOptions opts;
      opts.num_classes = train_set.num_classes;
      opts.feature_dim = train_set.feature_dim;
      Dataset small_real =
          load_dataset(score_small, format_from(score_format), opts);
      ScoreMode mode;
      if (score_mode == "imp")
        mode = ScoreMode::imp;
      else if (score_mode == "dimp_static")
        mode = ScoreMode::dimp_static;
      else
        throw ValidationError("unknown mode: " + score_mode);
      TrainConfig checker;
      checker.epochs = score_epochs;
      checker.seed = score_seed;
      std::vector<ScoreRow> rows = score_datasets(
          train_set, small_real, mode, checker, score_floor, score_cap);
      save_score_csv(rows, score_out);
      std::printf("wrote %zu rows to %s\n", rows.size(), score_out.c_str());
      return 0;
    }

    if (*noise_cmd) {
      noise_config.world = noise_world.spec();
      noise_config.seeds = noise_seeds;
      noise_config.apply_noise = !no_noise;
      NoiseStudyResult result = run_noise_study(noise_config);
      std::printf("summary: %s\nplot data: %s\n", result.summary_path.c_str(),
                  result.plot_path.c_str());
      return 0;
    }

    if (*world_cmd) {
      JointWorld world = make_world(world_flags.spec());
      world.save_jsonl(world_out);
      std::printf("wrote world (K=%zu, C=%d) to %s\n", world.support_size(),
                  world.num_classes, world_out.c_str());
      return 0;
    }

    if (*sample_cmd) {
      JointWorld world = JointWorld::load_jsonl(sample_world);
      Which which;
      if (sample_which == "p" || sample_which == "P")
        which = Which::P;
      else if (sample_which == "q" || sample_which == "Q")
        which = Which::Q;
      else
        throw ValidationError("--which must be p or q");
      Dataset ds = sample(world, which, sample_n, sample_seed);
      save_dataset(ds, sample_out);
      std::printf("wrote %zu examples to %s\n", ds.size(), sample_out.c_str());
      return 0;
    }

    if (*eval_cmd) {
      ClassifierParams params = load_params(eval_model);
      LoadOptions opts;
      opts.num_classes = params.num_classes;
      opts.feature_dim = params.d;
      Dataset ds = load_dataset(eval_data, format_from(eval_format), opts);
      EvalReport report = evaluate(params, ds);
      std::printf("%s\n%s\n", EvalReport::csv_header().c_str(),
                  report.csv_row().c_str());
      if (!eval_out.empty()) {
        std::ofstream out(eval_out);
        out << EvalReport::csv_header() << '\n' << report.csv_row() << '\n';
      }
      return 0;
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
