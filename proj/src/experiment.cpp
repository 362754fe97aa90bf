#include "imploss/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "imploss/errors.hpp"
#include "imploss/losses.hpp"
#include "imploss/rng.hpp"

namespace imploss {

namespace fs = std::filesystem;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

const char* group_name(SourceTag t) {
  switch (t) {
    case SourceTag::swapped: return "swapped";
    case SourceTag::duplicated: return "duplicated";
    default: return "original";
  }
}

struct CellData {
  const Dataset* train_set;
  const Dataset* small_real;
  const Dataset* test_set;
};

TrainConfig checker_config(const ExperimentConfig& config, std::uint64_t seed,
                           std::uint64_t stream) {
  TrainConfig c = config.train;
  c.loss_kind = LossKind::ce;
  c.epochs = config.checker_epochs;
  c.hidden_units = config.checker_hidden_units;
  c.seed = mix_seed(seed, stream);
  return c;
}

CellResult run_cell(const ExperimentConfig& config, LossKind loss,
                    std::uint64_t seed, const CellData& data) {
  CellResult cell;
  cell.loss = loss;
  cell.seed = seed;
  const std::string stem =
      config.out_dir + "/" + loss_kind_name(loss) + "_" + std::to_string(seed);

  const double t_total0 = now_seconds();
  try {
    TrainConfig tc = config.train;
    tc.loss_kind = loss;
    tc.seed = seed;

    WeightProvider provider = WeightProvider::uniform();
    std::vector<double> quality, diversity;

    if (loss == LossKind::focal) {
      provider = WeightProvider::focal(tc.gamma);
    } else if (loss == LossKind::imp || loss == LossKind::dimp) {
      double t0 = now_seconds();
      ClassifierParams qc = fit_quality_checker(
          *data.small_real, checker_config(config, seed, 7), &cell.counters);
      cell.timing.build_qc = now_seconds() - t0;

      ClassifierParams dc;
      if (loss == LossKind::imp) {
        t0 = now_seconds();
        dc = fit_diversity_checker(*data.train_set,
                                   checker_config(config, seed, 8),
                                   &cell.counters);
        cell.timing.build_dc = now_seconds() - t0;
      }

      t0 = now_seconds();
      quality = score_dataset(qc, *data.train_set, &cell.counters,
                              config.precalc_batch_size);
      if (loss == LossKind::imp) {
        diversity = score_dataset(dc, *data.train_set, &cell.counters,
                                  config.precalc_batch_size);
        provider = make_imp_provider(quality, diversity, tc.weight_floor,
                                     tc.weight_cap);
        provider.table.save_csv(stem + "_weights.csv");
      } else {
        provider = make_dimp_provider(quality, tc.weight_floor, tc.weight_cap);
      }
      cell.timing.precalculate_weights = now_seconds() - t0;
    }

    const double t_train0 = now_seconds();
    TrainResult result = train(*data.train_set, tc, provider, data.test_set);
    cell.timing.training = now_seconds() - t_train0;
    // total covers the pipeline phases; evaluation and artifact writes below
    // are identical across losses and excluded from the cost comparison
    cell.timing.total = now_seconds() - t_total0;

    cell.final_train_loss = result.history.epochs.back().train_loss;
    cell.eval = evaluate(result.params, *data.test_set);
    cell.history_path = stem + "_history.csv";
    result.history.save_csv(cell.history_path);
    save_params(result.params, stem + "_model.json");
  } catch (const std::exception& e) {
    cell.error = e.what();
    cell.timing.total = now_seconds() - t_total0;
  }
  return cell;
}

void write_report_csv(const std::string& path, const std::vector<CellResult>& cells) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out << "version,loss,seed,accuracy,macro_f1,final_train_loss,"
         "build_qc_s,build_dc_s,precalc_s,train_s,total_s,"
         "checker_fits,scoring_passes,history,error\n";
  out.precision(17);
  for (const CellResult& c : cells) {
    out << 1 << ',' << loss_kind_name(c.loss) << ',' << c.seed << ','
        << c.eval.accuracy << ',' << c.eval.macro_f1 << ','
        << c.final_train_loss << ',' << c.timing.build_qc << ','
        << c.timing.build_dc << ',' << c.timing.precalculate_weights << ','
        << c.timing.training << ',' << c.timing.total << ','
        << c.counters.checker_fits << ',' << c.counters.scoring_passes << ','
        << c.history_path << ',' << c.error << '\n';
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (losses.empty()) throw ValidationError("config: at least one loss kind");
  if (seeds.empty()) throw ValidationError("config: at least one seed");
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ValidationError("config: repetition seeds must be distinct");
  const bool have_world = world.has_value();
  const bool have_paths = !train_path.empty();
  if (have_world == have_paths)
    throw ValidationError("config: provide either a world spec or dataset paths");
  if (have_world) world->validate();
  if (have_paths && (small_real_path.empty() || test_path.empty()))
    throw ValidationError("config: train/small-real/test paths all required");
  if (checker_epochs < 1) throw ValidationError("config: checker_epochs >= 1");
  if (precalc_batch_size < 1)
    throw ValidationError("config: precalc_batch_size >= 1");
  train.validate();
}

bool ExperimentReport::all_ok() const {
  return std::all_of(cells.begin(), cells.end(),
                     [](const CellResult& c) { return c.ok(); });
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  fs::create_directories(config.out_dir);

  // File-backed datasets are shared across seeds; world-backed ones are
  // resampled per seed.
  Dataset file_train, file_small, file_test;
  if (!config.train_path.empty()) {
    file_train = load_dataset(config.train_path, FileFormat::jsonl);
    file_small = load_dataset(config.small_real_path, FileFormat::jsonl);
    file_test = load_dataset(config.test_path, FileFormat::jsonl);
  }

  ExperimentReport report;
  for (std::uint64_t seed : config.seeds) {
    Dataset train_set, small_real, test_set;
    CellData data{&file_train, &file_small, &file_test};
    if (config.world) {
      JointWorld world = make_world(*config.world);
      world.save_jsonl(config.out_dir + "/world_" + std::to_string(seed) + ".jsonl");
      train_set = sample(world, Which::Q, config.train_n, mix_seed(seed, 101));
      small_real = sample(world, Which::P, config.small_real_n, mix_seed(seed, 102));
      test_set = sample(world, Which::P, config.test_n, mix_seed(seed, 103));
      data = CellData{&train_set, &small_real, &test_set};
    }
    for (LossKind loss : config.losses)
      report.cells.push_back(run_cell(config, loss, seed, data));
  }

  report.report_path = config.out_dir + "/report.csv";
  write_report_csv(report.report_path, report.cells);
  return report;
}

std::vector<ScoreRow> score_datasets(const Dataset& train_set,
                                     const Dataset& small_real, ScoreMode mode,
                                     const TrainConfig& checker_cfg,
                                     double floor, double cap) {
  if (train_set.num_classes != small_real.num_classes)
    throw ValidationError("score: train and small-real class counts differ");

  TrainConfig qc_cfg = checker_cfg;
  qc_cfg.loss_kind = LossKind::ce;
  ClassifierParams qc = fit_quality_checker(small_real, qc_cfg);
  std::vector<double> quality = score_dataset(qc, train_set);

  TrainConfig den_cfg = checker_cfg;
  den_cfg.loss_kind = LossKind::ce;
  den_cfg.seed = mix_seed(checker_cfg.seed, 8);
  // dimp_static scores against a CE-model snapshot fit on the train set.
  ClassifierParams den_model = mode == ScoreMode::imp
                                   ? fit_diversity_checker(train_set, den_cfg)
                                   : train(train_set, den_cfg,
                                           WeightProvider::uniform())
                                         .params;
  std::vector<double> denom = score_dataset(den_model, train_set);

  std::vector<ScoreRow> rows(train_set.size());
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    rows[i].index = i;
    rows[i].label = train_set.examples[i].label;
    rows[i].quality = quality[i];
    rows[i].denominator = denom[i];
    rows[i].weight = imp_weight(quality[i], denom[i], floor, cap);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ScoreRow& a, const ScoreRow& b) {
                     return a.weight > b.weight;
                   });
  return rows;
}

void save_score_csv(const std::vector<ScoreRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out << "index,label,quality,denominator,weight\n";
  out.precision(17);
  for (const ScoreRow& r : rows)
    out << r.index << ',' << r.label << ',' << r.quality << ','
        << r.denominator << ',' << r.weight << '\n';
}

NoiseStudyResult run_noise_study(const NoiseStudyConfig& config) {
  config.world.validate();
  config.train.validate();
  if (config.seeds.empty()) throw ValidationError("noise study: no seeds");
  fs::create_directories(config.out_dir);

  NoiseStudyResult result;
  result.summary_path = config.out_dir + "/summary.csv";
  result.plot_path = config.out_dir + "/plot_data.csv";
  std::ofstream summary(result.summary_path);
  std::ofstream plot(result.plot_path);
  if (!summary || !plot)
    throw ParseError("cannot open noise study outputs under " + config.out_dir);
  summary << "seed,group,count,mean_quality,mean_diversity,mean_imp_weight\n";
  summary.precision(17);
  std::ofstream evals(config.out_dir + "/eval.csv");
  evals << "seed,loss," << EvalReport::csv_header() << '\n';
  evals.precision(17);
  plot << "seed,group,epoch,quantity,value\n";
  plot.precision(17);

  for (std::uint64_t s : config.seeds) {
    WorldSpec spec = config.world;
    spec.seed = mix_seed(config.world.seed, s);
    JointWorld world = make_world(spec);

    Dataset clean = sample(world, Which::Q, config.train_n, mix_seed(s, 201));
    Dataset small_real = sample(world, Which::P, config.small_real_n, mix_seed(s, 202));
    Dataset test_set = sample(world, Which::P, config.test_n, mix_seed(s, 203));

    // Three-way split: one third untouched, one third label-swapped, one
    // third with every point duplicated once.
    Dataset noisy;
    if (config.apply_noise) {
      std::vector<Dataset> parts =
          split(clean, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, mix_seed(s, 204));
      Dataset swapped = inject_label_swap(parts[1], 1.0, mix_seed(s, 205));
      Dataset duplicated = inject_duplicates(parts[2], 1.0, mix_seed(s, 206));
      for (Example& ex : duplicated.examples) ex.tag = SourceTag::duplicated;

      noisy.num_classes = clean.num_classes;
      noisy.feature_dim = clean.feature_dim;
      for (const Dataset* part : {&parts[0], &swapped, &duplicated})
        noisy.examples.insert(noisy.examples.end(), part->examples.begin(),
                              part->examples.end());
    } else {
      noisy = clean;
    }

    TrainConfig ccfg = config.train;
    ccfg.loss_kind = LossKind::ce;
    ccfg.epochs = config.checker_epochs;
    ClassifierParams qc = fit_quality_checker(small_real, [&] {
      TrainConfig c = ccfg;
      c.seed = mix_seed(s, 7);
      return c;
    }());
    ClassifierParams dc = fit_diversity_checker(noisy, [&] {
      TrainConfig c = ccfg;
      c.seed = mix_seed(s, 8);
      return c;
    }());
    std::vector<double> quality = score_dataset(qc, noisy);
    std::vector<double> diversity = score_dataset(dc, noisy);

    std::map<SourceTag, NoiseGroupStats> stats;
    for (std::size_t i = 0; i < noisy.size(); ++i) {
      NoiseGroupStats& g = stats[noisy.examples[i].tag];
      g.group = noisy.examples[i].tag;
      g.count += 1;
      g.mean_quality += quality[i];
      g.mean_diversity += diversity[i];
      g.mean_imp_weight += imp_weight(quality[i], diversity[i],
                                      config.train.weight_floor,
                                      config.train.weight_cap);
    }
    std::vector<NoiseGroupStats> groups;
    for (auto& [tag, g] : stats) {
      g.mean_quality /= static_cast<double>(g.count);
      g.mean_diversity /= static_cast<double>(g.count);
      g.mean_imp_weight /= static_cast<double>(g.count);
      summary << s << ',' << group_name(tag) << ',' << g.count << ','
              << g.mean_quality << ',' << g.mean_diversity << ','
              << g.mean_imp_weight << '\n';
      groups.push_back(g);
    }
    result.per_seed_groups.push_back(std::move(groups));

    // Train every loss kind; DIMP additionally records its per-epoch mean
    // weight per group.
    for (LossKind loss : {LossKind::ce, LossKind::focal, LossKind::imp,
                          LossKind::dimp}) {
      TrainConfig tc = config.train;
      tc.loss_kind = loss;
      tc.seed = s;
      WeightProvider provider = WeightProvider::uniform();
      WeightObserver observer;
      std::map<std::pair<int, SourceTag>, std::pair<double, std::size_t>> wsums;
      switch (loss) {
        case LossKind::ce: break;
        case LossKind::focal: provider = WeightProvider::focal(tc.gamma); break;
        case LossKind::imp:
          provider = make_imp_provider(quality, diversity, tc.weight_floor,
                                       tc.weight_cap);
          break;
        case LossKind::dimp:
          provider = make_dimp_provider(quality, tc.weight_floor, tc.weight_cap);
          observer = [&](int epoch, std::size_t idx, double w) {
            auto& cell = wsums[{epoch, noisy.examples[idx].tag}];
            cell.first += w;
            cell.second += 1;
          };
          break;
      }
      TrainResult r = train(noisy, tc, provider, nullptr, observer);
      evals << s << ',' << loss_kind_name(loss) << ','
            << evaluate(r.params, test_set).csv_row() << '\n';
      for (const auto& [key, sum_count] : wsums)
        plot << s << ',' << group_name(key.second) << ',' << key.first
             << ",dimp_weight," << sum_count.first / sum_count.second << '\n';
    }
  }
  return result;
}

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError("config: bad boolean '" + v + "'");
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path);
  ExperimentConfig cfg;
  WorldSpec world;
  bool world_touched = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(line_no) +
                       ": expected key = value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "world.K") { world.K = std::stoi(val); world_touched = true; }
      else if (key == "world.C") { world.C = std::stoi(val); world_touched = true; }
      else if (key == "world.d") { world.d = std::stoi(val); world_touched = true; }
      else if (key == "world.covariate_shift") { world.covariate_shift = std::stod(val); world_touched = true; }
      else if (key == "world.label_shift") { world.label_shift = std::stod(val); world_touched = true; }
      else if (key == "world.seed") { world.seed = std::stoull(val); world_touched = true; }
      else if (key == "train_n") cfg.train_n = std::stoi(val);
      else if (key == "small_real_n") cfg.small_real_n = std::stoi(val);
      else if (key == "test_n") cfg.test_n = std::stoi(val);
      else if (key == "train_path") cfg.train_path = val;
      else if (key == "small_real_path") cfg.small_real_path = val;
      else if (key == "test_path") cfg.test_path = val;
      else if (key == "losses") {
        cfg.losses.clear();
        for (const std::string& name : split_commas(val))
          cfg.losses.push_back(loss_kind_from_name(name));
      }
      else if (key == "learning_rate") cfg.train.learning_rate = std::stod(val);
      else if (key == "epochs") cfg.train.epochs = std::stoi(val);
      else if (key == "batch_size") cfg.train.batch_size = std::stoi(val);
      else if (key == "gamma") cfg.train.gamma = std::stod(val);
      else if (key == "weight_floor") cfg.train.weight_floor = std::stod(val);
      else if (key == "weight_cap") cfg.train.weight_cap = std::stod(val);
      else if (key == "normalize_batch_weights")
        cfg.train.normalize_batch_weights = parse_bool(val);
      else if (key == "hidden_units") cfg.train.hidden_units = std::stoi(val);
      else if (key == "checker_epochs") cfg.checker_epochs = std::stoi(val);
      else if (key == "checker_hidden_units") cfg.checker_hidden_units = std::stoi(val);
      else if (key == "precalc_batch_size") cfg.precalc_batch_size = std::stoi(val);
      else if (key == "seeds") {
        cfg.seeds.clear();
        for (const std::string& s : split_commas(val))
          cfg.seeds.push_back(std::stoull(s));
      }
      else if (key == "out_dir") cfg.out_dir = val;
      else throw ValidationError("config: unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ParseError("config line " + std::to_string(line_no) +
                       ": bad value for " + key);
    }
  }
  if (world_touched) cfg.world = world;
  return cfg;
}

}  // namespace imploss
