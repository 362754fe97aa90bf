#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "imploss/checkers.hpp"
#include "imploss/errors.hpp"
#include "imploss/experiment.hpp"
#include "imploss/losses.hpp"
#include "imploss/metrics.hpp"
#include "imploss/synthworld.hpp"
#include "imploss/trainer.hpp"

namespace py = pybind11;
using namespace imploss;

PYBIND11_MODULE(_core, m) {
  m.doc() = "importance-weighted cross-entropy training toolkit";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::enum_<SourceTag>(m, "SourceTag")
      .value("original", SourceTag::original)
      .value("swapped", SourceTag::swapped)
      .value("duplicated", SourceTag::duplicated);

  py::class_<Example>(m, "Example")
      .def(py::init<>())
      .def_readwrite("features", &Example::features)
      .def_readwrite("label", &Example::label)
      .def_readwrite("tag", &Example::tag)
      .def("__eq__", [](const Example& a, const Example& b) { return a == b; });

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def_readwrite("examples", &Dataset::examples)
      .def_readwrite("num_classes", &Dataset::num_classes)
      .def_readwrite("feature_dim", &Dataset::feature_dim)
      .def("__len__", &Dataset::size)
      .def("validate", &Dataset::validate);

  py::enum_<FileFormat>(m, "FileFormat")
      .value("jsonl", FileFormat::jsonl)
      .value("tsv", FileFormat::tsv);

  m.attr("DEFAULT_FEATURE_DIM") = kDefaultFeatureDim;
  m.def("featurize", &featurize, py::arg("text"),
        py::arg("dim") = kDefaultFeatureDim);
  m.def(
      "load_dataset",
      [](const std::string& path, FileFormat format,
         std::optional<int> num_classes, std::uint32_t feature_dim) {
        LoadOptions opts;
        opts.num_classes = num_classes;
        opts.feature_dim = feature_dim;
        return load_dataset(path, format, opts);
      },
      py::arg("path"), py::arg("format") = FileFormat::jsonl,
      py::arg("num_classes") = std::nullopt,
      py::arg("feature_dim") = kDefaultFeatureDim);
  m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("path"));
  m.def("split", &split, py::arg("dataset"), py::arg("fractions"),
        py::arg("seed"));

  py::enum_<Architecture>(m, "Architecture")
      .value("linear", Architecture::linear)
      .value("one_hidden", Architecture::one_hidden);

  py::class_<ClassifierParams>(m, "ClassifierParams")
      .def_readonly("arch", &ClassifierParams::arch)
      .def_readonly("d", &ClassifierParams::d)
      .def_readonly("num_classes", &ClassifierParams::num_classes)
      .def_readonly("hidden", &ClassifierParams::hidden)
      .def_readwrite("w1", &ClassifierParams::w1)
      .def_readwrite("b1", &ClassifierParams::b1)
      .def_readwrite("w2", &ClassifierParams::w2)
      .def_readwrite("b2", &ClassifierParams::b2);

  m.def("init_params", &init_params, py::arg("d"), py::arg("num_classes"),
        py::arg("hidden") = std::nullopt, py::arg("seed") = 0);
  m.def("predict_proba", &predict_proba);
  m.def("predict_log_proba", &predict_log_proba);
  m.def("predict_class", &predict_class);
  m.def("save_params", &save_params);
  m.def("load_params", &load_params);

  py::enum_<LossKind>(m, "LossKind")
      .value("ce", LossKind::ce)
      .value("focal", LossKind::focal)
      .value("imp", LossKind::imp)
      .value("dimp", LossKind::dimp);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("loss_kind", &TrainConfig::loss_kind)
      .def_readwrite("gamma", &TrainConfig::gamma)
      .def_readwrite("weight_floor", &TrainConfig::weight_floor)
      .def_readwrite("weight_cap", &TrainConfig::weight_cap)
      .def_readwrite("normalize_batch_weights",
                     &TrainConfig::normalize_batch_weights)
      .def_readwrite("hidden_units", &TrainConfig::hidden_units);

  py::class_<EpochStats>(m, "EpochStats")
      .def_readonly("train_loss", &EpochStats::train_loss)
      .def_readonly("heldout_accuracy", &EpochStats::heldout_accuracy)
      .def_readonly("seconds", &EpochStats::seconds);

  py::class_<TrainHistory>(m, "TrainHistory")
      .def_readonly("epochs", &TrainHistory::epochs)
      .def("save_csv", &TrainHistory::save_csv);

  py::class_<WeightProvider>(m, "WeightProvider")
      .def_static("uniform", &WeightProvider::uniform)
      .def_static("focal", &WeightProvider::focal, py::arg("gamma"));

  m.def("make_imp_provider", &make_imp_provider, py::arg("quality_scores"),
        py::arg("diversity_scores"), py::arg("floor") = 1e-4,
        py::arg("cap") = 100.0);
  m.def("make_dimp_provider", &make_dimp_provider, py::arg("quality_scores"),
        py::arg("floor") = 1e-4, py::arg("cap") = 100.0);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("params", &TrainResult::params)
      .def_readonly("history", &TrainResult::history);

  m.def(
      "train",
      [](const Dataset& ds, const TrainConfig& config,
         const WeightProvider& provider, const Dataset* heldout) {
        return train(ds, config, provider, heldout);
      },
      py::arg("dataset"), py::arg("config"), py::arg("provider"),
      py::arg("heldout") = nullptr);

  py::class_<ClassStats>(m, "ClassStats")
      .def_readonly("precision", &ClassStats::precision)
      .def_readonly("recall", &ClassStats::recall)
      .def_readonly("f1", &ClassStats::f1);

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("accuracy", &EvalReport::accuracy)
      .def_readonly("macro_f1", &EvalReport::macro_f1)
      .def_readonly("per_class", &EvalReport::per_class)
      .def_readonly("n_examples", &EvalReport::n_examples);

  m.def("evaluate", &evaluate);
  m.def("model_conditional_entropy", &model_conditional_entropy);
  m.def("model_conditional_kl", &model_conditional_kl);

  m.def("ce_loss", &ce_loss);
  m.def("focal_weight", &focal_weight, py::arg("p_true"), py::arg("gamma"));
  m.def("imp_weight", &imp_weight, py::arg("quality"), py::arg("diversity"),
        py::arg("floor") = 1e-4, py::arg("cap") = 100.0);
  m.def("dimp_weight", &dimp_weight, py::arg("quality"), py::arg("model_prob"),
        py::arg("floor") = 1e-4, py::arg("cap") = 100.0);

  m.def(
      "fit_quality_checker",
      [](const Dataset& small_real, const TrainConfig& config) {
        return fit_quality_checker(small_real, config);
      },
      py::arg("small_real"), py::arg("config"));
  m.def(
      "fit_diversity_checker",
      [](const Dataset& synthetic, const TrainConfig& config) {
        return fit_diversity_checker(synthetic, config);
      },
      py::arg("synthetic"), py::arg("config"));
  m.def(
      "score_dataset",
      [](const ClassifierParams& checker, const Dataset& ds) {
        return score_dataset(checker, ds);
      },
      py::arg("checker"), py::arg("dataset"));

  py::enum_<Which>(m, "Which").value("P", Which::P).value("Q", Which::Q);
  py::enum_<KlDirection>(m, "KlDirection")
      .value("P_given_Q", KlDirection::P_given_Q)
      .value("Q_given_P", KlDirection::Q_given_P);

  py::class_<WorldSpec>(m, "WorldSpec")
      .def(py::init<>())
      .def_readwrite("K", &WorldSpec::K)
      .def_readwrite("C", &WorldSpec::C)
      .def_readwrite("d", &WorldSpec::d)
      .def_readwrite("covariate_shift", &WorldSpec::covariate_shift)
      .def_readwrite("label_shift", &WorldSpec::label_shift)
      .def_readwrite("seed", &WorldSpec::seed);

  py::class_<JointWorld>(m, "JointWorld")
      .def_readonly("support", &JointWorld::support)
      .def_readonly("p_x", &JointWorld::p_x)
      .def_readonly("q_x", &JointWorld::q_x)
      .def_readonly("p_y_given_x", &JointWorld::p_y_given_x)
      .def_readonly("q_y_given_x", &JointWorld::q_y_given_x)
      .def_readonly("num_classes", &JointWorld::num_classes)
      .def_readonly("feature_dim", &JointWorld::feature_dim)
      .def_readonly("seed", &JointWorld::seed)
      .def("save_jsonl", &JointWorld::save_jsonl)
      .def_static("load_jsonl", &JointWorld::load_jsonl);

  m.def("make_world", &make_world);
  m.def("sample", &sample, py::arg("world"), py::arg("which"), py::arg("n"),
        py::arg("seed"));
  m.def("exact_expected_ce", &exact_expected_ce);
  m.def("exact_weighted_expectation", &exact_weighted_expectation);
  m.def("exact_weighted_variance", &exact_weighted_variance);
  m.def("true_conditional_entropy", &true_conditional_entropy);
  m.def("true_conditional_kl", &true_conditional_kl);
  m.def("inject_label_swap", &inject_label_swap, py::arg("dataset"),
        py::arg("fraction"), py::arg("seed"));
  m.def("inject_duplicates", &inject_duplicates, py::arg("dataset"),
        py::arg("fraction"), py::arg("seed"));
}
