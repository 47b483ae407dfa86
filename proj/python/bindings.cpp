// Python bindings for the calibration library. Mirrors the C++ API closely:
// plain structs become attribute classes, Eigen types map to numpy arrays.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "calnet/categorical.hpp"
#include "calnet/config.hpp"
#include "calnet/csv.hpp"
#include "calnet/metrics.hpp"
#include "calnet/multihop.hpp"
#include "calnet/predict.hpp"
#include "calnet/synthdata.hpp"
#include "calnet/trainer.hpp"

namespace py = pybind11;
using namespace calnet;

PYBIND11_MODULE(_calnet, m) {
  m.doc() = "Calibration of sensor networks from pairwise colocation data";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  // --- core types -----------------------------------------------------------
  py::enum_<SensorKind>(m, "SensorKind")
      .value("Static", SensorKind::Static)
      .value("Mobile", SensorKind::Mobile);

  py::enum_<KernelGroup>(m, "KernelGroup")
      .value("Static", KernelGroup::Static)
      .value("Mobile", KernelGroup::Mobile)
      .value("Reference", KernelGroup::Reference);

  py::enum_<CalibKind>(m, "CalibKind")
      .value("Scale", CalibKind::Scale)
      .value("LogScale", CalibKind::LogScale)
      .value("Linear", CalibKind::Linear);

  py::class_<SensorInfo>(m, "SensorInfo")
      .def(py::init([](int id, SensorKind kind, bool is_reference) {
             return SensorInfo{id, kind, is_reference};
           }),
           py::arg("id"), py::arg("kind") = SensorKind::Static,
           py::arg("is_reference") = false)
      .def_readwrite("id", &SensorInfo::id)
      .def_readwrite("kind", &SensorInfo::kind)
      .def_readwrite("is_reference", &SensorInfo::is_reference);

  py::class_<SensorTable>(m, "SensorTable")
      .def(py::init<>())
      .def("add", &SensorTable::add)
      .def("contains", &SensorTable::contains)
      .def("is_reference", &SensorTable::is_reference)
      .def("has_reference", &SensorTable::has_reference)
      .def("all", &SensorTable::all)
      .def("__len__", &SensorTable::size);

  py::class_<ColocationRecord>(m, "ColocationRecord")
      .def(py::init([](double t1, double t2, int s1, int s2, double y1, double y2) {
             return ColocationRecord{t1, t2, s1, s2, y1, y2};
           }),
           py::arg("t1"), py::arg("t2"), py::arg("s1"), py::arg("s2"), py::arg("y1"),
           py::arg("y2"))
      .def_readwrite("t1", &ColocationRecord::t1)
      .def_readwrite("t2", &ColocationRecord::t2)
      .def_readwrite("s1", &ColocationRecord::s1)
      .def_readwrite("s2", &ColocationRecord::s2)
      .def_readwrite("y1", &ColocationRecord::y1)
      .def_readwrite("y2", &ColocationRecord::y2);

  py::class_<IndexPoint>(m, "IndexPoint")
      .def(py::init([](double time, int sensor, int param) {
             return IndexPoint{time, sensor, param};
           }),
           py::arg("time"), py::arg("sensor"), py::arg("param") = 0)
      .def_readwrite("time", &IndexPoint::time)
      .def_readwrite("sensor", &IndexPoint::sensor)
      .def_readwrite("param", &IndexPoint::param);

  // --- kernels and GP state -------------------------------------------------
  py::class_<KernelSpec>(m, "KernelSpec")
      .def_static("eq", &KernelSpec::eq, py::arg("variance"), py::arg("lengthscale"))
      .def_static("bias", &KernelSpec::bias, py::arg("variance"))
      .def_static("sum_eq_bias", &KernelSpec::sum_eq_bias, py::arg("eq_variance"),
                  py::arg("lengthscale"), py::arg("bias_variance"))
      .def_readwrite("eq_variance", &KernelSpec::eq_variance)
      .def_readwrite("lengthscale", &KernelSpec::lengthscale)
      .def_readwrite("bias_variance", &KernelSpec::bias_variance);

  py::class_<KernelAssignment>(m, "KernelAssignment")
      .def(py::init<SensorTable>())
      .def("assign", &KernelAssignment::assign)
      .def("assign_all", &KernelAssignment::assign_all)
      .def("resolve",
           py::overload_cast<int, int>(&KernelAssignment::resolve, py::const_));

  py::class_<VariationalState>(m, "VariationalState")
      .def_readwrite("Z", &VariationalState::Z)
      .def_readwrite("m", &VariationalState::m)
      .def_readwrite("R", &VariationalState::R)
      .def("__len__", &VariationalState::size);
  m.def("save_checkpoint", &save_checkpoint);
  m.def("load_checkpoint", &load_checkpoint);
  m.def("make_inducing_grid", &make_inducing_grid, py::arg("sensors"), py::arg("param_count"),
        py::arg("t_min"), py::arg("t_max"), py::arg("per_gp_count"));

  // --- pair model and VI training -------------------------------------------
  py::class_<CalibrationFunction>(m, "CalibrationFunction")
      .def(py::init([](CalibKind kind) { return CalibrationFunction{kind}; }),
           py::arg("kind") = CalibKind::LogScale)
      .def_readwrite("kind", &CalibrationFunction::kind)
      .def("param_count", &CalibrationFunction::param_count);

  py::class_<LikelihoodConfig>(m, "LikelihoodConfig")
      .def(py::init([](double sigma2, double gamma2) {
             return LikelihoodConfig{sigma2, gamma2};
           }),
           py::arg("sigma2"), py::arg("gamma2"))
      .def_readwrite("sigma2", &LikelihoodConfig::sigma2)
      .def_readwrite("gamma2", &LikelihoodConfig::gamma2)
      .def("validate", &LikelihoodConfig::validate);

  py::class_<TrainOptions>(m, "TrainOptions")
      .def(py::init<>())
      .def_readwrite("steps", &TrainOptions::steps)
      .def_readwrite("batch_size", &TrainOptions::batch_size)
      .def_readwrite("samples", &TrainOptions::samples)
      .def_readwrite("learning_rate", &TrainOptions::learning_rate)
      .def_readwrite("seed", &TrainOptions::seed)
      .def_readwrite("oversample_factor", &TrainOptions::oversample_factor)
      .def_readwrite("clip_norm", &TrainOptions::clip_norm);

  py::class_<ObservationModel>(m, "ObservationModel");
  py::class_<PairObservationModel, ObservationModel>(m, "PairObservationModel")
      .def(py::init<std::vector<ColocationRecord>, CalibrationFunction, SensorTable,
                    LikelihoodConfig>(),
           py::arg("records"), py::arg("phi"), py::arg("sensors"), py::arg("config"))
      .def("__len__", &PairObservationModel::size);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readwrite("state", &TrainResult::state)
      .def_readwrite("elbo_trace", &TrainResult::elbo_trace);
  m.def("train_vi", &train_vi, py::arg("model"), py::arg("Z"), py::arg("assignment"),
        py::arg("options"), py::call_guard<py::gil_scoped_release>());

  m.def(
      "pair_loglik",
      [](const ColocationRecord& rec, const std::vector<double>& f1,
         const std::vector<double>& f2, const CalibrationFunction& phi,
         const SensorTable& sensors, const LikelihoodConfig& cfg) {
        return pair_loglik(rec, f1, f2, phi, sensors, cfg);
      },
      py::arg("record"), py::arg("f1"), py::arg("f2"), py::arg("phi"), py::arg("sensors"),
      py::arg("config"));

  // --- prediction -----------------------------------------------------------
  py::class_<CalibrationQuery>(m, "CalibrationQuery")
      .def(py::init([](int sensor, double time) { return CalibrationQuery{sensor, time}; }),
           py::arg("sensor"), py::arg("time"))
      .def_readwrite("sensor", &CalibrationQuery::sensor)
      .def_readwrite("time", &CalibrationQuery::time);

  py::class_<CalibrationPrediction>(m, "CalibrationPrediction")
      .def_readonly("mean", &CalibrationPrediction::mean)
      .def_readonly("std", &CalibrationPrediction::std)
      .def_readonly("samples", &CalibrationPrediction::samples);

  py::class_<CalibratedMeasurement>(m, "CalibratedMeasurement")
      .def_readonly("mean", &CalibratedMeasurement::mean)
      .def_readonly("std", &CalibratedMeasurement::std)
      .def_readonly("samples", &CalibratedMeasurement::samples);

  m.def("predict_calibration", &predict_calibration, py::arg("state"), py::arg("assignment"),
        py::arg("queries"), py::arg("phi"), py::arg("samples"), py::arg("seed") = 0);
  m.def("calibrate_measurement", &calibrate_measurement, py::arg("prediction"), py::arg("phi"),
        py::arg("y_raw"), py::arg("is_reference"), py::arg("noise_var") = 0.0);

  // --- multi-hop baseline ---------------------------------------------------
  py::class_<MultihopParams>(m, "MultihopParams")
      .def(py::init<>())
      .def_readwrite("delta", &MultihopParams::delta)
      .def_readwrite("d_colocation", &MultihopParams::d_colocation)
      .def_readwrite("d_time", &MultihopParams::d_time)
      .def_readwrite("min_observations", &MultihopParams::min_observations);

  py::class_<ScalingTable>(m, "ScalingTable")
      .def_readonly("delta", &ScalingTable::delta)
      .def("lookup", &ScalingTable::lookup);

  py::class_<MultihopQuery>(m, "MultihopQuery")
      .def(py::init([](int sensor, double t, double y_raw) {
             return MultihopQuery{sensor, t, y_raw};
           }),
           py::arg("sensor"), py::arg("t"), py::arg("y_raw"))
      .def_readwrite("sensor", &MultihopQuery::sensor)
      .def_readwrite("t", &MultihopQuery::t)
      .def_readwrite("y_raw", &MultihopQuery::y_raw);

  py::class_<GridSearchResult>(m, "GridSearchResult")
      .def_readonly("best", &GridSearchResult::best)
      .def_readonly("best_nmse", &GridSearchResult::best_nmse)
      .def_readonly("table", &GridSearchResult::table);

  m.def("window_of", &window_of);
  m.def("build_graph", &build_graph, py::arg("records"), py::arg("sensors"), py::arg("params"));
  m.def("predict_multihop",
        py::overload_cast<const ScalingTable&, const MultihopQuery&>(&predict_multihop),
        py::arg("table"), py::arg("query"));
  m.def("grid_search_multihop", &grid_search_multihop, py::arg("records"), py::arg("sensors"),
        py::arg("queries"), py::arg("truth"), py::arg("window_sizes"), py::arg("weight_ratios"),
        py::arg("min_observations") = 5, py::call_guard<py::gil_scoped_release>());

  // --- categorical variant --------------------------------------------------
  py::class_<LabelRecord>(m, "LabelRecord")
      .def(py::init([](long item, int s1, int s2, int y1, int y2, double t1, double t2) {
             return LabelRecord{item, s1, s2, y1, y2, t1, t2};
           }),
           py::arg("item"), py::arg("s1"), py::arg("s2"), py::arg("y1"), py::arg("y2"),
           py::arg("t1"), py::arg("t2"))
      .def_readwrite("item", &LabelRecord::item)
      .def_readwrite("s1", &LabelRecord::s1)
      .def_readwrite("s2", &LabelRecord::s2)
      .def_readwrite("y1", &LabelRecord::y1)
      .def_readwrite("y2", &LabelRecord::y2)
      .def_readwrite("t1", &LabelRecord::t1)
      .def_readwrite("t2", &LabelRecord::t2);

  py::class_<SpeciesPrior>(m, "SpeciesPrior")
      .def_static("uniform", &SpeciesPrior::uniform)
      .def_static("from_counts",
                  [](const std::vector<int>& truths, int A) {
                    return SpeciesPrior::from_counts(truths, A);
                  })
      .def_readwrite("p", &SpeciesPrior::p);

  py::class_<ItemLabel>(m, "ItemLabel")
      .def(py::init([](int labeler, int y, double t) { return ItemLabel{labeler, y, t}; }),
           py::arg("labeler"), py::arg("y"), py::arg("t"))
      .def_readwrite("labeler", &ItemLabel::labeler)
      .def_readwrite("y", &ItemLabel::y)
      .def_readwrite("t", &ItemLabel::t);

  py::class_<CategoricalObservationModel, ObservationModel>(m, "CategoricalObservationModel")
      .def(py::init<std::vector<LabelRecord>, SensorTable, SpeciesPrior>(),
           py::arg("records"), py::arg("labelers"), py::arg("prior"))
      .def("__len__", &CategoricalObservationModel::size);

  m.def("confusion_from_latents", &confusion_from_latents);
  m.def(
      "predict_species",
      [](const std::vector<ItemLabel>& labels, const VariationalState& state,
         const KernelAssignment& assign, const SpeciesPrior& prior, int P, std::uint64_t seed) {
        return predict_species(labels, state, assign, prior, P, seed);
      },
      py::arg("labels"), py::arg("state"), py::arg("assignment"), py::arg("prior"),
      py::arg("samples"), py::arg("seed") = 0);

  py::enum_<VoteMode>(m, "VoteMode")
      .value("MostGuessed", VoteMode::MostGuessed)
      .value("TrustWeighted", VoteMode::TrustWeighted)
      .value("PriorWeighted", VoteMode::PriorWeighted)
      .value("MostCommon", VoteMode::MostCommon);

  py::class_<VoteBaselines>(m, "VoteBaselines")
      .def(py::init<int>(), py::arg("num_classes"))
      .def("fit",
           [](VoteBaselines& self, const std::vector<std::vector<ItemLabel>>& train_items,
              const std::vector<int>& truths) { self.fit(train_items, truths); })
      .def(
          "predict",
          [](const VoteBaselines& self, const std::vector<ItemLabel>& labels, VoteMode mode,
             double smoothing) { return self.predict(labels, mode, smoothing); },
          py::arg("labels"), py::arg("mode"), py::arg("smoothing") = 0.0)
      .def("trust", &VoteBaselines::trust);

  // --- synthetic data -------------------------------------------------------
  py::class_<PollutionScenario>(m, "PollutionScenario")
      .def(py::init<>())
      .def_readwrite("n_static", &PollutionScenario::n_static)
      .def_readwrite("n_reference", &PollutionScenario::n_reference)
      .def_readwrite("n_mobile", &PollutionScenario::n_mobile)
      .def_readwrite("horizon_hours", &PollutionScenario::horizon_hours)
      .def_readwrite("noise_scale", &PollutionScenario::noise_scale)
      .def_readwrite("seed", &PollutionScenario::seed);

  py::class_<PollutionTruth>(m, "PollutionTruth")
      .def("pollution", &PollutionTruth::pollution)
      .def("true_scaling", &PollutionTruth::true_scaling);

  py::class_<PollutionDataset>(m, "PollutionDataset")
      .def_readonly("records", &PollutionDataset::records)
      .def_readonly("sensors", &PollutionDataset::sensors)
      .def_readonly("truth", &PollutionDataset::truth);
  m.def("gen_pollution", &gen_pollution);

  py::class_<CategoricalScenario>(m, "CategoricalScenario")
      .def(py::init<>())
      .def_readwrite("n_items", &CategoricalScenario::n_items)
      .def_readwrite("n_classes", &CategoricalScenario::n_classes)
      .def_readwrite("n_train", &CategoricalScenario::n_train)
      .def_readwrite("seed", &CategoricalScenario::seed);

  py::class_<LabelRow>(m, "LabelRow")
      .def_readonly("item", &LabelRow::item)
      .def_readonly("labeler", &LabelRow::labeler)
      .def_readonly("label", &LabelRow::label)
      .def_readonly("order_index", &LabelRow::order_index);

  py::class_<CategoricalDataset>(m, "CategoricalDataset")
      .def_readonly("labels", &CategoricalDataset::labels)
      .def_readonly("truth", &CategoricalDataset::truth)
      .def_readonly("train_items", &CategoricalDataset::train_items)
      .def_readonly("test_items", &CategoricalDataset::test_items)
      .def_readonly("labelers", &CategoricalDataset::labelers);
  m.def("gen_categorical", &gen_categorical);
  m.def("make_label_pairs", &make_label_pairs);
  m.def("labels_by_item", &labels_by_item);

  // --- metrics --------------------------------------------------------------
  m.def("nmse", [](const std::vector<double>& p, const std::vector<double>& t) {
    return nmse(p, t);
  });
  m.def("mae", [](const std::vector<double>& p, const std::vector<double>& t) {
    return mae(p, t);
  });
  m.def("nlpd_gaussian", [](const std::vector<double>& mean, const std::vector<double>& std,
                            const std::vector<double>& truth) {
    return nlpd_gaussian(mean, std, truth);
  });
  m.def("accuracy", [](const std::vector<Eigen::VectorXd>& posts, const std::vector<int>& t) {
    return accuracy(posts, t);
  });
  m.def("nlpd_categorical",
        [](const std::vector<Eigen::VectorXd>& posts, const std::vector<int>& t) {
          return nlpd_categorical(posts, t);
        });
}
