// calnet: sensor-network calibration from pairwise colocation data.
//
// Subcommands: simulate, calibrate-vi, calibrate-multihop, calibrate-cat,
// evaluate, gridsearch-multihop. All runs write a manifest (config hash,
// seed, version) next to their outputs for exact replay.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <tuple>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "calnet/categorical.hpp"
#include "calnet/config.hpp"
#include "calnet/csv.hpp"
#include "calnet/metrics.hpp"
#include "calnet/multihop.hpp"
#include "calnet/predict.hpp"
#include "calnet/synthdata.hpp"
#include "calnet/trainer.hpp"

namespace fs = std::filesystem;
using namespace calnet;
using nlohmann::json;

namespace {

RunConfig load_or_default(const std::string& path) {
  return path.empty() ? default_config() : load_config(path);
}

/// One evaluation point per non-reference side of each record, in record
/// order: side 1 first, then side 2.
template <class Fn>
void for_each_eval_side(const std::vector<ColocationRecord>& records, const SensorTable& sensors,
                        Fn&& fn) {
  for (const auto& rec : records) {
    if (!sensors.is_reference(rec.s1)) fn(rec.s1, rec.t1, rec.y1);
    if (!sensors.is_reference(rec.s2)) fn(rec.s2, rec.t2, rec.y2);
  }
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 const std::string& mode, std::optional<std::uint64_t> seed,
                 std::optional<double> noise) {
  RunConfig cfg = load_or_default(config_path);
  fs::create_directories(out_dir);

  if (mode == "pollution") {
    if (seed) cfg.pollution.seed = *seed;
    if (noise) cfg.pollution.noise_scale = *noise;
    const PollutionDataset ds = gen_pollution(cfg.pollution);
    write_colocation_csv(out_dir + "/colocations.csv", ds.records);
    write_sensor_csv(out_dir + "/sensors.csv", ds.sensors);
    std::vector<EvalRow> truth;
    for_each_eval_side(ds.records, ds.sensors, [&](int s, double t, double y) {
      truth.push_back({s, t, y, ds.truth.true_scaling(s, t), ds.truth.pollution(t)});
    });
    write_truth_csv(out_dir + "/truth.csv", truth);
    write_manifest(out_dir + "/manifest.json", cfg, cfg.pollution.seed);
  } else if (mode == "categorical") {
    if (seed) cfg.categorical.seed = *seed;
    const CategoricalDataset ds = gen_categorical(cfg.categorical);
    write_label_csv(out_dir + "/labels.csv", ds.labels);
    std::vector<std::pair<long, int>> train, test;
    for (long item : ds.train_items) train.push_back({item, ds.truth[item]});
    for (long item : ds.test_items) test.push_back({item, ds.truth[item]});
    write_item_truth_csv(out_dir + "/truth_train.csv", train);
    write_item_truth_csv(out_dir + "/truth_test.csv", test);
    write_manifest(out_dir + "/manifest.json", cfg, cfg.categorical.seed);
  } else {
    throw ConfigError("simulate mode must be 'pollution' or 'categorical'");
  }
  return 0;
}

int cmd_calibrate_vi(const std::string& config_path, const std::string& colocations,
                     const std::string& sensors_path, const std::string& out_dir,
                     std::optional<std::uint64_t> seed) {
  RunConfig cfg = load_or_default(config_path);
  if (seed) cfg.train.seed = *seed;
  fs::create_directories(out_dir);

  const SensorTable sensors = read_sensor_csv(sensors_path);
  std::vector<ColocationRecord> records = ingest(colocations, cfg.filters);
  if (records.empty()) throw DataError("no records after preprocessing");
  if (cfg.calib_kind == CalibKind::LogScale || cfg.calib_kind == CalibKind::Scale) {
    for (const auto& r : records)
      if (!(r.y1 > 0.0) || !(r.y2 > 0.0))
        throw DataError("nonpositive measurement under a scale calibration; "
                        "use filters.min_value at ingestion");
  }

  const CalibrationFunction phi{cfg.calib_kind};
  const KernelAssignment assign = cfg.make_assignment(sensors, phi.param_count());
  LikelihoodConfig like;
  like.sigma2 = cfg.sigma2;
  like.gamma2 = cfg.resolve_gamma2(records);

  double t_min = records.front().t1, t_max = records.front().t1;
  for (const auto& r : records) {
    t_min = std::min({t_min, r.t1, r.t2});
    t_max = std::max({t_max, r.t1, r.t2});
  }
  std::vector<int> latent_sensors;
  for (const auto& s : sensors.all())
    if (!s.is_reference) latent_sensors.push_back(s.id);
  std::sort(latent_sensors.begin(), latent_sensors.end());
  const auto Z = make_inducing_grid(latent_sensors, phi.param_count(), t_min, t_max,
                                    cfg.inducing_per_gp);

  PairObservationModel model(records, phi, sensors, like);
  const TrainResult result = train_vi(model, Z, assign, cfg.train);
  save_checkpoint(result.state, out_dir + "/checkpoint.json");

  // Parameter posteriors and calibrated measurements at every evaluation side.
  std::vector<CalibrationQuery> queries;
  std::vector<double> raws;
  for_each_eval_side(records, sensors, [&](int s, double t, double y) {
    queries.push_back({s, t});
    raws.push_back(y);
  });
  const auto preds = predict_calibration(result.state, assign, queries, phi,
                                         cfg.prediction_samples, cfg.train.seed);

  std::vector<ParamPosteriorRow> params;
  std::vector<CalibratedRow> calibrated;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (int c = 0; c < phi.param_count(); ++c) {
      ParamPosteriorRow row;
      row.sensor = queries[i].sensor;
      row.time = queries[i].time;
      row.param = c;
      row.post_mean = preds[i].mean(c);
      row.post_std = preds[i].std(c);
      for (int p = 0; p < preds[i].samples.cols(); ++p)
        row.samples.push_back(preds[i].samples(c, p));
      params.push_back(std::move(row));
    }
    const CalibratedMeasurement cal =
        calibrate_measurement(preds[i], phi, raws[i], false, like.sigma2);
    calibrated.push_back({queries[i].sensor, queries[i].time, raws[i], cal.mean, cal.std});
  }
  write_param_posterior_csv(out_dir + "/params.csv", params);
  write_calibrated_csv(out_dir + "/calibrated.csv", calibrated);

  json trace;
  trace["elbo_trace"] = result.elbo_trace;
  write_json(out_dir + "/training.json", trace);
  write_manifest(out_dir + "/manifest.json", cfg, cfg.train.seed);
  return 0;
}

int cmd_calibrate_multihop(const std::string& config_path, const std::string& colocations,
                           const std::string& sensors_path, const std::string& out_dir) {
  const RunConfig cfg = load_or_default(config_path);
  fs::create_directories(out_dir);
  const SensorTable sensors = read_sensor_csv(sensors_path);
  const std::vector<ColocationRecord> records = ingest(colocations, cfg.filters);
  const ScalingTable table = build_graph(records, sensors, cfg.multihop);

  std::vector<CalibratedRow> calibrated;
  for_each_eval_side(records, sensors, [&](int s, double t, double y) {
    const auto F = table.lookup(s, window_of(t, table.delta));
    const double cal = F ? std::exp(*F) * y : y;  // raw fallback when no path
    calibrated.push_back({s, t, y, cal, 0.0});
  });
  write_calibrated_csv(out_dir + "/calibrated.csv", calibrated);
  write_manifest(out_dir + "/manifest.json", cfg, 0);
  return 0;
}

int cmd_gridsearch(const std::string& config_path, const std::string& colocations,
                   const std::string& sensors_path, const std::string& truth_path,
                   const std::string& out_dir, std::vector<double> windows,
                   std::vector<double> ratios) {
  const RunConfig cfg = load_or_default(config_path);
  fs::create_directories(out_dir);
  const SensorTable sensors = read_sensor_csv(sensors_path);
  const std::vector<ColocationRecord> records = ingest(colocations, cfg.filters);
  const std::vector<EvalRow> truth_rows = read_truth_csv(truth_path);

  std::vector<MultihopQuery> queries;
  std::vector<double> truth;
  for (const auto& row : truth_rows) {
    queries.push_back({row.sensor, row.time, row.y_raw});
    truth.push_back(row.true_pollution);
  }
  if (windows.empty()) windows = {146.0, 292.0, 592.0, 1184.0, 2368.0, 4800.0};
  if (ratios.empty()) ratios = {0.1, 0.3, 1.0, 3.0, 10.0};

  const GridSearchResult result = grid_search_multihop(
      records, sensors, queries, truth, windows, ratios, cfg.multihop.min_observations);

  json j;
  j["best"] = {{"delta", result.best.delta},
               {"d_time", result.best.d_time},
               {"d_colocation", result.best.d_colocation},
               {"nmse", result.best_nmse}};
  auto& table = j["table"] = json::array();
  for (const auto& row : result.table)
    table.push_back({{"delta", row[0]}, {"ratio", row[1]}, {"nmse", row[2]}});
  write_json(out_dir + "/gridsearch.json", j);
  write_manifest(out_dir + "/manifest.json", cfg, 0);
  return 0;
}

int cmd_calibrate_cat(const std::string& config_path, const std::string& labels_path,
                      const std::string& truth_train_path, const std::string& out_dir,
                      std::optional<std::uint64_t> seed) {
  RunConfig cfg = load_or_default(config_path);
  if (seed) cfg.train.seed = *seed;
  fs::create_directories(out_dir);

  const std::vector<LabelRow> labels = read_label_csv(labels_path);
  const auto train_truth = read_item_truth_csv(truth_train_path);
  if (labels.empty() || train_truth.empty()) throw DataError("empty categorical inputs");

  const int A = cfg.categorical.n_classes;
  std::vector<int> truths;
  for (const auto& [item, label] : train_truth) truths.push_back(label);
  const SpeciesPrior prior = SpeciesPrior::from_counts(truths, A);

  // Labeler table: non-expert ids from the label file, expert id 0.
  SensorTable labelers;
  labelers.add({CategoricalDataset::kExpertId, SensorKind::Static, true});
  for (const auto& row : labels)
    if (!labelers.contains(row.labeler)) labelers.add({row.labeler, SensorKind::Static, false});

  // Pair records: all non-expert pairs per item + expert pairs on items
  // with known ground truth.
  std::map<long, std::vector<const LabelRow*>> by_item;
  for (const auto& row : labels) by_item[row.item].push_back(&row);
  std::map<long, int> truth_of(train_truth.begin(), train_truth.end());
  std::vector<LabelRecord> pairs;
  for (const auto& [item, rows] : by_item) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = i + 1; j < rows.size(); ++j)
        pairs.push_back({item, rows[i]->labeler, rows[j]->labeler, rows[i]->label,
                         rows[j]->label, static_cast<double>(rows[i]->order_index),
                         static_cast<double>(rows[j]->order_index)});
      const auto it = truth_of.find(item);
      if (it != truth_of.end())
        pairs.push_back({item, rows[i]->labeler, CategoricalDataset::kExpertId, rows[i]->label,
                         it->second, static_cast<double>(rows[i]->order_index),
                         static_cast<double>(rows[i]->order_index)});
    }
  }

  const KernelAssignment assign = cfg.make_assignment(labelers, A * A);
  double t_min = labels.front().order_index, t_max = labels.front().order_index;
  for (const auto& row : labels) {
    t_min = std::min(t_min, static_cast<double>(row.order_index));
    t_max = std::max(t_max, static_cast<double>(row.order_index));
  }
  std::vector<int> latent_labelers;
  for (const auto& s : labelers.all())
    if (!s.is_reference) latent_labelers.push_back(s.id);
  std::sort(latent_labelers.begin(), latent_labelers.end());
  const auto Z = make_inducing_grid(latent_labelers, A * A, t_min, t_max, cfg.inducing_per_gp);

  CategoricalObservationModel model(pairs, labelers, prior);
  const TrainResult result = train_vi(model, Z, assign, cfg.train);
  save_checkpoint(result.state, out_dir + "/checkpoint.json");

  // One posterior per item in the observed id range; items without any
  // non-expert label fall back to the prior.
  long max_item = 0;
  for (const auto& row : labels) max_item = std::max(max_item, row.item);
  for (const auto& [item, label] : train_truth) max_item = std::max(max_item, item);
  std::vector<PosteriorRow> posteriors;
  for (long item = 0; item <= max_item; ++item) {
    PosteriorRow out;
    out.item = item;
    const auto it = by_item.find(item);
    if (it == by_item.end()) {
      out.p = prior.p;
    } else {
      std::vector<ItemLabel> item_labels;
      for (const auto* row : it->second)
        item_labels.push_back({row->labeler, row->label, static_cast<double>(row->order_index)});
      out.p = predict_species(item_labels, result.state, assign, prior, cfg.prediction_samples,
                              cfg.train.seed);
    }
    posteriors.push_back(std::move(out));
  }
  write_posterior_csv(out_dir + "/posteriors.csv", posteriors);

  json trace;
  trace["elbo_trace"] = result.elbo_trace;
  write_json(out_dir + "/training.json", trace);
  write_manifest(out_dir + "/manifest.json", cfg, cfg.train.seed);
  return 0;
}

int cmd_evaluate(const std::string& pred_path, const std::string& truth_path,
                 const std::string& posteriors_path, const std::string& item_truth_path,
                 const std::string& out_path) {
  json report;
  if (!pred_path.empty()) {
    const auto pred = read_calibrated_csv(pred_path);
    const auto truth_rows = read_truth_csv(truth_path);
    // Predictions may be a filtered subset of the truth rows, so align by
    // (sensor, time, raw value) rather than by position.
    std::map<std::tuple<int, double, double>, double> truth_by_key;
    for (const auto& row : truth_rows)
      truth_by_key[{row.sensor, row.time, row.y_raw}] = row.true_pollution;
    std::vector<double> p, t, raw, stds;
    bool has_std = true;
    for (const auto& row : pred) {
      const auto it = truth_by_key.find({row.sensor, row.time, row.y_raw});
      if (it == truth_by_key.end())
        throw DataError("no truth row for prediction at sensor " + std::to_string(row.sensor) +
                        ", time " + format_double(row.time));
      p.push_back(row.cal_mean);
      t.push_back(it->second);
      raw.push_back(row.y_raw);
      stds.push_back(row.cal_std);
      if (!(row.cal_std > 0.0)) has_std = false;
    }
    report["nmse"] = nmse(p, t);
    report["mae"] = mae(p, t);
    report["raw_nmse"] = nmse(raw, t);
    if (has_std) report["nlpd"] = nlpd_gaussian(p, stds, t);
  }
  if (!posteriors_path.empty()) {
    const auto rows = read_posterior_csv(posteriors_path);
    const auto truth = read_item_truth_csv(item_truth_path);
    std::map<long, Eigen::VectorXd> by_item;
    for (const auto& row : rows) by_item[row.item] = row.p;
    std::vector<Eigen::VectorXd> posts;
    std::vector<int> truths;
    for (const auto& [item, label] : truth) {
      const auto it = by_item.find(item);
      if (it == by_item.end()) throw DataError("no posterior for item " + std::to_string(item));
      posts.push_back(it->second);
      truths.push_back(label);
    }
    report["accuracy"] = accuracy(posts, truths);
    report["nlpd"] = nlpd_categorical(posts, truths);
  }
  if (report.empty()) throw ConfigError("evaluate: provide --pred/--truth or --posteriors/--item-truth");
  if (out_path.empty())
    std::cout << report.dump(2) << '\n';
  else
    write_json(out_path, report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibration of sensor networks from pairwise colocation data"};
  app.require_subcommand(1);

  std::string config, out_dir, mode = "pollution", colocations, sensors_path, labels_path;
  std::string truth_path, truth_train_path, pred_path, posteriors_path, item_truth_path,
      out_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise;
  std::vector<double> windows, ratios;

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
  sim->add_option("--config", config, "JSON config file");
  sim->add_option("--out", out_dir, "Output directory")->required();
  sim->add_option("--mode", mode, "pollution | categorical");
  sim->add_option("--seed", seed, "Override the scenario seed");
  sim->add_option("--noise", noise, "Override the pollution noise scale");

  auto* vi = app.add_subcommand("calibrate-vi", "Variational calibration from colocations");
  vi->add_option("--config", config, "JSON config file");
  vi->add_option("--colocations", colocations, "Colocation CSV")->required();
  vi->add_option("--sensors", sensors_path, "Sensor table CSV")->required();
  vi->add_option("--out", out_dir, "Output directory")->required();
  vi->add_option("--seed", seed, "Override the training seed");

  auto* mh = app.add_subcommand("calibrate-multihop", "Graph-baseline calibration");
  mh->add_option("--config", config, "JSON config file");
  mh->add_option("--colocations", colocations, "Colocation CSV")->required();
  mh->add_option("--sensors", sensors_path, "Sensor table CSV")->required();
  mh->add_option("--out", out_dir, "Output directory")->required();

  auto* gs = app.add_subcommand("gridsearch-multihop", "Grid search for window/ratio");
  gs->add_option("--config", config, "JSON config file");
  gs->add_option("--colocations", colocations, "Colocation CSV")->required();
  gs->add_option("--sensors", sensors_path, "Sensor table CSV")->required();
  gs->add_option("--truth", truth_path, "Truth CSV")->required();
  gs->add_option("--out", out_dir, "Output directory")->required();
  gs->add_option("--windows", windows, "Window sizes (hours)");
  gs->add_option("--ratios", ratios, "d_time/d_colocation ratios");

  auto* cat = app.add_subcommand("calibrate-cat", "Crowd-label calibration");
  cat->add_option("--config", config, "JSON config file");
  cat->add_option("--labels", labels_path, "Label CSV")->required();
  cat->add_option("--truth-train", truth_train_path, "Training item-truth CSV")->required();
  cat->add_option("--out", out_dir, "Output directory")->required();
  cat->add_option("--seed", seed, "Override the training seed");

  auto* ev = app.add_subcommand("evaluate", "Compute metrics from outputs");
  ev->add_option("--pred", pred_path, "Calibrated CSV");
  ev->add_option("--truth", truth_path, "Truth CSV");
  ev->add_option("--posteriors", posteriors_path, "Item posterior CSV");
  ev->add_option("--item-truth", item_truth_path, "Item truth CSV");
  ev->add_option("--out", out_path, "Metrics JSON output (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(config, out_dir, mode, seed, noise);
    if (vi->parsed()) return cmd_calibrate_vi(config, colocations, sensors_path, out_dir, seed);
    if (mh->parsed()) return cmd_calibrate_multihop(config, colocations, sensors_path, out_dir);
    if (gs->parsed())
      return cmd_gridsearch(config, colocations, sensors_path, truth_path, out_dir, windows,
                            ratios);
    if (cat->parsed())
      return cmd_calibrate_cat(config, labels_path, truth_train_path, out_dir, seed);
    if (ev->parsed())
      return cmd_evaluate(pred_path, truth_path, posteriors_path, item_truth_path, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
