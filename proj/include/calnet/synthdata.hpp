#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <unordered_map>
#include <vector>

#include "calnet/categorical.hpp"
#include "calnet/pair_model.hpp"
#include "calnet/types.hpp"

namespace calnet {

/// Synthetic pollution network: static + mobile low-cost sensors drifting
/// sinusoidally, a few noise-free reference sensors, mobile visits drawn
/// inversely proportional to distance from each unit's home.
struct PollutionScenario {
  int n_static = 10;
  int n_reference = 4;  // subset of the static sensors
  int n_mobile = 4;
  double horizon_hours = 4320.0;  // 180 days
  double noise_scale = 10.0;      // Gaussian noise std dev, ug/m^3
  std::uint64_t seed = 0;

  // Reconstructed generator constants (calibrated once, then frozen).
  double scaling_amplitude = 0.5;
  double pollution_base = 50.0;
  double pollution_amplitude = 30.0;
  double pollution_period = 24.0;
  double static_period_median = 3070.0;
  double mobile_period_median = 1007.0;
  double period_log_sd = 0.3;
  double visit_interval_hours = 6.0;
  int samples_per_visit = 5;
  double sample_spacing_hours = 0.25;

  void validate() const;
};

/// Ground truth emitted alongside the observations; enough to compute every
/// evaluation metric without re-deriving generator internals.
struct PollutionTruth {
  struct ScalingFn {
    double amplitude = 0.0;  // 0 => identity (reference sensors)
    double period = 1.0;
    double phase = 0.0;
    double operator()(double t) const {
      return 1.0 + amplitude * std::sin(2.0 * std::numbers::pi * t / period + phase);
    }
  };

  double pollution_base = 0.0, pollution_amplitude = 0.0, pollution_period = 1.0;
  std::unordered_map<int, ScalingFn> scaling;

  double pollution(double t) const {
    return pollution_base +
           pollution_amplitude * std::sin(2.0 * std::numbers::pi * t / pollution_period);
  }
  double true_scaling(int sensor, double t) const { return scaling.at(sensor)(t); }
};

struct PollutionDataset {
  std::vector<ColocationRecord> records;
  SensorTable sensors;
  PollutionTruth truth;
};

PollutionDataset gen_pollution(const PollutionScenario& scenario);

/// Synthetic citizen-science labelling: three non-experts with drifting
/// confusion profiles plus a ground-truth expert.
struct CategoricalScenario {
  int n_items = 300;
  int n_classes = 3;
  std::array<double, 3> class_mix = {0.36, 0.30, 0.34};
  std::array<int, 3> ne_counts = {178, 190, 200};
  int n_train = 173;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LabelRow {
  long item = 0;
  int labeler = 0;
  int label = 0;
  long order_index = 0;
};

struct CategoricalDataset {
  static constexpr int kExpertId = 0;  // non-expert ids are 1..3

  std::vector<LabelRow> labels;   // non-expert labels only
  std::vector<int> truth;         // true class per item
  std::vector<long> train_items;  // items whose ground truth is available
  std::vector<long> test_items;
  SensorTable labelers;  // expert flagged as reference

  /// The generating confusion matrix of a non-expert at position x in [0,1].
  Eigen::MatrixXd profile(int labeler, double x) const;

  std::uint64_t seed = 0;
};

CategoricalDataset gen_categorical(const CategoricalScenario& scenario);

/// Pair records for training: all pairs of non-expert labels per item, plus
/// (non-expert, expert) pairs on items with known ground truth.
std::vector<LabelRecord> make_label_pairs(const CategoricalDataset& ds);

/// Labels grouped per item (non-expert only), for prediction and baselines.
std::unordered_map<long, std::vector<ItemLabel>> labels_by_item(const CategoricalDataset& ds);

}  // namespace calnet
