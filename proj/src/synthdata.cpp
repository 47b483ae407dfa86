#include "calnet/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "calnet/rng.hpp"

namespace calnet {

void PollutionScenario::validate() const {
  if (n_static < 1 || n_mobile < 0) throw ConfigError("pollution scenario sensor counts invalid");
  if (n_reference < 1 || n_reference > n_static)
    throw ConfigError("n_reference must be in [1, n_static]");
  if (!(horizon_hours > 0.0)) throw ConfigError("horizon must be > 0");
  if (noise_scale < 0.0) throw ConfigError("noise_scale must be >= 0");
  if (!(visit_interval_hours > 0.0) || samples_per_visit < 1 || !(sample_spacing_hours > 0.0))
    throw ConfigError("visit schedule invalid");
  if (!(pollution_period > 0.0) || !(static_period_median > 0.0) ||
      !(mobile_period_median > 0.0))
    throw ConfigError("periods must be > 0");
}

PollutionDataset gen_pollution(const PollutionScenario& sc) {
  sc.validate();
  Rng rng(sc.seed);

  PollutionDataset ds;
  ds.truth.pollution_base = sc.pollution_base;
  ds.truth.pollution_amplitude = sc.pollution_amplitude;
  ds.truth.pollution_period = sc.pollution_period;

  struct Pos {
    double x, y;
  };
  std::vector<Pos> static_pos(sc.n_static);
  std::vector<Pos> mobile_home(sc.n_mobile);

  // Static sensors: ids 0..n_static-1, the first n_reference are references.
  for (int j = 0; j < sc.n_static; ++j) {
    const bool is_ref = j < sc.n_reference;
    ds.sensors.add({j, SensorKind::Static, is_ref});
    static_pos[j] = {rng.uniform(), rng.uniform()};
    PollutionTruth::ScalingFn fn;
    if (!is_ref) {
      fn.amplitude = sc.scaling_amplitude;
      fn.period = sc.static_period_median * std::exp(sc.period_log_sd * rng.normal());
      fn.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    ds.truth.scaling[j] = fn;
  }
  // Mobile sensors: ids n_static..n_static+n_mobile-1.
  for (int k = 0; k < sc.n_mobile; ++k) {
    const int id = sc.n_static + k;
    ds.sensors.add({id, SensorKind::Mobile, false});
    mobile_home[k] = {rng.uniform(), rng.uniform()};
    PollutionTruth::ScalingFn fn;
    fn.amplitude = sc.scaling_amplitude;
    fn.period = sc.mobile_period_median * std::exp(sc.period_log_sd * rng.normal());
    fn.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    ds.truth.scaling[id] = fn;
  }

  auto measure = [&](int sensor, double t) {
    const double p = ds.truth.pollution(t);
    if (ds.sensors.is_reference(sensor)) return p;
    return ds.truth.true_scaling(sensor, t) * p + sc.noise_scale * rng.normal();
  };

  // Mobile visit schedule: one visit target per mobile sensor per tick,
  // drawn inversely proportional to distance from home.
  std::vector<double> weights(sc.n_static);
  for (double tick = 0.0; tick < sc.horizon_hours; tick += sc.visit_interval_hours) {
    for (int k = 0; k < sc.n_mobile; ++k) {
      for (int j = 0; j < sc.n_static; ++j) {
        const double dx = mobile_home[k].x - static_pos[j].x;
        const double dy = mobile_home[k].y - static_pos[j].y;
        weights[j] = 1.0 / (std::sqrt(dx * dx + dy * dy) + 1e-3);
      }
      const int target = static_cast<int>(rng.weighted_index(weights));
      const int mobile = sc.n_static + k;
      for (int s = 0; s < sc.samples_per_visit; ++s) {
        const double t = tick + s * sc.sample_spacing_hours;
        ColocationRecord rec;
        rec.t1 = rec.t2 = t;
        rec.s1 = target;
        rec.s2 = mobile;
        rec.y1 = measure(target, t);
        rec.y2 = measure(mobile, t);
        ds.records.push_back(rec);
      }
    }
  }
  return ds;
}

void CategoricalScenario::validate() const {
  if (n_classes != 3) throw ConfigError("categorical scenario is defined for 3 classes");
  if (n_items < 2) throw ConfigError("n_items must be >= 2");
  double mix = 0.0;
  for (double m : class_mix) {
    if (!(m > 0.0)) throw ConfigError("class mix entries must be > 0");
    mix += m;
  }
  if (std::abs(mix - 1.0) > 1e-9) throw ConfigError("class mix must sum to 1");
  for (int c : ne_counts)
    if (c < 1 || c > n_items) throw ConfigError("labeler counts must be in [1, n_items]");
  if (n_train < 1 || n_train >= n_items) throw ConfigError("n_train must be in [1, n_items)");
}

namespace {

Eigen::MatrixXd lerp(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double s) {
  return (1.0 - s) * a + s * b;
}

template <class T>
void shuffle_with(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
}

}  // namespace

Eigen::MatrixXd CategoricalDataset::profile(int labeler, double x) const {
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(3, 3, 1.0 / 3.0);
  x = std::clamp(x, 0.0, 1.0);
  switch (labeler) {
    case 1:  // perfect over the first half, degrading linearly to chance
      return x <= 0.5 ? identity : lerp(identity, uniform, (x - 0.5) / 0.5);
    case 2:  // chance at the start, improving linearly, perfect over the last half
      return x >= 0.5 ? identity : lerp(uniform, identity, x / 0.5);
    case 3: {
      // Structured drift: separates class 2 at first, class 1 at the
      // midpoint, near-chance by the end.
      Eigen::MatrixXd m0(3, 3), m1(3, 3);
      m0 << 0.5, 0.5, 0.0,  //
          0.5, 0.5, 0.0,    //
          0.0, 0.0, 1.0;
      m1 << 0.5, 0.0, 0.5,  //
          0.0, 1.0, 0.0,    //
          0.5, 0.0, 0.5;
      const Eigen::MatrixXd m2 = 0.9 * uniform + 0.1 * identity;
      return x <= 0.5 ? lerp(m0, m1, x / 0.5) : lerp(m1, m2, (x - 0.5) / 0.5);
    }
    default:
      throw ConfigError("unknown non-expert labeler id " + std::to_string(labeler));
  }
}

CategoricalDataset gen_categorical(const CategoricalScenario& sc) {
  sc.validate();
  Rng rng(sc.seed);

  CategoricalDataset ds;
  ds.seed = sc.seed;
  ds.labelers.add({CategoricalDataset::kExpertId, SensorKind::Static, true});
  for (int a = 1; a <= 3; ++a) ds.labelers.add({a, SensorKind::Static, false});

  // Ground truth: exact class counts from the mix, order shuffled.
  std::vector<int> counts(3);
  int assigned = 0;
  for (int c = 0; c < 2; ++c) {
    counts[c] = static_cast<int>(std::lround(sc.class_mix[static_cast<std::size_t>(c)] *
                                             sc.n_items));
    assigned += counts[c];
  }
  counts[2] = sc.n_items - assigned;
  ds.truth.reserve(static_cast<std::size_t>(sc.n_items));
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < counts[c]; ++i) ds.truth.push_back(c);
  shuffle_with(ds.truth, rng);

  // Train/test split: a shuffled subset of items has expert ground truth.
  std::vector<long> items(static_cast<std::size_t>(sc.n_items));
  std::iota(items.begin(), items.end(), 0L);
  std::vector<long> split = items;
  shuffle_with(split, rng);
  ds.train_items.assign(split.begin(), split.begin() + sc.n_train);
  ds.test_items.assign(split.begin() + sc.n_train, split.end());
  std::sort(ds.train_items.begin(), ds.train_items.end());
  std::sort(ds.test_items.begin(), ds.test_items.end());

  // Each non-expert labels a random subset of the items; the label is drawn
  // from the labeler's confusion profile at the item's position.
  for (int a = 1; a <= 3; ++a) {
    std::vector<long> chosen = items;
    shuffle_with(chosen, rng);
    chosen.resize(static_cast<std::size_t>(sc.ne_counts[static_cast<std::size_t>(a - 1)]));
    std::sort(chosen.begin(), chosen.end());
    for (long item : chosen) {
      const double x = static_cast<double>(item) / static_cast<double>(sc.n_items - 1);
      const Eigen::MatrixXd P = ds.profile(a, x);
      const int truth = ds.truth[static_cast<std::size_t>(item)];
      const Eigen::VectorXd col = P.col(truth);
      const int label = static_cast<int>(rng.weighted_index(
          std::vector<double>(col.data(), col.data() + col.size())));
      ds.labels.push_back({item, a, label, item});
    }
  }
  std::sort(ds.labels.begin(), ds.labels.end(), [](const LabelRow& a, const LabelRow& b) {
    return std::tie(a.item, a.labeler) < std::tie(b.item, b.labeler);
  });
  return ds;
}

std::vector<LabelRecord> make_label_pairs(const CategoricalDataset& ds) {
  std::unordered_map<long, std::vector<const LabelRow*>> by_item;
  for (const auto& row : ds.labels) by_item[row.item].push_back(&row);

  std::vector<long> train_sorted = ds.train_items;
  std::sort(train_sorted.begin(), train_sorted.end());
  auto in_train = [&](long item) {
    return std::binary_search(train_sorted.begin(), train_sorted.end(), item);
  };

  std::vector<long> items;
  items.reserve(by_item.size());
  for (const auto& [item, rows] : by_item) items.push_back(item);
  std::sort(items.begin(), items.end());

  std::vector<LabelRecord> pairs;
  for (long item : items) {
    const auto& rows = by_item[item];
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = i + 1; j < rows.size(); ++j) {
        pairs.push_back({item, rows[i]->labeler, rows[j]->labeler, rows[i]->label,
                         rows[j]->label, static_cast<double>(rows[i]->order_index),
                         static_cast<double>(rows[j]->order_index)});
      }
      if (in_train(item)) {
        pairs.push_back({item, rows[i]->labeler, CategoricalDataset::kExpertId, rows[i]->label,
                         ds.truth[static_cast<std::size_t>(item)],
                         static_cast<double>(rows[i]->order_index),
                         static_cast<double>(rows[i]->order_index)});
      }
    }
  }
  return pairs;
}

std::unordered_map<long, std::vector<ItemLabel>> labels_by_item(const CategoricalDataset& ds) {
  std::unordered_map<long, std::vector<ItemLabel>> out;
  for (const auto& row : ds.labels)
    out[row.item].push_back({row.labeler, row.label, static_cast<double>(row.order_index)});
  return out;
}

}  // namespace calnet
