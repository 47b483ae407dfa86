#include <algorithm>
#include <cmath>
#include <vector>

#include "calnet/synthdata.hpp"
#include "doctest.h"

using namespace calnet;

TEST_CASE("pollution generator is seed-deterministic") {
  PollutionScenario sc;
  sc.horizon_hours = 240.0;
  sc.seed = 11;
  const PollutionDataset a = gen_pollution(sc);
  const PollutionDataset b = gen_pollution(sc);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].y1 == b.records[i].y1);
    CHECK(a.records[i].y2 == b.records[i].y2);
    CHECK(a.records[i].t1 == b.records[i].t1);
    CHECK(a.records[i].s1 == b.records[i].s1);
  }
  sc.seed = 12;
  const PollutionDataset c = gen_pollution(sc);
  bool any_diff = false;
  for (std::size_t i = 0; i < std::min(a.records.size(), c.records.size()); ++i)
    if (a.records[i].y1 != c.records[i].y1) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("noiseless observations equal scaling times pollution exactly") {
  PollutionScenario sc;
  sc.horizon_hours = 120.0;
  sc.noise_scale = 0.0;
  sc.seed = 3;
  const PollutionDataset ds = gen_pollution(sc);
  REQUIRE(!ds.records.empty());
  for (const auto& r : ds.records) {
    const double p1 = ds.truth.pollution(r.t1);
    const double e1 = ds.sensors.is_reference(r.s1) ? p1 : ds.truth.true_scaling(r.s1, r.t1) * p1;
    CHECK(r.y1 == e1);
    const double p2 = ds.truth.pollution(r.t2);
    const double e2 = ds.sensors.is_reference(r.s2) ? p2 : ds.truth.true_scaling(r.s2, r.t2) * p2;
    CHECK(r.y2 == e2);
  }
}

TEST_CASE("drawn scaling periods match the target medians within 10%") {
  std::vector<double> static_periods, mobile_periods;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    PollutionScenario sc;
    sc.horizon_hours = 6.0;  // periods are drawn regardless of horizon
    sc.seed = seed;
    const PollutionDataset ds = gen_pollution(sc);
    for (const auto& s : ds.sensors.all()) {
      if (s.is_reference) continue;
      const double T = ds.truth.scaling.at(s.id).period;
      (s.kind == SensorKind::Static ? static_periods : mobile_periods).push_back(T);
    }
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  CHECK(std::abs(median(static_periods) - 3070.0) / 3070.0 < 0.10);
  CHECK(std::abs(median(mobile_periods) - 1007.0) / 1007.0 < 0.10);
}

TEST_CASE("measurement noise has the configured scale") {
  PollutionScenario sc;
  sc.noise_scale = 10.0;
  sc.seed = 5;  // default horizon: ~14400 mobile samples
  const PollutionDataset ds = gen_pollution(sc);
  std::vector<double> residuals;
  auto collect = [&](int s, double t, double y) {
    if (ds.sensors.is_reference(s)) return;
    residuals.push_back(y - ds.truth.true_scaling(s, t) * ds.truth.pollution(t));
  };
  for (const auto& r : ds.records) {
    collect(r.s1, r.t1, r.y1);
    collect(r.s2, r.t2, r.y2);
  }
  REQUIRE(residuals.size() >= 10000);
  double mean = 0.0, var = 0.0;
  for (double r : residuals) mean += r / static_cast<double>(residuals.size());
  for (double r : residuals) var += (r - mean) * (r - mean) / static_cast<double>(residuals.size());
  CHECK(std::abs(std::sqrt(var) - sc.noise_scale) / sc.noise_scale < 0.05);
}

TEST_CASE("categorical generator: split sizes, counts, determinism") {
  CategoricalScenario sc;
  sc.seed = 9;
  const CategoricalDataset ds = gen_categorical(sc);
  CHECK(ds.train_items.size() == 173);
  CHECK(ds.test_items.size() == 127);
  CHECK(ds.truth.size() == 300);

  std::array<int, 3> per_labeler = {0, 0, 0};
  for (const auto& row : ds.labels) per_labeler[static_cast<std::size_t>(row.labeler - 1)]++;
  CHECK(per_labeler[0] == 178);
  CHECK(per_labeler[1] == 190);
  CHECK(per_labeler[2] == 200);

  // class counts follow the mix exactly (rounded)
  std::array<int, 3> class_counts = {0, 0, 0};
  for (int c : ds.truth) class_counts[static_cast<std::size_t>(c)]++;
  CHECK(class_counts[0] == 108);
  CHECK(class_counts[1] == 90);
  CHECK(class_counts[2] == 102);

  const CategoricalDataset again = gen_categorical(sc);
  REQUIRE(again.labels.size() == ds.labels.size());
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    CHECK(again.labels[i].item == ds.labels[i].item);
    CHECK(again.labels[i].label == ds.labels[i].label);
  }
}

TEST_CASE("non-expert profiles: A perfect early, B perfect late, A near chance at the end") {
  int a_first_total = 0, a_first_correct = 0;
  int b_last_total = 0, b_last_correct = 0;
  int a_tail_total = 0, a_tail_correct = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CategoricalScenario sc;
    sc.seed = seed;
    const CategoricalDataset ds = gen_categorical(sc);
    for (const auto& row : ds.labels) {
      const bool correct = row.label == ds.truth[static_cast<std::size_t>(row.item)];
      const double x = static_cast<double>(row.item) / static_cast<double>(sc.n_items - 1);
      if (row.labeler == 1 && x <= 0.5) {
        ++a_first_total;
        a_first_correct += correct;
      }
      if (row.labeler == 2 && x >= 0.5) {
        ++b_last_total;
        b_last_correct += correct;
      }
      if (row.labeler == 1 && x >= 0.9) {
        ++a_tail_total;
        a_tail_correct += correct;
      }
    }
  }
  // "perfect" halves are exact, not just approximate
  CHECK(a_first_correct == a_first_total);
  CHECK(b_last_correct == b_last_total);
  // NE A's tail accuracy is near chance (1/3 +- 10 points)
  const double tail_acc = static_cast<double>(a_tail_correct) / a_tail_total;
  CHECK(tail_acc > 1.0 / 3.0 - 0.10);
  CHECK(tail_acc < 1.0 / 3.0 + 0.10);
}

TEST_CASE("label pairs: all non-expert pairs plus expert pairs on train items") {
  CategoricalScenario sc;
  sc.n_items = 20;
  sc.ne_counts = {15, 15, 15};
  sc.n_train = 10;
  sc.seed = 1;
  const CategoricalDataset ds = gen_categorical(sc);
  const auto pairs = make_label_pairs(ds);
  const auto grouped = labels_by_item(ds);

  std::size_t expect = 0;
  for (const auto& [item, labels] : grouped) {
    expect += labels.size() * (labels.size() - 1) / 2;
    if (std::binary_search(ds.train_items.begin(), ds.train_items.end(), item))
      expect += labels.size();
  }
  CHECK(pairs.size() == expect);
  for (const auto& p : pairs) {
    if (p.s2 == CategoricalDataset::kExpertId) {
      CHECK(std::binary_search(ds.train_items.begin(), ds.train_items.end(), p.item));
      CHECK(p.y2 == ds.truth[static_cast<std::size_t>(p.item)]);
    }
  }
}

TEST_CASE("scenario validation rejects inconsistent settings") {
  PollutionScenario bad;
  bad.n_reference = 11;
  CHECK_THROWS_AS(gen_pollution(bad), ConfigError);
  CategoricalScenario cat;
  cat.class_mix = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(gen_categorical(cat), ConfigError);
}
