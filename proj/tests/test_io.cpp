#include <cstdio>
#include <filesystem>
#include <fstream>

#include "calnet/config.hpp"
#include "calnet/csv.hpp"
#include "calnet/rng.hpp"
#include "calnet/synthdata.hpp"
#include "doctest.h"

using namespace calnet;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(std::string p) : path(std::move(p)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("colocation CSV round trip is bit-exact") {
  Rng rng(1);
  std::vector<ColocationRecord> recs;
  for (int i = 0; i < 50; ++i) {
    ColocationRecord r;
    r.t1 = 1000.0 * rng.uniform();
    r.t2 = r.t1 + 0.001 * rng.normal();
    r.s1 = i % 5;
    r.s2 = 5 + i % 3;
    r.y1 = 100.0 * rng.normal();
    r.y2 = 100.0 * rng.normal();
    recs.push_back(r);
  }
  TempFile f("io_coloc.csv");
  write_colocation_csv(f.path, recs);
  const auto back = read_colocation_csv(f.path);
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i].t1 == recs[i].t1);
    CHECK(back[i].t2 == recs[i].t2);
    CHECK(back[i].s1 == recs[i].s1);
    CHECK(back[i].s2 == recs[i].s2);
    CHECK(back[i].y1 == recs[i].y1);
    CHECK(back[i].y2 == recs[i].y2);
  }
}

TEST_CASE("sensor, truth, calibrated, label, and posterior CSVs round trip") {
  SensorTable sensors;
  sensors.add({0, SensorKind::Static, true});
  sensors.add({3, SensorKind::Mobile, false});
  TempFile sf("io_sensors.csv");
  write_sensor_csv(sf.path, sensors);
  const SensorTable s2 = read_sensor_csv(sf.path);
  CHECK(s2.size() == 2);
  CHECK(s2.is_reference(0));
  CHECK(s2.at(3).kind == SensorKind::Mobile);

  std::vector<EvalRow> truth = {{1, 3.5, 42.0, 1.25, 33.6}, {2, 7.0, 10.0, 0.9, 11.11}};
  TempFile tf("io_truth.csv");
  write_truth_csv(tf.path, truth);
  const auto t2 = read_truth_csv(tf.path);
  REQUIRE(t2.size() == 2);
  CHECK(t2[1].true_pollution == truth[1].true_pollution);
  CHECK(t2[0].true_scaling == truth[0].true_scaling);

  std::vector<CalibratedRow> cal = {{1, 3.5, 42.0, 33.3, 1.5}};
  TempFile cf("io_cal.csv");
  write_calibrated_csv(cf.path, cal);
  const auto c2 = read_calibrated_csv(cf.path);
  REQUIRE(c2.size() == 1);
  CHECK(c2[0].cal_mean == cal[0].cal_mean);
  CHECK(c2[0].cal_std == cal[0].cal_std);

  std::vector<LabelRow> labels = {{5, 1, 2, 5}, {9, 3, 0, 9}};
  TempFile lf("io_labels.csv");
  write_label_csv(lf.path, labels);
  const auto l2 = read_label_csv(lf.path);
  REQUIRE(l2.size() == 2);
  CHECK(l2[0].item == 5);
  CHECK(l2[1].labeler == 3);
  CHECK(l2[1].order_index == 9);

  std::vector<std::pair<long, int>> item_truth = {{0, 2}, {7, 1}};
  TempFile itf("io_item_truth.csv");
  write_item_truth_csv(itf.path, item_truth);
  CHECK(read_item_truth_csv(itf.path) == item_truth);

  Eigen::VectorXd p(3);
  p << 0.25, 0.5, 0.25;
  std::vector<PosteriorRow> post = {{11, p}};
  TempFile pf("io_post.csv");
  write_posterior_csv(pf.path, post);
  const auto p2 = read_posterior_csv(pf.path);
  REQUIRE(p2.size() == 1);
  CHECK(p2[0].item == 11);
  CHECK((p2[0].p - p).norm() == 0.0);
}

TEST_CASE("malformed CSV rows are reported with line numbers") {
  TempFile f("io_bad.csv");
  {
    std::ofstream out(f.path);
    out << "t1,t2,sensor1,sensor2,y1,y2\n";
    out << "1.0,1.0,0,1,10.0,11.0\n";
    out << "2.0,2.0,0,1,oops,11.0\n";
  }
  try {
    read_colocation_csv(f.path);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }

  TempFile g("io_badheader.csv");
  {
    std::ofstream out(g.path);
    out << "wrong,header\n";
  }
  CHECK_THROWS_AS(read_colocation_csv(g.path), DataError);
}

TEST_CASE("preprocess: filters drop whole records, block averaging merges runs") {
  std::vector<ColocationRecord> recs;
  for (int i = 0; i < 10; ++i)
    recs.push_back({static_cast<double>(i), static_cast<double>(i), 0, 1, 20.0 + i, 30.0 + i});
  recs.push_back({20.0, 20.0, 0, 1, 500.0, 25.0});  // out of range side
  recs.push_back({21.0, 21.0, 0, 1, 5.0, 25.0});    // below min

  IngestFilters filters;
  filters.min_value = 10.0;
  filters.max_value = 300.0;
  const auto filtered = preprocess_records(recs, filters);
  CHECK(filtered.size() == 10);

  filters.average_block = 10;
  const auto averaged = preprocess_records(recs, filters);
  REQUIRE(averaged.size() == 1);
  CHECK(averaged[0].t1 == doctest::Approx(4.5));
  CHECK(averaged[0].y1 == doctest::Approx(24.5));
  CHECK(averaged[0].y2 == doctest::Approx(34.5));

  // empty filter is a pass-through
  const auto plain = preprocess_records(recs, IngestFilters{});
  CHECK(plain.size() == recs.size());
}

TEST_CASE("config loading is fail-closed with field paths") {
  TempFile f("io_cfg.json");
  {
    std::ofstream out(f.path);
    out << R"({"sigma2": 25.0, "train": {"steps": 10}, "inducing_per_gp": 4})";
  }
  const RunConfig cfg = load_config(f.path);
  CHECK(cfg.sigma2 == 25.0);
  CHECK(cfg.train.steps == 10);
  CHECK(cfg.inducing_per_gp == 4);
  CHECK(cfg.calib_kind == CalibKind::LogScale);  // default preserved

  TempFile g("io_cfg_bad.json");
  {
    std::ofstream out(g.path);
    out << R"({"train": {"stepz": 10}})";
  }
  try {
    load_config(g.path);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("train.stepz") != std::string::npos);
  }

  TempFile h("io_cfg_bad2.json");
  {
    std::ofstream out(h.path);
    out << R"({"sigma2": -1.0})";
  }
  CHECK_THROWS_AS(load_config(h.path), ConfigError);
}

TEST_CASE("manifest hash tracks the config content") {
  TempFile a("io_manifest_a.json"), b("io_manifest_b.json"), c("io_manifest_c.json");
  RunConfig cfg = default_config();
  write_manifest(a.path, cfg, 7);
  write_manifest(b.path, cfg, 7);
  std::ifstream fa(a.path), fb(b.path);
  const std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  const std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);

  cfg.sigma2 = 1.23;
  write_manifest(c.path, cfg, 7);
  std::ifstream fc(c.path);
  const std::string sc((std::istreambuf_iterator<char>(fc)), std::istreambuf_iterator<char>());
  CHECK(sa != sc);
}

TEST_CASE("simulate-to-ingest round trip reproduces the dataset exactly") {
  PollutionScenario sc;
  sc.horizon_hours = 120.0;
  sc.seed = 2;
  const PollutionDataset ds = gen_pollution(sc);
  TempFile f("io_roundtrip.csv");
  write_colocation_csv(f.path, ds.records);
  const auto back = ingest(f.path, IngestFilters{});
  REQUIRE(back.size() == ds.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].y1 == ds.records[i].y1);
    CHECK(back[i].y2 == ds.records[i].y2);
    CHECK(back[i].t1 == ds.records[i].t1);
  }
}
