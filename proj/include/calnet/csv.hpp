#pragma once

#include <optional>
#include <string>
#include <vector>

#include "calnet/pair_model.hpp"
#include "calnet/synthdata.hpp"
#include "calnet/types.hpp"

namespace calnet {

// CSV schemas. All floats are written with 17 significant digits so a
// simulate -> ingest round trip reproduces the in-memory values exactly.
// A header row is required everywhere.

std::string format_double(double v);

// colocations: t1,t2,sensor1,sensor2,y1,y2
std::vector<ColocationRecord> read_colocation_csv(const std::string& path);
void write_colocation_csv(const std::string& path, const std::vector<ColocationRecord>& records);

// sensors: id,type,is_reference   (type in {static, mobile})
SensorTable read_sensor_csv(const std::string& path);
void write_sensor_csv(const std::string& path, const SensorTable& sensors);

// labels: item_id,labeler_id,label,order_index
std::vector<LabelRow> read_label_csv(const std::string& path);
void write_label_csv(const std::string& path, const std::vector<LabelRow>& rows);

// item ground truth: item_id,label
std::vector<std::pair<long, int>> read_item_truth_csv(const std::string& path);
void write_item_truth_csv(const std::string& path,
                          const std::vector<std::pair<long, int>>& rows);

/// One evaluation point: a non-reference side of a colocation record.
/// truth columns: sensor,time,y_raw,true_scaling,true_pollution
struct EvalRow {
  int sensor = 0;
  double time = 0.0;
  double y_raw = 0.0;
  double true_scaling = 0.0;
  double true_pollution = 0.0;
};
std::vector<EvalRow> read_truth_csv(const std::string& path);
void write_truth_csv(const std::string& path, const std::vector<EvalRow>& rows);

/// Calibrated predictions aligned with the truth rows:
/// sensor,time,y_raw,cal_mean,cal_std
struct CalibratedRow {
  int sensor = 0;
  double time = 0.0;
  double y_raw = 0.0;
  double cal_mean = 0.0;
  double cal_std = 0.0;
};
std::vector<CalibratedRow> read_calibrated_csv(const std::string& path);
void write_calibrated_csv(const std::string& path, const std::vector<CalibratedRow>& rows);

/// Calibration-parameter posterior output:
/// sensor,time,param,post_mean,post_std,sample_0..sample_{P-1}
struct ParamPosteriorRow {
  int sensor = 0;
  double time = 0.0;
  int param = 0;
  double post_mean = 0.0;
  double post_std = 0.0;
  std::vector<double> samples;
};
void write_param_posterior_csv(const std::string& path,
                               const std::vector<ParamPosteriorRow>& rows);

// item posteriors: item_id,p_0,...,p_{A-1}
struct PosteriorRow {
  long item = 0;
  Eigen::VectorXd p;
};
std::vector<PosteriorRow> read_posterior_csv(const std::string& path);
void write_posterior_csv(const std::string& path, const std::vector<PosteriorRow>& rows);

/// Preprocessing filters applied at ingestion.
struct IngestFilters {
  std::optional<double> min_value;  // drop records with any side below
  std::optional<double> max_value;  // drop records with any side above
  int average_block = 0;            // block-average runs of same-pair records
};

/// Filter and block-average colocation records. Block averaging groups
/// consecutive records of the same (s1, s2) pair into blocks of the given
/// size and averages times and measurements within each block.
std::vector<ColocationRecord> preprocess_records(const std::vector<ColocationRecord>& records,
                                                 const IngestFilters& filters);

/// read_colocation_csv + preprocess_records.
std::vector<ColocationRecord> ingest(const std::string& colocation_csv,
                                     const IngestFilters& filters);

}  // namespace calnet
