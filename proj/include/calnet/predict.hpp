#pragma once

#include <Eigen/Dense>
#include <vector>

#include "calnet/gp.hpp"
#include "calnet/pair_model.hpp"

namespace calnet {

struct CalibrationQuery {
  int sensor = 0;
  double time = 0.0;
};

/// Posterior over the C calibration parameters of one sensor at one time.
struct CalibrationPrediction {
  Eigen::VectorXd mean;     // length C
  Eigen::VectorXd std;      // marginal std devs
  Eigen::MatrixXd samples;  // C x P
};

/// q(f) marginals (and P reparameterized samples) at the requested
/// (sensor, time) points. Throws DataError for unknown sensors.
std::vector<CalibrationPrediction> predict_calibration(const VariationalState& state,
                                                       const KernelAssignment& assign,
                                                       const std::vector<CalibrationQuery>& queries,
                                                       const CalibrationFunction& phi, int P,
                                                       std::uint64_t seed = 0);

/// Calibrated-measurement summary for a raw reading: phi(y, f) applied to
/// each parameter sample, with the observation-noise variance (in
/// calibrated units) added to the predictive variance. Reference sensors
/// pass the raw value through.
struct CalibratedMeasurement {
  double mean = 0.0;
  double std = 0.0;
  Eigen::VectorXd samples;
};

CalibratedMeasurement calibrate_measurement(const CalibrationPrediction& pred,
                                            const CalibrationFunction& phi, double y_raw,
                                            bool is_reference, double noise_var = 0.0);

}  // namespace calnet
