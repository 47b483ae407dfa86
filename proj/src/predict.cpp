#include "calnet/predict.hpp"
#include <bit>

#include <cmath>

#include "calnet/rng.hpp"

namespace calnet {

std::vector<CalibrationPrediction> predict_calibration(
    const VariationalState& state, const KernelAssignment& assign,
    const std::vector<CalibrationQuery>& queries, const CalibrationFunction& phi, int P,
    std::uint64_t seed) {
  if (P < 1) throw ConfigError("sample count must be >= 1");
  const int C = phi.param_count();
  std::vector<CalibrationPrediction> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    assign.sensors().at(q.sensor);  // throws for unknown sensors
    std::vector<IndexPoint> pts;
    pts.reserve(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) pts.push_back({q.time, q.sensor, c});
    const GaussianBatch dist = predict_q(pts, state, assign);
    CalibrationPrediction pred;
    pred.mean = dist.mean;
    pred.std = dist.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    pred.samples.resize(C, P);
    const Eigen::MatrixXd L = robust_cholesky(dist.cov);
    std::uint64_t stream = hash_mix(seed, static_cast<std::uint64_t>(q.sensor));
    stream = hash_mix(stream, std::bit_cast<std::uint64_t>(q.time));
    Eigen::VectorXd eps(C);
    for (int p = 0; p < P; ++p) {
      for (int d = 0; d < C; ++d)
        eps(d) = keyed_normal(hash_mix(stream, hash_mix(static_cast<std::uint64_t>(p),
                                                        static_cast<std::uint64_t>(d))));
      pred.samples.col(p) = dist.mean + L * eps;
    }
    out.push_back(std::move(pred));
  }
  return out;
}

CalibratedMeasurement calibrate_measurement(const CalibrationPrediction& pred,
                                            const CalibrationFunction& phi, double y_raw,
                                            bool is_reference, double noise_var) {
  CalibratedMeasurement out;
  if (is_reference) {
    out.mean = y_raw;
    out.std = 0.0;
    out.samples = Eigen::VectorXd::Constant(pred.samples.cols(), y_raw);
    return out;
  }
  const int P = static_cast<int>(pred.samples.cols());
  out.samples.resize(P);
  std::vector<double> f(static_cast<std::size_t>(pred.samples.rows()));
  for (int p = 0; p < P; ++p) {
    for (Eigen::Index d = 0; d < pred.samples.rows(); ++d)
      f[static_cast<std::size_t>(d)] = pred.samples(d, p);
    out.samples(p) = calibrated_value(phi, y_raw, f, false).first;
  }
  out.mean = out.samples.mean();
  const double var =
      P > 1 ? (out.samples.array() - out.mean).square().sum() / (P - 1) : 0.0;
  // The model reads phi(y) = truth + eps with eps ~ N(0, noise_var) in
  // calibrated units, so the predictive variance adds the noise term.
  out.std = std::sqrt(var + noise_var);
  return out;
}

}  // namespace calnet
