#pragma once

#include <Eigen/Dense>
#include <map>
#include <span>

#include "calnet/types.hpp"

namespace calnet {

enum class KernelKind { EQ, Bias, SumEqBias };

/// Covariance function over time for one GP. Cross-GP covariance is always
/// zero (priors are independent between sensors and between parameters).
struct KernelSpec {
  KernelKind kind = KernelKind::EQ;
  double eq_variance = 1.0;   // (param units)^2
  double lengthscale = 1.0;   // hours, EQ component only
  double bias_variance = 0.0; // (param units)^2

  static KernelSpec eq(double variance, double lengthscale) {
    return KernelSpec{KernelKind::EQ, variance, lengthscale, 0.0};
  }
  static KernelSpec bias(double variance) {
    return KernelSpec{KernelKind::Bias, 0.0, 1.0, variance};
  }
  static KernelSpec sum_eq_bias(double eq_variance, double lengthscale, double bias_variance) {
    return KernelSpec{KernelKind::SumEqBias, eq_variance, lengthscale, bias_variance};
  }

  void validate() const;

  /// Prior variance at a single point, k(x, x).
  double variance_scale() const;
};

/// Map from (sensor group, parameter index) to a kernel, plus the sensor
/// table used to resolve a sensor id to its group.
class KernelAssignment {
 public:
  KernelAssignment() = default;
  explicit KernelAssignment(SensorTable sensors) : sensors_(std::move(sensors)) {}

  void assign(KernelGroup group, int param, KernelSpec spec) {
    spec.validate();
    specs_[{group, param}] = spec;
  }

  /// Same spec for every parameter index of the group.
  void assign_all(KernelGroup group, KernelSpec spec, int param_count) {
    for (int c = 0; c < param_count; ++c) assign(group, c, spec);
  }

  const KernelSpec& resolve(int sensor, int param) const;
  const KernelSpec& resolve(const IndexPoint& p) const { return resolve(p.sensor, p.param); }

  const SensorTable& sensors() const { return sensors_; }

 private:
  SensorTable sensors_;
  std::map<std::pair<KernelGroup, int>, KernelSpec> specs_;
};

/// k(a, b). Zero whenever the two points index different GPs.
double eval_kernel(const KernelSpec& spec, const IndexPoint& a, const IndexPoint& b);

/// Dense covariance matrix of eval_kernel values.
Eigen::MatrixXd build_cov(const KernelAssignment& assign,
                          std::span<const IndexPoint> rows,
                          std::span<const IndexPoint> cols);

}  // namespace calnet
