#include "calnet/kernels.hpp"

#include <cmath>

namespace calnet {

void KernelSpec::validate() const {
  switch (kind) {
    case KernelKind::EQ:
      if (eq_variance < 0.0) throw ConfigError("EQ kernel variance must be >= 0");
      if (!(lengthscale > 0.0)) throw ConfigError("EQ kernel lengthscale must be > 0");
      break;
    case KernelKind::Bias:
      if (bias_variance < 0.0) throw ConfigError("Bias kernel variance must be >= 0");
      break;
    case KernelKind::SumEqBias:
      if (eq_variance < 0.0 || bias_variance < 0.0)
        throw ConfigError("kernel variances must be >= 0");
      if (!(lengthscale > 0.0)) throw ConfigError("EQ kernel lengthscale must be > 0");
      break;
  }
}

double KernelSpec::variance_scale() const {
  switch (kind) {
    case KernelKind::EQ:
      return eq_variance;
    case KernelKind::Bias:
      return bias_variance;
    case KernelKind::SumEqBias:
      return eq_variance + bias_variance;
  }
  return 0.0;
}

const KernelSpec& KernelAssignment::resolve(int sensor, int param) const {
  const KernelGroup group = group_of(sensors_.at(sensor));
  auto it = specs_.find({group, param});
  if (it == specs_.end()) {
    throw ConfigError("no kernel assigned for sensor " + std::to_string(sensor) + ", param " +
                      std::to_string(param));
  }
  return it->second;
}

double eval_kernel(const KernelSpec& spec, const IndexPoint& a, const IndexPoint& b) {
  if (!same_gp(a, b)) return 0.0;
  const double dt = a.time - b.time;
  switch (spec.kind) {
    case KernelKind::EQ:
      return spec.eq_variance * std::exp(-dt * dt / (2.0 * spec.lengthscale * spec.lengthscale));
    case KernelKind::Bias:
      return spec.bias_variance;
    case KernelKind::SumEqBias:
      return spec.eq_variance * std::exp(-dt * dt / (2.0 * spec.lengthscale * spec.lengthscale)) +
             spec.bias_variance;
  }
  return 0.0;
}

Eigen::MatrixXd build_cov(const KernelAssignment& assign, std::span<const IndexPoint> rows,
                          std::span<const IndexPoint> cols) {
  Eigen::MatrixXd K(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const KernelSpec& spec = assign.resolve(rows[i]);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (!same_gp(rows[i], cols[j])) {
        assign.resolve(cols[j]);  // still must be resolvable
        K(i, j) = 0.0;
      } else {
        K(i, j) = eval_kernel(spec, rows[i], cols[j]);
      }
    }
  }
  return K;
}

}  // namespace calnet
