#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "calnet/autodiff.hpp"
#include "calnet/observation_model.hpp"
#include "calnet/types.hpp"

namespace calnet {

/// One pairwise colocation: the unit of likelihood evaluation.
struct ColocationRecord {
  double t1 = 0.0;
  double t2 = 0.0;
  int s1 = 0;
  int s2 = 0;
  double y1 = 0.0;
  double y2 = 0.0;
};

enum class CalibKind { Scale, LogScale, Linear };

/// Parametric map phi(raw, params) -> calibrated value.
struct CalibrationFunction {
  CalibKind kind = CalibKind::LogScale;

  int param_count() const { return kind == CalibKind::Linear ? 2 : 1; }
};

struct LikelihoodConfig {
  double sigma2 = 1.0;  // observation noise variance
  double gamma2 = 1.0;  // latent-pollution prior variance

  void validate() const {
    if (!(sigma2 > 0.0)) throw ConfigError("sigma2 must be > 0");
    if (!(gamma2 > 0.0)) throw ConfigError("gamma2 must be > 0");
  }
};

template <class T>
struct Calibrated {
  T value;
  T log_abs_dphi_dy;
};

/// phi(y, f) and log|dphi/dy|. Reference sensors use the identity function.
/// `zero` is an additive-identity scalar of type T (a tape leaf for ad::Var).
template <class T>
Calibrated<T> calibrated_value_t(const CalibrationFunction& phi, double y, std::span<const T> f,
                                 bool is_reference, T zero) {
  using ad::exp;
  using ad::log_abs;
  if (is_reference) return {zero + y, zero};
  switch (phi.kind) {
    case CalibKind::Scale:
      if (ad::scalar_value(f[0]) == 0.0)
        throw NumericalError("degenerate Scale calibration: f == 0");
      return {f[0] * y, log_abs(f[0])};
    case CalibKind::LogScale:
      return {exp(f[0]) * y, f[0] * 1.0};
    case CalibKind::Linear:
      if (ad::scalar_value(f[0]) == 0.0)
        throw NumericalError("degenerate Linear calibration: gradient == 0");
      return {f[0] * y + f[1], log_abs(f[0])};
  }
  throw ConfigError("unknown calibration kind");
}

/// Plain-double entry point; resolves reference flags from the sensor table.
std::pair<double, double> calibrated_value(const CalibrationFunction& phi, double y,
                                           std::span<const double> f, bool is_reference);

/// log p(y1, y2 | f1, f2): bivariate normal over the calibrated pair with
/// covariance [[s+g, g], [g, s+g]] (latent truth integrated out in closed
/// form), plus the change-of-variables Jacobian terms.
template <class T>
T pair_loglik_t(const ColocationRecord& rec, std::span<const T> f1, std::span<const T> f2,
                const CalibrationFunction& phi, bool ref1, bool ref2,
                const LikelihoodConfig& cfg, T zero) {
  const double s = cfg.sigma2, g = cfg.gamma2;
  const double det = s * s + 2.0 * s * g;
  const double ia = (s + g) / det;   // Sigma^-1 diagonal
  const double ib = -g / det;        // Sigma^-1 off-diagonal
  const double norm = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det);
  using ad::square;

  T ll = zero + norm;
  if (ref1 && ref2) {
    const double v1 = rec.y1, v2 = rec.y2;
    return ll - 0.5 * (ia * (v1 * v1 + v2 * v2) + 2.0 * ib * v1 * v2);
  }
  if (ref1) {
    auto c2 = calibrated_value_t<T>(phi, rec.y2, f2, false, zero);
    const double v1 = rec.y1;
    return ll - 0.5 * (ia * (v1 * v1) + ia * square(c2.value) + 2.0 * ib * v1 * c2.value) +
           c2.log_abs_dphi_dy;
  }
  if (ref2) {
    auto c1 = calibrated_value_t<T>(phi, rec.y1, f1, false, zero);
    const double v2 = rec.y2;
    return ll - 0.5 * (ia * square(c1.value) + ia * (v2 * v2) + 2.0 * ib * c1.value * v2) +
           c1.log_abs_dphi_dy;
  }
  auto c1 = calibrated_value_t<T>(phi, rec.y1, f1, false, zero);
  auto c2 = calibrated_value_t<T>(phi, rec.y2, f2, false, zero);
  return ll -
         0.5 * (ia * square(c1.value) + ia * square(c2.value) + 2.0 * ib * c1.value * c2.value) +
         c1.log_abs_dphi_dy + c2.log_abs_dphi_dy;
}

double pair_loglik(const ColocationRecord& rec, std::span<const double> f1,
                   std::span<const double> f2, const CalibrationFunction& phi,
                   const SensorTable& sensors, const LikelihoodConfig& cfg);

/// Observation model over colocation records for the generic VI trainer.
/// Latents are gathered only for non-reference sides (C per side).
class PairObservationModel : public ObservationModel {
 public:
  PairObservationModel(std::vector<ColocationRecord> data, CalibrationFunction phi,
                       SensorTable sensors, LikelihoodConfig cfg);

  std::size_t size() const override { return data_.size(); }
  std::span<const IndexPoint> latents(std::size_t i) const override;
  double loglik(std::size_t i, std::span<const double> f) const override;
  double loglik_grad(std::size_t i, std::span<const double> f,
                     std::span<double> grad) const override;
  bool touches_reference(std::size_t i) const override { return touches_ref_[i]; }
  std::uint64_t eps_key(std::size_t i) const override { return eps_keys_[i]; }

  const std::vector<ColocationRecord>& data() const { return data_; }
  const SensorTable& sensors() const { return sensors_; }
  const CalibrationFunction& phi() const { return phi_; }
  const LikelihoodConfig& config() const { return cfg_; }

 private:
  template <class T>
  T eval(std::size_t i, std::span<const T> f, T zero) const;

  std::vector<ColocationRecord> data_;
  CalibrationFunction phi_;
  SensorTable sensors_;
  LikelihoodConfig cfg_;
  std::vector<std::vector<IndexPoint>> latents_;
  std::vector<bool> ref1_, ref2_, touches_ref_;
  std::vector<std::uint64_t> eps_keys_;
};

/// Minibatch inclusion distribution that oversamples reference-touching
/// records, with inverse-probability weights making the weighted ELBO
/// unbiased. weights[i] = (1/N) / p[i].
struct ImportanceWeights {
  std::vector<double> inclusion_prob;
  std::vector<double> weight;
};
ImportanceWeights make_importance_weights(const std::vector<bool>& touches_reference,
                                          double oversample_factor);
ImportanceWeights make_importance_weights(const std::vector<ColocationRecord>& data,
                                          const SensorTable& sensors, double oversample_factor);

}  // namespace calnet
