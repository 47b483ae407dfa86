#include "calnet/pair_model.hpp"
#include <bit>

#include <cmath>

#include "calnet/rng.hpp"

namespace calnet {

std::pair<double, double> calibrated_value(const CalibrationFunction& phi, double y,
                                           std::span<const double> f, bool is_reference) {
  auto c = calibrated_value_t<double>(phi, y, f, is_reference, 0.0);
  return {c.value, c.log_abs_dphi_dy};
}

double pair_loglik(const ColocationRecord& rec, std::span<const double> f1,
                   std::span<const double> f2, const CalibrationFunction& phi,
                   const SensorTable& sensors, const LikelihoodConfig& cfg) {
  cfg.validate();
  return pair_loglik_t<double>(rec, f1, f2, phi, sensors.is_reference(rec.s1),
                               sensors.is_reference(rec.s2), cfg, 0.0);
}

PairObservationModel::PairObservationModel(std::vector<ColocationRecord> data,
                                           CalibrationFunction phi, SensorTable sensors,
                                           LikelihoodConfig cfg)
    : data_(std::move(data)), phi_(phi), sensors_(std::move(sensors)), cfg_(cfg) {
  cfg_.validate();
  const int C = phi_.param_count();
  latents_.reserve(data_.size());
  for (const auto& rec : data_) {
    if (rec.s1 == rec.s2) throw DataError("colocation record pairs a sensor with itself");
    if (!std::isfinite(rec.y1) || !std::isfinite(rec.y2))
      throw DataError("non-finite measurement in colocation record");
    const bool r1 = sensors_.is_reference(rec.s1);
    const bool r2 = sensors_.is_reference(rec.s2);
    ref1_.push_back(r1);
    ref2_.push_back(r2);
    touches_ref_.push_back(r1 || r2);

    std::vector<IndexPoint> pts;
    if (!r1)
      for (int c = 0; c < C; ++c) pts.push_back({rec.t1, rec.s1, c});
    if (!r2)
      for (int c = 0; c < C; ++c) pts.push_back({rec.t2, rec.s2, c});
    latents_.push_back(std::move(pts));

    std::uint64_t key = hash_mix(std::bit_cast<std::uint64_t>(rec.t1),
                                 std::bit_cast<std::uint64_t>(rec.t2));
    key = hash_mix(key, static_cast<std::uint64_t>(rec.s1));
    key = hash_mix(key, static_cast<std::uint64_t>(rec.s2));
    key = hash_mix(key, std::bit_cast<std::uint64_t>(rec.y1));
    key = hash_mix(key, std::bit_cast<std::uint64_t>(rec.y2));
    eps_keys_.push_back(key);
  }
}

std::span<const IndexPoint> PairObservationModel::latents(std::size_t i) const {
  return latents_[i];
}

template <class T>
T PairObservationModel::eval(std::size_t i, std::span<const T> f, T zero) const {
  const auto& rec = data_[i];
  const int C = phi_.param_count();
  std::span<const T> f1, f2;
  std::size_t off = 0;
  if (!ref1_[i]) {
    f1 = f.subspan(0, C);
    off = C;
  }
  if (!ref2_[i]) f2 = f.subspan(off, C);
  return pair_loglik_t<T>(rec, f1, f2, phi_, ref1_[i], ref2_[i], cfg_, zero);
}

double PairObservationModel::loglik(std::size_t i, std::span<const double> f) const {
  return eval<double>(i, f, 0.0);
}

double PairObservationModel::loglik_grad(std::size_t i, std::span<const double> f,
                                         std::span<double> grad) const {
  thread_local ad::Tape tape;
  tape.clear();
  std::vector<ad::Var> vars;
  vars.reserve(f.size());
  for (double v : f) vars.push_back(tape.leaf(v));
  const ad::Var zero = tape.leaf(0.0);
  const ad::Var out = eval<ad::Var>(i, std::span<const ad::Var>(vars), zero);
  const auto adj = tape.gradient(out);
  for (std::size_t k = 0; k < f.size(); ++k) grad[k] = adj[vars[k].index()];
  return out.value();
}

ImportanceWeights make_importance_weights(const std::vector<bool>& touches_reference,
                                          double oversample_factor) {
  if (oversample_factor < 1.0) throw ConfigError("oversample_factor must be >= 1");
  const std::size_t n = touches_reference.size();
  ImportanceWeights out;
  out.inclusion_prob.resize(n);
  out.weight.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += touches_reference[i] ? oversample_factor : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = (touches_reference[i] ? oversample_factor : 1.0) / total;
    out.inclusion_prob[i] = p;
    out.weight[i] = (1.0 / static_cast<double>(n)) / p;
  }
  return out;
}

ImportanceWeights make_importance_weights(const std::vector<ColocationRecord>& data,
                                          const SensorTable& sensors, double oversample_factor) {
  std::vector<bool> touches;
  touches.reserve(data.size());
  for (const auto& rec : data)
    touches.push_back(sensors.is_reference(rec.s1) || sensors.is_reference(rec.s2));
  return make_importance_weights(touches, oversample_factor);
}

}  // namespace calnet
