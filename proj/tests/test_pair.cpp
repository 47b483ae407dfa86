#include <cmath>
#include <numbers>

#include "calnet/pair_model.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace calnet;

namespace {

double normal_pdf(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var) /
         std::sqrt(2.0 * std::numbers::pi * var);
}

/// Independent oracle: marginalize the shared latent value h by composite
/// Simpson quadrature instead of the closed form.
double pair_loglik_quadrature(const ColocationRecord& rec, std::span<const double> f1,
                              std::span<const double> f2, const CalibrationFunction& phi,
                              bool ref1, bool ref2, const LikelihoodConfig& cfg, int n = 4000) {
  const auto c1 = ref1 ? std::pair<double, double>{rec.y1, 0.0}
                       : calibrated_value(phi, rec.y1, f1, false);
  const auto c2 = ref2 ? std::pair<double, double>{rec.y2, 0.0}
                       : calibrated_value(phi, rec.y2, f2, false);
  const double bound = 8.0 * std::sqrt(cfg.gamma2 + cfg.sigma2);
  const double h_step = 2.0 * bound / n;
  double integral = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double h = -bound + i * h_step;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    integral += w * normal_pdf(c1.first, h, cfg.sigma2) * normal_pdf(c2.first, h, cfg.sigma2) *
                normal_pdf(h, 0.0, cfg.gamma2);
  }
  integral *= h_step / 3.0;
  return std::log(integral) + c1.second + c2.second;
}

}  // namespace

TEST_CASE("calibrated_value kinds and reference identity") {
  const double f_scale[] = {2.0};
  auto [v, j] = calibrated_value({CalibKind::Scale}, 3.0, f_scale, false);
  CHECK(v == doctest::Approx(6.0));
  CHECK(j == doctest::Approx(std::log(2.0)));

  const double f_log[] = {0.5};
  auto [lv, lj] = calibrated_value({CalibKind::LogScale}, 3.0, f_log, false);
  CHECK(lv == doctest::Approx(3.0 * std::exp(0.5)));
  CHECK(lj == doctest::Approx(0.5));

  const double f_lin[] = {2.0, -1.0};
  auto [av, aj] = calibrated_value({CalibKind::Linear}, 3.0, f_lin, false);
  CHECK(av == doctest::Approx(5.0));
  CHECK(aj == doctest::Approx(std::log(2.0)));

  auto [rv, rj] = calibrated_value({CalibKind::Scale}, 3.0, {}, true);
  CHECK(rv == 3.0);
  CHECK(rj == 0.0);

  const double f_zero[] = {0.0};
  CHECK_THROWS_AS(calibrated_value({CalibKind::Scale}, 3.0, f_zero, false), NumericalError);
}

TEST_CASE("pair_loglik matches Simpson quadrature over the latent value") {
  Rng rng(100);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const CalibKind kind = trial % 3 == 0   ? CalibKind::Scale
                           : trial % 3 == 1 ? CalibKind::LogScale
                                            : CalibKind::Linear;
    const CalibrationFunction phi{kind};
    LikelihoodConfig cfg;
    cfg.sigma2 = 0.5 + 3.0 * rng.uniform();
    cfg.gamma2 = 1.0 + 20.0 * rng.uniform();
    const bool ref1 = trial % 4 == 0;
    const bool ref2 = trial % 5 == 0;

    ColocationRecord rec;
    rec.s1 = 1;
    rec.s2 = 2;
    rec.y1 = 0.5 + 4.0 * rng.uniform();
    rec.y2 = 0.5 + 4.0 * rng.uniform();

    std::vector<double> f1(phi.param_count()), f2(phi.param_count());
    for (auto& v : f1) v = 0.5 + rng.normal() * 0.3;
    for (auto& v : f2) v = 0.5 + rng.normal() * 0.3;

    const double closed = pair_loglik_t<double>(rec, f1, f2, phi, ref1, ref2, cfg, 0.0);
    const double quad = pair_loglik_quadrature(rec, f1, f2, phi, ref1, ref2, cfg);
    CHECK(std::abs(closed - quad) < 1e-6);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("exp(pair_loglik) integrates to 1 over the measurement pair") {
  // 2D trapezoid quadrature over (y1, y2) for fixed parameters.
  for (const CalibKind kind : {CalibKind::LogScale, CalibKind::Linear}) {
    const CalibrationFunction phi{kind};
    LikelihoodConfig cfg{0.4, 2.0};
    std::vector<double> f1(phi.param_count(), 0.3), f2(phi.param_count(), -0.2);
    if (kind == CalibKind::Linear) {
      f1 = {1.3, 0.2};
      f2 = {0.8, -0.1};
    }
    // phi is monotone in y, so integrate y over a wide range.
    const double lo = -30.0, hi = 30.0;
    const int n = 1200;
    const double step = (hi - lo) / n;
    double mass = 0.0;
    ColocationRecord rec;
    rec.s1 = 1;
    rec.s2 = 2;
    for (int i = 0; i <= n; ++i) {
      const double wy1 = (i == 0 || i == n) ? 0.5 : 1.0;
      rec.y1 = lo + i * step;
      for (int j = 0; j <= n; ++j) {
        const double wy2 = (j == 0 || j == n) ? 0.5 : 1.0;
        rec.y2 = lo + j * step;
        mass += wy1 * wy2 *
                std::exp(pair_loglik_t<double>(rec, f1, f2, phi, false, false, cfg, 0.0));
      }
    }
    mass *= step * step;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("model loglik_grad matches finite differences") {
  const auto sensors = testing::toy_sensors();
  const auto records = testing::toy_records();
  const CalibrationFunction phi{CalibKind::Linear};
  PairObservationModel model(records, phi, sensors, LikelihoodConfig{2.0, 30.0});

  for (std::size_t i = 0; i < model.size(); ++i) {
    const std::size_t n = model.latents(i).size();
    std::vector<double> f(n), grad(n);
    Rng rng(i + 1);
    for (auto& v : f) v = 0.8 + 0.2 * rng.normal();
    const double base = model.loglik_grad(i, f, grad);
    CHECK(base == doctest::Approx(model.loglik(i, f)));
    const double h = 1e-6;
    for (std::size_t k = 0; k < n; ++k) {
      auto fp = f, fm = f;
      fp[k] += h;
      fm[k] -= h;
      const double fd = (model.loglik(i, fp) - model.loglik(i, fm)) / (2.0 * h);
      CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("latents are gathered only for non-reference sides") {
  const auto sensors = testing::toy_sensors();
  std::vector<ColocationRecord> recs = {
      {0.0, 0.0, 0, 1, 10.0, 11.0},  // ref + sensor: C latents
      {1.0, 1.0, 1, 2, 12.0, 9.0},   // two sensors: 2C latents
  };
  const CalibrationFunction phi{CalibKind::Linear};
  PairObservationModel model(recs, phi, sensors, LikelihoodConfig{1.0, 10.0});
  CHECK(model.latents(0).size() == 2);
  CHECK(model.latents(1).size() == 4);
  CHECK(model.touches_reference(0));
  CHECK_FALSE(model.touches_reference(1));
  CHECK(model.latents(0)[0].sensor == 1);
}

TEST_CASE("invalid records and configs are rejected") {
  const auto sensors = testing::toy_sensors();
  const CalibrationFunction phi{CalibKind::LogScale};
  CHECK_THROWS_AS(PairObservationModel({{0, 0, 1, 1, 1.0, 1.0}}, phi, sensors,
                                       LikelihoodConfig{1.0, 1.0}),
                  DataError);
  const LikelihoodConfig bad_sigma{-1.0, 1.0};
  const LikelihoodConfig bad_gamma{1.0, 0.0};
  CHECK_THROWS_AS(bad_sigma.validate(), ConfigError);
  CHECK_THROWS_AS(bad_gamma.validate(), ConfigError);
  CHECK_THROWS_AS(make_importance_weights(std::vector<bool>{true}, 0.5), ConfigError);
}
