#include <cmath>
#include <limits>
#include <numbers>

#include "calnet/metrics.hpp"
#include "calnet/types.hpp"
#include "doctest.h"

using namespace calnet;

TEST_CASE("nmse definition, scale invariance, and errors") {
  const std::vector<double> truth = {0.0, 1.0, 2.0};
  CHECK(nmse(truth, truth) == doctest::Approx(0.0));

  // constant prediction at the truth mean has NMSE exactly 1
  const std::vector<double> at_mean = {1.0, 1.0, 1.0};
  CHECK(nmse(at_mean, truth) == doctest::Approx(1.0));

  // hand computation: err^2 sum = 1, centered dev sum = 2
  const std::vector<double> pred = {0.0, 1.0, 3.0};
  CHECK(nmse(pred, truth) == doctest::Approx(0.5));

  // joint rescaling leaves the value unchanged
  std::vector<double> pred_c = pred, truth_c = truth;
  for (auto& v : pred_c) v *= -7.5;
  for (auto& v : truth_c) v *= -7.5;
  CHECK(nmse(pred_c, truth_c) == doctest::Approx(0.5));

  const std::vector<double> flat = {3.0, 3.0};
  CHECK_THROWS_AS(nmse(flat, flat), DataError);
  const std::vector<double> one = {1.0};
  CHECK_THROWS_AS(nmse(one, one), DataError);
  CHECK_THROWS_AS(nmse(one, truth), DataError);
}

TEST_CASE("mae") {
  const std::vector<double> truth = {0.0, 0.0};
  CHECK(mae(truth, truth) == doctest::Approx(0.0));
  const std::vector<double> shifted = {2.5, 2.5};
  CHECK(mae(shifted, truth) == doctest::Approx(2.5));
  const std::vector<double> pred = {1.0, 3.0};
  CHECK(mae(pred, truth) == doctest::Approx(2.0));
}

TEST_CASE("nlpd_gaussian values and quadrature consistency") {
  const std::vector<double> mean = {1.0, -2.0, 0.5};
  const std::vector<double> ones(3, 1.0);
  CHECK(nlpd_gaussian(mean, ones, mean) ==
        doctest::Approx(3.0 * 0.5 * std::log(2.0 * std::numbers::pi)));

  const std::vector<double> zero = {0.0};
  const std::vector<double> one = {1.0};
  CHECK(nlpd_gaussian(zero, one, zero) == doctest::Approx(0.91894).epsilon(1e-4));

  // independent check: -log density from trapezoid-normalized pdf
  const double m = 0.7, s = 1.9, t = -0.4;
  const double expect = 0.5 * std::log(2.0 * std::numbers::pi * s * s) +
                        0.5 * (t - m) * (t - m) / (s * s);
  CHECK(nlpd_gaussian({&m, 1}, {&s, 1}, {&t, 1}) == doctest::Approx(expect));

  const std::vector<double> bad_std = {0.0};
  CHECK_THROWS_AS(nlpd_gaussian(zero, bad_std, zero), DataError);
}

TEST_CASE("accuracy and categorical NLPD") {
  Eigen::VectorXd onehot0(3), onehot1(3), uniform(3);
  onehot0 << 1.0, 0.0, 0.0;
  onehot1 << 0.0, 1.0, 0.0;
  uniform.setConstant(1.0 / 3.0);

  const std::vector<Eigen::VectorXd> correct = {onehot0, onehot1};
  const std::vector<int> truths = {0, 1};
  CHECK(accuracy(correct, truths) == doctest::Approx(1.0));
  CHECK(nlpd_categorical(correct, truths) == doctest::Approx(0.0));

  // argmax tie resolves to the lowest class index
  Eigen::VectorXd tied(3);
  tied << 0.4, 0.4, 0.2;
  CHECK(accuracy({tied}, std::vector<int>{0}) == doctest::Approx(1.0));
  CHECK(accuracy({tied}, std::vector<int>{1}) == doctest::Approx(0.0));

  // chance posterior over 127 items: exactly n * log 3
  const std::vector<Eigen::VectorXd> chance(127, uniform);
  const std::vector<int> any(127, 2);
  CHECK(nlpd_categorical(chance, any) == doctest::Approx(127.0 * std::log(3.0)));
  CHECK(nlpd_categorical(chance, any) == doctest::Approx(139.5).epsilon(1e-3));

  // zero mass on the true class reports +infinity
  CHECK(nlpd_categorical({onehot0}, std::vector<int>{1}) ==
        std::numeric_limits<double>::infinity());

  CHECK_THROWS_AS(accuracy(correct, std::vector<int>{0}), DataError);
}
