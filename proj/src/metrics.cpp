#include "calnet/metrics.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "calnet/types.hpp"

namespace calnet {

double nmse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw DataError("pred/truth length mismatch");
  if (truth.size() < 2) throw DataError("nmse needs at least 2 points");
  double mean = 0.0;
  for (double t : truth) mean += t;
  mean /= static_cast<double>(truth.size());
  double err = 0.0, dev = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    err += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    dev += (truth[i] - mean) * (truth[i] - mean);
  }
  if (!(dev > 0.0)) throw DataError("nmse undefined: truth has zero variance");
  return err / dev;
}

double mae(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw DataError("pred/truth length mismatch");
  if (pred.empty()) throw DataError("mae needs at least 1 point");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - truth[i]);
  return sum / static_cast<double>(pred.size());
}

double nlpd_gaussian(std::span<const double> mean, std::span<const double> std,
                     std::span<const double> truth) {
  if (mean.size() != truth.size() || std.size() != truth.size())
    throw DataError("pred/truth length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!(std[i] > 0.0)) throw DataError("nlpd requires positive predictive std");
    const double z = (truth[i] - mean[i]) / std[i];
    sum += 0.5 * std::log(2.0 * std::numbers::pi) + std::log(std[i]) + 0.5 * z * z;
  }
  return sum;
}

namespace {

int argmax_lowest(const Eigen::VectorXd& p) {
  int best = 0;
  for (int i = 1; i < p.size(); ++i)
    if (p(i) > p(best)) best = i;
  return best;
}

}  // namespace

double accuracy(const std::vector<Eigen::VectorXd>& posteriors, std::span<const int> truths) {
  if (posteriors.size() != truths.size()) throw DataError("posteriors/truths length mismatch");
  if (posteriors.empty()) throw DataError("accuracy needs at least 1 item");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < posteriors.size(); ++i)
    if (argmax_lowest(posteriors[i]) == truths[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(posteriors.size());
}

double nlpd_categorical(const std::vector<Eigen::VectorXd>& posteriors,
                        std::span<const int> truths) {
  if (posteriors.size() != truths.size()) throw DataError("posteriors/truths length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < posteriors.size(); ++i) {
    const int t = truths[i];
    if (t < 0 || t >= posteriors[i].size()) throw DataError("truth class out of range");
    const double p = posteriors[i](t);
    if (!(p > 0.0)) return std::numeric_limits<double>::infinity();
    sum -= std::log(p);
  }
  return sum;
}

}  // namespace calnet
