#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace calnet {

/// Normalized mean squared error: sum (pred - truth)^2 / sum (truth - mean(truth))^2.
double nmse(std::span<const double> pred, std::span<const double> truth);

double mae(std::span<const double> pred, std::span<const double> truth);

/// Sum over points of -log N(truth; mean, std^2), natural log.
double nlpd_gaussian(std::span<const double> mean, std::span<const double> std,
                     std::span<const double> truth);

/// Fraction of argmax-correct predictions; ties resolve to the lowest class.
double accuracy(const std::vector<Eigen::VectorXd>& posteriors, std::span<const int> truths);

/// Sum over items of -log p(true class); +infinity if any true class has
/// zero probability.
double nlpd_categorical(const std::vector<Eigen::VectorXd>& posteriors,
                        std::span<const int> truths);

}  // namespace calnet
