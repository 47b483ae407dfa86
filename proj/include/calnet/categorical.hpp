#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "calnet/observation_model.hpp"
#include "calnet/types.hpp"

namespace calnet {

/// One pair of labels for the same item by two labelers.
struct LabelRecord {
  long item = 0;
  int s1 = 0, s2 = 0;      // labeler ids
  int y1 = 0, y2 = 0;      // class indices in 0..A-1
  double t1 = 0.0, t2 = 0.0;  // label-order positions
};

struct SpeciesPrior {
  Eigen::VectorXd p;

  int num_classes() const { return static_cast<int>(p.size()); }
  void validate() const;

  static SpeciesPrior uniform(int A) { return {Eigen::VectorXd::Constant(A, 1.0 / A)}; }
  /// Estimated from training ground-truth class frequencies.
  static SpeciesPrior from_counts(std::span<const int> truths, int A);
};

/// Column-normalized softmax of the latent matrix: P(y, psi) is the
/// probability of reporting y when the truth is psi. Stabilized by
/// per-column max subtraction.
Eigen::MatrixXd confusion_from_latents(const Eigen::MatrixXd& C);

/// log p(y1, y2 | f1, f2) with the latent species marginalized out.
/// f vectors hold A^2 latents, reshaped row-major to the confusion logits
/// (row = reported class, column = true class). A reference labeler's
/// conditional is the indicator 1[y == psi]. Reference-reference
/// disagreement has zero probability and returns -infinity.
double cat_pair_loglik(const LabelRecord& rec, std::span<const double> f1,
                       std::span<const double> f2, const SpeciesPrior& prior, bool ref1,
                       bool ref2);

class CategoricalObservationModel : public ObservationModel {
 public:
  CategoricalObservationModel(std::vector<LabelRecord> records, SensorTable labelers,
                              SpeciesPrior prior);

  std::size_t size() const override { return records_.size(); }
  std::span<const IndexPoint> latents(std::size_t i) const override;
  double loglik(std::size_t i, std::span<const double> f) const override;
  double loglik_grad(std::size_t i, std::span<const double> f,
                     std::span<double> grad) const override;
  bool touches_reference(std::size_t i) const override { return touches_ref_[i]; }
  std::uint64_t eps_key(std::size_t i) const override { return eps_keys_[i]; }

  const std::vector<LabelRecord>& records() const { return records_; }
  const SensorTable& labelers() const { return labelers_; }
  const SpeciesPrior& prior() const { return prior_; }
  int num_classes() const { return prior_.num_classes(); }

 private:
  template <class T>
  T eval(std::size_t i, std::span<const T> f, T zero) const;

  std::vector<LabelRecord> records_;
  SensorTable labelers_;
  SpeciesPrior prior_;
  std::vector<std::vector<IndexPoint>> latents_;
  std::vector<bool> ref1_, ref2_, touches_ref_;
  std::vector<std::uint64_t> eps_keys_;
};

struct ItemLabel {
  int labeler = 0;
  int y = 0;
  double t = 0.0;
};

class VariationalState;
class KernelAssignment;

/// Posterior over the item's true class given its labels:
///   p(psi | labels) ∝ p(psi) * prod_a E_q[ p(y_a | psi, f_a(t_a)) ]
/// with each expectation estimated by P Monte Carlo draws keyed by the
/// labeler id (so labeler order cannot change the result).
Eigen::VectorXd predict_species(std::span<const ItemLabel> labels, const VariationalState& state,
                                const KernelAssignment& assign, const SpeciesPrior& prior, int P,
                                std::uint64_t seed = 0);

enum class VoteMode { MostGuessed, TrustWeighted, PriorWeighted, MostCommon };

/// Voting baselines. Trust weights (per-labeler accuracy) and the class
/// frequencies are fitted on labeled training items.
class VoteBaselines {
 public:
  explicit VoteBaselines(int num_classes) : A_(num_classes) {}

  void fit(const std::vector<std::vector<ItemLabel>>& train_items, std::span<const int> truths);

  Eigen::VectorXd predict(std::span<const ItemLabel> labels, VoteMode mode,
                          double smoothing) const;

  double trust(int labeler) const;

 private:
  int A_;
  std::vector<double> class_count_;
  std::unordered_map<int, std::pair<double, double>> labeler_correct_total_;
};

}  // namespace calnet
