#include "calnet/categorical.hpp"
#include <bit>

#include <algorithm>
#include <cmath>
#include <limits>

#include "calnet/autodiff.hpp"
#include "calnet/gp.hpp"
#include "calnet/kernels.hpp"
#include "calnet/rng.hpp"

namespace calnet {

void SpeciesPrior::validate() const {
  if (p.size() < 2) throw ConfigError("species prior needs at least 2 classes");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p(i) >= 0.0)) throw ConfigError("species prior entries must be >= 0");
    sum += p(i);
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("species prior must sum to 1");
}

SpeciesPrior SpeciesPrior::from_counts(std::span<const int> truths, int A) {
  if (truths.empty()) throw DataError("empty truth set for species prior");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(A);
  for (int t : truths) {
    if (t < 0 || t >= A) throw DataError("truth class out of range");
    counts(t) += 1.0;
  }
  SpeciesPrior prior{counts / counts.sum()};
  return prior;
}

Eigen::MatrixXd confusion_from_latents(const Eigen::MatrixXd& C) {
  const Eigen::Index A = C.rows();
  if (C.cols() != A) throw ConfigError("confusion logits must be square");
  Eigen::MatrixXd P(A, A);
  for (Eigen::Index psi = 0; psi < A; ++psi) {
    const double cmax = C.col(psi).maxCoeff();
    Eigen::VectorXd e = (C.col(psi).array() - cmax).exp();
    P.col(psi) = e / e.sum();
  }
  return P;
}

namespace {

/// p(y | psi, f) for each psi: the y-th row of the column-softmax of the
/// logits f (row-major, row = reported class, column = true class).
template <class T>
std::vector<T> conditional_row(std::span<const T> f, int y, int A) {
  using ad::exp;
  std::vector<T> q;
  q.reserve(A);
  for (int psi = 0; psi < A; ++psi) {
    double cmax = ad::scalar_value(f[static_cast<std::size_t>(psi)]);
    for (int z = 1; z < A; ++z)
      cmax = std::max(cmax, ad::scalar_value(f[static_cast<std::size_t>(z * A + psi)]));
    T denom = exp(f[static_cast<std::size_t>(psi)] - cmax);
    for (int z = 1; z < A; ++z)
      denom = denom + exp(f[static_cast<std::size_t>(z * A + psi)] - cmax);
    q.push_back(exp(f[static_cast<std::size_t>(y * A + psi)] - cmax) / denom);
  }
  return q;
}

template <class T>
T cat_pair_loglik_t(const LabelRecord& rec, std::span<const T> f1, std::span<const T> f2,
                    const SpeciesPrior& prior, bool ref1, bool ref2, T zero) {
  using ad::log;
  const int A = prior.num_classes();
  if (rec.y1 < 0 || rec.y1 >= A || rec.y2 < 0 || rec.y2 >= A)
    throw DataError("label class out of range");
  if (ref1 && ref2) {
    if (rec.y1 != rec.y2) return zero + -std::numeric_limits<double>::infinity();
    return zero + std::log(prior.p(rec.y1));
  }
  if (ref1) {
    // marginal collapses to psi == y1
    auto q2 = conditional_row<T>(f2, rec.y2, A);
    return log(q2[static_cast<std::size_t>(rec.y1)] * prior.p(rec.y1));
  }
  if (ref2) {
    auto q1 = conditional_row<T>(f1, rec.y1, A);
    return log(q1[static_cast<std::size_t>(rec.y2)] * prior.p(rec.y2));
  }
  auto q1 = conditional_row<T>(f1, rec.y1, A);
  auto q2 = conditional_row<T>(f2, rec.y2, A);
  T marg = q1[0] * q2[0] * prior.p(0);
  for (int psi = 1; psi < A; ++psi)
    marg = marg + q1[static_cast<std::size_t>(psi)] * q2[static_cast<std::size_t>(psi)] *
                      prior.p(psi);
  return log(marg);
}

}  // namespace

double cat_pair_loglik(const LabelRecord& rec, std::span<const double> f1,
                       std::span<const double> f2, const SpeciesPrior& prior, bool ref1,
                       bool ref2) {
  prior.validate();
  return cat_pair_loglik_t<double>(rec, f1, f2, prior, ref1, ref2, 0.0);
}

CategoricalObservationModel::CategoricalObservationModel(std::vector<LabelRecord> records,
                                                         SensorTable labelers, SpeciesPrior prior)
    : records_(std::move(records)), labelers_(std::move(labelers)), prior_(std::move(prior)) {
  prior_.validate();
  const int A = prior_.num_classes();
  latents_.reserve(records_.size());
  for (const auto& rec : records_) {
    if (rec.s1 == rec.s2) throw DataError("label record pairs a labeler with itself");
    if (rec.y1 < 0 || rec.y1 >= A || rec.y2 < 0 || rec.y2 >= A)
      throw DataError("label class out of range");
    const bool r1 = labelers_.is_reference(rec.s1);
    const bool r2 = labelers_.is_reference(rec.s2);
    ref1_.push_back(r1);
    ref2_.push_back(r2);
    touches_ref_.push_back(r1 || r2);

    std::vector<IndexPoint> pts;
    if (!r1)
      for (int c = 0; c < A * A; ++c) pts.push_back({rec.t1, rec.s1, c});
    if (!r2)
      for (int c = 0; c < A * A; ++c) pts.push_back({rec.t2, rec.s2, c});
    latents_.push_back(std::move(pts));

    std::uint64_t key = hash_mix(static_cast<std::uint64_t>(rec.item),
                                 static_cast<std::uint64_t>(rec.s1));
    key = hash_mix(key, static_cast<std::uint64_t>(rec.s2));
    key = hash_mix(key, static_cast<std::uint64_t>(rec.y1));
    key = hash_mix(key, static_cast<std::uint64_t>(rec.y2));
    key = hash_mix(key, std::bit_cast<std::uint64_t>(rec.t1));
    key = hash_mix(key, std::bit_cast<std::uint64_t>(rec.t2));
    eps_keys_.push_back(key);
  }
}

std::span<const IndexPoint> CategoricalObservationModel::latents(std::size_t i) const {
  return latents_[i];
}

template <class T>
T CategoricalObservationModel::eval(std::size_t i, std::span<const T> f, T zero) const {
  const auto& rec = records_[i];
  const int n = prior_.num_classes() * prior_.num_classes();
  std::span<const T> f1, f2;
  std::size_t off = 0;
  if (!ref1_[i]) {
    f1 = f.subspan(0, static_cast<std::size_t>(n));
    off = static_cast<std::size_t>(n);
  }
  if (!ref2_[i]) f2 = f.subspan(off, static_cast<std::size_t>(n));
  return cat_pair_loglik_t<T>(rec, f1, f2, prior_, ref1_[i], ref2_[i], zero);
}

double CategoricalObservationModel::loglik(std::size_t i, std::span<const double> f) const {
  return eval<double>(i, f, 0.0);
}

double CategoricalObservationModel::loglik_grad(std::size_t i, std::span<const double> f,
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

Eigen::VectorXd predict_species(std::span<const ItemLabel> labels, const VariationalState& state,
                                const KernelAssignment& assign, const SpeciesPrior& prior, int P,
                                std::uint64_t seed) {
  prior.validate();
  if (labels.empty()) throw DataError("predict_species needs at least one label");
  if (P < 1) throw ConfigError("sample count must be >= 1");
  const int A = prior.num_classes();
  Eigen::VectorXd post = prior.p;

  for (const auto& label : labels) {
    if (label.y < 0 || label.y >= A) throw DataError("label class out of range");
    if (assign.sensors().is_reference(label.labeler)) {
      for (int psi = 0; psi < A; ++psi)
        if (psi != label.y) post(psi) = 0.0;
      continue;
    }
    std::vector<IndexPoint> pts;
    pts.reserve(static_cast<std::size_t>(A) * A);
    for (int c = 0; c < A * A; ++c) pts.push_back({label.t, label.labeler, c});
    const GaussianBatch dist = predict_q(pts, state, assign);
    const Eigen::MatrixXd L = robust_cholesky(dist.cov);

    // E_q[p(y | psi, f)], eps stream keyed by the label's content so
    // processing order cannot matter.
    std::uint64_t stream = hash_mix(seed, static_cast<std::uint64_t>(label.labeler));
    stream = hash_mix(stream, static_cast<std::uint64_t>(label.y));
    stream = hash_mix(stream, std::bit_cast<std::uint64_t>(label.t));
    Eigen::VectorXd expect = Eigen::VectorXd::Zero(A);
    Eigen::VectorXd epsv(A * A);
    for (int p = 0; p < P; ++p) {
      for (int d = 0; d < A * A; ++d)
        epsv(d) = keyed_normal(hash_mix(stream, hash_mix(static_cast<std::uint64_t>(p),
                                                         static_cast<std::uint64_t>(d))));
      const Eigen::VectorXd f = dist.mean + L * epsv;
      std::vector<double> fv(f.data(), f.data() + f.size());
      const auto q = conditional_row<double>(fv, label.y, A);
      for (int psi = 0; psi < A; ++psi) expect(psi) += q[static_cast<std::size_t>(psi)] / P;
    }
    post = post.cwiseProduct(expect);
  }

  const double total = post.sum();
  if (!(total > 0.0)) return prior.p;  // conflicting reference labels
  return post / total;
}

void VoteBaselines::fit(const std::vector<std::vector<ItemLabel>>& train_items,
                        std::span<const int> truths) {
  if (train_items.size() != truths.size())
    throw DataError("training items and truths length mismatch");
  class_count_.assign(static_cast<std::size_t>(A_), 0.0);
  labeler_correct_total_.clear();
  for (std::size_t i = 0; i < train_items.size(); ++i) {
    const int truth = truths[i];
    if (truth < 0 || truth >= A_) throw DataError("truth class out of range");
    class_count_[static_cast<std::size_t>(truth)] += 1.0;
    for (const auto& label : train_items[i]) {
      auto& [correct, total] = labeler_correct_total_[label.labeler];
      if (label.y == truth) correct += 1.0;
      total += 1.0;
    }
  }
}

double VoteBaselines::trust(int labeler) const {
  auto it = labeler_correct_total_.find(labeler);
  if (it == labeler_correct_total_.end() || it->second.second == 0.0) return 0.5;
  return it->second.first / it->second.second;
}

Eigen::VectorXd VoteBaselines::predict(std::span<const ItemLabel> labels, VoteMode mode,
                                       double smoothing) const {
  if (smoothing < 0.0) throw ConfigError("smoothing must be >= 0");
  Eigen::VectorXd v = Eigen::VectorXd::Constant(A_, smoothing);

  if (mode == VoteMode::MostCommon) {
    if (class_count_.empty()) throw DataError("vote baselines not fitted");
    const auto it = std::max_element(class_count_.begin(), class_count_.end());
    v(static_cast<Eigen::Index>(it - class_count_.begin())) += 1.0;
    return v / v.sum();
  }

  double total_class = 0.0;
  for (double c : class_count_) total_class += c;
  for (const auto& label : labels) {
    if (label.y < 0 || label.y >= A_) throw DataError("label class out of range");
    double w = 1.0;
    switch (mode) {
      case VoteMode::MostGuessed:
        break;
      case VoteMode::TrustWeighted:
        w = trust(label.labeler);
        break;
      case VoteMode::PriorWeighted:
        if (total_class <= 0.0) throw DataError("vote baselines not fitted");
        w = class_count_[static_cast<std::size_t>(label.y)] / total_class;
        break;
      case VoteMode::MostCommon:
        break;
    }
    v(label.y) += w;
  }
  const double total = v.sum();
  if (!(total > 0.0)) return Eigen::VectorXd::Constant(A_, 1.0 / A_);
  return v / total;
}

}  // namespace calnet
