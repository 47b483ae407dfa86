#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "calnet/gp.hpp"
#include "calnet/kernels.hpp"
#include "calnet/observation_model.hpp"
#include "calnet/rng.hpp"

namespace calnet {

struct TrainOptions {
  int steps = 2000;
  int batch_size = 256;
  int samples = 5;  // MC samples per record (P)
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  double oversample_factor = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // Global-norm gradient clipping; rescales the gradient when its norm
  // exceeds this bound so a rare Monte Carlo spike cannot poison the Adam
  // moments. Set to 0 or below to disable.
  double clip_norm = 1e5;
};

struct TrainResult {
  VariationalState state;
  std::vector<double> elbo_trace;
};

/// Reverse-mode adjoint of a Cholesky factorization: given L = chol(A) and
/// Lbar = dloss/dL, returns the symmetric Abar with dloss = sum Abar .* dA.
Eigen::MatrixXd cholesky_backward(const Eigen::MatrixXd& L, const Eigen::MatrixXd& Lbar);

/// ELBO evaluation engine bound to a fixed (Z, kernel assignment, data).
/// Caches, per record, the K_xz K_zz^-1 projection rows and the prior
/// covariance residual, so each evaluation touches only small blocks.
///
/// Unconstrained parameter packing: [m (M); log diag R (M); strict lower
/// triangle of R, row-major].
class ElboEngine {
 public:
  ElboEngine(const ObservationModel& model, std::vector<IndexPoint> Z,
             const KernelAssignment& assign);

  Eigen::Index num_inducing() const { return M_; }
  Eigen::Index param_count() const { return M_ + M_ * (M_ + 1) / 2; }

  Eigen::VectorXd pack(const VariationalState& state) const;
  VariationalState unpack(const Eigen::VectorXd& theta) const;

  /// Initial state: m = 0, R = chol(K_zz) (q starts at the prior, KL = 0).
  VariationalState initial_state() const;

  /// Weighted minibatch ELBO:
  ///   (1/P) sum_p sum_b w_b * loglik_b  -  KL(q(u) || p(u)).
  /// `batch` holds record indices; `weights` the matching per-record
  /// weights (scaled for subsampling/importance correction by the caller).
  double value(const VariationalState& state, std::span<const std::size_t> batch,
               std::span<const double> weights, int P, const EpsSource& eps) const;

  /// Same, also computing the exact gradient (for the given eps draws) with
  /// respect to the packed unconstrained parameters.
  double value_grad(const VariationalState& state, std::span<const std::size_t> batch,
                    std::span<const double> weights, int P, const EpsSource& eps,
                    Eigen::VectorXd& grad) const;

  double kl(const VariationalState& state) const;

  const std::vector<IndexPoint>& inducing_points() const { return Z_; }
  const Eigen::MatrixXd& K_zz() const { return Kzz_; }

 private:
  struct RecordCache {
    // Per latent point: owning GP block and projection row a = K_zz^-1 k_zx
    // restricted to that block.
    std::vector<int> block;
    std::vector<Eigen::VectorXd> a;
    Eigen::MatrixXd B;  // prior residual K_xx - K_xz K_zz^-1 K_zx
  };
  struct Block {
    int sensor, param;
    Eigen::Index start, len;
    Eigen::MatrixXd L;  // chol(K_block + jitter)
  };

  double evaluate(const VariationalState& state, std::span<const std::size_t> batch,
                  std::span<const double> weights, int P, const EpsSource& eps,
                  Eigen::VectorXd* grad) const;

  const ObservationModel& model_;
  std::vector<IndexPoint> Z_;
  Eigen::Index M_ = 0;
  std::vector<Block> blocks_;
  Eigen::MatrixXd Kzz_;
  Eigen::MatrixXd Lzz_;  // block-diagonal chol(K_zz)
  double kzz_logdet_ = 0.0;
  std::vector<RecordCache> cache_;
};

/// Algorithm: stochastic gradient ascent on the ELBO with Adam, minibatches
/// drawn from the importance-sampling inclusion distribution.
TrainResult train_vi(const ObservationModel& model, std::vector<IndexPoint> Z,
                     const KernelAssignment& assign, const TrainOptions& opts);

/// Full-data ELBO with explicit per-record weights (1.0 = plain sum).
double elbo(const VariationalState& state, const ObservationModel& model,
            const KernelAssignment& assign, int P, std::span<const double> weights,
            const EpsSource& eps);

}  // namespace calnet
