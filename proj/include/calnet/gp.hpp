#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "calnet/kernels.hpp"
#include "calnet/types.hpp"

namespace calnet {

/// Relative jitter added to K_zz diagonals before factorization, and the
/// ceiling it may be escalated to on factorization failure.
inline constexpr double kBaseJitter = 1e-6;
inline constexpr double kMaxJitter = 1e-4;

/// Variational distribution q(u) = N(m, R R^T) over inducing values at Z.
/// R is lower triangular with strictly positive diagonal; the optimizer
/// stores the diagonal as log values so any unconstrained setting is valid.
struct VariationalState {
  std::vector<IndexPoint> Z;
  Eigen::VectorXd m;
  Eigen::MatrixXd R;

  Eigen::Index size() const { return m.size(); }
  void validate() const;
};

struct GaussianBatch {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Evenly spaced inducing times over [t_min, t_max] for every (sensor,
/// param) GP. Ordered sensor-major, then param, then ascending time.
std::vector<IndexPoint> make_inducing_grid(const std::vector<int>& sensors, int param_count,
                                           double t_min, double t_max, int per_gp_count);

/// Cholesky factor of A + jitter * scale * I, escalating the jitter from
/// kBaseJitter to kMaxJitter; throws NumericalError if all attempts fail.
/// `scale` defaults to the mean diagonal of A.
Eigen::MatrixXd robust_cholesky(const Eigen::MatrixXd& A, double scale = -1.0,
                                double initial_jitter = 0.0);

/// Exact q(f*) under the sparse variational posterior:
///   N(K_xz K_zz^-1 m,  K_xx - K_xz K_zz^-1 K_zx + K_xz K_zz^-1 RR^T K_zz^-1 K_zx)
/// computed with Cholesky solves, never an explicit inverse.
GaussianBatch predict_q(std::span<const IndexPoint> X, const VariationalState& state,
                        const KernelAssignment& assign);

/// KL(N(m, RR^T) || N(0, K_zz)) in closed form.
double kl_gaussian(const VariationalState& state, const Eigen::MatrixXd& K_zz);

/// Reparameterized draw: mean + L eps with L = chol(cov).
Eigen::VectorXd sample_q(const GaussianBatch& dist, const Eigen::VectorXd& eps);

/// Checkpoint round-trips doubles bit-exactly (JSON, shortest-round-trip
/// number formatting).
void save_checkpoint(const VariationalState& state, const std::string& path);
VariationalState load_checkpoint(const std::string& path);

}  // namespace calnet
