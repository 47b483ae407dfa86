#include "calnet/gp.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace calnet {

void VariationalState::validate() const {
  const Eigen::Index M = m.size();
  if (static_cast<Eigen::Index>(Z.size()) != M || R.rows() != M || R.cols() != M)
    throw ConfigError("variational state dimensions disagree");
  for (Eigen::Index i = 0; i < M; ++i) {
    if (!(R(i, i) > 0.0)) throw ConfigError("R diagonal must be positive");
    for (Eigen::Index j = i + 1; j < M; ++j)
      if (R(i, j) != 0.0) throw ConfigError("R must be lower triangular");
  }
}

std::vector<IndexPoint> make_inducing_grid(const std::vector<int>& sensors, int param_count,
                                           double t_min, double t_max, int per_gp_count) {
  if (per_gp_count < 2) throw ConfigError("per-GP inducing count must be >= 2");
  if (!(t_max > t_min)) throw ConfigError("degenerate inducing time span");
  std::vector<IndexPoint> grid;
  grid.reserve(sensors.size() * static_cast<std::size_t>(param_count) * per_gp_count);
  const double step = (t_max - t_min) / (per_gp_count - 1);
  for (int sensor : sensors)
    for (int c = 0; c < param_count; ++c)
      for (int k = 0; k < per_gp_count; ++k)
        grid.push_back({t_min + step * k, sensor, c});
  return grid;
}

Eigen::MatrixXd robust_cholesky(const Eigen::MatrixXd& A, double scale, double initial_jitter) {
  if (scale < 0.0) {
    scale = A.rows() > 0 ? A.diagonal().mean() : 1.0;
    if (!(scale > 0.0)) scale = 1.0;
  }
  double jitter = initial_jitter;
  for (;;) {
    Eigen::MatrixXd B = A;
    if (jitter > 0.0) B.diagonal().array() += jitter * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(B);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    if (jitter >= kMaxJitter) throw NumericalError("Cholesky factorization failed at max jitter");
    jitter = jitter == 0.0 ? kBaseJitter : jitter * 10.0;
  }
}

GaussianBatch predict_q(std::span<const IndexPoint> X, const VariationalState& state,
                        const KernelAssignment& assign) {
  const Eigen::MatrixXd Kzz = build_cov(assign, state.Z, state.Z);
  const Eigen::MatrixXd L = robust_cholesky(Kzz, -1.0, kBaseJitter);
  const Eigen::MatrixXd Kxz = build_cov(assign, X, state.Z);
  const Eigen::MatrixXd Kxx = build_cov(assign, X, X);

  // A = K_xz K_zz^-1 via two triangular solves.
  Eigen::MatrixXd At = L.triangularView<Eigen::Lower>().solve(Kxz.transpose());
  At = L.triangularView<Eigen::Lower>().transpose().solve(At);  // K_zz^-1 K_zx

  GaussianBatch out;
  out.mean = At.transpose() * state.m;
  const Eigen::MatrixXd AR = At.transpose() * state.R;
  out.cov = Kxx - Kxz * At + AR * AR.transpose();
  return out;
}

double kl_gaussian(const VariationalState& state, const Eigen::MatrixXd& K_zz) {
  const Eigen::Index M = state.size();
  const Eigen::MatrixXd L = robust_cholesky(K_zz, -1.0, kBaseJitter);
  const Eigen::MatrixXd Linv_R = L.triangularView<Eigen::Lower>().solve(state.R);
  const Eigen::VectorXd Linv_m = L.triangularView<Eigen::Lower>().solve(state.m);

  const double trace_term = Linv_R.squaredNorm();
  const double maha = Linv_m.squaredNorm();
  double logdet_K = 0.0, logdet_S = 0.0;
  for (Eigen::Index i = 0; i < M; ++i) {
    logdet_K += 2.0 * std::log(L(i, i));
    logdet_S += 2.0 * std::log(state.R(i, i));
  }
  return 0.5 * (trace_term + maha - static_cast<double>(M) + logdet_K - logdet_S);
}

Eigen::VectorXd sample_q(const GaussianBatch& dist, const Eigen::VectorXd& eps) {
  if (eps.size() != dist.mean.size()) throw ConfigError("eps length mismatch");
  const Eigen::MatrixXd L = robust_cholesky(dist.cov);
  return dist.mean + L * eps;
}

void save_checkpoint(const VariationalState& state, const std::string& path) {
  nlohmann::json j;
  j["M"] = state.size();
  auto& z = j["Z"] = nlohmann::json::array();
  for (const auto& p : state.Z) z.push_back({p.time, p.sensor, p.param});
  j["m"] = std::vector<double>(state.m.data(), state.m.data() + state.m.size());
  std::vector<double> packed;
  packed.reserve(state.size() * (state.size() + 1) / 2);
  for (Eigen::Index i = 0; i < state.size(); ++i)
    for (Eigen::Index k = 0; k <= i; ++k) packed.push_back(state.R(i, k));
  j["R_lower"] = packed;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out << j.dump();
}

VariationalState load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read checkpoint: " + path);
  nlohmann::json j;
  in >> j;
  VariationalState state;
  const Eigen::Index M = j.at("M").get<Eigen::Index>();
  for (const auto& row : j.at("Z"))
    state.Z.push_back({row.at(0).get<double>(), row.at(1).get<int>(), row.at(2).get<int>()});
  const auto m = j.at("m").get<std::vector<double>>();
  const auto packed = j.at("R_lower").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(m.size()) != M ||
      static_cast<Eigen::Index>(packed.size()) != M * (M + 1) / 2 ||
      static_cast<Eigen::Index>(state.Z.size()) != M)
    throw DataError("corrupt checkpoint: " + path);
  state.m = Eigen::Map<const Eigen::VectorXd>(m.data(), M);
  state.R = Eigen::MatrixXd::Zero(M, M);
  std::size_t idx = 0;
  for (Eigen::Index i = 0; i < M; ++i)
    for (Eigen::Index k = 0; k <= i; ++k) state.R(i, k) = packed[idx++];
  return state;
}

}  // namespace calnet
