#include "calnet/trainer.hpp"

#include "calnet/pair_model.hpp"

#include <cstdio>
#include <cstdlib>
#include <algorithm>
#include <cmath>
#include <map>

namespace calnet {

Eigen::MatrixXd cholesky_backward(const Eigen::MatrixXd& L, const Eigen::MatrixXd& Lbar) {
  const Eigen::Index n = L.rows();
  Eigen::MatrixXd P = L.transpose() * Lbar;
  Eigen::MatrixXd Phi = P.triangularView<Eigen::Lower>();
  Phi.diagonal() *= 0.5;
  // S = L^-T Phi L^-1
  Eigen::MatrixXd S =
      L.transpose().triangularView<Eigen::Upper>().solve(Phi);
  S = L.transpose()
          .triangularView<Eigen::Upper>()
          .solve(S.transpose())
          .transpose();
  Eigen::MatrixXd Abar = 0.5 * (S + S.transpose());
  (void)n;
  return Abar;
}

ElboEngine::ElboEngine(const ObservationModel& model, std::vector<IndexPoint> Z,
                       const KernelAssignment& assign)
    : model_(model), Z_(std::move(Z)) {
  M_ = static_cast<Eigen::Index>(Z_.size());
  if (M_ == 0) throw ConfigError("empty inducing grid");

  // Group the inducing points into contiguous per-GP blocks.
  std::map<std::pair<int, int>, int> block_of;
  Eigen::Index pos = 0;
  while (pos < M_) {
    const int sensor = Z_[pos].sensor;
    const int param = Z_[pos].param;
    if (block_of.count({sensor, param}))
      throw ConfigError("inducing points of one GP must be contiguous");
    Eigen::Index end = pos;
    while (end < M_ && Z_[end].sensor == sensor && Z_[end].param == param) ++end;
    block_of[{sensor, param}] = static_cast<int>(blocks_.size());
    blocks_.push_back({sensor, param, pos, end - pos, {}});
    pos = end;
  }

  Kzz_ = Eigen::MatrixXd::Zero(M_, M_);
  kzz_logdet_ = 0.0;
  for (auto& blk : blocks_) {
    std::span<const IndexPoint> pts(Z_.data() + blk.start, static_cast<std::size_t>(blk.len));
    const Eigen::MatrixXd Kb = build_cov(assign, pts, pts);
    Kzz_.block(blk.start, blk.start, blk.len, blk.len) = Kb;
    blk.L = robust_cholesky(Kb, -1.0, kBaseJitter);
    for (Eigen::Index i = 0; i < blk.len; ++i) kzz_logdet_ += 2.0 * std::log(blk.L(i, i));
  }
  Lzz_ = Eigen::MatrixXd::Zero(M_, M_);
  for (const auto& blk : blocks_)
    Lzz_.block(blk.start, blk.start, blk.len, blk.len) = blk.L;

  // Per-record projections onto the inducing blocks.
  cache_.resize(model_.size());
  for (std::size_t i = 0; i < model_.size(); ++i) {
    const auto pts = model_.latents(i);
    const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
    RecordCache& rc = cache_[i];
    if (n == 0) continue;
    std::vector<Eigen::VectorXd> k(n);
    rc.block.resize(n);
    rc.a.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      auto it = block_of.find({pts[r].sensor, pts[r].param});
      if (it == block_of.end())
        throw ConfigError("record latent has no inducing block (sensor " +
                          std::to_string(pts[r].sensor) + ", param " +
                          std::to_string(pts[r].param) + ")");
      const Block& blk = blocks_[it->second];
      rc.block[r] = it->second;
      k[r].resize(blk.len);
      const KernelSpec& spec = assign.resolve(pts[r].sensor, pts[r].param);
      for (Eigen::Index j = 0; j < blk.len; ++j)
        k[r](j) = eval_kernel(spec, Z_[blk.start + j], pts[r]);
      Eigen::VectorXd tmp = blk.L.triangularView<Eigen::Lower>().solve(k[r]);
      rc.a[r] = blk.L.transpose().triangularView<Eigen::Upper>().solve(tmp);
    }
    rc.B.resize(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const KernelSpec& spec_r = assign.resolve(pts[r].sensor, pts[r].param);
      for (Eigen::Index s = 0; s < n; ++s) {
        double kxx = same_gp(pts[r], pts[s]) ? eval_kernel(spec_r, pts[r], pts[s]) : 0.0;
        rc.B(r, s) = kxx - (rc.block[r] == rc.block[s] ? rc.a[r].dot(k[s]) : 0.0);
      }
    }
  }
}

Eigen::VectorXd ElboEngine::pack(const VariationalState& state) const {
  if (state.size() != M_) throw ConfigError("state size does not match engine");
  Eigen::VectorXd theta(param_count());
  theta.head(M_) = state.m;
  for (Eigen::Index i = 0; i < M_; ++i) theta(M_ + i) = std::log(state.R(i, i));
  Eigen::Index idx = 2 * M_;
  for (Eigen::Index i = 0; i < M_; ++i)
    for (Eigen::Index k = 0; k < i; ++k) theta(idx++) = state.R(i, k);
  return theta;
}

VariationalState ElboEngine::unpack(const Eigen::VectorXd& theta) const {
  if (theta.size() != param_count()) throw ConfigError("packed parameter length mismatch");
  VariationalState state;
  state.Z = Z_;
  state.m = theta.head(M_);
  state.R = Eigen::MatrixXd::Zero(M_, M_);
  for (Eigen::Index i = 0; i < M_; ++i) state.R(i, i) = std::exp(theta(M_ + i));
  Eigen::Index idx = 2 * M_;
  for (Eigen::Index i = 0; i < M_; ++i)
    for (Eigen::Index k = 0; k < i; ++k) state.R(i, k) = theta(idx++);
  return state;
}

VariationalState ElboEngine::initial_state() const {
  VariationalState state;
  state.Z = Z_;
  state.m = Eigen::VectorXd::Zero(M_);
  state.R = Lzz_;
  return state;
}

double ElboEngine::kl(const VariationalState& state) const {
  const Eigen::MatrixXd Linv_R = Lzz_.triangularView<Eigen::Lower>().solve(state.R);
  const Eigen::VectorXd Linv_m = Lzz_.triangularView<Eigen::Lower>().solve(state.m);
  double logdet_S = 0.0;
  for (Eigen::Index i = 0; i < M_; ++i) logdet_S += 2.0 * std::log(state.R(i, i));
  return 0.5 * (Linv_R.squaredNorm() + Linv_m.squaredNorm() - static_cast<double>(M_) +
                kzz_logdet_ - logdet_S);
}

double ElboEngine::value(const VariationalState& state, std::span<const std::size_t> batch,
                         std::span<const double> weights, int P, const EpsSource& eps) const {
  return evaluate(state, batch, weights, P, eps, nullptr);
}

double ElboEngine::value_grad(const VariationalState& state, std::span<const std::size_t> batch,
                              std::span<const double> weights, int P, const EpsSource& eps,
                              Eigen::VectorXd& grad) const {
  grad.resize(param_count());
  return evaluate(state, batch, weights, P, eps, &grad);
}

double ElboEngine::evaluate(const VariationalState& state, std::span<const std::size_t> batch,
                            std::span<const double> weights, int P, const EpsSource& eps,
                            Eigen::VectorXd* grad) const {
  if (batch.size() != weights.size()) throw ConfigError("batch/weights length mismatch");
  if (P < 1) throw ConfigError("sample count must be >= 1");
  state.validate();

  const Eigen::MatrixXd V = state.R * state.R.transpose();

  double like = 0.0;
  Eigen::VectorXd grad_m;
  Eigen::MatrixXd Vbar;
  if (grad) {
    grad_m = Eigen::VectorXd::Zero(M_);
    Vbar = Eigen::MatrixXd::Zero(M_, M_);
  }

  std::vector<double> fbuf, gbuf;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const std::size_t i = batch[b];
    const double w = weights[b];
    const RecordCache& rc = cache_[i];
    const Eigen::Index n = static_cast<Eigen::Index>(rc.block.size());
    if (n == 0) {
      like += w * model_.loglik(i, {});
      continue;
    }

    Eigen::VectorXd mu(n);
    Eigen::MatrixXd Sigma(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const Block& br = blocks_[rc.block[r]];
      mu(r) = rc.a[r].dot(state.m.segment(br.start, br.len));
      for (Eigen::Index s = 0; s <= r; ++s) {
        const Block& bs = blocks_[rc.block[s]];
        const double c =
            rc.B(r, s) + rc.a[r].dot(V.block(br.start, bs.start, br.len, bs.len) * rc.a[s]);
        Sigma(r, s) = c;
        Sigma(s, r) = c;
      }
    }
    const Eigen::MatrixXd Lrec = robust_cholesky(Sigma);

    Eigen::VectorXd gmu;
    Eigen::MatrixXd Lbar;
    if (grad) {
      gmu = Eigen::VectorXd::Zero(n);
      Lbar = Eigen::MatrixXd::Zero(n, n);
    }
    const std::uint64_t key = model_.eps_key(i);
    fbuf.resize(static_cast<std::size_t>(n));
    gbuf.resize(static_cast<std::size_t>(n));
    Eigen::VectorXd epsv(n), f(n);
    const double wp = w / P;
    for (int p = 0; p < P; ++p) {
      for (Eigen::Index d = 0; d < n; ++d)
        epsv(d) = eps.normal(key, static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(d));
      f = mu + Lrec.triangularView<Eigen::Lower>() * epsv;
      for (Eigen::Index d = 0; d < n; ++d) fbuf[static_cast<std::size_t>(d)] = f(d);
      if (grad) {
        const double ll = model_.loglik_grad(i, fbuf, gbuf);
        like += wp * ll;
        const Eigen::Map<const Eigen::VectorXd> g(gbuf.data(), n);
        gmu += wp * g;
        Lbar += wp * g * epsv.transpose();
      } else {
        like += wp * model_.loglik(i, fbuf);
      }
    }

    if (grad) {
      Eigen::MatrixXd LbarLower = Lbar.triangularView<Eigen::Lower>();
      const Eigen::MatrixXd Sbar = cholesky_backward(Lrec, LbarLower);
      for (Eigen::Index r = 0; r < n; ++r) {
        const Block& br = blocks_[rc.block[r]];
        grad_m.segment(br.start, br.len) += gmu(r) * rc.a[r];
        for (Eigen::Index s = 0; s < n; ++s) {
          const Block& bs = blocks_[rc.block[s]];
          Vbar.block(br.start, bs.start, br.len, bs.len) +=
              Sbar(r, s) * (rc.a[r] * rc.a[s].transpose());
        }
      }
    }
  }

  const double total = like - kl(state);

  if (grad) {
    // KL gradients (closed form).
    Eigen::VectorXd Kinv_m = Lzz_.triangularView<Eigen::Lower>().solve(state.m);
    Kinv_m = Lzz_.transpose().triangularView<Eigen::Upper>().solve(Kinv_m);
    Eigen::MatrixXd Kinv_R = Lzz_.triangularView<Eigen::Lower>().solve(state.R);
    Kinv_R = Lzz_.transpose().triangularView<Eigen::Upper>().solve(Kinv_R);

    const Eigen::VectorXd Gm = grad_m - Kinv_m;
    Eigen::MatrixXd GR = 2.0 * (Vbar * state.R) - Kinv_R;
    for (Eigen::Index i = 0; i < M_; ++i) GR(i, i) += 1.0 / state.R(i, i);

    grad->head(M_) = Gm;
    for (Eigen::Index i = 0; i < M_; ++i) (*grad)(M_ + i) = GR(i, i) * state.R(i, i);
    Eigen::Index idx = 2 * M_;
    for (Eigen::Index i = 0; i < M_; ++i)
      for (Eigen::Index k = 0; k < i; ++k) (*grad)(idx++) = GR(i, k);
  }
  return total;
}

namespace {

std::size_t sample_index(const std::vector<double>& cum, double u) {
  const double target = u * cum.back();
  auto it = std::upper_bound(cum.begin(), cum.end(), target);
  std::size_t idx = static_cast<std::size_t>(it - cum.begin());
  if (idx >= cum.size()) idx = cum.size() - 1;
  return idx;
}

}  // namespace

TrainResult train_vi(const ObservationModel& model, std::vector<IndexPoint> Z,
                     const KernelAssignment& assign, const TrainOptions& opts) {
  if (opts.steps < 0) throw ConfigError("steps must be >= 0");
  if (opts.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(opts.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");

  ElboEngine engine(model, std::move(Z), assign);
  const std::size_t N = model.size();
  if (N == 0) throw DataError("no records to train on");

  std::vector<bool> touches(N);
  for (std::size_t i = 0; i < N; ++i) touches[i] = model.touches_reference(i);
  const ImportanceWeights iw = make_importance_weights(touches, opts.oversample_factor);
  std::vector<double> cum(N);
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    acc += iw.inclusion_prob[i];
    cum[i] = acc;
  }

  const bool full_batch = static_cast<std::size_t>(opts.batch_size) >= N;
  std::vector<std::size_t> batch;
  std::vector<double> weights;
  if (full_batch) {
    batch.resize(N);
    weights.assign(N, 1.0);
    for (std::size_t i = 0; i < N; ++i) batch[i] = i;
  } else {
    batch.resize(static_cast<std::size_t>(opts.batch_size));
    weights.resize(batch.size());
  }

  Eigen::VectorXd theta = engine.pack(engine.initial_state());
  Eigen::VectorXd mom = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd vel = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd grad(theta.size());

  TrainResult result;
  result.elbo_trace.reserve(static_cast<std::size_t>(opts.steps));
  const std::uint64_t batch_stream = hash_mix(opts.seed, 0x6d696e69ULL);

  for (int step = 0; step < opts.steps; ++step) {
    if (!full_batch) {
      for (std::size_t j = 0; j < batch.size(); ++j) {
        const std::uint64_t k =
            hash_mix(batch_stream, hash_mix(static_cast<std::uint64_t>(step), j));
        const std::size_t i = sample_index(cum, u64_to_unit(splitmix64(k)));
        batch[j] = i;
        weights[j] = 1.0 / (static_cast<double>(batch.size()) * iw.inclusion_prob[i]);
      }
    }
    const VariationalState state = engine.unpack(theta);
    const EpsSource eps{opts.seed, static_cast<std::uint64_t>(step)};
    const double value = engine.value_grad(state, batch, weights, opts.samples, eps, grad);
    result.elbo_trace.push_back(value);
    if (std::getenv("CALNET_TRACE_GRAD") && step % 25 == 0)
      std::fprintf(stderr, "step %d elbo %.3g grad_norm %.3g theta_max %.3g\n", step, value,
                   grad.norm(), theta.cwiseAbs().maxCoeff());

    if (opts.clip_norm > 0.0) {
      const double gn = grad.norm();
      if (gn > opts.clip_norm) grad *= opts.clip_norm / gn;
    }

    const double b1t = 1.0 - std::pow(opts.adam_beta1, step + 1);
    const double b2t = 1.0 - std::pow(opts.adam_beta2, step + 1);
    mom = opts.adam_beta1 * mom + (1.0 - opts.adam_beta1) * grad;
    vel = opts.adam_beta2 * vel.array().matrix() +
          (1.0 - opts.adam_beta2) * grad.array().square().matrix();
    theta.array() += opts.learning_rate * (mom.array() / b1t) /
                     ((vel.array() / b2t).sqrt() + opts.adam_eps);
  }

  result.state = engine.unpack(theta);
  return result;
}

double elbo(const VariationalState& state, const ObservationModel& model,
            const KernelAssignment& assign, int P, std::span<const double> weights,
            const EpsSource& eps) {
  ElboEngine engine(model, state.Z, assign);
  std::vector<std::size_t> batch(model.size());
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;
  return engine.value(state, batch, weights, P, eps);
}

}  // namespace calnet
