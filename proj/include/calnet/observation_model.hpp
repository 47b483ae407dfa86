#pragma once

#include <cstdint>
#include <span>

#include "calnet/types.hpp"

namespace calnet {

/// A factorized likelihood: one term per record, each depending on a small
/// set of latent GP values. Shared by the continuous and categorical
/// calibration variants; the VI trainer only sees this interface.
class ObservationModel {
 public:
  virtual ~ObservationModel() = default;

  virtual std::size_t size() const = 0;

  /// Latent index points this record's log-likelihood depends on. May be
  /// empty (e.g. both sides are reference sensors).
  virtual std::span<const IndexPoint> latents(std::size_t i) const = 0;

  /// log p(record i | f), f ordered as latents(i).
  virtual double loglik(std::size_t i, std::span<const double> f) const = 0;

  /// As loglik, also writing d loglik / d f into grad (same length as f).
  virtual double loglik_grad(std::size_t i, std::span<const double> f,
                             std::span<double> grad) const = 0;

  virtual bool touches_reference(std::size_t i) const = 0;

  /// Key for the record's reparameterization-noise stream. Derived from the
  /// record's content so full-batch ELBO values are invariant to record
  /// order.
  virtual std::uint64_t eps_key(std::size_t i) const = 0;
};

}  // namespace calnet
