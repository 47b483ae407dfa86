#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace calnet {

/// Configuration problems: unresolvable kernel assignments, bad option values.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failures (factorization breakdown, NaN in the objective).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One latent GP evaluation: a (time, sensor, parameter) triple.
/// `param` indexes the calibration-function parameter in 0..C-1.
struct IndexPoint {
  double time = 0.0;
  int sensor = 0;
  int param = 0;

  friend bool operator==(const IndexPoint& a, const IndexPoint& b) {
    return a.time == b.time && a.sensor == b.sensor && a.param == b.param;
  }
};

/// Whether a latent point indexes the same GP as another (GPs are
/// independent between sensors and between parameters).
inline bool same_gp(const IndexPoint& a, const IndexPoint& b) {
  return a.sensor == b.sensor && a.param == b.param;
}

enum class SensorKind { Static, Mobile };

/// Kernel assignments are keyed by this coarse grouping.
enum class KernelGroup { Static, Mobile, Reference };

struct SensorInfo {
  int id = 0;
  SensorKind kind = SensorKind::Static;
  bool is_reference = false;
};

inline KernelGroup group_of(const SensorInfo& s) {
  if (s.is_reference) return KernelGroup::Reference;
  return s.kind == SensorKind::Mobile ? KernelGroup::Mobile : KernelGroup::Static;
}

/// Registry of sensors (or labelers, in the categorical variant).
class SensorTable {
 public:
  void add(const SensorInfo& info) {
    if (index_.count(info.id)) throw DataError("duplicate sensor id " + std::to_string(info.id));
    index_[info.id] = sensors_.size();
    sensors_.push_back(info);
  }

  bool contains(int id) const { return index_.count(id) != 0; }

  const SensorInfo& at(int id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw DataError("unknown sensor id " + std::to_string(id));
    return sensors_[it->second];
  }

  bool is_reference(int id) const { return at(id).is_reference; }

  bool has_reference() const {
    for (const auto& s : sensors_)
      if (s.is_reference) return true;
    return false;
  }

  const std::vector<SensorInfo>& all() const { return sensors_; }
  std::size_t size() const { return sensors_.size(); }

 private:
  std::vector<SensorInfo> sensors_;
  std::unordered_map<int, std::size_t> index_;
};

}  // namespace calnet
