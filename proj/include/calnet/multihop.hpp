#pragma once

#include <map>
#include <optional>
#include <vector>

#include "calnet/pair_model.hpp"
#include "calnet/types.hpp"

namespace calnet {

struct MultihopParams {
  double delta = 720.0;       // window size, hours
  double d_colocation = 1.0;  // edge distance for colocation edges
  double d_time = 1.0;        // edge distance for neighbouring-window edges
  int min_observations = 5;   // edges need at least this many supporting pairs

  void validate() const;
};

/// Accumulated log-scaling per (sensor, window). Applying exp(F) to a raw
/// reading transforms it toward the reference scale; entries exist only
/// where a path to a reference sensor exists.
struct ScalingTable {
  double delta = 0.0;
  long w_min = 0, w_max = 0;
  std::map<std::pair<int, long>, double> F;

  std::optional<double> lookup(int sensor, long window) const {
    auto it = F.find({sensor, window});
    if (it == F.end()) return std::nullopt;
    return it->second;
  }
};

inline long window_of(double t, double delta) { return static_cast<long>(std::floor(t / delta)); }

/// Windowed rendezvous graph: log-ratio colocation edges (both directions,
/// antisymmetric values), zero-value time edges between neighbouring
/// windows, then per-node shortest-path (Dijkstra) to any reference sensor.
/// Edge (A -> B) carries mean(log y_B - log y_A), so summing values along a
/// path sensor -> reference gives the log correction for that sensor.
ScalingTable build_graph(const std::vector<ColocationRecord>& data, const SensorTable& sensors,
                         const MultihopParams& params);

struct MultihopQuery {
  int sensor = 0;
  double t = 0.0;
  double y_raw = 0.0;
};

/// y* = exp(F[sensor, window]) * y_raw. Throws DataError if the (sensor,
/// window) has no path to a reference.
double predict_multihop(const ScalingTable& table, const MultihopQuery& query);
std::vector<double> predict_multihop(const ScalingTable& table,
                                     const std::vector<MultihopQuery>& queries);

struct GridSearchResult {
  MultihopParams best;
  double best_nmse = 0.0;
  // one row per evaluated configuration: (delta, d_time/d_colocation, nmse)
  std::vector<std::array<double, 3>> table;
};

/// Pick (delta, weight ratio) minimizing NMSE of multihop predictions
/// against the provided truth; queries without a path fall back to the raw
/// reading. Ties break toward smaller delta, then smaller ratio.
GridSearchResult grid_search_multihop(const std::vector<ColocationRecord>& data,
                                      const SensorTable& sensors,
                                      const std::vector<MultihopQuery>& queries,
                                      const std::vector<double>& truth,
                                      const std::vector<double>& window_sizes,
                                      const std::vector<double>& weight_ratios,
                                      int min_observations = 5);

}  // namespace calnet
