#include "calnet/multihop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include "calnet/metrics.hpp"

namespace calnet {

void MultihopParams::validate() const {
  if (!(delta > 0.0)) throw ConfigError("window size must be > 0");
  if (!(d_colocation > 0.0) || !(d_time > 0.0))
    throw ConfigError("edge distances must be > 0");
  if (min_observations < 1) throw ConfigError("min_observations must be >= 1");
}

namespace {

using Node = std::pair<int, long>;  // (sensor, window)

struct Edge {
  std::size_t to;
  double value;     // log-ratio: how to transform this node's reading toward `to`'s
  double distance;
};

}  // namespace

ScalingTable build_graph(const std::vector<ColocationRecord>& data, const SensorTable& sensors,
                         const MultihopParams& params) {
  params.validate();
  if (data.empty()) throw DataError("no colocation records for graph construction");
  if (!sensors.has_reference()) throw DataError("graph calibration requires a reference sensor");

  long w_min = std::numeric_limits<long>::max();
  long w_max = std::numeric_limits<long>::min();
  for (const auto& rec : data) {
    if (!(rec.y1 > 0.0) || !(rec.y2 > 0.0))
      throw DataError("nonpositive measurement in log-ratio graph");
    w_min = std::min({w_min, window_of(rec.t1, params.delta), window_of(rec.t2, params.delta)});
    w_max = std::max({w_max, window_of(rec.t1, params.delta), window_of(rec.t2, params.delta)});
  }

  // Node grid: every sensor in every window of the observed range, so a
  // sensor can be calibrated through time even in windows without data.
  std::vector<int> ids;
  for (const auto& s : sensors.all()) ids.push_back(s.id);
  std::sort(ids.begin(), ids.end());
  const long n_windows = w_max - w_min + 1;
  auto node_index = [&](int sensor, long w) -> std::size_t {
    const auto it = std::lower_bound(ids.begin(), ids.end(), sensor);
    if (it == ids.end() || *it != sensor) throw DataError("record references unknown sensor");
    return static_cast<std::size_t>(it - ids.begin()) * static_cast<std::size_t>(n_windows) +
           static_cast<std::size_t>(w - w_min);
  };
  const std::size_t n_nodes = ids.size() * static_cast<std::size_t>(n_windows);
  std::vector<std::vector<Edge>> adj(n_nodes);

  // Colocation edges: merge all qualifying observations between a node pair
  // into one mean-log-ratio edge, both directions (antisymmetric values).
  std::map<std::pair<std::size_t, std::size_t>, std::pair<double, int>> acc;
  for (const auto& rec : data) {
    const std::size_t n1 = node_index(rec.s1, window_of(rec.t1, params.delta));
    const std::size_t n2 = node_index(rec.s2, window_of(rec.t2, params.delta));
    if (n1 == n2) continue;
    const double ratio = std::log(rec.y2) - std::log(rec.y1);
    if (n1 < n2) {
      auto& [sum, count] = acc[{n1, n2}];
      sum += ratio;
      ++count;
    } else {
      auto& [sum, count] = acc[{n2, n1}];
      sum -= ratio;
      ++count;
    }
  }
  for (const auto& [key, sc] : acc) {
    if (sc.second < params.min_observations) continue;
    const double mean = sc.first / sc.second;  // value of edge key.first -> key.second
    adj[key.first].push_back({key.second, mean, params.d_colocation});
    adj[key.second].push_back({key.first, -mean, params.d_colocation});
  }

  // Time edges: zero-value links between neighbouring windows of a sensor.
  for (std::size_t si = 0; si < ids.size(); ++si) {
    for (long w = 0; w + 1 < n_windows; ++w) {
      const std::size_t a = si * static_cast<std::size_t>(n_windows) + static_cast<std::size_t>(w);
      adj[a].push_back({a + 1, 0.0, params.d_time});
      adj[a + 1].push_back({a, 0.0, params.d_time});
    }
  }

  // Multi-source Dijkstra from every reference node. Ties pop in (sensor,
  // window) order, so results are deterministic.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n_nodes, inf);
  std::vector<double> F(n_nodes, 0.0);
  std::vector<bool> done(n_nodes, false);
  using QItem = std::tuple<double, std::size_t>;  // (distance, node); node index
                                                  // orders by (sensor, window)
  std::priority_queue<QItem, std::vector<QItem>, std::greater<>> queue;
  for (std::size_t si = 0; si < ids.size(); ++si) {
    if (!sensors.is_reference(ids[si])) continue;
    for (long w = 0; w < n_windows; ++w) {
      const std::size_t n = si * static_cast<std::size_t>(n_windows) + static_cast<std::size_t>(w);
      dist[n] = 0.0;
      queue.push({0.0, n});
    }
  }
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (done[u] || d > dist[u]) continue;
    done[u] = true;
    for (const Edge& e : adj[u]) {
      const double nd = d + e.distance;
      if (nd < dist[e.to]) {
        dist[e.to] = nd;
        // Path value for e.to is the reversed edge (e.to -> u) plus u's
        // accumulated value toward the reference.
        F[e.to] = F[u] - e.value;
        queue.push({nd, e.to});
      }
    }
  }

  ScalingTable table;
  table.delta = params.delta;
  table.w_min = w_min;
  table.w_max = w_max;
  for (std::size_t si = 0; si < ids.size(); ++si) {
    for (long w = 0; w < n_windows; ++w) {
      const std::size_t n = si * static_cast<std::size_t>(n_windows) + static_cast<std::size_t>(w);
      if (done[n]) table.F[{ids[si], w + w_min}] = F[n];
    }
  }
  return table;
}

double predict_multihop(const ScalingTable& table, const MultihopQuery& query) {
  const long w = window_of(query.t, table.delta);
  const auto F = table.lookup(query.sensor, w);
  if (!F)
    throw DataError("no path to a reference sensor for sensor " + std::to_string(query.sensor) +
                    " in window " + std::to_string(w));
  return std::exp(*F) * query.y_raw;
}

std::vector<double> predict_multihop(const ScalingTable& table,
                                     const std::vector<MultihopQuery>& queries) {
  std::vector<double> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(predict_multihop(table, q));
  return out;
}

GridSearchResult grid_search_multihop(const std::vector<ColocationRecord>& data,
                                      const SensorTable& sensors,
                                      const std::vector<MultihopQuery>& queries,
                                      const std::vector<double>& truth,
                                      const std::vector<double>& window_sizes,
                                      const std::vector<double>& weight_ratios,
                                      int min_observations) {
  if (window_sizes.empty() || weight_ratios.empty())
    throw ConfigError("empty grid for multihop search");
  if (queries.size() != truth.size()) throw DataError("queries/truth length mismatch");

  std::vector<double> deltas = window_sizes;
  std::vector<double> ratios = weight_ratios;
  std::sort(deltas.begin(), deltas.end());
  std::sort(ratios.begin(), ratios.end());

  GridSearchResult result;
  result.best_nmse = std::numeric_limits<double>::infinity();
  std::vector<double> pred(queries.size());
  for (double delta : deltas) {
    for (double ratio : ratios) {
      MultihopParams params;
      params.delta = delta;
      params.d_colocation = 1.0;
      params.d_time = ratio;
      params.min_observations = min_observations;
      const ScalingTable table = build_graph(data, sensors, params);
      for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto F = table.lookup(queries[i].sensor, window_of(queries[i].t, delta));
        pred[i] = F ? std::exp(*F) * queries[i].y_raw : queries[i].y_raw;
      }
      const double score = nmse(pred, truth);
      result.table.push_back({delta, ratio, score});
      if (score < result.best_nmse) {
        result.best_nmse = score;
        result.best = params;
      }
    }
  }
  return result;
}

}  // namespace calnet
